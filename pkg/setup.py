from setuptools import setup

setup(
    name='dualtpd',
    version='1.0',
    packages=['dualtpd'],
    description='Transformed primal-dual solvers for the p-Laplacian',
    include_package_data=True,
    install_requires=[
        'joblib>=1.0',
        'numpy>=1.20',
        'pandas>=1.2',
        'scikit-learn>=0.24',
        'scipy>=1.6',
        'tqdm>=4.0',
    ],
    entry_points={
        'console_scripts': ['bench=dualtpd.bench:main'],
    },
)
