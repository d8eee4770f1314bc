""" Transformed primal-dual solvers for the dual formulation of the
    p-Laplacian, with multigrid preconditioning and benchmark drivers.
"""
__version__ = '1.0'
