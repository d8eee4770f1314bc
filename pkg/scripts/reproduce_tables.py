""" Runs the benchmark configs in configs/ one after another and writes the
    CSV tables under results/.
"""
from __future__ import print_function
import sys
import logging
from os.path import abspath, dirname, join
sys.path.insert(0, dirname(dirname(abspath(__file__))))

from dualtpd.bench import load_config, run_experiment
from dualtpd.global_variables import ROOT_PATH

CONFIG_DIR = join(ROOT_PATH, 'configs')

# Format: (config file, experiment name or None to use the file's)
RUNS = [
    ('table1_error.json', None),
    ('table2_iterations.json', None),
    ('table3_disk.json', None),
    #('table4_disk_p10.json', None),  # several minutes at h = 1/128
    ('table5_wide_p.json', None),
    ('time_growth.json', None),
    ]

JOBS = 1
VERBOSE = False

logging.basicConfig(level=logging.DEBUG if VERBOSE else logging.INFO)

failed = []
for config_file, experiment in RUNS:
    cfg = load_config(join(CONFIG_DIR, config_file), experiment)
    print("=" * 60)
    print('{} ({})'.format(config_file, cfg.experiment))
    print("=" * 60)
    df = run_experiment(cfg, join(ROOT_PATH, cfg.output_path), JOBS)
    print(df.to_string(index=False))
    if not df['converged'].astype(bool).all():
        failed.append(config_file)

print("=" * 60)
if failed:
    print('Cells without convergence in: {}'.format(', '.join(failed)))
else:
    print('All cells converged.')
