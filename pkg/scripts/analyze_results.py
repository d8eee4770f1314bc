from __future__ import print_function

import sys
import glob
import numpy as np
from os.path import abspath, dirname
sys.path.insert(0, dirname(dirname(abspath(__file__))))

from dualtpd.bench import read_csv

RESULTS_DIR = 'results/'
TABLE = 'iteration_table'

# Optional usage: analyze_results.py <results dir> <table>
if len(sys.argv) == 3:
    RESULTS_DIR = sys.argv[1]
    TABLE = sys.argv[2]

RESULT_PATHS = glob.glob('{}/**/{}.csv'.format(RESULTS_DIR, TABLE),
                         recursive=True)

if not RESULT_PATHS:
    print('Could not find \'{}.csv\' in directory \'{}\'.'
          .format(TABLE, RESULTS_DIR))
else:
    for path in sorted(RESULT_PATHS):
        df = read_csv(path)
        print('File: {}'.format(path))
        print('--------------------------')
        keys = [k for k in ('solver', 'p', 'init') if k in df.columns]
        for key, group in df.groupby(keys):
            counts = group['iterations'].dropna()
            if counts.empty:
                print('{}: no converged cells'.format(key))
                continue
            print('{}: min {} / max {} / spread {} / mean {:.1f} '
                  '(over {} meshes)'.format(key, int(counts.min()),
                                             int(counts.max()),
                                             int(counts.max() - counts.min()),
                                             np.mean(counts), len(counts)))
        print()
