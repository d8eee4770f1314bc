""" Grid search over the step size alpha on a coarse mesh, keeping the
    alpha with the fewest outer iterations. The chosen value is then used
    unchanged on the finer meshes.
"""
from __future__ import print_function
import sys
from os.path import abspath, dirname
sys.path.insert(0, dirname(dirname(abspath(__file__))))

import numpy as np

from dualtpd.bench import BenchConfig, run_cell

DOMAIN = 'square'
P = 4.0
SOLVER = 'dual-tpd-m'
LEVELS = 3  # h = 1/16 on the square
ALPHAS = [round(a, 2) for a in np.arange(0.2, 2.01, 0.1)]

best = (None, np.inf)
for alpha in ALPHAS:
    cfg = BenchConfig('iteration-table', domain=DOMAIN, p=P, solvers=[SOLVER],
                      levels=[LEVELS], alpha=alpha)
    row = run_cell(cfg, SOLVER, P, LEVELS)
    iterations = row['iterations'] if row['converged'] else np.inf
    print('alpha={:.2f} -> iterations={}'.format(alpha, iterations))
    if iterations < best[1]:
        best = (alpha, iterations)

print("=" * 60)
print('Best alpha for {} at p = {:g}: {} ({} iterations)'
      .format(SOLVER, P, best[0], best[1]))
