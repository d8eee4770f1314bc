""" Global variables.
"""
import os
from os.path import abspath, dirname

ROOT_PATH = dirname(dirname(abspath(__file__)))
RESULTS_DIR = os.path.join(ROOT_PATH, 'results')

# Regularization of the sigma preconditioners
DEFAULT_LAMBDA = 1e-4
DEFAULT_EPS0 = 1e-16

# Coarsest square mesh: n x n squares, two triangles each
SQUARE_COARSE_N = 4

# Outer iteration
STOP_TOL = 1e-6
MAX_OUTER = 500
DIVERGENCE_LIMIT = 1e6

# Inner multigrid
TOL_MG = 1e-2
MG_MAX_IT = 5
PRE_SMOOTHS = 2
POST_SMOOTHS = 2
SYMMETRY_TOL = 1e-10

# Newton limit of DualTPD: Schur solve tightened until effectively exact
NEWTON_TOL_MG = 1e-10
NEWTON_MG_MAX_IT = 100

# DualPD extrapolation
THETA = 0.8

# Preconditioned gradient descent
ARMIJO_C = 1e-4
MIN_STEP = 1e-12
PGD_EPS = 1e-2
PGD_PRECONDITIONER = 'weighted'

# Ferromagnetic law nu(s) = a0 + a1 exp(-a2 s)
FERRO_A0 = 10.0
FERRO_A1 = 73.89
FERRO_A2 = 1.0
PHI_NEWTON_TOL = 1e-12
PHI_NEWTON_MAXIT = 50
WOODBURY_TOL = 1e-8

PRECONDITIONERS = ['mass', 'jacobian']
INNER_SOLVERS = ['mg', 'pcg', 'direct']
INITIALIZATIONS = ['zero', 'random']
PGD_PRECONDITIONERS = ['poisson', 'weighted']
SOLVERS = ['dual-tpd-j', 'dual-tpd-m', 'dual-pd', 'pgd-ls', 'pgd-fixed', 'newton']
DOMAINS = ['square', 'disk']
EXPERIMENTS = ['error-table', 'iteration-table', 'solver-compare', 'time-growth']
