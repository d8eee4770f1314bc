""" Benchmark harness: error tables, iteration tables, solver comparisons and
    time-growth plots, written as CSV (and SVG) files.

    Usage:
        bench iteration-table --config configs/table2.json --out results/
"""
from __future__ import division, print_function

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from sklearn.linear_model import LinearRegression
from tqdm import tqdm

from dualtpd.fem import coupled_dof, table_dof
from dualtpd.global_variables import (
    DEFAULT_EPS0,
    DEFAULT_LAMBDA,
    EXPERIMENTS,
    INITIALIZATIONS,
    MAX_OUTER,
    MG_MAX_IT,
    PGD_PRECONDITIONER,
    RESULTS_DIR,
    SOLVERS,
    SQUARE_COARSE_N,
    STOP_TOL,
    THETA,
    TOL_MG)
from dualtpd.kernels import ConfigurationError, PhiInverseError
from dualtpd.precon import MGConfig, MultigridError, PCGError
from dualtpd.problems import assemble, problem_from_config
from dualtpd.solvers import LineSearchError, SolverConfig, solve

logger = logging.getLogger(__name__)

SOLVER_FAILURES = (MultigridError, PCGError, LineSearchError, PhiInverseError)


@dataclass
class BenchConfig(object):
    """ One experiment. Loaded from a flat JSON object whose keys are the
        field names; unknown keys are rejected.

        Step sizes are looked up in step_sizes under 'solver@p' (p formatted
        with '{:g}'), then under 'solver', then fall back to alpha.
    """
    experiment: str
    domain: str = 'square'
    p: float = 4.0
    p_values: List[float] = field(default_factory=list)
    levels: List[int] = field(default_factory=lambda: [4, 5, 6])
    n0: int = SQUARE_COARSE_N
    solvers: List[str] = field(default_factory=lambda: ['dual-tpd-j'])
    alpha: float = 1.0
    step_sizes: Dict[str, float] = field(default_factory=dict)
    inits: List[str] = field(default_factory=lambda: ['zero'])
    seed: int = 0
    lam: float = DEFAULT_LAMBDA
    eps0: float = DEFAULT_EPS0
    eps0_p_below_2: Optional[float] = None
    printed_mass_branch: bool = False
    stop_tol: float = STOP_TOL
    error_tol: float = 1e-10
    max_outer: int = MAX_OUTER
    tol_mg: float = TOL_MG
    max_it: int = MG_MAX_IT
    inner: str = 'mg'
    theta: float = THETA
    pgd_preconditioner: str = PGD_PRECONDITIONER
    output_path: str = RESULTS_DIR

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError('experiment must be one of {}, got {!r}'
                                     .format(EXPERIMENTS, self.experiment))
        unknown = [s for s in self.solvers if s not in SOLVERS]
        if unknown:
            raise ConfigurationError('unknown solvers {} (choose from {})'
                                     .format(unknown, SOLVERS))
        bad_inits = [i for i in self.inits if i not in INITIALIZATIONS]
        if bad_inits:
            raise ConfigurationError('unknown initializations {}'
                                     .format(bad_inits))
        if not self.levels or min(self.levels) < 1:
            raise ConfigurationError('levels must be a non-empty list of '
                                     'positive integers, got {}'
                                     .format(self.levels))

    @property
    def p_list(self):
        return list(self.p_values) or [self.p]

    def step_size(self, solver, p):
        key = '{}@{:g}'.format(solver, p)
        return self.step_sizes.get(key, self.step_sizes.get(solver, self.alpha))

    def eps0_for(self, p):
        if p < 2 and self.eps0_p_below_2 is not None:
            return self.eps0_p_below_2
        return self.eps0

    def solver_config(self, solver, p, init='zero', stop_tol=None):
        return SolverConfig(alpha=self.step_size(solver, p),
                            mg=MGConfig(self.tol_mg, self.max_it),
                            stop_tol=stop_tol or self.stop_tol,
                            max_outer=self.max_outer, init=init,
                            seed=self.seed, inner=self.inner, theta=self.theta,
                            pgd_preconditioner=self.pgd_preconditioner)

    def to_json(self):
        return json.dumps(dataclasses.asdict(self), sort_keys=True)


def load_config(path, experiment=None):
    """ Reads a BenchConfig from a JSON file. A positional experiment name
        overrides the one in the file.
    """
    with open(path) as f:
        values = json.load(f)
    if not isinstance(values, dict):
        raise ConfigurationError('{} must hold a JSON object'.format(path))
    names = set(f.name for f in dataclasses.fields(BenchConfig))
    unknown = sorted(set(values) - names)
    if unknown:
        raise ConfigurationError('unknown config keys in {}: {}'
                                 .format(path, unknown))
    if experiment is not None:
        values['experiment'] = experiment
    if 'experiment' not in values:
        raise ConfigurationError('no experiment given on the command line or'
                                 ' in {}'.format(path))
    return BenchConfig(**values)


@lru_cache(maxsize=16)
def _problem(domain, p, levels, n0, lam, eps0, printed_mass_branch):
    return assemble(problem_from_config(dict(
        domain=domain, p=p, levels=levels, n0=n0, lam=lam, eps0=eps0,
        printed_mass_branch=printed_mass_branch)))


def problem_for(cfg, p, levels):
    return _problem(cfg.domain, p, levels, cfg.n0, cfg.lam, cfg.eps0_for(p),
                    cfg.printed_mass_branch)


def table_h(problem):
    """ Mesh size in the error-table convention: twice the leg length on the
        square, so the h = 1/32 row is the mesh with 12417 table DoFs; the
        nominal h on the disk.
    """
    return 2 * problem.h if problem.spec.domain == 'square' else problem.h


def run_cell(cfg, solver, p, levels, init='zero', stop_tol=None,
             with_errors=False):
    """ Solves one (solver, p, h, init) cell and returns its CSV row.
        Solver failures are recorded in the row instead of raised.
    """
    problem = problem_for(cfg, p, levels)
    solver_cfg = cfg.solver_config(solver, p, init, stop_tol)
    row = {'solver': solver, 'p': p, 'alpha': solver_cfg.alpha,
           'init': init, 'h': problem.h, 'table_h': table_h(problem),
           'levels': levels,
           'dof': coupled_dof(problem.p1, problem.p0),
           'table_dof': table_dof(problem.mesh)}
    try:
        state, report = solve(solver, problem, solver_cfg)
    except SOLVER_FAILURES as e:
        logger.warning('%s failed at p = %g, h = %g: %s', solver, p,
                       problem.h, e)
        row.update(iterations=np.nan, avg_inner=np.nan, final_residual=np.nan,
                   seconds=np.nan, converged=False, note=str(e))
        return row
    row.update(report.to_row())
    if with_errors and problem.spec.exact_u is not None:
        row['err_u'], row['err_sigma'] = problem.errors(state.sigma, state.u)
    return row


def run_cells(cells, cfg, jobs=1):
    """ Runs cells (tuples of run_cell arguments) sequentially or with
        joblib; rows keep the order of cells.
    """
    if jobs == 1:
        return [run_cell(cfg, *cell) for cell in tqdm(cells, desc='cells')]
    return Parallel(n_jobs=jobs)(delayed(run_cell)(cfg, *cell)
                                 for cell in tqdm(cells, desc='cells'))


def write_csv(df, path, cfg):
    """ CSV with a leading '# config:' comment line.
    """
    with open(path, 'w') as f:
        f.write('# config: {}\n'.format(cfg.to_json()))
        df.to_csv(f, index=False)
    logger.info('Wrote %d rows to %s', len(df), path)


def read_csv(path):
    return pd.read_csv(path, comment='#')


def fitted_slope(x, y):
    """ Least-squares slope of log y against log x; NaN for fewer than two
        points.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if np.sum(keep) < 2:
        return float('nan')
    model = LinearRegression().fit(np.log(x[keep])[:, None], np.log(y[keep]))
    return float(model.coef_[0])


def observed_rates(h, err):
    """ log(e_{i-1}/e_i) / log(h_{i-1}/h_i) between consecutive rows; the
        first entry is NaN.
    """
    h, err = np.asarray(h, dtype=float), np.asarray(err, dtype=float)
    rates = np.full(len(h), np.nan)
    if len(h) > 1:
        rates[1:] = np.log(err[:-1] / err[1:]) / np.log(h[:-1] / h[1:])
    return rates


def run_error_table(cfg, out_dir, jobs=1):
    """ L2 errors of DualTPD-J solved to cfg.error_tol, with observed rates.
    """
    cells = [('dual-tpd-j', cfg.p, L, 'zero', cfg.error_tol, True)
             for L in sorted(cfg.levels)]
    df = pd.DataFrame(run_cells(cells, cfg, jobs))
    for column in ('err_u', 'err_sigma'):
        if column not in df.columns:
            df[column] = np.nan
    df['rate_u'] = observed_rates(df['h'], df['err_u'])
    df['rate_sigma'] = observed_rates(df['h'], df['err_sigma'])
    df['fitted_rate_u'] = fitted_slope(df['h'], df['err_u'])
    df['fitted_rate_sigma'] = fitted_slope(df['h'], df['err_sigma'])
    columns = ['h', 'table_h', 'dof', 'table_dof', 'err_u', 'rate_u',
               'err_sigma', 'rate_sigma', 'fitted_rate_u', 'fitted_rate_sigma',
               'iterations', 'final_residual', 'converged', 'note']
    df = df[columns]
    write_csv(df, os.path.join(out_dir, 'error_table.csv'), cfg)
    return df


ITERATION_COLUMNS = ['solver', 'p', 'alpha', 'init', 'h', 'table_h', 'dof',
                     'table_dof', 'iterations', 'avg_inner', 'seconds',
                     'converged', 'note']


def run_iteration_table(cfg, out_dir, jobs=1):
    """ Outer iterations per (solver, p, init, h).
    """
    cells = [(s, p, L, init) for s in cfg.solvers for p in cfg.p_list
             for init in cfg.inits for L in sorted(cfg.levels)]
    df = pd.DataFrame(run_cells(cells, cfg, jobs))[ITERATION_COLUMNS]
    write_csv(df, os.path.join(out_dir, 'iteration_table.csv'), cfg)
    return df


def run_solver_compare(cfg, out_dir, jobs=1):
    """ Every listed solver from every listed initialization, with final L2
        errors against the exact solution.
    """
    cells = [(s, cfg.p, L, init, None, True) for init in cfg.inits
             for s in cfg.solvers for L in sorted(cfg.levels)]
    df = pd.DataFrame(run_cells(cells, cfg, jobs))
    columns = ITERATION_COLUMNS + [c for c in ('err_u', 'err_sigma')
                                   if c in df.columns]
    df = df[columns]
    write_csv(df, os.path.join(out_dir, 'solver_compare.csv'), cfg)
    return df


def loglog_svg(x, y, title='', width=480, height=360, margin=50):
    """ Static SVG line plot of log10 y against log10 x.
    """
    lx, ly = np.log10(np.asarray(x, float)), np.log10(np.asarray(y, float))

    def scale(v, lo, hi, a, b):
        return (a + b) / 2 if hi == lo else a + (v - lo) / (hi - lo) * (b - a)

    px = [scale(v, lx.min(), lx.max(), margin, width - margin) for v in lx]
    py = [scale(v, ly.min(), ly.max(), height - margin, margin) for v in ly]
    points = ' '.join('{:.2f},{:.2f}'.format(a, b) for a, b in zip(px, py))
    marks = ''.join('<circle cx="{:.2f}" cy="{:.2f}" r="3"/>'.format(a, b)
                    for a, b in zip(px, py))
    return ('<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">'
            '<rect width="100%" height="100%" fill="white"/>'
            '<text x="{m}" y="{t}" font-size="14">{title}</text>'
            '<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>'
            '<line x1="{m}" y1="{m}" x2="{m}" y2="{b}" stroke="black"/>'
            '<text x="{r}" y="{xl}" font-size="12" text-anchor="end">'
            'log10 DoF</text>'
            '<text x="5" y="{m}" font-size="12">log10 s</text>'
            '<polyline fill="none" stroke="steelblue" stroke-width="2" '
            'points="{points}"/><g fill="steelblue">{marks}</g></svg>\n'
            .format(w=width, h=height, m=margin, t=margin / 2,
                    b=height - margin, r=width - margin,
                    xl=height - margin / 3, title=title, points=points,
                    marks=marks))


def run_time_growth(cfg, out_dir, jobs=1):
    """ Wall time against DoF for a single solver and initial guess, with the
        fitted log-log slope and an SVG plot.
    """
    if len(cfg.solvers) != 1 or len(cfg.inits) != 1:
        raise ConfigurationError(
            "time-growth takes one solver and one init, got {} and {}".format(
                cfg.solvers, cfg.inits))
    solver = cfg.solvers[0]
    cells = [(solver, cfg.p, L, cfg.inits[0]) for L in sorted(cfg.levels)]
    df = pd.DataFrame(run_cells(cells, cfg, jobs))
    df['slope'] = fitted_slope(df['dof'], df['seconds'])
    df = df[['solver', 'p', 'h', 'dof', 'iterations', 'seconds', 'slope',
             'converged', 'note']]
    write_csv(df, os.path.join(out_dir, 'time_growth.csv'), cfg)
    svg = loglog_svg(df['dof'], df['seconds'],
                     '{} p={:g} slope={:.2f}'.format(solver, cfg.p,
                                                     df['slope'].iloc[0]))
    with open(os.path.join(out_dir, 'time_growth.svg'), 'w') as f:
        f.write(svg)
    return df


RUNNERS = {'error-table': run_error_table,
           'iteration-table': run_iteration_table,
           'solver-compare': run_solver_compare,
           'time-growth': run_time_growth}


def run_experiment(cfg, out_dir=None, jobs=1):
    out_dir = out_dir or cfg.output_path
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)
    if not os.access(out_dir, os.W_OK):
        raise ConfigurationError('output directory {} is not writable'
                                 .format(out_dir))
    return RUNNERS[cfg.experiment](cfg, out_dir, jobs)


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        prog='bench', description='Reproduce DualTPD benchmark tables.')
    parser.add_argument('experiment', choices=EXPERIMENTS)
    parser.add_argument('--config', required=True,
                        help='flat JSON file with BenchConfig fields')
    parser.add_argument('--out', default=None, help='output directory')
    parser.add_argument('--jobs', type=int, default=1,
                        help='independent cells to run concurrently')
    parser.add_argument('--verbose', action='store_true')
    return parser.parse_args(argv)


def main(argv=None):
    """ Exit code 0 iff every requested cell converged.
    """
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    try:
        cfg = load_config(args.config, args.experiment)
        df = run_experiment(cfg, args.out, args.jobs)
    except ConfigurationError as e:
        logger.error('%s', e)
        return 2
    converged = bool(df['converged'].astype(bool).all())
    print(df.to_string(index=False))
    return 0 if converged else 1


if __name__ == '__main__':
    sys.exit(main())
