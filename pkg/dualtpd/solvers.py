""" Outer solvers for the discrete dual p-Laplacian system

        |T| gamma(sigma_T) sigma_T - (D u)_T = 0,    D^T sigma = f.

    dual_tpd_solve is the transformed primal-dual iteration in
    residual-correction form; dual_pd_solve, pgd_solve and newton_solve are
    the schemes it is compared against. All of them return the final
    DualState and a SolveReport; none raises on non-convergence.
"""
from __future__ import division

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp

from dualtpd.global_variables import (
    ARMIJO_C,
    DIVERGENCE_LIMIT,
    INITIALIZATIONS,
    INNER_SOLVERS,
    MAX_OUTER,
    MIN_STEP,
    NEWTON_MG_MAX_IT,
    NEWTON_TOL_MG,
    PGD_EPS,
    PGD_PRECONDITIONER,
    PGD_PRECONDITIONERS,
    PRECONDITIONERS,
    SOLVERS,
    STOP_TOL,
    THETA)
from dualtpd.kernels import (
    ConfigurationError,
    apply_block_diag,
    grad_conjugate,
    grad_primal,
    primal_energy_density,
    sigma_preconditioner)
from dualtpd.precon import MGConfig, schur_solve
from dualtpd.sparse_linalg import spmv, spmv_transpose

logger = logging.getLogger(__name__)


class LineSearchError(RuntimeError):
    pass


@dataclass
class DualState(object):
    """ Iterate (sigma, u): sigma has length 2 N_T, u length N_n.
    """
    sigma: np.ndarray
    u: np.ndarray

    def copy(self):
        return DualState(self.sigma.copy(), self.u.copy())


@dataclass(frozen=True)
class SolverConfig(object):
    """ Settings shared by all outer solvers.

    # Arguments:
        alpha: Step size, > 0.
        preconditioner: 'jacobian' (DualTPD-J) or 'mass' (DualTPD-M).
        mg: MGConfig of the inner Schur solve.
        stop_tol: Target of the relative residual.
        max_outer: Cap on outer iterations.
        init: 'zero' or 'random' (uniform on [-1, 1], seeded).
        seed: Seed of the random start.
        lam, eps0: Override the regularization carried by the problem's law.
        inner: 'mg', 'pcg' or 'direct'.
        pcg_tol: Relative tolerance of the 'pcg' inner solver.
        theta: DualPD extrapolation weight in [0, 1].
        lagged_dual_pd: DualPD debug switch, the u-update uses sigma_k.
        pgd_preconditioner: 'weighted' ((|grad u_k| + eps)^(p-2) weighted
            Laplacian, the default) or 'poisson' (unit-coefficient Laplacian).
    """
    alpha: float = 1.0
    preconditioner: str = 'jacobian'
    mg: MGConfig = field(default_factory=MGConfig)
    stop_tol: float = STOP_TOL
    max_outer: int = MAX_OUTER
    init: str = 'zero'
    seed: int = 0
    lam: Optional[float] = None
    eps0: Optional[float] = None
    inner: str = 'mg'
    pcg_tol: float = 1e-8
    theta: float = THETA
    lagged_dual_pd: bool = False
    pgd_preconditioner: str = PGD_PRECONDITIONER

    def __post_init__(self):
        checks = [(self.alpha > 0, 'alpha must be positive'),
                  (self.stop_tol > 0, 'stop_tol must be positive'),
                  (self.max_outer >= 0, 'max_outer must be non-negative'),
                  (0 <= self.theta <= 1, 'theta must lie in [0, 1]'),
                  (self.preconditioner in PRECONDITIONERS,
                   'preconditioner must be one of {}'.format(PRECONDITIONERS)),
                  (self.init in INITIALIZATIONS,
                   'init must be one of {}'.format(INITIALIZATIONS)),
                  (self.inner in INNER_SOLVERS,
                   'inner must be one of {}'.format(INNER_SOLVERS)),
                  (self.pgd_preconditioner in PGD_PRECONDITIONERS,
                   'pgd_preconditioner must be one of {}'
                   .format(PGD_PRECONDITIONERS))]
        for ok, message in checks:
            if not ok:
                raise ConfigurationError(message)


@dataclass
class SolveReport(object):
    """ Outcome of one solve.

        history holds the relative residual tested against stop_tol, one
        entry per check (so iterations + 1 entries on a normal exit), and
        inner_work the V-cycles (or PCG steps) of each outer step.
    """
    solver: str
    iterations: int = 0
    history: List[float] = field(default_factory=list)
    inner_work: List[int] = field(default_factory=list)
    seconds: float = 0.0
    converged: bool = False
    note: str = ''

    @property
    def final_residual(self):
        return self.history[-1] if self.history else float('nan')

    @property
    def avg_inner(self):
        return float(np.mean(self.inner_work)) if self.inner_work else 0.0

    def to_row(self):
        return {'solver': self.solver,
                'iterations': self.iterations,
                'avg_inner': self.avg_inner,
                'final_residual': self.final_residual,
                'seconds': self.seconds,
                'converged': self.converged,
                'note': self.note}

    def to_record(self):
        """ Flat 'key=value' text, one pair per line.
        """
        row = self.to_row()
        row['history'] = ','.join('{:.6e}'.format(r) for r in self.history)
        return '\n'.join('{}={}'.format(k, v) for k, v in row.items())


def _law(problem, cfg):
    changes = {}
    if cfg.lam is not None:
        changes['lam'] = cfg.lam
    if cfg.eps0 is not None:
        changes['eps0'] = cfg.eps0
    return dataclasses.replace(problem.law, **changes) if changes \
        else problem.law


def _flat_areas(problem):
    return np.repeat(problem.area, 2)


def initial_state(problem, cfg):
    if cfg.init == 'zero':
        return DualState(np.zeros(problem.n_sigma), np.zeros(problem.n_u))
    rng = np.random.default_rng(cfg.seed)
    sigma = rng.uniform(-1.0, 1.0, problem.n_sigma)
    u = rng.uniform(-1.0, 1.0, problem.n_u)
    return DualState(sigma, u)


def residual(state, problem, law=None):
    """ Step 1 residuals.

    # Returns:
        r_sigma = M^gamma(sigma) sigma - D u, r_u = D^T sigma - f and
        rel_r = ||(r_sigma, r_u)|| / ||f||.
    """
    law = law or problem.law
    flux = grad_conjugate(state.sigma.reshape(-1, 2), law).ravel()
    r_sigma = _flat_areas(problem) * flux - spmv(problem.D, state.u)
    r_u = spmv_transpose(problem.D, state.sigma) - problem.f
    scale = problem.norm_f if problem.norm_f > 0 else 1.0
    rel = np.sqrt(np.dot(r_sigma, r_sigma) + np.dot(r_u, r_u)) / scale
    return r_sigma, r_u, float(rel)


def schur_matrix(B, D):
    """ D^T B D for a block-diagonal B.
    """
    return D.T.dot(B.to_sparse().dot(D)).tocsr()


def _correction(state, r_sigma, r_u, problem, cfg, law):
    B = sigma_preconditioner(state.sigma, problem.area, law,
                             cfg.preconditioner)
    D = problem.D
    rhs = r_u - spmv_transpose(D, apply_block_diag(B, r_sigma))
    du, work = schur_solve(schur_matrix(B, D), rhs, cfg.mg,
                           problem.prolongations, cfg.inner, cfg.pcg_tol)
    dsigma = apply_block_diag(B, r_sigma + spmv(D, du))
    return dsigma, du, work


def tpd_step(state, problem, cfg):
    """ One DualTPD step (Steps 1-3).

    # Returns:
        The updated DualState and the inner work of the Schur solve.
    """
    law = _law(problem, cfg)
    r_sigma, r_u, _ = residual(state, problem, law)
    dsigma, du, work = _correction(state, r_sigma, r_u, problem, cfg, law)
    return DualState(state.sigma - cfg.alpha * dsigma,
                     state.u - cfg.alpha * du), work


def _diverged(rel):
    return not np.isfinite(rel) or rel > DIVERGENCE_LIMIT


def _finish(report, start, name):
    report.seconds = time.perf_counter() - start
    logger.info('%s: %s after %d iterations (rel_r = %.3e, %.2f s)', name,
                'converged' if report.converged else 'stopped',
                report.iterations, report.final_residual, report.seconds)
    return report


def dual_tpd_solve(problem, cfg, state=None, name=None):
    """ Iterates tpd_step until rel_r <= stop_tol, max_outer steps, or the
        residual blows past DIVERGENCE_LIMIT.
    """
    if name is None:
        name = 'dual-tpd-j' if cfg.preconditioner == 'jacobian' \
            else 'dual-tpd-m'
    law = _law(problem, cfg)
    state = initial_state(problem, cfg) if state is None else state.copy()
    report = SolveReport(name)
    start = time.perf_counter()

    while True:
        r_sigma, r_u, rel = residual(state, problem, law)
        report.history.append(rel)
        logger.debug('%s k=%d rel_r=%.6e', name, report.iterations, rel)
        if rel <= cfg.stop_tol:
            report.converged = True
            break
        if _diverged(rel) or report.iterations >= cfg.max_outer:
            break
        dsigma, du, work = _correction(state, r_sigma, r_u, problem, cfg, law)
        state = DualState(state.sigma - cfg.alpha * dsigma,
                          state.u - cfg.alpha * du)
        report.inner_work.append(work)
        report.iterations += 1
    return state, _finish(report, start, name)


def newton_solve(problem, cfg, state=None):
    """ DualTPD-J with alpha = 1 and an effectively exact Schur solve.
    """
    mg = MGConfig(NEWTON_TOL_MG, NEWTON_MG_MAX_IT, cfg.mg.pre_smooths,
                  cfg.mg.post_smooths)
    newton_cfg = dataclasses.replace(cfg, alpha=1.0, preconditioner='jacobian',
                                     mg=mg)
    return dual_tpd_solve(problem, newton_cfg, state, name='newton')


def dual_pd_solve(problem, cfg, state=None):
    """ Preconditioned primal-dual iteration with extrapolation:

        sigma+ = sigma - alpha I_sigma^{-1} (M^gamma sigma - D u_bar)
        u+     = u - alpha I_u^{-1} (D^T sigma+ - f)
        u_bar+ = u+ + theta (u+ - u)

    I_sigma^{-1} is frozen at sigma_k and I_u^{-1} solves with
    D^T I_sigma^{-1} D. With cfg.lagged_dual_pd the u-update uses sigma_k.
    """
    name = 'dual-pd'
    law = _law(problem, cfg)
    state = initial_state(problem, cfg) if state is None else state.copy()
    u_bar = state.u.copy()
    report = SolveReport(name, note='p-Laplacian adaptation of DualPD')
    start = time.perf_counter()
    D = problem.D
    areas = _flat_areas(problem)

    while True:
        _, _, rel = residual(state, problem, law)
        report.history.append(rel)
        logger.debug('%s k=%d rel_r=%.6e', name, report.iterations, rel)
        if rel <= cfg.stop_tol:
            report.converged = True
            break
        if _diverged(rel) or report.iterations >= cfg.max_outer:
            break

        B = sigma_preconditioner(state.sigma, problem.area, law,
                                 cfg.preconditioner)
        flux = areas * grad_conjugate(state.sigma.reshape(-1, 2), law).ravel()
        sigma = state.sigma - cfg.alpha * apply_block_diag(
            B, flux - spmv(D, u_bar))
        coupled = state.sigma if cfg.lagged_dual_pd else sigma
        r_u = spmv_transpose(D, coupled) - problem.f
        du, work = schur_solve(schur_matrix(B, D), r_u, cfg.mg,
                               problem.prolongations, cfg.inner, cfg.pcg_tol)
        u = state.u - cfg.alpha * du
        u_bar = u + cfg.theta * (u - state.u)
        state = DualState(sigma, u)
        report.inner_work.append(work)
        report.iterations += 1
    return state, _finish(report, start, name)


def discrete_gradient(u, problem):
    """ Elementwise gradients (D u)_T / |T|, shape (N_T, 2).
    """
    return (spmv(problem.D, u) / _flat_areas(problem)).reshape(-1, 2)


def primal_energy(u, problem, law=None):
    """ I_h(u) = sum_T |T|/p |grad u_h|_T|^p - f^T u.
    """
    law = law or problem.law
    g = discrete_gradient(u, problem)
    return float(np.dot(problem.area, primal_energy_density(g, law))
                 - np.dot(problem.f, u))


def primal_gradient(u, problem, law=None):
    """ grad I_h(u) = D^T grad F(grad u_h) - f.
    """
    law = law or problem.law
    flux = grad_primal(discrete_gradient(u, problem), law).ravel()
    return spmv_transpose(problem.D, flux) - problem.f


def _pgd_operator(u, problem, cfg, law):
    if cfg.pgd_preconditioner == 'poisson':
        return problem.poisson
    g = np.linalg.norm(discrete_gradient(u, problem), axis=1)
    weight = (g + PGD_EPS) ** (law.p - 2) / problem.area
    D = problem.D
    return D.T.dot(sp.diags(np.repeat(weight, 2)).dot(D)).tocsr()


def pgd_solve(problem, cfg, mode='line-search', state=None):
    """ Preconditioned gradient descent on I_h.

    # Arguments:
        mode: 'line-search' (Armijo backtracking from cfg.alpha, inner
            solve tightened to NEWTON_TOL_MG) or 'fixed-step' (constant
            cfg.alpha with the inexact cfg.mg solve).

    # Returns:
        DualState whose sigma is grad F of the discrete gradient, and the
        report; its history is ||grad I_h(u_k)|| / ||f||.

    # Raises:
        LineSearchError: The Armijo step fell below MIN_STEP.
    """
    if mode not in ('line-search', 'fixed-step'):
        raise ConfigurationError("mode must be 'line-search' or 'fixed-step',"
                                 " got {!r}".format(mode))
    name = 'pgd-ls' if mode == 'line-search' else 'pgd-fixed'
    law = _law(problem, cfg)
    u = (initial_state(problem, cfg) if state is None else state).u.copy()
    mg = cfg.mg
    if mode == 'line-search':
        mg = MGConfig(NEWTON_TOL_MG, NEWTON_MG_MAX_IT, mg.pre_smooths,
                      mg.post_smooths)
    scale = problem.norm_f if problem.norm_f > 0 else 1.0
    report = SolveReport(name)
    start = time.perf_counter()

    while True:
        grad = primal_gradient(u, problem, law)
        rel = float(np.linalg.norm(grad) / scale)
        report.history.append(rel)
        logger.debug('%s k=%d rel_grad=%.6e', name, report.iterations, rel)
        if rel <= cfg.stop_tol:
            report.converged = True
            break
        if _diverged(rel) or report.iterations >= cfg.max_outer:
            break

        d, work = schur_solve(_pgd_operator(u, problem, cfg, law), grad, mg,
                              problem.prolongations, cfg.inner, cfg.pcg_tol)
        alpha = cfg.alpha
        if mode == 'line-search':
            energy = primal_energy(u, problem, law)
            slope = np.dot(grad, d)
            while primal_energy(u - alpha * d, problem, law) > \
                    energy - ARMIJO_C * alpha * slope:
                alpha /= 2
                if alpha < MIN_STEP:
                    raise LineSearchError('Armijo backtracking fell below {} '
                                          'at iteration {}'
                                          .format(MIN_STEP, report.iterations))
        u = u - alpha * d
        report.inner_work.append(work)
        report.iterations += 1

    sigma = grad_primal(discrete_gradient(u, problem), law).ravel()
    return DualState(sigma, u), _finish(report, start, name)


def solve(name, problem, cfg, state=None):
    """ Runs the solver registered under name (one of SOLVERS).
    """
    if name == 'dual-tpd-j':
        return dual_tpd_solve(problem, dataclasses.replace(
            cfg, preconditioner='jacobian'), state, name)
    if name == 'dual-tpd-m':
        return dual_tpd_solve(problem, dataclasses.replace(
            cfg, preconditioner='mass'), state, name)
    if name == 'dual-pd':
        return dual_pd_solve(problem, cfg, state)
    if name == 'pgd-ls':
        return pgd_solve(problem, cfg, 'line-search', state)
    if name == 'pgd-fixed':
        return pgd_solve(problem, cfg, 'fixed-step', state)
    if name == 'newton':
        return newton_solve(problem, cfg, state)
    raise ConfigurationError('solver must be one of {}, got {!r}'
                             .format(SOLVERS, name))
