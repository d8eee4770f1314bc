""" Inner solvers for the Schur complement S_k = D^T I_sigma^{-1} D.

    The multigrid hierarchy is purely algebraic once the interior
    prolongations are known: coarse operators are Galerkin products
    P^T S P, smoothing is symmetric Gauss-Seidel and the coarsest level is
    solved by a dense Cholesky factorization. With the same number of pre-
    and post-sweeps the V-cycle is a symmetric positive definite operator,
    so it can precondition CG.
"""
from __future__ import division

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator, splu

from dualtpd.global_variables import (
    INNER_SOLVERS,
    MG_MAX_IT,
    POST_SMOOTHS,
    PRE_SMOOTHS,
    SYMMETRY_TOL,
    TOL_MG)
from dualtpd.kernels import ConfigurationError
from dualtpd.sparse_linalg import (
    DimensionError,
    as_csr,
    galerkin_triple,
    is_symmetric)

logger = logging.getLogger(__name__)


class MultigridError(RuntimeError):
    pass


class PCGError(RuntimeError):
    pass


@dataclass(frozen=True)
class MGConfig(object):
    """ Stopping rule and smoothing of mg_solve.

    # Arguments:
        tol_mg: Relative residual target in (0, 1).
        max_it: Maximum number of V-cycles, >= 1.
        pre_smooths: Symmetric Gauss-Seidel sweeps before restriction.
        post_smooths: Sweeps after prolongation.
    """
    tol_mg: float = TOL_MG
    max_it: int = MG_MAX_IT
    pre_smooths: int = PRE_SMOOTHS
    post_smooths: int = POST_SMOOTHS

    def __post_init__(self):
        if not 0 < self.tol_mg < 1:
            raise ConfigurationError('tol_mg must lie in (0, 1), got {}'
                                     .format(self.tol_mg))
        if self.max_it < 1:
            raise ConfigurationError('max_it must be >= 1, got {}'
                                     .format(self.max_it))
        if self.pre_smooths < 0 or self.post_smooths < 0:
            raise ConfigurationError('smoothing sweep counts must be '
                                     'non-negative')


class _SGSSmoother(object):
    """ Symmetric Gauss-Seidel: a forward sweep with the lower triangle
        followed by a backward sweep with the upper triangle.
    """
    def __init__(self, S):
        self.S = S
        lower = sp.tril(S, format='csc')
        upper = sp.triu(S, format='csc')
        if np.any(S.diagonal() <= 0):
            raise MultigridError('Gauss-Seidel needs a positive diagonal')
        opts = dict(permc_spec='NATURAL', diag_pivot_thresh=0.0)
        self._lower = splu(lower, **opts)
        self._upper = splu(upper, **opts)

    def sweep(self, x, b):
        x = x + self._lower.solve(b - self.S.dot(x))
        return x + self._upper.solve(b - self.S.dot(x))


class MGHierarchy(object):
    """ Level operators ordered coarse to fine.

    # Arguments:
        operators: CSR matrices S_0 (coarsest) ... S_L (finest).
        prolongations: P_l mapping level l to level l + 1.
        pre_smooths, post_smooths: Sweeps per level in a V-cycle.
    """
    def __init__(self, operators, prolongations, pre_smooths=PRE_SMOOTHS,
                 post_smooths=POST_SMOOTHS):
        self.operators = operators
        self.prolongations = prolongations
        self.pre_smooths = pre_smooths
        self.post_smooths = post_smooths
        self.smoothers = [None] + [_SGSSmoother(S) for S in operators[1:]]
        try:
            self.coarse_factor = scipy.linalg.cho_factor(
                operators[0].toarray(), lower=True)
        except np.linalg.LinAlgError:
            raise MultigridError('coarsest operator ({0}x{0}) is not positive '
                                 'definite'.format(operators[0].shape[0]))

    def __len__(self):
        return len(self.operators)

    @property
    def size(self):
        return self.operators[-1].shape[0]

    def vcycle(self, b, level=None):
        """ One V-cycle with zero initial guess.
        """
        if level is None:
            level = len(self) - 1
        if level == 0:
            return scipy.linalg.cho_solve(self.coarse_factor, b,
                                          check_finite=False)

        S = self.operators[level]
        smoother = self.smoothers[level]
        P = self.prolongations[level - 1]

        x = np.zeros_like(b)
        for _ in range(self.pre_smooths):
            x = smoother.sweep(x, b)
        r = b - S.dot(x)
        x = x + P.dot(self.vcycle(P.T.dot(r), level - 1))
        for _ in range(self.post_smooths):
            x = smoother.sweep(x, b)
        return x


def build_mg(S_fine, prolongations, pre_smooths=PRE_SMOOTHS,
             post_smooths=POST_SMOOTHS):
    """ Galerkin hierarchy for S_fine.

    # Arguments:
        S_fine: Symmetric CSR matrix on the finest interior DoFs.
        prolongations: Interior prolongations ordered coarse to fine; the
            last one must have S_fine.shape[0] rows. Levels without interior
            DoFs are skipped.

    # Raises:
        MultigridError: S_fine is not symmetric to SYMMETRY_TOL.
    """
    S_fine = as_csr(S_fine)
    if not is_symmetric(S_fine, SYMMETRY_TOL):
        raise MultigridError('multigrid needs a symmetric operator '
                             '(relative asymmetry above {})'
                             .format(SYMMETRY_TOL))
    S_fine = as_csr(0.5 * (S_fine + S_fine.T))

    operators = [S_fine]
    used = []
    for P in reversed(prolongations):
        if P.shape[0] != operators[0].shape[0]:
            raise DimensionError('prolongation with {} rows cannot act on a '
                                 'level with {} DoFs'
                                 .format(P.shape[0], operators[0].shape[0]))
        if P.shape[1] == 0:
            break
        operators.insert(0, galerkin_triple(P, operators[0]))
        used.insert(0, as_csr(P))
    logger.debug('Multigrid hierarchy sizes: %s',
                 [S.shape[0] for S in operators])
    return MGHierarchy(operators, used, pre_smooths, post_smooths)


def mg_solve(mg, b, cfg):
    """ Repeated V-cycles from x = 0.

    # Returns:
        x and the number of V-cycles used. Stops as soon as
        ||b - S x|| <= tol_mg ||b|| or after max_it cycles.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (mg.size,):
        raise DimensionError('right side has shape {} for a hierarchy of size'
                             ' {}'.format(b.shape, mg.size))
    x = np.zeros_like(b)
    norm_b = np.linalg.norm(b)
    if norm_b == 0:
        return x, 0

    S = mg.operators[-1]
    r = b
    cycles = 0
    while cycles < cfg.max_it:
        x = x + mg.vcycle(r)
        cycles += 1
        r = b - S.dot(x)
        rel = np.linalg.norm(r) / norm_b
        if not np.isfinite(rel):
            raise MultigridError('NaN in V-cycle {}'.format(cycles))
        if rel <= cfg.tol_mg:
            break
    logger.debug('mg_solve: %d cycles, relative residual %.3e', cycles, rel)
    return x, cycles


def vcycle_operator(mg):
    """ One V-cycle from zero as a LinearOperator.
    """
    n = mg.size
    return LinearOperator((n, n), matvec=mg.vcycle, dtype=np.float64)


def pcg(S, b, M_inv, tol, maxiter=None):
    """ Preconditioned conjugate gradients from x = 0.

    # Arguments:
        S: Symmetric positive (semi)definite matrix or LinearOperator.
        b: Right side.
        M_inv: SPD preconditioner (matrix or LinearOperator).
        tol: Relative residual target.
        maxiter: Iteration cap, defaults to the dimension.

    # Returns:
        (x, iterations).

    # Raises:
        PCGError: On breakdown (p^T S p <= 0) or when the cap is exceeded.
    """
    S = aslinearoperator(S)
    M_inv = aslinearoperator(M_inv)
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    if S.shape != (n, n):
        raise DimensionError('operator of shape {} with right side of length'
                             ' {}'.format(S.shape, n))
    if maxiter is None:
        maxiter = n

    x = np.zeros(n)
    norm_b = np.linalg.norm(b)
    if norm_b == 0:
        return x, 0

    r = b.copy()
    z = M_inv.matvec(r)
    d = z.copy()
    rz = np.dot(r, z)
    k = 0
    while np.linalg.norm(r) > tol * norm_b:
        if k >= maxiter:
            raise PCGError('PCG did not reach {} within {} iterations '
                           '(relative residual {:.3e})'
                           .format(tol, maxiter, np.linalg.norm(r) / norm_b))
        Sd = S.matvec(d)
        curvature = np.dot(d, Sd)
        if not curvature > 0:
            raise PCGError('PCG breakdown at iteration {}: p^T S p = {}'
                           .format(k, curvature))
        alpha = rz / curvature
        x = x + alpha * d
        r = r - alpha * Sd
        z = M_inv.matvec(r)
        rz_new = np.dot(r, z)
        d = z + (rz_new / rz) * d
        rz = rz_new
        k += 1
    return x, k


def schur_solve(S, b, cfg, prolongations, inner='mg', pcg_tol=1e-8):
    """ Approximate S^{-1} b with the chosen inner solver.

    # Arguments:
        S: Finest-level Schur matrix.
        b: Right side.
        cfg: MGConfig.
        prolongations: Interior prolongations, coarse to fine.
        inner: 'mg' (mg_solve), 'pcg' (CG with one V-cycle per step) or
            'direct' (sparse LU).

    # Returns:
        (x, work) where work counts V-cycles, PCG steps or 1 for a
        direct solve.
    """
    if inner == 'mg':
        return mg_solve(build_mg(S, prolongations, cfg.pre_smooths,
                                 cfg.post_smooths), b, cfg)
    if inner == 'pcg':
        mg = build_mg(S, prolongations, cfg.pre_smooths, cfg.post_smooths)
        return pcg(mg.operators[-1], b, vcycle_operator(mg), pcg_tol)
    if inner == 'direct':
        return splu(sp.csc_matrix(S)).solve(np.asarray(b, dtype=np.float64)), 1
    raise ConfigurationError('inner solver must be one of {}, got {!r}'
                             .format(INNER_SOLVERS, inner))
