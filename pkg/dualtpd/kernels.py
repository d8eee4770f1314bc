""" Elementwise constitutive kernels.

    All element quantities are vectorized over a leading element axis:
    sigma has shape (n, d) with d = 2 (triangles) or d = 3 (tetrahedra),
    areas/volumes have shape (n,), blocks have shape (n, d, d). A single
    element may be passed as a plain d-vector.
"""
from __future__ import division

import logging
from dataclasses import dataclass

import numpy as np

from dualtpd.global_variables import (
    DEFAULT_EPS0,
    DEFAULT_LAMBDA,
    FERRO_A0,
    FERRO_A1,
    FERRO_A2,
    PHI_NEWTON_MAXIT,
    PHI_NEWTON_TOL,
    PRECONDITIONERS,
    WOODBURY_TOL)
from dualtpd.sparse_linalg import DimensionError, block_diag_csr

logger = logging.getLogger(__name__)


class ConfigurationError(ValueError):
    pass


class DegenerateInputError(ValueError):
    pass


class PhiInverseError(RuntimeError):
    """ Scalar Newton for the inverse B-H profile did not converge.
    """
    def __init__(self, message, bracket):
        super(PhiInverseError, self).__init__(message)
        self.bracket = bracket


@dataclass(frozen=True)
class PowerLaw(object):
    """ F(gamma) = |gamma|^p / p and its conjugate, with the regularization
        used by the sigma preconditioners.

    # Arguments:
        p: Exponent, p > 1.
        lam: Regularization lambda > 0.
        eps0: Threshold eps0 > 0 below which regularization applies.
        printed_mass_branch: Use (gamma |sigma| + lambda)^(p*-2) in the
            small-|sigma| branch of the regularized coefficient instead of
            (|sigma| + lambda)^(p*-2).
    """
    p: float
    lam: float = DEFAULT_LAMBDA
    eps0: float = DEFAULT_EPS0
    printed_mass_branch: bool = False

    def __post_init__(self):
        if not self.p > 1:
            raise ConfigurationError('power law needs p > 1, got {}'
                                     .format(self.p))
        if not (self.lam > 0 and self.eps0 > 0):
            raise ConfigurationError('lambda and eps0 must be positive, got '
                                     '{} and {}'.format(self.lam, self.eps0))

    @property
    def p_star(self):
        return self.p / (self.p - 1)


@dataclass(frozen=True)
class FerroLaw(object):
    """ Reluctivity nu(s) = a0 + a1 exp(-a2 s) of the B-H relation
        sigma = nu(|gamma|) gamma.
    """
    a0: float = FERRO_A0
    a1: float = FERRO_A1
    a2: float = FERRO_A2
    newton_tol: float = PHI_NEWTON_TOL
    newton_maxit: int = PHI_NEWTON_MAXIT

    def __post_init__(self):
        if not (self.a0 > 0 and self.a1 >= 0 and self.a2 >= 0):
            raise ConfigurationError('ferro law needs a0 > 0, a1 >= 0, a2 >= 0;'
                                     ' got {}, {}, {}'
                                     .format(self.a0, self.a1, self.a2))

    def nu(self, s):
        return self.a0 + self.a1 * np.exp(-self.a2 * s)

    def dnu(self, s):
        return -self.a1 * self.a2 * np.exp(-self.a2 * s)

    def phi(self, z):
        return self.nu(z) * z

    def dphi(self, z):
        return self.dnu(z) * z + self.nu(z)

    def monotonicity_constant(self, z_max=20.0, step=1e-3):
        """ Smallest sampled value of Phi' on [0, z_max].
        """
        z = np.arange(0.0, z_max + step / 2, step)
        return float(np.min(self.dphi(z)))


class BlockDiag(object):
    """ Sequence of dense d x d blocks, one per element (d = 2 or 3).
    """
    def __init__(self, blocks):
        blocks = np.asarray(blocks, dtype=np.float64)
        if blocks.ndim != 3 or blocks.shape[1] != blocks.shape[2] \
                or blocks.shape[1] not in (2, 3):
            raise DimensionError('blocks must have shape (n, d, d) with d in '
                                 '(2, 3), got {}'.format(blocks.shape))
        self.blocks = blocks

    @property
    def block_size(self):
        return self.blocks.shape[1]

    @property
    def n_elements(self):
        return self.blocks.shape[0]

    @property
    def shape(self):
        n = self.n_elements * self.block_size
        return (n, n)

    @classmethod
    def from_scalars(cls, coeff, d=2):
        """ Blocks coeff_i * I_d.
        """
        coeff = np.asarray(coeff, dtype=np.float64)
        return cls(coeff[:, None, None] * np.eye(d)[None])

    def to_sparse(self):
        return block_diag_csr(self.blocks)

    def is_spd(self):
        """ Per-block SPD test by symmetry and leading minors.
        """
        B = self.blocks
        if not np.allclose(B, B.transpose(0, 2, 1), rtol=1e-12, atol=0.0):
            return False
        minors = [B[:, 0, 0], np.linalg.det(B[:, :2, :2])]
        if self.block_size == 3:
            minors.append(np.linalg.det(B))
        return all(np.all(m > 0) for m in minors)


def apply_block_diag(B, x):
    """ Per-element block times per-element sub-vector.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (B.shape[0],):
        raise DimensionError('block-diagonal operator of size {} applied to '
                             'a vector of shape {}'.format(B.shape[0], x.shape))
    d = B.block_size
    return np.einsum('tij,tj->ti', B.blocks, x.reshape(-1, d)).ravel()


def _as_elements(sigma):
    sigma = np.asarray(sigma, dtype=np.float64)
    return sigma.reshape(-1, sigma.shape[-1]), sigma.ndim == 1


def _pow(r, e):
    """ r**e for r >= 0 with 0**e = 0 for e > 0, 1 for e = 0, inf for e < 0,
        without floating-point warnings.
    """
    r = np.asarray(r, dtype=np.float64)
    out = np.empty_like(r)
    pos = r > 0
    out[pos] = r[pos] ** e
    out[~pos] = 0.0 if e > 0 else (1.0 if e == 0 else np.inf)
    return out


def gamma_pow(sigma, law):
    """ gamma(sigma) = |sigma|^(p*-2).

        For sigma = 0 this is 0 when p* > 2, 1 when p* = 2 and +inf when
        p* < 2; callers test np.isinf to detect the singular case.
    """
    s, single = _as_elements(sigma)
    g = _pow(np.linalg.norm(s, axis=1), law.p_star - 2)
    return g[0] if single else g


def pcurl_gamma(sigma, law):
    """ Coefficient of the p-curl dual law; identical to gamma_pow on
        3-vectors.
    """
    if np.shape(sigma)[-1] != 3:
        raise DimensionError('p-curl coefficient expects 3-vectors, got shape'
                             ' {}'.format(np.shape(sigma)))
    return gamma_pow(sigma, law)


def gamma_regularized(sigma, law):
    """ Regularized coefficient gamma_lambda(sigma); finite and positive.
    """
    s, single = _as_elements(sigma)
    r = np.linalg.norm(s, axis=1)
    q = law.p_star
    g = _pow(r, q - 2)
    if q > 2:
        g = g + law.lam
    elif q < 2:
        small = r <= law.eps0
        if np.any(small):
            base = r[small]
            if law.printed_mass_branch:
                base = g[small] * base
                base[~np.isfinite(base)] = 0.0
            g[small] = (base + law.lam) ** (q - 2)
    return g[0] if single else g


def grad_conjugate(sigma, law):
    """ grad F*(sigma) = |sigma|^(p*-2) sigma, zero at sigma = 0.
    """
    s, single = _as_elements(sigma)
    r = np.linalg.norm(s, axis=1)
    out = np.zeros_like(s)
    nz = r > 0
    out[nz] = (r[nz] ** (law.p_star - 2))[:, None] * s[nz]
    return out[0] if single else out


def grad_primal(gamma, law):
    """ grad F(gamma) = |gamma|^(p-2) gamma, zero at gamma = 0.
    """
    g, single = _as_elements(gamma)
    r = np.linalg.norm(g, axis=1)
    out = np.zeros_like(g)
    nz = r > 0
    out[nz] = (r[nz] ** (law.p - 2))[:, None] * g[nz]
    return out[0] if single else out


def primal_energy_density(gamma, law):
    g, single = _as_elements(gamma)
    e = np.linalg.norm(g, axis=1) ** law.p / law.p
    return e[0] if single else e


def jacobian_block_pow(sigma, area, law):
    """ Jacobian of sigma_T -> |T| gamma(sigma_T) sigma_T.

    # Returns:
        Blocks |sigma|^(p*-2) |T| I + (p*-2) |sigma|^(p*-4) |T| sigma sigma^T.

    # Raises:
        DegenerateInputError: When some sigma_T vanishes.
    """
    s, single = _as_elements(sigma)
    area = np.broadcast_to(np.asarray(area, dtype=np.float64), (len(s),))
    r = np.linalg.norm(s, axis=1)
    if np.any(r == 0):
        raise DegenerateInputError('Jacobian block undefined at sigma = 0 '
                                   '({} elements)'.format(int(np.sum(r == 0))))
    q = law.p_star
    d = s.shape[1]
    J = ((r ** (q - 2) * area)[:, None, None] * np.eye(d)[None]
         + ((q - 2) * r ** (q - 4) * area)[:, None, None]
         * np.einsum('ti,tj->tij', s, s))
    return J[0] if single else J


def _regularized_branch(r, g, law):
    q = law.p_star
    if q > 2:
        return g <= law.eps0
    if q < 2:
        return r <= law.eps0
    return r == 0


def jacobian_inverse_block_pow(sigma, area, law):
    """ Regularized inverse Jacobian blocks of the DualTPD-J preconditioner.

        Where (p* > 2 and gamma <= eps0) or (p* < 2 and |sigma| <= eps0) the
        block is I / (gamma_lambda |T|); elsewhere it is the Sherman-Morrison
        inverse of jacobian_block_pow.
    """
    s, single = _as_elements(sigma)
    area = np.broadcast_to(np.asarray(area, dtype=np.float64), (len(s),))
    d = s.shape[1]
    q = law.p_star
    r = np.linalg.norm(s, axis=1)
    g = _pow(r, q - 2)
    reg = _regularized_branch(r, g, law)

    out = np.empty((len(s), d, d))
    eye = np.eye(d)[None]
    if np.any(reg):
        g_lam = gamma_regularized(s[reg], law)
        out[reg] = (1.0 / (g_lam * area[reg]))[:, None, None] * eye
    ok = ~reg
    if np.any(ok):
        rk, sk, ak = r[ok], s[ok], area[ok]
        c1 = rk ** (2 - q) / ak
        c2 = (q - 2) * rk ** (-q) / ((q - 1) * ak)
        out[ok] = (c1[:, None, None] * eye
                   - c2[:, None, None] * np.einsum('ti,tj->tij', sk, sk))
    return out[0] if single else out


def sigma_preconditioner(sigma, area, law, kind):
    """ Block-diagonal I_sigma^{-1} frozen at sigma.

    # Arguments:
        sigma: Flat vector of length 2 N_T.
        area: Element areas.
        law: PowerLaw carrying the regularization.
        kind: 'mass' (DualTPD-M) or 'jacobian' (DualTPD-J).
    """
    s = np.asarray(sigma, dtype=np.float64).reshape(-1, 2)
    if kind == 'mass':
        return BlockDiag.from_scalars(1.0 / (gamma_regularized(s, law) * area))
    if kind == 'jacobian':
        return BlockDiag(jacobian_inverse_block_pow(s, area, law))
    raise ConfigurationError('preconditioner must be one of {}, got {!r}'
                             .format(PRECONDITIONERS, kind))


def ferro_phi_inverse(s, law):
    """ z >= 0 with Phi(z) = nu(z) z = s, by Newton's method safeguarded with
        bisection on the bracket [0, 2 s / a0 + 1].

    # Raises:
        PhiInverseError: No convergence within law.newton_maxit steps.
    """
    s_arr = np.asarray(s, dtype=np.float64)
    if np.any(s_arr < 0):
        raise ValueError('Phi^-1 needs s >= 0')
    s = np.atleast_1d(s_arr).ravel()
    lo = np.zeros_like(s)
    hi = 2.0 * s / law.a0 + 1.0
    z = np.minimum(s / law.nu(0.0), hi)
    tol = law.newton_tol * np.maximum(1.0, s)

    done = s == 0
    z[done] = 0.0
    for _ in range(law.newton_maxit):
        res = law.phi(z) - s
        done |= np.abs(res) <= tol
        if np.all(done):
            break
        above = res > 0
        hi = np.where(above & ~done, z, hi)
        lo = np.where(~above & ~done, z, lo)
        # bracket at machine precision: z cannot improve any further, so
        # only rounding in Phi may remain in the residual
        eps = np.finfo(np.float64).eps
        collapsed = ~done & (hi - lo <= 4 * eps * np.maximum(1.0, hi))
        stuck = collapsed & (np.abs(res) > tol + 64 * eps * np.maximum(1.0, s))
        if np.any(stuck):
            k = int(np.flatnonzero(stuck)[0])
            raise PhiInverseError('Phi^-1({}) has no solution to tolerance: '
                                  'bracket collapsed at z = {} with residual '
                                  '{:.3e}'.format(s[k], z[k], res[k]),
                                  (lo[k], hi[k]))
        done |= collapsed
        if np.all(done):
            break
        slope = law.dphi(z)
        with np.errstate(divide='ignore', invalid='ignore'):
            z_new = z - res / slope
        bad = ~np.isfinite(z_new) | (z_new <= lo) | (z_new >= hi)
        z_new = np.where(bad, 0.5 * (lo + hi), z_new)
        z = np.where(done, z, z_new)
    else:
        res = law.phi(z) - s
        done |= np.abs(res) <= tol
        if not np.all(done):
            k = int(np.flatnonzero(~done)[0])
            raise PhiInverseError('Phi^-1({}) did not converge in {} steps'
                                  .format(s[k], law.newton_maxit),
                                  (lo[k], hi[k]))
    return z.reshape(s_arr.shape) if s_arr.ndim else float(z[0])


def ferro_gamma(sigma, law):
    """ gamma(sigma) = 1 / nu(Phi^-1(|sigma|)).
    """
    s, single = _as_elements(sigma)
    z = ferro_phi_inverse(np.linalg.norm(s, axis=1), law)
    g = 1.0 / law.nu(z)
    return g[0] if single else g


def _ferro_coefficients(s, law):
    r = np.linalg.norm(s, axis=1)
    z = ferro_phi_inverse(r, law)
    nu = law.nu(z)
    t = law.dnu(z) / (law.dphi(z) * nu ** 2 * r)
    return r, nu, t


def ferro_jacobian_block(sigma, vol, law):
    """ Jacobian gamma |T| I - t |T| sigma sigma^T of sigma -> |T| sigma / nu.
    """
    s, single = _as_elements(sigma)
    vol = np.broadcast_to(np.asarray(vol, dtype=np.float64), (len(s),))
    r, nu, t = _ferro_coefficients(s, law)
    d = s.shape[1]
    J = ((vol / nu)[:, None, None] * np.eye(d)[None]
         - (t * vol)[:, None, None] * np.einsum('ti,tj->tij', s, s))
    return J[0] if single else J


def ferro_jacobian_inverse_block(sigma, vol, law):
    """ Woodbury inverse of ferro_jacobian_block:
        nu/|T| I - t nu^2 / ((t nu |sigma|^2 - 1) |T|) sigma sigma^T.

        Falls back to a direct 3x3 inversion when |t nu |sigma|^2 - 1| is
        below WOODBURY_TOL, and to nu(0)/|T| I at sigma = 0.
    """
    s, single = _as_elements(sigma)
    vol = np.broadcast_to(np.asarray(vol, dtype=np.float64), (len(s),))
    d = s.shape[1]
    eye = np.eye(d)[None]
    out = np.empty((len(s), d, d))

    r = np.linalg.norm(s, axis=1)
    zero = r == 0
    out[zero] = (law.nu(0.0) / vol[zero])[:, None, None] * eye

    nz = ~zero
    if np.any(nz):
        sn, vn = s[nz], vol[nz]
        _, nu, t = _ferro_coefficients(sn, law)
        denom = t * nu * np.sum(sn ** 2, axis=1) - 1.0
        blocks = ((nu / vn)[:, None, None] * eye
                  - (t * nu ** 2 / (denom * vn))[:, None, None]
                  * np.einsum('ti,tj->tij', sn, sn))
        near = np.abs(denom) <= WOODBURY_TOL
        if np.any(near):
            logger.debug('Woodbury denominator below %g on %d elements',
                         WOODBURY_TOL, int(np.sum(near)))
            blocks[near] = np.linalg.inv(
                ferro_jacobian_block(sn[near], vn[near], law))
        out[nz] = blocks
    return out[0] if single else out
