""" Benchmark problems for -div(|grad u|^(p-2) grad u) = f with u = 0 on
    the boundary.
"""
from __future__ import division

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.sparse.linalg import splu

from dualtpd.fem import (
    P0VecSpace,
    P1Space,
    assemble_load,
    assemble_stiffness,
    assemble_weak_gradient,
    average_p0,
    interior_prolongation,
    interpolate_p1,
    l2_error_p0,
    l2_error_p1)
from dualtpd.global_variables import (
    DEFAULT_EPS0,
    DEFAULT_LAMBDA,
    DOMAINS,
    SQUARE_COARSE_N)
from dualtpd.kernels import ConfigurationError, PowerLaw
from dualtpd.mesh import unit_disk_hierarchy, unit_square_hierarchy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProblemSpec(object):
    """ Domain, law and data of one benchmark.

    # Arguments:
        domain: 'square' or 'disk'.
        law: PowerLaw.
        f: Right side f(x, y).
        n_levels: Number of nested mesh levels.
        exact_u: Exact solution u(x, y), or None.
        exact_sigma: Exact flux (sx, sy) = sigma(x, y), or None.
        n0: Subdivisions per side of the coarsest square mesh.
    """
    domain: str
    law: PowerLaw
    f: Callable
    n_levels: int
    exact_u: Optional[Callable] = None
    exact_sigma: Optional[Callable] = None
    n0: int = SQUARE_COARSE_N

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ConfigurationError('domain must be one of {}, got {!r}'
                                     .format(DOMAINS, self.domain))
        if self.n_levels < 1:
            raise ConfigurationError('need at least one mesh level, got {}'
                                     .format(self.n_levels))

    @property
    def p(self):
        return self.law.p


def _square_derivatives(x, y):
    ux = 10 * (2 * x - 1) * y * (y - 1)
    uy = 10 * x * (x - 1) * (2 * y - 1)
    uxx = 20 * y * (y - 1)
    uyy = 20 * x * (x - 1)
    uxy = 10 * (2 * x - 1) * (2 * y - 1)
    return ux, uy, uxx, uyy, uxy


def square_manufactured(p, n_levels, n0=SQUARE_COARSE_N, lam=DEFAULT_LAMBDA,
                        eps0=DEFAULT_EPS0, printed_mass_branch=False):
    """ u = 10 x (x-1) y (y-1) on the unit square, with f computed from the
        expanded p-Laplacian of u.
    """
    law = PowerLaw(p, lam, eps0, printed_mass_branch)

    def exact_u(x, y):
        return 10 * x * (x - 1) * y * (y - 1)

    def exact_sigma(x, y):
        ux, uy = _square_derivatives(x, y)[:2]
        r = np.sqrt(ux ** 2 + uy ** 2)
        c = np.zeros_like(r)
        nz = r > 0
        c[nz] = r[nz] ** (p - 2)
        return c * ux, c * uy

    def f(x, y):
        ux, uy, uxx, uyy, uxy = _square_derivatives(x, y)
        r2 = ux ** 2 + uy ** 2
        out = np.zeros_like(r2)
        nz = r2 > 0
        # (p-2)|grad u|^(p-4) grad u^T H grad u + |grad u|^(p-2) lap u
        quad = (ux ** 2 * uxx + 2 * ux * uy * uxy + uy ** 2 * uyy)[nz]
        lap = (uxx + uyy)[nz]
        rp = r2[nz] ** ((p - 2) / 2)
        out[nz] = -rp * ((p - 2) * quad / r2[nz] + lap)
        return out

    return ProblemSpec('square', law, f, n_levels, exact_u, exact_sigma, n0)


def disk_radial(p, n_levels, lam=DEFAULT_LAMBDA, eps0=DEFAULT_EPS0,
                printed_mass_branch=False):
    """ f = 1 on the unit disk; u = (p-1)/p (1/2)^(1/(p-1)) (1 - |x|^(p/(p-1)))
        and sigma = -x/2.
    """
    law = PowerLaw(p, lam, eps0, printed_mass_branch)
    scale = (p - 1) / p * 0.5 ** (1 / (p - 1))

    def exact_u(x, y):
        return scale * (1 - np.hypot(x, y) ** (p / (p - 1)))

    def exact_sigma(x, y):
        return -0.5 * x, -0.5 * y

    def f(x, y):
        return np.ones_like(x)

    return ProblemSpec('disk', law, f, n_levels, exact_u, exact_sigma)


def problem_from_config(config):
    """ ProblemSpec from a flat dict with keys domain, p, levels and the
        optional n0, lam, eps0, printed_mass_branch. Other keys are ignored.
    """
    try:
        domain, p, levels = config['domain'], config['p'], config['levels']
    except KeyError as e:
        raise ConfigurationError('problem config is missing {}'.format(e))
    kwargs = dict(lam=config.get('lam', DEFAULT_LAMBDA),
                  eps0=config.get('eps0', DEFAULT_EPS0),
                  printed_mass_branch=config.get('printed_mass_branch', False))
    if domain == 'square':
        return square_manufactured(p, levels,
                                   n0=config.get('n0', SQUARE_COARSE_N),
                                   **kwargs)
    if domain == 'disk':
        return disk_radial(p, levels, **kwargs)
    raise ConfigurationError('domain must be one of {}, got {!r}'
                             .format(DOMAINS, domain))


class DiscreteProblem(object):
    """ Everything the solvers need on the finest level of a hierarchy:
        D, the load vector f, element areas, the law and the interior
        prolongations for multigrid.
    """
    def __init__(self, spec, hierarchy):
        self.spec = spec
        self.law = spec.law
        self.hierarchy = hierarchy
        self.mesh = hierarchy.finest

        spaces = [P1Space(m) for m in hierarchy.levels]
        self.p1 = spaces[-1]
        self.p0 = P0VecSpace(self.mesh)
        self.prolongations = [
            interior_prolongation(P, coarse, fine)
            for P, coarse, fine in zip(hierarchy.prolongations, spaces[:-1],
                                       spaces[1:])]

        self.D = assemble_weak_gradient(self.p1, self.p0)
        self.f = assemble_load(self.p1, spec.f)
        self.area = self.mesh.area
        self.norm_f = float(np.linalg.norm(self.f))
        self._poisson = None

    @property
    def h(self):
        return self.mesh.h

    @property
    def n_sigma(self):
        return self.p0.n_dofs

    @property
    def n_u(self):
        return self.p1.n_dofs

    @property
    def poisson(self):
        """ Unit-coefficient Schur matrix, assembled on first use.
        """
        if self._poisson is None:
            self._poisson = assemble_stiffness(self.p1, self.p0, self.D)
        return self._poisson

    def exact_interpolants(self):
        """ (sigma, u): elementwise averages of the exact flux and the nodal
            interpolant of the exact solution.
        """
        if self.spec.exact_u is None:
            raise ConfigurationError('problem has no exact solution')
        return (average_p0(self.p0, self.spec.exact_sigma),
                interpolate_p1(self.p1, self.spec.exact_u))

    def errors(self, sigma, u):
        """ (||u - u_h||, ||sigma - sigma_h||) in L2.
        """
        if self.spec.exact_u is None:
            raise ConfigurationError('problem has no exact solution')
        return (l2_error_p1(self.p1, u, self.spec.exact_u),
                l2_error_p0(self.p0, sigma, self.spec.exact_sigma))


def assemble(spec):
    if spec.domain == 'square':
        hierarchy = unit_square_hierarchy(spec.n0, spec.n_levels)
    else:
        hierarchy = unit_disk_hierarchy(spec.n_levels)
    problem = DiscreteProblem(spec, hierarchy)
    logger.info('Assembled %s problem, p = %g, h = %g: %d sigma + %d u DoFs',
                spec.domain, spec.p, problem.h, problem.n_sigma, problem.n_u)
    return problem


def linear_reference(problem):
    """ Direct solution of the p = 2 system: S u = f with the Poisson matrix
        and sigma_T = (D u)_T / |T|.
    """
    u = splu(problem.poisson.tocsc()).solve(problem.f)
    sigma = problem.D.dot(u) / np.repeat(problem.area, 2)
    return sigma, u
