""" P1 Lagrange and elementwise-constant vector spaces on a TriMesh.

    Callables describing fields take coordinate arrays x, y of any shape and
    return arrays broadcastable to that shape (a pair of them for vector
    fields), e.g. `lambda x, y: x * (1 - x)`.
"""
from __future__ import division

import numpy as np
import scipy.sparse as sp

from dualtpd.mesh import MeshError
from dualtpd.sparse_linalg import from_triplets

# Symmetric 6-point rule on triangles, exact for polynomials of degree 4.
# Barycentric coordinates of the points and weights relative to |T|.
_A1, _B1, _W1 = 0.445948490915965, 0.108103018168070, 0.223381589678011
_A2, _B2, _W2 = 0.091576213509771, 0.816847572980459, 0.109951743655322
QUAD_BARY = np.array([[_A1, _A1, _B1], [_A1, _B1, _A1], [_B1, _A1, _A1],
                      [_A2, _A2, _B2], [_A2, _B2, _A2], [_B2, _A2, _A2]])
QUAD_WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])


def quadrature_points(mesh):
    """ Physical quadrature points, shape (N_T, 6, 2).
    """
    return np.einsum('qi,tid->tqd', QUAD_BARY, mesh.vertices[mesh.triangles])


def _evaluate(func, pts):
    x, y = pts[..., 0], pts[..., 1]
    return np.broadcast_to(np.asarray(func(x, y), dtype=np.float64), x.shape)


def _evaluate_vector(func, pts):
    sx, sy = func(pts[..., 0], pts[..., 1])
    shape = pts.shape[:-1]
    return np.stack([np.broadcast_to(np.asarray(sx, dtype=np.float64), shape),
                     np.broadcast_to(np.asarray(sy, dtype=np.float64), shape)],
                    axis=-1)


class P1Space(object):
    """ Continuous piecewise-linear functions.

        With dirichlet=True (the default) boundary vertices carry no DoF and
        functions vanish there. dirichlet=False keeps every vertex as a DoF,
        which is only used for debugging checks.
    """
    def __init__(self, mesh, dirichlet=True):
        self.mesh = mesh
        self.dirichlet = dirichlet
        if dirichlet:
            self.dof_vertices = np.flatnonzero(~mesh.boundary)
        else:
            self.dof_vertices = np.arange(mesh.n_vertices)
        self.dof_map = np.full(mesh.n_vertices, -1, dtype=np.int64)
        self.dof_map[self.dof_vertices] = np.arange(len(self.dof_vertices))

    @property
    def n_dofs(self):
        return len(self.dof_vertices)

    def vertex_values(self, u):
        """ Values at all vertices, zero on eliminated boundary vertices.
        """
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.n_dofs,):
            raise ValueError('P1 vector has shape {} (expected ({},))'
                             .format(u.shape, self.n_dofs))
        full = np.zeros(self.mesh.n_vertices)
        full[self.dof_vertices] = u
        return full


class P0VecSpace(object):
    """ Elementwise-constant 2-vectors, stored (s_x, s_y) per triangle.
    """
    def __init__(self, mesh):
        self.mesh = mesh

    @property
    def n_elements(self):
        return self.mesh.n_triangles

    @property
    def n_dofs(self):
        return 2 * self.mesh.n_triangles


def _check_same_mesh(p1, p0):
    if p1.mesh is not p0.mesh:
        raise MeshError('P1 and P0 spaces are defined on different meshes')


def assemble_weak_gradient(p1, p0):
    """ Matrix D of (sigma, grad u): D[(T, x), i] = |T| dphi_i/dx and
        D[(T, y), i] = |T| dphi_i/dy.

    # Returns:
        (2 N_T) x N_n CSR matrix; columns of eliminated boundary vertices
        are dropped.
    """
    _check_same_mesh(p1, p0)
    mesh = p1.mesh
    nt = mesh.n_triangles
    cols = p1.dof_map[mesh.triangles]                        # (nt, 3)
    vals = mesh.area[:, None, None] * mesh.grads             # (nt, 3, 2)
    rows = 2 * np.arange(nt)[:, None, None] + np.arange(2)[None, None, :]
    rows = np.broadcast_to(rows, vals.shape)
    cols = np.broadcast_to(cols[:, :, None], vals.shape)
    keep = cols >= 0
    return from_triplets(rows[keep], cols[keep], vals[keep],
                         (2 * nt, p1.n_dofs))


def assemble_load(p1, f):
    """ b_i = int f phi_i dx with the degree-4 rule.
    """
    mesh = p1.mesh
    F = _evaluate(f, quadrature_points(mesh))                 # (nt, 6)
    local = mesh.area[:, None] * np.einsum('q,tq,qi->ti', QUAD_WEIGHTS, F,
                                           QUAD_BARY)
    dofs = p1.dof_map[mesh.triangles]
    keep = dofs >= 0
    return np.bincount(dofs[keep], weights=local[keep],
                       minlength=p1.n_dofs).astype(np.float64)


def assemble_stiffness(p1, p0, D=None):
    """ Unit-coefficient Schur matrix D^T diag(1/|T|) D, i.e. the P1
        Laplacian.
    """
    if D is None:
        D = assemble_weak_gradient(p1, p0)
    scale = sp.diags(np.repeat(1.0 / p1.mesh.area, 2))
    S = (D.T.dot(scale.dot(D))).tocsr()
    S = 0.5 * (S + S.T)
    S.sort_indices()
    return S.tocsr()


def interpolate_p1(p1, func):
    """ Nodal interpolant restricted to the DoF vertices.
    """
    xy = p1.mesh.vertices[p1.dof_vertices]
    return _evaluate(func, xy).copy()


def average_p0(p0, func):
    """ Elementwise averages of a vector field, flattened to length 2 N_T.
    """
    S = _evaluate_vector(func, quadrature_points(p0.mesh))    # (nt, 6, 2)
    return np.einsum('q,tqd->td', QUAD_WEIGHTS, S).ravel()


def l2_error_p1(p1, u_h, u_exact):
    """ ||u_h - u_exact||_L2 with the degree-4 rule; eliminated boundary
        values of u_h are zero.
    """
    mesh = p1.mesh
    nodal = p1.vertex_values(u_h)[mesh.triangles]             # (nt, 3)
    uh_q = np.einsum('qi,ti->tq', QUAD_BARY, nodal)
    diff = uh_q - _evaluate(u_exact, quadrature_points(mesh))
    return float(np.sqrt(np.sum(mesh.area * np.dot(diff ** 2,
                                                   QUAD_WEIGHTS))))


def l2_error_p0(p0, sigma_h, sigma_exact):
    """ ||sigma_h - sigma_exact||_L2 for an elementwise-constant sigma_h.
    """
    mesh = p0.mesh
    sigma_h = np.asarray(sigma_h, dtype=np.float64)
    if sigma_h.shape != (p0.n_dofs,):
        raise ValueError('P0 vector has shape {} (expected ({},))'
                         .format(sigma_h.shape, p0.n_dofs))
    S = _evaluate_vector(sigma_exact, quadrature_points(mesh))
    diff = S - sigma_h.reshape(-1, 1, 2)
    sq = np.sum(diff ** 2, axis=2)
    return float(np.sqrt(np.sum(mesh.area * np.dot(sq, QUAD_WEIGHTS))))


def coupled_dof(p1, p0):
    """ Dimension of the coupled (sigma, u) system.
    """
    return p0.n_dofs + p1.n_dofs


def table_dof(mesh):
    """ DoF count of the error-table convention: one unknown per
        triangle plus one per vertex.
    """
    return mesh.n_triangles + mesh.n_vertices


def interior_prolongation(P, coarse, fine):
    """ Restricts a nodal prolongation to the DoFs of two P1 spaces.
    """
    return P[fine.dof_vertices][:, coarse.dof_vertices].tocsr()
