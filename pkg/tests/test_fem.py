import test_helper

import numpy as np
import pytest

from dualtpd.fem import (
    P0VecSpace,
    P1Space,
    assemble_load,
    assemble_stiffness,
    assemble_weak_gradient,
    average_p0,
    coupled_dof,
    interior_prolongation,
    interpolate_p1,
    l2_error_p0,
    l2_error_p1,
    table_dof)
from dualtpd.mesh import (
    MeshError,
    TriMesh,
    unit_square_hierarchy,
    unit_square_mesh)

REFERENCE = TriMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [True] * 3, 1.0)


def test_weak_gradient_of_linear_function():
    """ D applied to the interpolant of a x + b y gives |T| (a, b).
    """
    mesh = unit_square_mesh(3)
    p1, p0 = P1Space(mesh, dirichlet=False), P0VecSpace(mesh)
    D = assemble_weak_gradient(p1, p0)
    assert D.shape == (2 * mesh.n_triangles, mesh.n_vertices)
    u = interpolate_p1(p1, lambda x, y: 2 * x - 5 * y)
    g = D.dot(u).reshape(-1, 2) / mesh.area[:, None]
    assert np.allclose(g, [2.0, -5.0])


def test_divergence_of_constant_field_vanishes():
    """ D^T of sigma = (1, 0) is zero at interior nodes.
    """
    mesh = unit_square_mesh(4)
    p1, p0 = P1Space(mesh), P0VecSpace(mesh)
    D = assemble_weak_gradient(p1, p0)
    sigma = np.tile([1.0, 0.0], mesh.n_triangles)
    assert np.allclose(D.T.dot(sigma), 0.0, atol=1e-14)


def test_weak_gradient_is_adjoint_consistent():
    """ <D u, sigma> == <u, D^T sigma>.
    """
    mesh = unit_square_mesh(5)
    p1, p0 = P1Space(mesh), P0VecSpace(mesh)
    D = assemble_weak_gradient(p1, p0)
    rng = np.random.default_rng(0)
    u, sigma = rng.standard_normal(p1.n_dofs), rng.standard_normal(p0.n_dofs)
    assert np.isclose(np.dot(D.dot(u), sigma), np.dot(u, D.T.dot(sigma)))


def test_spaces_on_different_meshes():
    """ Mixing meshes raises MeshError.
    """
    with pytest.raises(MeshError):
        assemble_weak_gradient(P1Space(unit_square_mesh(2)),
                               P0VecSpace(unit_square_mesh(2)))


def test_load_vector():
    """ f = 0 gives zeros, f = 1 integrates to |Omega|, f = x gives 1/24.
    """
    mesh = unit_square_mesh(4)
    assert np.array_equal(assemble_load(P1Space(mesh), lambda x, y: 0 * x),
                          np.zeros(9))
    full = P1Space(mesh, dirichlet=False)
    assert np.isclose(np.sum(assemble_load(full, lambda x, y: 1 + 0 * x)), 1)
    b = assemble_load(P1Space(REFERENCE, dirichlet=False), lambda x, y: x)
    assert np.isclose(b[0], 1 / 24, rtol=1e-12)


def test_l2_error_p1():
    """ Zero for linear exact data, one for the constant 1 against zero.
    """
    mesh = unit_square_mesh(4)
    full = P1Space(mesh, dirichlet=False)
    lin = lambda x, y: 1 + x - 3 * y
    assert l2_error_p1(full, interpolate_p1(full, lin), lin) < 1e-13
    p1 = P1Space(mesh)
    assert np.isclose(l2_error_p1(p1, np.zeros(p1.n_dofs),
                                  lambda x, y: 1 + 0 * x), 1.0)


def test_l2_error_p1_second_order():
    """ Interpolation error of x(1-x)y(1-y) drops by about 4 per halving.
    """
    u = lambda x, y: x * (1 - x) * y * (1 - y)
    errors = []
    for n in (8, 16):
        p1 = P1Space(unit_square_mesh(n))
        errors.append(l2_error_p1(p1, interpolate_p1(p1, u), u))
    assert 4 * 0.85 < errors[0] / errors[1] < 4 * 1.15


def test_l2_error_p0():
    """ Averages of constants are exact; error of (y, x) is first order.
    """
    mesh = unit_square_mesh(4)
    p0 = P0VecSpace(mesh)
    const = lambda x, y: (2 + 0 * x, -1 + 0 * y)
    assert l2_error_p0(p0, average_p0(p0, const), const) < 1e-14
    assert np.isclose(l2_error_p0(p0, np.zeros(p0.n_dofs),
                                  lambda x, y: (1 + 0 * x, 0 * y)), 1.0)

    field = lambda x, y: (y, x)
    errors = []
    for n in (8, 16):
        p0 = P0VecSpace(unit_square_mesh(n))
        errors.append(l2_error_p0(p0, average_p0(p0, field), field))
    assert 2 * 0.85 < errors[0] / errors[1] < 2 * 1.15


def test_stiffness_is_five_point_laplacian():
    """ On this triangulation the P1 Laplacian is the 5-point stencil.
    """
    mesh = unit_square_mesh(4)
    p1, p0 = P1Space(mesh), P0VecSpace(mesh)
    S = assemble_stiffness(p1, p0).toarray()
    assert np.allclose(np.diag(S), 4.0)
    off = S[~np.eye(len(S), dtype=bool)]
    assert set(np.round(off, 12)) <= {0.0, -1.0}
    assert np.allclose(S, S.T)
    assert np.linalg.eigvalsh(S).min() > 0


def test_dof_counts():
    """ Error-table DoF counts, and the coupled dimension 2 N_T + N_n.
    """
    assert table_dof(unit_square_hierarchy(32, 2).finest) == 12417
    assert table_dof(unit_square_hierarchy(32, 3).finest) == 49409
    mesh = unit_square_mesh(32)
    assert coupled_dof(P1Space(mesh), P0VecSpace(mesh)) == 2 * 2048 + 31 ** 2


def test_interior_prolongation():
    """ Restricted prolongation keeps interior rows and columns only.
    """
    hierarchy = unit_square_hierarchy(2, 2)
    coarse, fine = [P1Space(m) for m in hierarchy.levels]
    P = interior_prolongation(hierarchy.prolongations[0], coarse, fine)
    assert P.shape == (9, 1)
    # the coarse hat function at the centre, sampled at the fine nodes
    assert np.isclose(P.sum(), 1 + 6 * 0.5)
