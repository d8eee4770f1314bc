import test_helper

import numpy as np
import pytest

from dualtpd.mesh import (
    MeshError,
    TriMesh,
    unit_disk_hierarchy,
    unit_square_hierarchy,
    unit_square_mesh,
    uniform_refine,
    write_off)


def test_unit_square_mesh_counts():
    """ n x n squares give 2 n^2 triangles of area 1 / (2 n^2).
    """
    mesh = unit_square_mesh(2)
    assert mesh.n_vertices == 9
    assert mesh.n_triangles == 8
    assert np.allclose(mesh.area, 1 / 8)
    assert np.isclose(mesh.total_area(), 1.0)
    assert np.sum(mesh.boundary) == 8
    assert mesh.h == 0.5


def test_edges_of_single_square():
    """ Two triangles share the diagonal; the other four edges are boundary.
    """
    mesh = unit_square_mesh(1)
    assert len(mesh.edges) == 5
    assert len(mesh.boundary_edges) == 4


def test_clockwise_triangle_rejected():
    """ Negative orientation raises MeshError.
    """
    with pytest.raises(MeshError):
        TriMesh([[0, 0], [0, 1], [1, 0]], [[0, 1, 2]], [True] * 3, 1.0)


def test_geometry_is_read_only():
    """ Cached arrays cannot be modified in place.
    """
    mesh = unit_square_mesh(1)
    with pytest.raises(ValueError):
        mesh.area[0] = 1.0


def test_uniform_refine_counts_and_prolongation():
    """ Refinement quadruples triangles and P interpolates linear functions.
    """
    coarse = unit_square_mesh(2)
    fine, P = uniform_refine(coarse)
    assert fine.n_triangles == 4 * coarse.n_triangles
    assert fine.n_vertices == coarse.n_vertices + len(coarse.edges)
    assert np.isclose(fine.total_area(), 1.0)
    assert fine.h == coarse.h / 2
    assert np.allclose(P.sum(axis=1), 1.0)

    linear = lambda xy: 2 * xy[:, 0] - 3 * xy[:, 1] + 1
    assert np.allclose(P.dot(linear(coarse.vertices)), linear(fine.vertices))


def test_refined_boundary_flags():
    """ The square hierarchy marks exactly the vertices on the boundary.
    """
    mesh = unit_square_hierarchy(2, 3).finest
    x, y = mesh.vertices.T
    on_edge = np.isclose(x, 0) | np.isclose(x, 1) | np.isclose(y, 0) | \
        np.isclose(y, 1)
    assert np.array_equal(mesh.boundary, on_edge)
    assert mesh.h == 1 / 8


def test_disk_hierarchy():
    """ Boundary vertices lie on the unit circle and the area approaches pi.
    """
    hierarchy = unit_disk_hierarchy(4)
    assert len(hierarchy) == 4
    areas = [m.total_area() for m in hierarchy.levels]
    assert all(a < b for a, b in zip(areas, areas[1:]))
    assert abs(areas[-1] - np.pi) < 0.05
    finest = hierarchy.finest
    radii = np.linalg.norm(finest.vertices[finest.boundary], axis=1)
    assert np.allclose(radii, 1.0)
    assert finest.h == 2.0 ** (1 - 4)


def test_hierarchy_needs_a_level():
    """ Zero levels is a MeshError.
    """
    with pytest.raises(MeshError):
        unit_square_hierarchy(2, 0)


def test_write_off(tmpdir):
    """ OFF dump has a header and one line per vertex and triangle.
    """
    mesh = unit_square_mesh(1)
    path = str(tmpdir.join('square.off'))
    write_off(mesh, path)
    with open(path) as f:
        lines = f.read().splitlines()
    assert lines[0] == 'OFF'
    assert lines[1] == '4 2 0'
    assert len(lines) == 2 + 4 + 2
