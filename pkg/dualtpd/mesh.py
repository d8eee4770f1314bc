""" Nested triangulations of the unit square and of the unit disk.

    Meshes are refined uniformly (every triangle split into four through its
    edge midpoints); each refinement also returns the nodal P1 prolongation
    between the two levels, which is what multigrid needs.
"""
from __future__ import division

import logging

import numpy as np

from dualtpd.sparse_linalg import from_triplets

logger = logging.getLogger(__name__)


class MeshError(ValueError):
    pass


class TriMesh(object):
    """ Immutable triangulation with cached element geometry.

    # Arguments:
        vertices: (N_V, 2) array of coordinates.
        triangles: (N_T, 3) array of vertex indices, counterclockwise.
        boundary: (N_V,) boolean flags marking vertices on the boundary.
        h: Nominal mesh size used to label the level.
    """
    def __init__(self, vertices, triangles, boundary, h):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.boundary = np.asarray(boundary, dtype=bool)
        self.h = float(h)

        if self.boundary.shape != (len(self.vertices),):
            raise MeshError('boundary flags have shape {} for {} vertices'
                            .format(self.boundary.shape, len(self.vertices)))

        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if np.any(det <= 0):
            bad = np.flatnonzero(det <= 0)
            raise MeshError('{} triangles have non-positive signed area '
                            '(first: {})'.format(len(bad), bad[0]))
        self.area = 0.5 * det

        # Gradients of the barycentric coordinates: rows of the inverse of
        # the edge matrix, lambda_0 taking the remainder.
        grads = np.empty((len(self.triangles), 3, 2))
        grads[:, 1, 0] = e2[:, 1] / det
        grads[:, 1, 1] = -e2[:, 0] / det
        grads[:, 2, 0] = -e1[:, 1] / det
        grads[:, 2, 1] = e1[:, 0] / det
        grads[:, 0] = -grads[:, 1] - grads[:, 2]
        self.grads = grads

        for arr in (self.vertices, self.triangles, self.boundary,
                    self.area, self.grads):
            arr.setflags(write=False)

        self.edges, self.edge_index, self.edge_count = _edge_structure(
            self.triangles)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def boundary_edges(self):
        return self.edges[self.edge_count == 1]

    def total_area(self):
        return float(np.sum(self.area))


def _edge_structure(triangles):
    """ Unique edges of a triangulation.

    # Returns:
        edges: (N_E, 2) sorted vertex pairs.
        edge_index: (N_T, 3) edge id of local edge k, which joins local
            vertices k and (k+1) % 3.
        count: (N_E,) number of triangles sharing each edge.
    """
    local = np.stack([triangles[:, [0, 1]],
                      triangles[:, [1, 2]],
                      triangles[:, [2, 0]]], axis=1).reshape(-1, 2)
    local = np.sort(local, axis=1)
    edges, inverse, count = np.unique(local, axis=0, return_inverse=True,
                                      return_counts=True)
    if np.any(count > 2):
        raise MeshError('{} edges are shared by more than two triangles'
                        .format(int(np.sum(count > 2))))
    return edges, inverse.reshape(-1, 3), count


def uniform_refine(mesh, boundary_projection=None):
    """ Red refinement: every triangle is split into four through its edge
        midpoints.

    # Arguments:
        mesh: TriMesh to refine.
        boundary_projection: Optional callable mapping an (k, 2) array of new
            boundary midpoints to their positions on the curved boundary.

    # Returns:
        The fine TriMesh and the (N_V fine) x (N_V coarse) nodal
        prolongation: identity rows for the old vertices, rows with two
        entries 1/2 for edge midpoints.
    """
    nv = mesh.n_vertices
    edges = mesh.edges
    ne = len(edges)

    midpoints = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    on_boundary = mesh.edge_count == 1
    if boundary_projection is not None and np.any(on_boundary):
        midpoints[on_boundary] = boundary_projection(midpoints[on_boundary])
    vertices = np.vstack([mesh.vertices, midpoints])
    boundary = np.concatenate([mesh.boundary, on_boundary])

    a, b, c = mesh.triangles.T
    m_ab, m_bc, m_ca = (nv + mesh.edge_index).T
    triangles = np.concatenate([
        np.stack([a, m_ab, m_ca], axis=1),
        np.stack([m_ab, b, m_bc], axis=1),
        np.stack([m_ca, m_bc, c], axis=1),
        np.stack([m_ab, m_bc, m_ca], axis=1),
    ])
    # Children of one parent stay adjacent in memory.
    triangles = triangles.reshape(4, -1, 3).transpose(1, 0, 2).reshape(-1, 3)

    rows = np.concatenate([np.arange(nv),
                           nv + np.arange(ne), nv + np.arange(ne)])
    cols = np.concatenate([np.arange(nv), edges[:, 0], edges[:, 1]])
    vals = np.concatenate([np.ones(nv), np.full(2 * ne, 0.5)])
    P = from_triplets(rows, cols, vals, (nv + ne, nv))

    fine = TriMesh(vertices, triangles, boundary, mesh.h / 2)
    return fine, P


class MeshHierarchy(object):
    """ Nested meshes, coarse to fine, with the prolongation from each level
        to the next.
    """
    def __init__(self, levels, prolongations):
        if len(prolongations) != len(levels) - 1:
            raise MeshError('{} levels need {} prolongations, got {}'
                            .format(len(levels), len(levels) - 1,
                                    len(prolongations)))
        self.levels = list(levels)
        self.prolongations = list(prolongations)

    def __len__(self):
        return len(self.levels)

    @property
    def finest(self):
        return self.levels[-1]

    @classmethod
    def from_coarse(cls, coarse, n_levels, boundary_projection=None):
        if n_levels < 1:
            raise MeshError('a hierarchy needs at least one level, got {}'
                            .format(n_levels))
        levels, prolongations = [coarse], []
        for _ in range(n_levels - 1):
            fine, P = uniform_refine(levels[-1], boundary_projection)
            levels.append(fine)
            prolongations.append(P)
        logger.debug('Built %d-level hierarchy, finest has %d triangles',
                     n_levels, levels[-1].n_triangles)
        return cls(levels, prolongations)


def unit_square_mesh(n):
    """ n x n squares of [0,1]^2, each split into two right triangles by the
        diagonal running from its lower-left to its upper-right corner.
    """
    if n < 1:
        raise MeshError('need at least one subdivision per side, got {}'
                        .format(n))
    t = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(t, t, indexing='xy')
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing='xy')
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    triangles = np.concatenate([np.stack([v00, v10, v11], axis=1),
                                np.stack([v00, v11, v01], axis=1)])

    x, y = vertices.T
    boundary = (x == 0.0) | (x == 1.0) | (y == 0.0) | (y == 1.0)
    return TriMesh(vertices, triangles, boundary, 1.0 / n)


def unit_square_hierarchy(n0, n_levels):
    """ Hierarchy on [0,1]^2 whose finest level has h = 1/(n0 2^(L-1)).
    """
    return MeshHierarchy.from_coarse(unit_square_mesh(n0), n_levels)


def project_to_unit_circle(points):
    return points / np.linalg.norm(points, axis=1)[:, None]


def unit_disk_fan(m=6):
    """ Regular m-gon inscribed in the unit circle, fanned around the origin.
    """
    if m < 3:
        raise MeshError('a fan needs at least 3 boundary vertices, got {}'
                        .format(m))
    angles = 2 * np.pi * np.arange(m) / m
    ring = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    vertices = np.vstack([[0.0, 0.0], ring])
    k = np.arange(m)
    triangles = np.stack([np.zeros(m, dtype=np.int64), 1 + k,
                          1 + (k + 1) % m], axis=1)
    boundary = np.concatenate([[False], np.ones(m, dtype=bool)])
    return TriMesh(vertices, triangles, boundary, 1.0)


def unit_disk_hierarchy(n_levels):
    """ Hierarchy on the unit disk from a hexagon fan; new boundary vertices
        are pushed radially onto |x| = 1 at every refinement.
    """
    return MeshHierarchy.from_coarse(unit_disk_fan(6), n_levels,
                                     project_to_unit_circle)


def write_off(mesh, path):
    """ Writes an OFF-like text file: a header line, the vertex list (z = 0)
        and the triangle list.
    """
    with open(path, 'w') as f:
        f.write('OFF\n')
        f.write('{} {} 0\n'.format(mesh.n_vertices, mesh.n_triangles))
        for x, y in mesh.vertices:
            f.write('{!r} {!r} 0.0\n'.format(float(x), float(y)))
        for a, b, c in mesh.triangles:
            f.write('3 {} {} {}\n'.format(a, b, c))
