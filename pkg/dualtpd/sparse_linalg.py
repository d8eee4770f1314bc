""" Sparse linear algebra substrate.

    Every matrix in the package (weak gradient, mass matrices, Schur
    complements, prolongations) is a scipy CSR matrix of 64-bit floats.
    Assembly always goes through `from_triplets`, which sums duplicates.
"""
from __future__ import division

import logging

import numpy as np
import scipy.io
import scipy.sparse as sp

logger = logging.getLogger(__name__)


class DimensionError(ValueError):
    pass


def from_triplets(rows, cols, vals, shape):
    """ Builds a CSR matrix from a triplet buffer.

    # Arguments:
        rows: Row index of each entry.
        cols: Column index of each entry.
        vals: Entry values. Entries sharing (row, col) are summed.
        shape: (nrows, ncols).

    # Returns:
        CSR matrix with sorted, unique column indices in each row.
    """
    A = sp.coo_matrix((np.asarray(vals, dtype=np.float64),
                       (np.asarray(rows, dtype=np.int64),
                        np.asarray(cols, dtype=np.int64))),
                      shape=shape).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def as_csr(A):
    A = sp.csr_matrix(A, dtype=np.float64)
    A.sum_duplicates()
    A.sort_indices()
    return A


def check_csr(A):
    """ Raises DimensionError when A violates the CSR invariants.
    """
    nrows, ncols = A.shape
    indptr, indices = A.indptr, A.indices
    if len(indptr) != nrows + 1:
        raise DimensionError('row-offsets has length {} (expected {})'
                             .format(len(indptr), nrows + 1))
    if indptr[-1] != len(A.data) or np.any(np.diff(indptr) < 0):
        raise DimensionError('row-offsets are not a valid CSR pointer array')
    if len(indices) and (indices.min() < 0 or indices.max() >= ncols):
        raise DimensionError('column index out of range for {} columns'
                             .format(ncols))
    for i in range(nrows):
        row = indices[indptr[i]:indptr[i + 1]]
        if np.any(np.diff(row) <= 0):
            raise DimensionError('column indices of row {} are not strictly '
                                 'increasing'.format(i))
    return True


def spmv(A, x):
    """ y = A x.
    """
    x = np.asarray(x, dtype=np.float64)
    if A.shape[1] != x.shape[0]:
        raise DimensionError('cannot apply a {}x{} matrix to a vector of '
                             'length {}'.format(A.shape[0], A.shape[1],
                                                x.shape[0]))
    return A.dot(x)


def spmv_transpose(A, x):
    """ y = A^T x, without forming A^T.
    """
    x = np.asarray(x, dtype=np.float64)
    if A.shape[0] != x.shape[0]:
        raise DimensionError('cannot apply the transpose of a {}x{} matrix '
                             'to a vector of length {}'
                             .format(A.shape[0], A.shape[1], x.shape[0]))
    return A.T.dot(x)


def galerkin_triple(P, S):
    """ Coarse operator P^T S P.

    # Arguments:
        P: Prolongation, n x m.
        S: Fine operator, n x n.

    # Returns:
        m x m CSR matrix. When S is exactly symmetric the product is
        averaged with its transpose, so the result is exactly symmetric too.
    """
    if not (P.shape[0] == S.shape[0] == S.shape[1]):
        raise DimensionError('galerkin_triple needs P with {} rows for a '
                             '{}x{} operator, got {}'
                             .format(S.shape[0], S.shape[0], S.shape[1],
                                     P.shape[0]))
    P = sp.csr_matrix(P)
    C = as_csr(P.T.dot(S.dot(P)))
    if is_symmetric(S, tol=0.0):
        C = as_csr(0.5 * (C + C.T))
    return C


def is_symmetric(A, tol=1e-10):
    """ True when max|A - A^T| <= tol * max|A|.
    """
    if A.shape[0] != A.shape[1]:
        return False
    diff = abs(A - A.T)
    scale = abs(A).max() if A.nnz else 0.0
    worst = diff.max() if diff.nnz else 0.0
    return worst <= tol * scale


def block_diag_csr(blocks):
    """ CSR matrix of a block-diagonal array of shape (n, d, d).
    """
    blocks = np.asarray(blocks, dtype=np.float64)
    n, d, _ = blocks.shape
    offset = d * np.arange(n)
    rows = (offset[:, None, None] + np.arange(d)[None, :, None]
            + np.zeros((1, 1, d), dtype=np.int64))
    cols = (offset[:, None, None] + np.arange(d)[None, None, :]
            + np.zeros((1, d, 1), dtype=np.int64))
    return from_triplets(rows.ravel(), cols.ravel(), blocks.ravel(),
                         (n * d, n * d))


def write_matrix_market(A, path):
    """ Dumps A in MatrixMarket coordinate format for debugging.
    """
    scipy.io.mmwrite(path, sp.coo_matrix(A))
    logger.debug('Wrote %dx%d matrix with %d entries to %s',
                 A.shape[0], A.shape[1], A.nnz, path)
