"""Small dense/sparse linear algebra helpers."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def opnorm(A):
    """Operator 2-norm (largest singular value) of a dense or sparse matrix.

    All-zero rows and columns are dropped first; they do not change the
    singular values and boundary defects are usually very sparse.
    """
    if sp.issparse(A):
        A = A.tocsr()
        A.eliminate_zeros()
        if A.nnz == 0:
            return 0.0
        rows = np.unique(A.nonzero()[0])
        cols = np.unique(A.nonzero()[1])
        sub = A[rows][:, cols].toarray()
    else:
        A = np.asarray(A)
        if A.size == 0:
            return 0.0
        nz = A != 0
        rows = np.flatnonzero(nz.any(axis=1))
        cols = np.flatnonzero(nz.any(axis=0))
        if rows.size == 0:
            return 0.0
        sub = A[np.ix_(rows, cols)]
    if min(sub.shape) == 1:
        return float(np.linalg.norm(sub))
    return float(np.linalg.svd(sub, compute_uv=False)[0])


def dense(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A)


def is_selfadjoint(A, tol=1e-10):
    D = A - A.conj().T
    return opnorm(D) <= tol


def hermitian_function(A, f):
    """Apply ``f`` to the eigenvalues of the selfadjoint matrix ``A``."""
    A = dense(A)
    w, V = np.linalg.eigh((A + A.conj().T) / 2)
    return (V * f(w)) @ V.conj().T


def random_unitary(n, rng):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Qm, Rm = np.linalg.qr(Z)
    d = np.diag(Rm)
    return Qm * (d / np.abs(d))


def random_selfadjoint(n, rng, norm=None):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = (Z + Z.conj().T) / 2
    if norm is not None:
        H *= norm / np.linalg.norm(H, 2)
    return H


def hermitian_norm(A, dense_limit=600):
    """Spectral radius of a selfadjoint dense or sparse matrix."""
    A = sp.csr_matrix(A)
    A.eliminate_zeros()
    if A.nnz == 0:
        return 0.0
    idx = np.unique(np.concatenate(A.nonzero()))
    sub = A[idx][:, idx]
    if len(idx) <= dense_limit:
        return float(np.max(np.abs(np.linalg.eigvalsh(sub.toarray()))))
    from scipy.sparse.linalg import eigsh

    w = eigsh(sub, k=1, which="LM", tol=1e-12, return_eigenvectors=False)
    return float(np.abs(w).max())
