"""Dense and sparse-row matrix helpers shared by the solvers and the analysis code.

Dense matrices are plain ``numpy.ndarray`` objects. Sparse coefficient
matrices are canonical ``scipy.sparse.csr_matrix`` instances: sorted column
indices, no duplicate entries and no explicitly stored zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "RankDeficientError", "InconsistentSystemError", "ZeroRowError",
    "SizeGuardError", "QrFactors", "SvdFactors",
    "as_dense", "as_sparse_rows", "frobenius_norm", "row_norms_squared",
    "spectral_norm", "sigma_min_positive", "rank_tolerance", "svd",
    "pinv", "qr_thin", "min_norm_solution", "kron_small", "vec", "unvec",
    "density", "range_basis",
]

EPS = np.finfo(np.float64).eps

#: largest short dimension handed to a dense SVD
SVD_MAX_DIM = 4096
#: largest side of an explicitly formed Kronecker product
KRON_MAX_DIM = 4096
#: min(rows, cols) at or below which spectral_norm uses an exact SVD
EXACT_NORM_DIM = 64
POWER_MAX_ITERS = 100_000


class RankDeficientError(ValueError):
    pass


class InconsistentSystemError(ValueError):
    pass


class ZeroRowError(ValueError):
    pass


class SizeGuardError(ValueError):
    pass


@dataclass(frozen=True)
class QrFactors:
    """Thin QR factors ``B = q @ r`` with ``r`` having a positive diagonal."""
    q: np.ndarray
    r: np.ndarray


@dataclass(frozen=True)
class SvdFactors:
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray
    tol: float

    @property
    def rank(self):
        return int(np.count_nonzero(self.s > self.tol))


def as_dense(M):
    """Return `M` as a float64 ndarray (densifying sparse input)."""
    if sp.issparse(M):
        M = M.toarray()
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    return M


def as_sparse_rows(M):
    """Return a canonical CSR copy of `M`.

    Duplicate entries are summed, column indices sorted within each row and
    explicit zeros dropped. Non-finite values are rejected.
    """
    A = sp.csr_matrix(M, dtype=np.float64, copy=True)
    if A.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    if not np.all(np.isfinite(A.data)):
        raise ValueError("matrix has non-finite entries")
    return A


def frobenius_norm(M):
    if sp.issparse(M):
        data = M.tocsr().data
        return float(np.sqrt(np.dot(data, data)))
    return float(np.linalg.norm(np.asarray(M, dtype=np.float64)))


def row_norms_squared(A):
    """Squared Euclidean norm of every row of `A` (dense or sparse)."""
    if sp.issparse(A):
        A = A.tocsr()
        return np.asarray(A.multiply(A).sum(axis=1), dtype=np.float64).ravel()
    A = np.asarray(A, dtype=np.float64)
    return np.einsum("ij,ij->i", A, A)


def rank_tolerance(smax, shape):
    return float(smax) * max(shape) * EPS


def svd(M):
    """Thin SVD of `M` with the numerical-rank tolerance attached."""
    M = as_dense(M)
    if min(M.shape) > SVD_MAX_DIM:
        raise SizeGuardError(f"SVD limited to short dimension {SVD_MAX_DIM}, got {M.shape}")
    u, s, vt = np.linalg.svd(M, full_matrices=False)
    smax = s[0] if s.size else 0.0
    return SvdFactors(u, s, vt, rank_tolerance(smax, M.shape))


def spectral_norm(M):
    """Largest singular value of `M`.

    An exact SVD is used when ``min(M.shape) <= 64``; otherwise power
    iteration on ``M^T M`` from the normalised all-ones vector.
    """
    rows, cols = M.shape
    if min(rows, cols) <= EXACT_NORM_DIM:
        s = np.linalg.svd(as_dense(M), compute_uv=False)
        if s.size == 0 or s[0] == 0.0:
            raise ValueError("spectral norm of a zero matrix requested")
        return float(s[0])

    Mt = M.T
    x = np.full(cols, 1.0 / np.sqrt(cols))
    lam = 0.0
    restarted = False
    for _ in range(POWER_MAX_ITERS):
        mx = np.asarray(M @ x).ravel()
        rq = float(mx @ mx)  # Rayleigh quotient of M^T M
        if rq == 0.0:
            if restarted:
                raise ValueError("spectral norm of a zero matrix requested")
            # start vector in the null space; retry from a fixed alternating vector
            x = np.where(np.arange(cols) % 2 == 0, 1.0, -1.0) / np.sqrt(cols)
            restarted = True
            continue
        if abs(rq - lam) <= 1e-14 * rq:
            return float(np.sqrt(rq))
        lam = rq
        y = np.asarray(Mt @ mx).ravel()
        x = y / np.linalg.norm(y)
    raise RuntimeError("power iteration did not converge; degenerate input?")


def sigma_min_positive(M):
    """Smallest singular value above the numerical-rank tolerance."""
    f = svd(M)
    keep = f.s[f.s > f.tol]
    if keep.size == 0:
        raise ValueError("matrix is numerically zero")
    return float(keep[-1])


def range_basis(M):
    """Orthonormal basis (as columns) of range(M)."""
    f = svd(M)
    return f.u[:, : f.rank]


def pinv(M):
    f = svd(M)
    r = f.rank
    return (f.vt[:r].T / f.s[:r]) @ f.u[:, :r].T


def qr_thin(B):
    """Thin Householder QR of a full-column-rank `B` with ``diag(R) > 0``."""
    B = as_dense(B)
    q_rows, n = B.shape
    if n > q_rows:
        raise RankDeficientError(f"B has more columns than rows: {B.shape}")
    Q, R = np.linalg.qr(B, mode="reduced")
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    Q = Q * d
    R = d[:, None] * R
    tol = rank_tolerance(spectral_norm(B) if B.any() else 0.0, B.shape)
    if np.any(np.abs(np.diag(R)) <= tol):
        raise RankDeficientError("B is numerically rank deficient")
    return QrFactors(Q, R)


def min_norm_solution(A, B, C, rtol=1e-8):
    """Minimum Frobenius-norm solution ``pinv(A) @ C @ pinv(B)`` of ``A X B = C``.

    Raises `InconsistentSystemError` when the computed solution leaves a
    residual above ``rtol * ||C||_F``.
    """
    Ad, Bd, Cd = as_dense(A), as_dense(B), as_dense(C)
    X = pinv(Ad) @ Cd @ pinv(Bd)
    res = np.linalg.norm(Ad @ X @ Bd - Cd)
    if res > rtol * np.linalg.norm(Cd):
        raise InconsistentSystemError(
            f"AXB=C is inconsistent: residual {res:.3e} vs ||C||_F {np.linalg.norm(Cd):.3e}")
    return X


def kron_small(P, Q):
    P, Q = as_dense(P), as_dense(Q)
    rows = P.shape[0] * Q.shape[0]
    cols = P.shape[1] * Q.shape[1]
    if rows > KRON_MAX_DIM or cols > KRON_MAX_DIM:
        raise SizeGuardError(f"Kronecker product of size {rows}x{cols} exceeds the desk-scale guard")
    return np.kron(P, Q)


def vec(M):
    """Stack the columns of `M` into one vector."""
    return np.asarray(M).reshape(-1, order="F")


def unvec(v, rows, cols):
    v = np.asarray(v)
    if v.size != rows * cols:
        raise ValueError(f"cannot reshape {v.size} entries into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def density(A):
    rows, cols = A.shape
    nnz = A.nnz if sp.issparse(A) else np.count_nonzero(A)
    return nnz / (rows * cols)
