"""Independent reference computations used by the tests.

Nothing here calls into the package; each routine is the textbook
definition written as plainly as possible.
"""

import itertools

import numpy as np


def jacobi_singular_values(M, sweeps=60):
    """Singular values by one-sided Jacobi rotations on the columns."""
    U = np.array(M, dtype=np.float64)
    if U.shape[0] < U.shape[1]:
        U = U.T.copy()
    n = U.shape[1]
    for _ in range(sweeps):
        off = 0.0
        for i, j in itertools.combinations(range(n), 2):
            a = U[:, i] @ U[:, i]
            b = U[:, j] @ U[:, j]
            c = U[:, i] @ U[:, j]
            if c == 0.0 or a == 0.0 or b == 0.0 or abs(c) <= 1e-15 * np.sqrt(a) * np.sqrt(b):
                continue
            off = max(off, abs(c) / (np.sqrt(a) * np.sqrt(b)))
            zeta = (b - a) / (2.0 * c)
            t = np.sign(zeta) / (abs(zeta) + np.hypot(1.0, zeta)) if zeta != 0 else 1.0
            cs = 1.0 / np.sqrt(1.0 + t * t)
            sn = cs * t
            ui = U[:, i].copy()
            U[:, i] = cs * ui - sn * U[:, j]
            U[:, j] = sn * ui + cs * U[:, j]
        if off < 1e-15:
            break
    return np.sort(np.linalg.norm(U, axis=0))[::-1]


def pinv_by_normal_equations(M, tol=1e-10):
    """Pseudoinverse through the eigendecomposition of M^T M."""
    M = np.asarray(M, dtype=np.float64)
    w, V = np.linalg.eigh(M.T @ M)
    keep = w > tol * max(w.max(), 1e-300)
    V = V[:, keep]
    return V @ np.diag(1.0 / w[keep]) @ V.T @ M.T


def convolve_plane(plane, w, boundary):
    """out[i, j] = sum_{a,b} w[a, b] * plane[i - (a - c), j - (b - c)]."""
    h, wd = plane.shape
    c = w.shape[0] // 2
    out = np.zeros_like(plane, dtype=np.float64)
    for i in range(h):
        for j in range(wd):
            s = 0.0
            for a in range(w.shape[0]):
                for b in range(w.shape[1]):
                    si, sj = i - (a - c), j - (b - c)
                    if boundary == "zero":
                        if not (0 <= si < h and 0 <= sj < wd):
                            continue
                    else:
                        si = _mirror(si, h)
                        sj = _mirror(sj, wd)
                    s += w[a, b] * plane[si, sj]
            out[i, j] = s
    return out


def _mirror(i, n):
    # half-sample symmetric extension: ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
    while i < 0 or i >= n:
        i = -1 - i if i < 0 else 2 * n - 1 - i
    return i


def vec(M):
    return np.concatenate([M[:, j] for j in range(M.shape[1])])


def bk_sweeps(A, B, C, x, alpha, steps):
    """Plain dense cyclic block Kaczmarz, one row per step."""
    A = np.asarray(A, dtype=np.float64)
    x = np.array(x, dtype=np.float64)
    m = A.shape[0]
    for k in range(steps):
        i = k % m
        a = A[i]
        r = C[i] - a @ x @ B
        x = x + alpha / (a @ a) * np.outer(a, r @ B.T)
    return x
