"""Convergence-factor bounds, sweep operators and spectral radii."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .linalg import (SizeGuardError, as_dense, kron_small,
                     min_norm_solution, pinv, range_basis, row_norms_squared,
                     sigma_min_positive, spectral_norm)

SWEEP_MAX_ROWS = 2000
RADIUS_MAX_COLS = 2000
KRON_RADIUS_MAX = 4096


@dataclass(frozen=True)
class BoundReport:
    delta: float
    delta_k_theta: float
    varphi_k_theta: float
    epsilon: float
    omega_set: np.ndarray
    theta: float
    alpha: float
    degenerate: bool = False


@dataclass(frozen=True)
class SweepOperator:
    """``L = slt(A A^T) + diag(A A^T) / alpha`` for a whole cyclic sweep."""
    l_alpha: np.ndarray
    alpha: float

    def solve(self, z):
        return solve_triangular(self.l_alpha, z, lower=True)


@dataclass(frozen=True)
class _Constants:
    a_fro2: float
    b_norm2: float
    sigma2: float  # sigma_min(A)^2 sigma_min(B)^2
    row_norms2: np.ndarray


def _constants(A, B):
    rn2 = row_norms_squared(A)
    return _Constants(
        a_fro2=float(rn2.sum()),
        b_norm2=spectral_norm(B) ** 2,
        sigma2=sigma_min_positive(A) ** 2 * sigma_min_positive(B) ** 2,
        row_norms2=rn2,
    )


def _check_alpha(alpha, b_norm2):
    if not 0.0 < alpha < 2.0 / b_norm2:
        raise ValueError(f"alpha={alpha} outside (0, 2/||B||^2) = (0, {2.0 / b_norm2:g})")


def delta_bound(A, B, alpha):
    """Expected per-step contraction factor of randomized block Kaczmarz."""
    k = _constants(A, B)
    _check_alpha(alpha, k.b_norm2)
    return 1.0 - (2 * alpha - alpha**2 * k.b_norm2) * k.sigma2 / k.a_fro2


def _ratios(residual, row_norms2):
    R = as_dense(residual)
    rn2 = row_norms_squared(R)
    if not np.any(rn2 > 0):
        raise ValueError("residual is zero")
    return rn2 / row_norms2


def _omega(ratios):
    if np.all(ratios == ratios[0]):
        return np.array([], dtype=np.int64), 1.0, True
    mean = ratios.mean()
    eps = min(mean / ratios.max(), 1.0)
    return np.flatnonzero(ratios < mean), eps, False


def omega_set(residual, A):
    """Rows whose weighted residual is below average, and the mean/max ratio.

    Returns ``(indices, epsilon)``. All-equal ratios give an empty set with
    ``epsilon == 1``.
    """
    idx, eps, _ = _omega(_ratios(residual, row_norms_squared(A)))
    return idx, eps


def _report(k, alpha, theta, ratios):
    omega, eps, degenerate = _omega(ratios)
    mask = np.zeros(ratios.size, dtype=bool)
    mask[omega] = True
    denom = k.row_norms2[~mask].sum() + eps * k.row_norms2[mask].sum()
    varphi = theta / denom + (1.0 - theta) / k.a_fro2
    g = 2 * alpha - alpha**2 * k.b_norm2
    return BoundReport(
        delta=1.0 - g * k.sigma2 / k.a_fro2,
        delta_k_theta=1.0 - g * varphi * k.sigma2,
        varphi_k_theta=varphi,
        epsilon=eps,
        omega_set=omega,
        theta=theta,
        alpha=alpha,
        degenerate=degenerate,
    )


def delta_k_theta_bound(A, B, alpha, theta, residual):
    """Residual-dependent contraction bound of the relaxed greedy method."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    k = _constants(A, B)
    _check_alpha(alpha, k.b_norm2)
    return _report(k, alpha, theta, _ratios(residual, k.row_norms2))


def delta_k_theta_curve(A, B, alpha, thetas, residual):
    """`delta_k_theta_bound` over several thetas, sharing the SVD work."""
    k = _constants(A, B)
    _check_alpha(alpha, k.b_norm2)
    ratios = _ratios(residual, k.row_norms2)
    return [_report(k, alpha, float(t), ratios) for t in thetas]


def build_sweep_operator(A, alpha):
    if A.shape[0] > SWEEP_MAX_ROWS:
        raise SizeGuardError(f"sweep operator limited to {SWEEP_MAX_ROWS} rows")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    Ad = as_dense(A)
    G = Ad @ Ad.T
    d = np.diag(G)
    if np.any(d == 0):
        raise ValueError("A has a zero row")
    L = np.tril(G, -1) + np.diag(d / alpha)
    return SweepOperator(L, float(alpha))


def _sweep_gain(A, alpha):
    # A^T L^{-1} A, the per-sweep correction operator
    Ad = as_dense(A)
    op = build_sweep_operator(Ad, alpha)
    return Ad.T @ op.solve(Ad)


def spectral_radius_fullrow(A, alpha, restricted=True):
    """Spectral radius of one cyclic sweep ``I - A^T L^{-1} A``.

    With ``restricted=True`` (default) the operator is restricted to
    range(A^T), the space the iterates move in. That coincides with the
    plain spectral radius when A has full column rank; otherwise the plain
    value is 1 because null(A) is left untouched.
    """
    if A.shape[1] > RADIUS_MAX_COLS:
        raise SizeGuardError(f"spectral radius limited to {RADIUS_MAX_COLS} columns")
    T = _sweep_gain(A, alpha)
    if restricted:
        U = range_basis(as_dense(A).T)
        M = np.eye(U.shape[1]) - U.T @ T @ U
    else:
        M = np.eye(T.shape[0]) - T
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def restricted_spectral_radius_fullcol(A, Q, alpha, restricted=True):
    """Spectral radius of ``I - (Q Q^T kron A^T L^{-1} A)``.

    The operator acts on vec(X). With ``restricted=True`` it is projected
    onto range(Q) kron range(A^T) through orthonormal SVD bases before the
    eigenvalues are taken.
    """
    Q = as_dense(Q)
    p = A.shape[1]
    q = Q.shape[0]
    if p * q > KRON_RADIUS_MAX:
        raise SizeGuardError(f"pq={p * q} exceeds {KRON_RADIUS_MAX}")
    T = _sweep_gain(A, alpha)
    M = np.eye(p * q) - kron_small(Q @ Q.T, T)
    if restricted:
        V = np.kron(range_basis(Q), range_basis(as_dense(A).T))
        M = V.T @ M @ V
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def x_star_0(problem, x0):
    """Limit of cyclic block Kaczmarz started from `x0`."""
    A = as_dense(problem.a)
    B = problem.b
    xs = problem.x_star
    if xs is None:
        xs = min_norm_solution(A, B, problem.c)
    x0 = as_dense(x0)
    return xs + x0 - pinv(A) @ A @ x0 @ B @ pinv(B)


def bk_invariant(A, B, x):
    """``X - A^+ A X B B^+``, constant along cyclic block Kaczmarz iterates."""
    A = as_dense(A)
    B = as_dense(B)
    return x - pinv(A) @ A @ x @ B @ pinv(B)


def alpha_sweep(A, alphas, Q=None):
    """Sweep spectral radius over a grid of stepsizes.

    Uses the full-row formula when `Q` is None and the restricted
    full-column formula otherwise.
    """
    out = []
    for a in alphas:
        if Q is None:
            out.append(spectral_radius_fullrow(A, a))
        else:
            out.append(restricted_spectral_radius_fullcol(A, Q, a))
    return np.array(out)


__all__ = [
    "BoundReport", "SweepOperator", "delta_bound", "omega_set",
    "delta_k_theta_bound", "delta_k_theta_curve", "build_sweep_operator",
    "spectral_radius_fullrow", "restricted_spectral_radius_fullcol",
    "x_star_0", "bk_invariant", "alpha_sweep",
]
