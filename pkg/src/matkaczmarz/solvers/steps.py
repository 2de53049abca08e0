"""Single-step building blocks of the row-action methods.

These are plain numpy implementations that return new states instead of
mutating their input. The compiled driver in `matkaczmarz.solvers.driver`
follows exactly the same arithmetic and is checked against them.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from ..linalg import (RankDeficientError, ZeroRowError, qr_thin,
                      row_norms_squared, svd)
from .problem import IterateState, Problem, SelectionDiagnostics


class ZeroResidualError(ArithmeticError):
    """Raised by the greedy selectors when the residual vanishes (converged)."""


def _row(problem, i):
    a = problem.a
    lo, hi = a.indptr[i], a.indptr[i + 1]
    return a.indices[lo:hi], a.data[lo:hi]


def _row_norm2(problem, i):
    ni2 = problem.row_norms2[i]
    if ni2 <= 0:
        raise ZeroRowError(f"row {i} of A is zero")
    return ni2


def cyclic_index(k, m):
    """Row used at step `k` of the cyclic sweep (0-based)."""
    if m < 1:
        raise ValueError("need at least one row")
    return k % m


def _inverse_cdf(u, weights):
    cum = np.cumsum(weights)
    j = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return min(j, len(weights) - 1)


def rbk_sample(rng, row_weights):
    """Draw a row with probability proportional to `row_weights`."""
    return _inverse_cdf(rng.random(), np.asarray(row_weights, dtype=np.float64))


def residual_row(state, problem, i):
    """Row `i` of ``C - A X B``, read from the maintained residual if present."""
    if state.r is not None:
        return state.r[i]
    cols, vals = _row(problem, i)
    return problem.c[i] - (vals @ state.x[cols]) @ problem.b


def residual_row_step(state, problem, i, alpha):
    """Advance the maintained residual through the rank-one update of row `i`."""
    ni2 = _row_norm2(problem, i)
    R = state.r
    w = (R[i] @ problem.b.T) @ problem.b
    g = problem.gram[i].toarray().ravel()
    r_new = R - (alpha / ni2) * np.outer(g, w)
    return IterateState(state.x, r_new, state.k, state.last_row)


def row_step(state, problem, i, alpha):
    """One block Kaczmarz update using row `i` of A and C.

    The maintained residual, when present, is advanced as well.
    """
    ni2 = _row_norm2(problem, i)
    cols, vals = _row(problem, i)
    u = residual_row(state, problem, i) @ problem.b.T
    x_new = state.x.copy()
    x_new[cols] += (alpha / ni2) * np.outer(vals, u)
    r_new = None
    if state.r is not None:
        r_new = residual_row_step(state, problem, i, alpha).r
    return IterateState(x_new, r_new, state.k + 1, i)


def update_norm(state, problem, i, alpha):
    """Frobenius norm of the rank-one correction row `i` would apply."""
    u = residual_row(state, problem, i) @ problem.b.T
    return alpha * float(np.linalg.norm(u)) / float(np.sqrt(_row_norm2(problem, i)))


def _weighted_residuals(state, problem):
    if state.r is None:
        raise ValueError("greedy selection needs the maintained residual")
    rn2 = row_norms_squared(state.r)
    return rn2, rn2 / problem.row_norms2


def greedy_threshold(state, problem, theta):
    """Threshold and candidate rows of the relaxed greedy selection.

    ``theta = 1/2`` gives the plain greedy rule, ``theta = 1`` keeps only
    maximal rows. The threshold is capped at the maximal ratio so the
    argmax row always qualifies under rounding.
    """
    rn2, ratios = _weighted_residuals(state, problem)
    mx = ratios.max()
    if mx == 0:
        raise ZeroResidualError("residual is zero")
    mean = float(np.cumsum(rn2)[-1]) / problem.a_fro2
    xi = min(theta * mx + (1.0 - theta) * mean, mx)
    cand = np.flatnonzero(ratios >= xi)
    weights = rn2[cand]
    return SelectionDiagnostics(float(xi), cand, weights, float(np.cumsum(weights)[-1]))


def greedy_sample(rng, diag, theta=None):
    """Pick a candidate with probability proportional to its squared residual.

    With ``theta == 1`` all candidates share the maximal ratio and the
    smallest index is returned, the same tie rule as `mwrbk_select`. One
    uniform is drawn in every case so random streams stay aligned.
    """
    u = rng.random()
    if theta is not None and theta >= 1.0:
        return int(diag.candidate_set[0])
    return int(diag.candidate_set[_inverse_cdf(u, diag.weights)])


def mwrbk_select(state, problem):
    """Row with the largest weighted residual; ties go to the smallest index."""
    _, ratios = _weighted_residuals(state, problem)
    if ratios.max() == 0:
        raise ZeroResidualError("residual is zero")
    return int(np.argmax(ratios))


def gi_step(state, problem, alpha):
    """Full gradient step ``X + alpha A^T (C - A X B) B^T``."""
    bound = 2.0 / (problem.a_norm**2 * problem.b_norm**2)
    if not 0.0 <= alpha < bound:
        raise ValueError(f"GI stepsize {alpha} outside [0, {bound:g})")
    A, B = problem.a, problem.b
    m, p = A.shape
    q, n = B.shape
    X = state.x
    if m * q * (p + n) <= p * n * (m + q):
        R = problem.c - (A @ X) @ B
        G = A.T @ (R @ B.T)
    else:
        R = problem.c - A @ (X @ B)
        G = (A.T @ R) @ B.T
    return IterateState(X + alpha * G, None, state.k + 1, None)


def transform_fullcol(problem):
    """Replace B by the Q factor of its thin QR and C by ``C R^{-1}``.

    Returns ``(transformed_problem, qr)``; the solution set is unchanged.
    """
    qr = qr_thin(problem.b)
    c_hat = solve_triangular(qr.r, problem.c.T, trans="T", lower=False).T
    return Problem(problem.a, qr.q, c_hat, problem.x_star), qr


def transform_fullrow(problem):
    """Replace B by I and C by ``C B^T (B B^T)^{-1}``."""
    B = problem.b
    q, n = B.shape
    f = svd(B)
    if q > n or f.rank < q:
        raise RankDeficientError("B does not have full row rank")
    try:
        chol = cho_factor(B @ B.T)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientError("B B^T is numerically singular") from exc
    c_tilde = cho_solve(chol, B @ problem.c.T).T
    return Problem(problem.a, np.eye(q), c_tilde, problem.x_star)


def sweep_formula_step(x, problem, sweep_op, alpha):
    """One full cyclic sweep written as a single matrix update.

    `problem` must already be transformed (B orthonormal-column or the
    identity) and `sweep_op` built for its A and `alpha`.
    """
    if sweep_op.alpha != alpha:
        raise ValueError("sweep operator was built for a different alpha")
    A, Q = problem.a, problem.b
    Z = problem.c - A @ (x @ Q)
    return x + A.T @ sweep_op.solve(Z @ Q.T)


__all__ = [
    "ZeroResidualError", "cyclic_index", "rbk_sample", "residual_row",
    "residual_row_step", "row_step", "update_norm", "greedy_threshold",
    "greedy_sample", "mwrbk_select", "gi_step", "transform_fullcol",
    "transform_fullrow", "sweep_formula_step",
]
