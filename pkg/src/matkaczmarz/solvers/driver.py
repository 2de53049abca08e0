"""Solve drivers for all methods."""

from __future__ import annotations

import time

import numpy as np

from . import _kernels as K
from .problem import (GREEDY, METHODS, Problem, SolveReport, SolverConfig,
                      StopRule, Trace)
from .steps import transform_fullcol, transform_fullrow

CHUNK = 65_536

_SELECTOR = {
    "BK": K.SEL_CYCLIC, "BK_FULLCOL": K.SEL_CYCLIC, "BK_FULLROW": K.SEL_CYCLIC,
    "RBK": K.SEL_RBK, "GRBK": K.SEL_GREEDY, "RGRBK": K.SEL_GREEDY,
    "MWRBK": K.SEL_MAXRATIO,
}
_STOP_CODE = {None: K.STOP_NONE, "rse_below": K.STOP_RSE,
              "update_norm_below": K.STOP_UPDATE, "residual_fro_below": K.STOP_RESIDUAL}
_REASON = {K.ST_RSE: "rse_below", K.ST_UPDATE: "update_norm_below",
           K.ST_RESIDUAL: "residual_fro_below", K.ST_ZERO: "zero_residual",
           K.ST_MAXITER: "max_iters"}


def default_stop(problem):
    """Update-norm rule with ``tau = 1e-8 ||C||_F / ||A||_F``."""
    return StopRule("update_norm_below", 1e-8 * problem.c_fro / np.sqrt(problem.a_fro2))


def effective_problem(problem, method):
    """The equation the iteration actually runs on for `method`."""
    if method == "BK_FULLCOL":
        return transform_fullcol(problem)[0]
    if method == "BK_FULLROW":
        return transform_fullrow(problem)
    return problem


def resolve_alpha(problem, method, alpha=None):
    """Stepsize for `method`, checked against its admissible interval.

    `problem` must be the effective (transformed) problem.
    """
    if method == "GI":
        hi = 2.0 / (problem.a_norm**2 * problem.b_norm**2)
    else:
        hi = 2.0 / problem.b_norm**2
    if alpha is None:
        return hi / 2.0
    alpha = float(alpha)
    if not 0.0 < alpha < hi:
        raise ValueError(f"alpha={alpha:g} outside the admissible interval (0, {hi:g}) for {method}")
    return alpha


def _empty_trace(size):
    return (np.empty(size, np.int64), np.empty(size, np.int64),
            np.empty(size), np.empty(size), np.empty(size))


def _stack(parts):
    if not parts:
        return Trace(*(_empty_trace(0)))
    cols = list(zip(*parts))
    return Trace(*(np.concatenate(c) for c in cols))


def solve(problem, method, config=None, x0=None):
    """Run `method` on ``A X B = C`` and return a `SolveReport`.

    Parameters
    ----------
    problem : Problem
    method : str
        One of ``BK, BK_FULLCOL, BK_FULLROW, RBK, GRBK, RGRBK, MWRBK, GI``.
    config : SolverConfig, optional
    x0 : ndarray, optional
        Initial iterate (p x q); zero by default.

    Notes
    -----
    Hitting ``max_iters`` is reported through ``stop_reason`` and never
    raised. Trace records are taken every ``config.stride`` steps and at
    the final step.
    """
    if not isinstance(problem, Problem):
        raise TypeError("problem must be a Problem")
    method = method.upper()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    cfg = config or SolverConfig()
    prob = effective_problem(problem, method)
    alpha = resolve_alpha(prob, method, cfg.alpha)
    stop = cfg.stop if cfg.stop is not None else default_stop(problem)
    if stop.kind == "rse_below" and (problem.x_star is None or not np.any(problem.x_star)):
        raise ValueError("rse stopping needs a nonzero reference solution x_star")

    if x0 is None:
        x = np.zeros((prob.p, prob.q))
    else:
        x = np.array(x0, dtype=np.float64, order="C", copy=True)
        if x.shape != (prob.p, prob.q):
            raise ValueError(f"x0 has shape {x.shape}, expected {(prob.p, prob.q)}")
    initial_rse = problem.rse(x) if problem.x_star is not None else None

    if method == "GI":
        return _solve_gi(prob, cfg, stop, alpha, x, initial_rse)
    theta = {"GRBK": 0.5, "RGRBK": cfg.theta}.get(method)
    return _solve_rows(prob, method, cfg, stop, alpha, theta, x, initial_rse)


def _initial_stop(stop, rse0, res0):
    if stop.kind == "rse_below" and rse0 is not None and rse0 <= stop.tol:
        return "rse_below"
    if stop.kind == "residual_fro_below" and res0 is not None and res0 <= stop.tol:
        return "residual_fro_below"
    return None


def _solve_rows(prob, method, cfg, stop, alpha, theta, x, initial_rse):
    m = prob.m
    a = prob.a
    b_identity = prob.q == prob.n and np.array_equal(prob.b, np.eye(prob.q))
    maintain_r = method in GREEDY or stop.kind == "residual_fro_below"
    rn2 = prob.row_norms2
    cum_w = np.cumsum(rn2)
    if maintain_r:
        g = prob.gram
        g_indptr, g_indices, g_data = g.indptr.astype(np.int64), g.indices.astype(np.int64), g.data
        R = np.empty((m, prob.n))
        rnorm2 = np.empty(m)
        K.refresh_residual(a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data,
                           prob.b, prob.c, x, R, rnorm2, b_identity)
        res0 = float(np.sqrt(np.sum(rnorm2)))
    else:
        g_indptr = g_indices = np.zeros(1, np.int64)
        g_data = np.zeros(1)
        R = np.zeros((1, 1))
        rnorm2 = np.zeros(1)
        res0 = None
    if prob.x_star is not None:
        xs = prob.x_star
        xs_norm = float(np.linalg.norm(xs))
        err2_rows = np.einsum("ij,ij->i", x - xs, x - xs)
    else:
        xs = np.zeros((1, 1))
        xs_norm = 0.0
        err2_rows = np.zeros(1)

    indptr = a.indptr.astype(np.int64)
    indices = a.indices.astype(np.int64)
    sel = _SELECTOR[method]
    randomized = sel in (K.SEL_RBK, K.SEL_GREEDY)
    rng = np.random.Generator(np.random.Philox(cfg.seed)) if randomized else None
    stride = cfg.stride
    stop_code = _STOP_CODE[stop.kind]
    parts = []
    reason = _initial_stop(stop, initial_rse, res0)
    if reason is None and maintain_r and res0 == 0.0:
        reason = "zero_residual"
    k = 0
    t0 = -1.0
    while reason is None:
        n_steps = min(CHUNK, cfg.max_iters - k)
        u = rng.random(n_steps) if randomized else np.zeros(1)
        buf = _empty_trace(n_steps // stride + 2)
        status, k, nrec, t0 = K.run_chunk(
            sel, indptr, indices, a.data, rn2, cum_w, prob.a_fro2, prob.b, prob.c,
            x, R, rnorm2, maintain_r, b_identity, g_indptr, g_indices, g_data,
            alpha, 0.0 if theta is None else theta, u, k, n_steps, cfg.max_iters,
            stop_code, stop.tol, xs, xs_norm, err2_rows, cfg.residual_refresh_every,
            stride, *buf, t0)
        parts.append(tuple(c[:nrec] for c in buf))
        if status != K.ST_RUNNING:
            reason = _REASON[status]
    wall = time.perf_counter() - t0 if t0 >= 0 else 0.0
    return SolveReport(x=x, iterations=k, stop_reason=reason, trace=_stack(parts),
                       method=method, alpha=alpha, theta=theta, wall_time=wall,
                       initial_rse=initial_rse,
                       extra={"residual": R if maintain_r else None, "stop": stop})


def _solve_gi(prob, cfg, stop, alpha, x, initial_rse):
    A, B, C = prob.a, prob.b, prob.c
    m, p = A.shape
    q, n = B.shape
    left_first = m * q * (p + n) <= p * n * (m + q)
    AT = A.T.tocsr()
    xs = prob.x_star
    xs_norm = float(np.linalg.norm(xs)) if xs is not None else 0.0
    stride = cfg.stride
    recs = []
    res0 = float(np.linalg.norm(C - A @ (x @ B)))
    reason = _initial_stop(stop, initial_rse, res0)
    k = 0
    t0 = time.perf_counter()
    while reason is None:
        if left_first:
            R = C - (A @ x) @ B
            G = AT @ (R @ B.T)
        else:
            R = C - A @ (x @ B)
            G = (AT @ R) @ B.T
        x += alpha * G
        k += 1
        rse = float(np.linalg.norm(x - xs)) / xs_norm if xs is not None else np.nan
        res = np.nan
        if stop.kind == "residual_fro_below":
            res = float(np.linalg.norm(C - A @ (x @ B)))
        if stop.kind == "rse_below" and rse <= stop.tol:
            reason = "rse_below"
        elif stop.kind == "update_norm_below" and alpha * np.linalg.norm(G) <= stop.tol:
            reason = "update_norm_below"
        elif stop.kind == "residual_fro_below" and res <= stop.tol:
            reason = "residual_fro_below"
        elif k >= cfg.max_iters:
            reason = "max_iters"
        if reason is not None or k % stride == 0:
            recs.append((k, -1, rse, res, time.perf_counter() - t0))
    wall = time.perf_counter() - t0
    if recs:
        cols = list(zip(*recs))
        trace = Trace(np.array(cols[0], np.int64), np.array(cols[1], np.int64),
                      np.array(cols[2]), np.array(cols[3]), np.array(cols[4]))
    else:
        trace = Trace(*_empty_trace(0))
    return SolveReport(x=x, iterations=k, stop_reason=reason, trace=trace, method="GI",
                       alpha=alpha, wall_time=wall, initial_rse=initial_rse,
                       extra={"stop": stop})


def warmup():
    """Compile (or load from cache) the kernel for every selector."""
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 3))
    B = rng.standard_normal((2, 2))
    X = rng.standard_normal((3, 2))
    prob = Problem(A, B, A @ X @ B)
    for method in ("BK", "BK_FULLROW", "RBK", "GRBK", "MWRBK"):
        solve(prob, method, SolverConfig(max_iters=3, stop=StopRule("residual_fro_below", 0.0)))
        solve(prob, method, SolverConfig(max_iters=3))


__all__ = ["solve", "default_stop", "effective_problem", "resolve_alpha", "warmup"]
