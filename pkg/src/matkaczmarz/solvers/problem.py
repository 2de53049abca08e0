"""Problem, configuration and result types for the row-action solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..linalg import (ZeroRowError, as_dense, as_sparse_rows, frobenius_norm,
                      row_norms_squared, spectral_norm)

METHODS = ("BK", "BK_FULLCOL", "BK_FULLROW", "RBK", "GRBK", "RGRBK", "MWRBK", "GI")
RANDOMIZED = ("RBK", "GRBK", "RGRBK")
GREEDY = ("GRBK", "RGRBK", "MWRBK")

STOP_KINDS = {
    "rse": "rse_below", "rse_below": "rse_below",
    "update": "update_norm_below", "update_norm": "update_norm_below",
    "update_norm_below": "update_norm_below",
    "residual": "residual_fro_below", "res_fro": "residual_fro_below",
    "residual_fro_below": "residual_fro_below",
}


@dataclass(frozen=True)
class Problem:
    """The consistent matrix equation ``A X B = C``.

    `a` is stored as canonical CSR (m x p), `b` is dense (q x n) and `c`
    dense (m x n). `x_star`, when given, is the reference solution used for
    relative solution errors.
    """
    a: object
    b: np.ndarray
    c: np.ndarray
    x_star: np.ndarray | None = None

    def __post_init__(self):
        a = as_sparse_rows(self.a)
        b = np.ascontiguousarray(as_dense(self.b))
        c = np.ascontiguousarray(as_dense(self.c))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        m, p = a.shape
        q, n = b.shape
        if c.shape != (m, n):
            raise ValueError(f"C has shape {c.shape}, expected {(m, n)}")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("B and C must be finite")
        zero = np.flatnonzero(np.diff(a.indptr) == 0)
        if zero.size:
            raise ZeroRowError(f"A has zero rows (first: {zero[0]}); drop them from the equation")
        if self.x_star is not None:
            xs = np.ascontiguousarray(as_dense(self.x_star))
            if xs.shape != (p, q):
                raise ValueError(f"x_star has shape {xs.shape}, expected {(p, q)}")
            res = np.linalg.norm(a @ xs @ b - c)
            if res > 1e-8 * np.linalg.norm(c):
                raise ValueError(f"x_star does not solve AXB=C (residual {res:.3e})")
            object.__setattr__(self, "x_star", xs)

    @property
    def m(self):
        return self.a.shape[0]

    @property
    def p(self):
        return self.a.shape[1]

    @property
    def q(self):
        return self.b.shape[0]

    @property
    def n(self):
        return self.b.shape[1]

    @cached_property
    def row_norms2(self):
        return row_norms_squared(self.a)

    @cached_property
    def a_fro2(self):
        # sequential sum, matching the compiled kernel
        return float(np.cumsum(self.row_norms2)[-1])

    @cached_property
    def b_norm(self):
        return spectral_norm(self.b)

    @cached_property
    def a_norm(self):
        return spectral_norm(self.a)

    @cached_property
    def c_fro(self):
        return frobenius_norm(self.c)

    @cached_property
    def gram(self):
        """``A A^T`` as sorted CSR; row i is the column ``A A_i^T``."""
        g = (self.a @ self.a.T).tocsr()
        g.sum_duplicates()
        g.sort_indices()
        return g

    def residual(self, x):
        return self.c - self.a @ (x @ self.b)

    def rse(self, x):
        """Relative solution error; NaN when the reference solution is zero."""
        if self.x_star is None:
            raise ValueError("relative solution error needs x_star")
        ref = np.linalg.norm(self.x_star)
        if ref == 0:
            return float("nan")
        return float(np.linalg.norm(x - self.x_star) / ref)


@dataclass(frozen=True)
class StopRule:
    kind: str
    tol: float

    def __post_init__(self):
        kind = STOP_KINDS.get(self.kind)
        if kind is None:
            raise ValueError(f"unknown stop rule {self.kind!r}")
        if not self.tol >= 0:
            raise ValueError("stop tolerance must be nonnegative")
        object.__setattr__(self, "kind", kind)

    @classmethod
    def parse(cls, text):
        """Parse ``"rule:tol"``, e.g. ``"rse:1e-8"`` or ``"update_norm_below:1e-10"``."""
        kind, sep, tol = text.partition(":")
        if not sep:
            raise ValueError(f"stop rule must look like rule:tol, got {text!r}")
        return cls(kind.strip(), float(tol))

    def __str__(self):
        return f"{self.kind}:{self.tol:g}"


@dataclass(frozen=True)
class SolverConfig:
    """Iteration parameters.

    ``alpha=None`` means the automatic stepsize: ``||B||^-2`` for the row
    methods and ``||A||^-2 ||B||^-2`` for GI. The admissible interval is
    checked against the problem when the solve starts. GRBK always uses
    ``theta=1/2``; `theta` only affects RGRBK.
    """
    alpha: float | None = None
    theta: float = 0.75
    max_iters: int = 1_000_000
    seed: int = 0
    stop: StopRule | None = None
    residual_refresh_every: int = 10_000
    trace_stride: int | None = None

    def __post_init__(self):
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.residual_refresh_every < 0:
            raise ValueError("residual_refresh_every must be nonnegative (0 disables refresh)")
        if self.trace_stride is not None and self.trace_stride < 1:
            raise ValueError("trace_stride must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def stride(self):
        if self.trace_stride is not None:
            return self.trace_stride
        return max(1, self.max_iters // 10_000)


@dataclass
class IterateState:
    """Current iterate `x`, optionally with the maintained residual `r`."""
    x: np.ndarray
    r: np.ndarray | None = None
    k: int = 0
    last_row: int | None = None


@dataclass(frozen=True)
class SelectionDiagnostics:
    threshold: float
    candidate_set: np.ndarray
    weights: np.ndarray
    total_weight: float


@dataclass
class Trace:
    """Per-step records; missing metrics are NaN."""
    k: np.ndarray
    row: np.ndarray
    rse: np.ndarray
    res_fro: np.ndarray
    wall_s: np.ndarray

    def __len__(self):
        return len(self.k)

    def records(self):
        for j in range(len(self)):
            yield (int(self.k[j]), int(self.row[j]), float(self.rse[j]),
                   float(self.res_fro[j]), float(self.wall_s[j]))


@dataclass
class SolveReport:
    x: np.ndarray
    iterations: int
    stop_reason: str
    trace: Trace
    method: str
    alpha: float
    theta: float | None = None
    wall_time: float = 0.0
    initial_rse: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def converged(self):
        return self.stop_reason != "max_iters"
