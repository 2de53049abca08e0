"""Seeded random test problems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..linalg import min_norm_solution
from ..solvers import Problem


@dataclass(frozen=True)
class RandomSpec:
    """Dimensions ``A: m x p``, ``B: q x n`` with optional target ranks.

    A rank below ``min(m, p)`` is produced by repeating the columns of an
    ``m x rank_a`` Gaussian block (``A = [A0, A0, ...]``); likewise B
    repeats the rows of a ``rank_b x n`` block.
    """
    m: int
    p: int
    q: int
    n: int
    rank_a: int | None = None
    rank_b: int | None = None
    seed: int = 0

    def __post_init__(self):
        if min(self.m, self.p, self.q, self.n) < 1:
            raise ValueError("dimensions must be positive")
        if self.rank_a is not None and not 1 <= self.rank_a <= min(self.m, self.p):
            raise ValueError("rank_a must lie in [1, min(m, p)]")
        if self.rank_b is not None and not 1 <= self.rank_b <= min(self.q, self.n):
            raise ValueError("rank_b must lie in [1, min(q, n)]")

    @classmethod
    def parse(cls, text, seed=0):
        """Parse ``"m,p,q,n"`` or ``"m,p,q,n,rank_a,rank_b"``."""
        parts = [int(t) for t in text.replace(" ", "").split(",") if t]
        if len(parts) == 4:
            return cls(*parts, seed=seed)
        if len(parts) == 6:
            return cls(*parts[:4], rank_a=parts[4], rank_b=parts[5], seed=seed)
        raise ValueError(f"random spec needs 4 or 6 integers, got {text!r}")

    def with_seed(self, seed):
        return RandomSpec(self.m, self.p, self.q, self.n, self.rank_a, self.rank_b, seed)


def _tiled(rng, rows, cols, rank, by_columns):
    if rank is None or rank == min(rows, cols):
        return rng.standard_normal((rows, cols))
    if by_columns:
        base = rng.standard_normal((rows, rank))
        return base[:, np.arange(cols) % rank]
    base = rng.standard_normal((rank, cols))
    return base[np.arange(rows) % rank, :]


def random_problem(spec):
    """Consistent ``A X B = C`` with Gaussian factors and an attached oracle.

    The same spec (including seed) always yields bitwise-identical data.
    """
    rng = np.random.Generator(np.random.Philox(spec.seed))
    A = _tiled(rng, spec.m, spec.p, spec.rank_a, by_columns=True)
    B = _tiled(rng, spec.q, spec.n, spec.rank_b, by_columns=False)
    X = rng.standard_normal((spec.p, spec.q))
    C = A @ X @ B
    return Problem(A, B, C, min_norm_solution(A, B, C))


#: shapes of A / B covering full row rank, full column rank and rank deficiency
_A_SHAPES = {
    "row": (10, 24, None),
    "col": (24, 10, None),
    "def": (20, 16, 6),
}
_B_SHAPES = {
    "row": (4, 12, None),
    "col": (12, 4, None),
    "def": (12, 14, 3),
}


def rank_configurations():
    """The nine (A, B) rank configurations as ``(label, RandomSpec)`` pairs.

    Labels read ``"<A kind>/<B kind>"`` with kinds ``row`` (full row rank),
    ``col`` (full column rank) and ``def`` (rank deficient). All
    dimensions are at most 30.
    """
    out = []
    for ka, (m, p, ra) in _A_SHAPES.items():
        for kb, (q, n, rb) in _B_SHAPES.items():
            out.append((f"{ka}/{kb}", RandomSpec(m, p, q, n, ra, rb)))
    return out


__all__ = ["RandomSpec", "random_problem", "rank_configurations"]
