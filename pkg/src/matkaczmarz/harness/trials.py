"""Repeated seeded runs and the IT/CPU summary table."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..solvers import RANDOMIZED, Problem, SolverConfig, solve
from .generate import RandomSpec, random_problem


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run and how often.

    Parameters
    ----------
    source : Problem or RandomSpec
        A random spec carries its own seed, so the problem is reproducible.
    methods : sequence of str
    config : SolverConfig
        Its ``seed`` is replaced per trial by ``base_seed + trial_index``.
    trials : int
        Number of runs for randomized methods; deterministic ones run once.
    thetas : sequence of float, optional
        RGRBK is expanded into one row per value.
    """
    source: object
    methods: tuple = ("RBK", "GRBK", "MWRBK")
    config: SolverConfig = field(default_factory=SolverConfig)
    trials: int = 20
    thetas: tuple | None = None
    base_seed: int = 0
    label: str = ""

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not isinstance(self.source, (Problem, RandomSpec)):
            raise TypeError("source must be a Problem or a RandomSpec")
        object.__setattr__(self, "methods", tuple(m.upper() for m in self.methods))

    def problem(self):
        if isinstance(self.source, RandomSpec):
            return random_problem(self.source)
        return self.source


@dataclass(frozen=True)
class TrialStats:
    """Summary of iteration counts and wall times over trials.

    `it_sd` and `cpu_sd` are None for deterministic methods.
    """
    n: int
    it_mean: float
    it_sd: float | None
    it_min: int
    it_max: int
    cpu_mean: float
    cpu_sd: float | None
    cpu_min: float
    cpu_max: float

    @classmethod
    def from_values(cls, iterations, times, deterministic=False):
        its = np.asarray(iterations, dtype=np.float64)
        ts = np.asarray(times, dtype=np.float64)
        if its.size == 0 or its.shape != ts.shape:
            raise ValueError("need matching, nonempty iteration and time samples")

        def sd(v):
            if deterministic:
                return None
            return float(np.std(v, ddof=1)) if v.size > 1 else 0.0

        return cls(
            n=int(its.size),
            # clamp rounding so min <= mean <= max holds exactly
            it_mean=float(np.clip(its.mean(), its.min(), its.max())),
            it_sd=sd(its), it_min=int(its.min()), it_max=int(its.max()),
            cpu_mean=float(np.clip(ts.mean(), ts.min(), ts.max())),
            cpu_sd=sd(ts), cpu_min=float(ts.min()), cpu_max=float(ts.max()),
        )

    @property
    def cpu_per_it(self):
        return self.cpu_mean / self.it_mean if self.it_mean > 0 else float("nan")


@dataclass
class MethodResult:
    label: str
    method: str
    theta: float | None
    reports: list
    errors: list
    stats: TrialStats | None

    @property
    def iterations(self):
        return [r.iterations for r in self.reports]


def _rows(spec):
    for method in spec.methods:
        if method == "RGRBK" and spec.thetas:
            for t in spec.thetas:
                yield f"RGRBK(theta={t:g})", method, float(t)
        else:
            yield method, method, None


def run_trials(spec, problem=None):
    """Run every method of `spec` and collect per-method statistics.

    A failing trial is stored in ``errors`` as ``(trial_index, message)``
    and does not stop the batch. Trials run sequentially in index order.
    """
    problem = spec.problem() if problem is None else problem
    results = []
    for label, method, theta in _rows(spec):
        n = spec.trials if method in RANDOMIZED else 1
        reports, errors = [], []
        for idx in range(n):
            cfg = replace(spec.config, seed=spec.base_seed + idx)
            if theta is not None:
                cfg = replace(cfg, theta=theta)
            try:
                reports.append(solve(problem, method, cfg))
            except (ValueError, ArithmeticError) as exc:
                errors.append((idx, str(exc)))
        stats = None
        if reports:
            stats = TrialStats.from_values([r.iterations for r in reports],
                                           [r.wall_time for r in reports],
                                           deterministic=method not in RANDOMIZED)
        results.append(MethodResult(label, method, theta, reports, errors, stats))
    return results


def _fmt_sd(v, fmt):
    return "--" if v is None else format(v, fmt)


def format_summary(results, title=""):
    """Plain-text table with IT, CPU, SD, Range and CPU/IT columns.

    SD and Range refer to iteration counts; CPU is the mean solve time in
    seconds. Deterministic methods show ``--`` for SD.
    """
    head = f"{'Method':<18} {'IT':>10} {'CPU':>10} {'SD':>9} {'Range':>17} {'CPU/IT':>10}  {'stop':<10}"
    lines = [title] if title else []
    lines += [head, "-" * len(head)]
    for res in results:
        s = res.stats
        if s is None:
            msg = res.errors[0][1] if res.errors else "no runs"
            lines.append(f"{res.label:<18} failed: {msg}")
            continue
        stops = sorted({r.stop_reason for r in res.reports})
        rng = f"{s.it_min}-{s.it_max}"
        lines.append(f"{res.label:<18} {s.it_mean:>10.1f} {s.cpu_mean:>10.4f} "
                     f"{_fmt_sd(s.it_sd, '9.1f'):>9} {rng:>17} {s.cpu_per_it:>10.3e}  "
                     f"{','.join(stops):<10}")
        if res.errors:
            lines.append(f"{'':<18} {len(res.errors)} failed trial(s), first: {res.errors[0][1]}")
    return "\n".join(lines)


__all__ = ["ExperimentSpec", "TrialStats", "MethodResult", "run_trials", "format_summary"]
