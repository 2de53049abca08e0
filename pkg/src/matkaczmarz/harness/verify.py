"""Invariant suite behind ``matkaczmarz verify``.

Each ``check_*`` function runs one property at desk scale and returns
`CheckResult` objects. `run_all` executes the whole suite; ``quick=True``
scales the instance counts down for smoke testing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .. import analysis
from ..imaging import (CROSS_CHANNEL, blur_matrix, deblur, forward_blur, gaussian_kernel,
                       psnr, synthetic_image, columns_to_channels)
from ..linalg import RankDeficientError, min_norm_solution, qr_thin
from ..solvers import (METHODS, IterateState, Problem, SolverConfig, StopRule,
                       greedy_sample, greedy_threshold, mwrbk_select,
                       row_step, solve, sweep_formula_step, transform_fullcol,
                       transform_fullrow, warmup)
from .generate import RandomSpec, random_problem, rank_configurations
from .tracefile import format_trace
from .trials import ExperimentSpec, run_trials


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail} [{self.seconds:.1f}s]"


class _Clock:
    def __init__(self):
        self.t0 = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.t0


def _n(full, quick, is_quick):
    return quick if is_quick else full


# ---------------------------------------------------------------- convergence

def check_convergence(quick=False, n_problems=None):
    """Every method reaches RSE 1e-8 from zero on seeded problems of all
    nine rank configurations, and the error never grows between steps for
    the row methods.

    Returns two results: convergence (with the 60 s budget) and monotonicity.
    """
    n_problems = n_problems or _n(50, 9, quick)
    clock = _Clock()
    configs = rank_configurations()
    failures, growth = [], []
    runs, worst_growth, worst_it = 0, 0.0, 0
    for j in range(n_problems):
        label, spec = configs[j % len(configs)]
        prob = random_problem(spec.with_seed(j))
        xs_norm = float(np.linalg.norm(prob.x_star))
        for method in METHODS:
            cfg = SolverConfig(stop=StopRule("rse_below", 1e-8), max_iters=500_000,
                               trace_stride=1, seed=j)
            try:
                rep = solve(prob, method, cfg)
            except RankDeficientError:
                continue  # transform not applicable to this B
            runs += 1
            worst_it = max(worst_it, rep.iterations)
            if rep.stop_reason != "rse_below":
                failures.append(f"{label}#{j}:{method}")
            if method in ("BK", "RBK", "GRBK", "RGRBK", "MWRBK"):
                err = np.concatenate([[rep.initial_rse], rep.trace.rse]) * xs_norm
                inc = float(np.max(np.diff(err), initial=0.0))
                worst_growth = max(worst_growth, inc)
                if inc > 1e-12:
                    growth.append(f"{label}#{j}:{method}")
    t = clock.elapsed
    conv = CheckResult(
        "oracle convergence",
        not failures and t <= 60.0,
        f"{runs} runs on {n_problems} problems, max IT {worst_it}, "
        f"{len(failures)} failures{' ' + ','.join(failures[:5]) if failures else ''}, {t:.1f}s (limit 60s)",
        t)
    mono = CheckResult(
        "per-step monotonicity",
        not growth,
        f"largest one-step increase of ||X-X*|| {worst_growth:.2e} (limit 1e-12)"
        + (f"; violations {','.join(growth[:5])}" if growth else ""),
        t)
    return [conv, mono]


# ---------------------------------------------------------------- sweep formula

def _row_loop(prob, x, alpha, steps):
    st = IterateState(x.copy())
    for k in range(steps):
        st = row_step(st, prob, k % prob.m, alpha)
    return st.x


def check_sweep_formula(quick=False):
    """One cyclic sweep written as a triangular solve matches m row steps."""
    clock = _Clock()
    count = _n(20, 4, quick)
    rng = np.random.default_rng(11)
    worst = 0.0
    shapes = {"fullcol": (12, 4), "fullrow": (4, 12)}
    for kind, (q, n) in shapes.items():
        for j in range(count):
            m, p = int(rng.integers(5, 25)), int(rng.integers(5, 25))
            ra = None if j % 3 else max(1, min(m, p) // 2)
            prob = random_problem(RandomSpec(m, p, q, n, rank_a=ra, seed=1000 + j))
            eff = transform_fullcol(prob)[0] if kind == "fullcol" else transform_fullrow(prob)
            alpha = float(rng.uniform(0.2, 1.8))
            op = analysis.build_sweep_operator(eff.a, alpha)
            x0 = rng.standard_normal((p, q))
            loop = _row_loop(eff, x0, alpha, m)
            formula = sweep_formula_step(x0, eff, op, alpha)
            method = "BK_FULLCOL" if kind == "fullcol" else "BK_FULLROW"
            kern = solve(prob, method, SolverConfig(alpha=alpha, max_iters=m,
                                                    stop=StopRule("update", 0.0)), x0=x0).x
            scale = max(np.linalg.norm(loop), 1e-300)
            worst = max(worst, np.linalg.norm(formula - loop) / scale,
                        np.linalg.norm(kern - loop) / scale)
    t = clock.elapsed
    return [CheckResult("sweep-formula equivalence", worst <= 1e-10 and t <= 10.0,
                        f"{2 * count} instances, max relative gap {worst:.2e} (limit 1e-10), "
                        f"{t:.1f}s (limit 10s)", t)]


# ---------------------------------------------------------------- nonsingular B

def check_transform_equivalence(quick=False):
    """With square nonsingular B the QR and normal-equation transforms
    produce the same iterates and the same iteration count."""
    clock = _Clock()
    count = _n(10, 3, quick)
    rng = np.random.default_rng(12)
    worst, mismatched = 0.0, []
    for j in range(count):
        m, p, q = int(rng.integers(6, 20)), int(rng.integers(4, 15)), int(rng.integers(2, 7))
        prob = random_problem(RandomSpec(m, p, q, q, seed=2000 + j))
        col, _ = transform_fullcol(prob)
        row = transform_fullrow(prob)
        xc = IterateState(np.zeros((p, q)))
        xr = IterateState(np.zeros((p, q)))
        for k in range(5 * m):
            xc = row_step(xc, col, k % m, 1.0)
            xr = row_step(xr, row, k % m, 1.0)
            gap = np.linalg.norm(xc.x - xr.x) / max(np.linalg.norm(xr.x), 1e-300)
            worst = max(worst, gap)
        cfg = SolverConfig(stop=StopRule("rse_below", 1e-8), max_iters=500_000)
        rc = solve(prob, "BK_FULLCOL", cfg)
        rr = solve(prob, "BK_FULLROW", cfg)
        worst = max(worst, np.linalg.norm(rc.x - rr.x) / np.linalg.norm(rr.x))
        if rc.iterations != rr.iterations:
            mismatched.append(f"#{j}:{rc.iterations}/{rr.iterations}")
    t = clock.elapsed
    return [CheckResult("QR vs normal-equation transform", worst <= 1e-10 and not mismatched,
                        f"{count} instances, max iterate gap {worst:.2e} (limit 1e-10), "
                        f"iteration counts {'identical' if not mismatched else 'differ ' + ','.join(mismatched)}",
                        t)]


# ---------------------------------------------------------------- invariant subspace

def check_bk_invariant(quick=False):
    """``X - A^+ A X B B^+`` stays fixed along cyclic BK and the limit from
    X0 is ``X* + X0 - A^+ A X0 B B^+``."""
    clock = _Clock()
    count = _n(10, 3, quick)
    rng = np.random.default_rng(13)
    # row counts divide 1000 so restarted segments stay aligned with sweeps
    configs = [(lab, s) for lab, s in rank_configurations() if 1000 % s.m == 0]
    worst_drift, worst_limit = 0.0, 0.0
    for j in range(count):
        _, spec = configs[j % len(configs)]
        prob = random_problem(spec.with_seed(3000 + j))
        x = rng.standard_normal((prob.p, prob.q))
        target = analysis.x_star_0(prob, x)
        inv = analysis.bk_invariant(prob.a, prob.b, x)
        cfg = SolverConfig(max_iters=1000, stop=StopRule("update_norm_below", 0.0))
        for _ in range(500):
            x = solve(prob, "BK", cfg, x0=x).x
            nxt = analysis.bk_invariant(prob.a, prob.b, x)
            worst_drift = max(worst_drift, float(np.linalg.norm(nxt - inv)))
            inv = nxt
            if np.linalg.norm(x - target) <= 1e-9 * max(1.0, np.linalg.norm(target)):
                break
        worst_limit = max(worst_limit, np.linalg.norm(x - target) / max(1.0, np.linalg.norm(target)))
    t = clock.elapsed
    return [CheckResult("BK invariant and limit", worst_drift <= 1e-10 and worst_limit <= 1e-6,
                        f"{count} starts, max drift per 1000 steps {worst_drift:.2e} (limit 1e-10), "
                        f"max limit gap {worst_limit:.2e} (limit 1e-6)", t)]


# ---------------------------------------------------------------- bounds

def _residual_state(rng, m, n):
    R = rng.standard_normal((m, n)) * rng.uniform(0.05, 3.0, size=(m, 1))
    if rng.random() < 0.2:
        R[rng.integers(m)] = 0.0
    return R


def check_bound_ordering(quick=False):
    """``delta_{k,1} <= delta_{k,theta} <= delta_{k,0} = delta`` on random
    residual states, strictly when the mean/max ratio is below one, and
    ``delta(alpha)`` is smallest at the grid point nearest ``||B||^-2``."""
    clock = _Clock()
    n_states = _n(1000, 100, quick)
    rng = np.random.default_rng(14)
    thetas = np.round(np.arange(0.0, 1.0001, 0.1), 10)
    problems = [random_problem(RandomSpec(*dims, seed=4000 + j))
                for j, dims in enumerate([(12, 8, 5, 6), (8, 12, 6, 5), (15, 10, 4, 4),
                                          (10, 10, 6, 3), (20, 6, 3, 7)])]
    problems.append(random_problem(RandomSpec(14, 9, 6, 8, rank_a=3, rank_b=2, seed=4100)))
    bad, strict_bad, equal_bad = 0, 0, 0
    for s in range(n_states):
        prob = problems[s % len(problems)]
        alpha = 1.0 / prob.b_norm**2
        R = _residual_state(rng, prob.m, prob.n)
        curve = analysis.delta_k_theta_curve(prob.a, prob.b, alpha, thetas, R)
        d = np.array([c.delta_k_theta for c in curve])
        if abs(d[0] - analysis.delta_bound(prob.a, prob.b, alpha)) > 1e-12:
            equal_bad += 1
        steps = np.diff(d)
        if np.any(steps > 1e-15) or not (d[-1] <= d[0] + 1e-15):
            bad += 1
        if curve[0].epsilon < 1.0 and not np.all(steps < 0):
            strict_bad += 1
    grid_bad = 0
    for j, prob in enumerate(problems):
        b2 = prob.b_norm**2
        grids = [np.arange(1, 40) / (20.0 * b2), np.sort(rng.uniform(0.01, 1.99, 25)) / b2]
        for grid in grids:
            vals = [analysis.delta_bound(prob.a, prob.b, a) for a in grid]
            if int(np.argmin(vals)) != int(np.argmin(np.abs(grid - 1.0 / b2))):
                grid_bad += 1
    t = clock.elapsed
    ok = not (bad or strict_bad or equal_bad or grid_bad)
    return [CheckResult("bound ordering and monotonicity", ok,
                        f"{n_states} residual states: {bad} order violations, "
                        f"{strict_bad} non-strict with eps<1, {equal_bad} theta=0 mismatches; "
                        f"{grid_bad} alpha grids with misplaced minimum", t)]


# ---------------------------------------------------------------- spectral radii

def check_spectral_radii(quick=False):
    clock = _Clock()
    count = _n(10, 3, quick)
    rng = np.random.default_rng(15)
    alphas = np.arange(0.1, 1.95, 0.2)
    worst_row, worst_col, worst_orth = 0.0, 0.0, 0.0
    for j in range(count):
        m, p = int(rng.integers(4, 16)), int(rng.integers(4, 16))
        A = rng.standard_normal((m, p))
        if j % 3 == 2:
            A = A[:, np.arange(p) % max(1, p // 2)]  # rank deficient
        q, n = int(rng.integers(3, 7)), int(rng.integers(1, 4))
        Q = qr_thin(rng.standard_normal((q, min(n, q)))).q
        A2 = rng.standard_normal((int(rng.integers(3, 9)), int(rng.integers(3, 9))))
        for a in alphas:
            worst_row = max(worst_row, analysis.spectral_radius_fullrow(A, a))
            worst_col = max(worst_col, analysis.restricted_spectral_radius_fullcol(A2, Q, a))
        # orthonormal rows: a sweep acts as (1 - alpha) on range(A^T)
        k = int(rng.integers(2, 8))
        U = qr_thin(rng.standard_normal((k + int(rng.integers(0, 4)), k))).q.T
        for a in alphas:
            worst_orth = max(worst_orth,
                             abs(analysis.spectral_radius_fullrow(U, a) - abs(1 - a)),
                             abs(analysis.restricted_spectral_radius_fullcol(U, Q, a) - abs(1 - a)))
    t = clock.elapsed
    ok = worst_row < 1.0 and worst_col < 1.0 and worst_orth <= 1e-10
    return [CheckResult("sweep spectral radii", ok,
                        f"max radius full-row {worst_row:.6f}, full-column {worst_col:.6f} (need < 1); "
                        f"orthonormal-A gap to |1-alpha| {worst_orth:.2e} (limit 1e-10)", t)]


# ---------------------------------------------------------------- greedy vs random

def check_greedy_ordering(quick=False, tol=1e-6):
    """Median iteration counts: MWRBK <= GRBK <= RBK and GRBK <= 0.8 RBK
    on 35x60 / 80x20 Gaussian problems."""
    clock = _Clock()
    n_prob = _n(5, 2, quick)
    trials = _n(20, 5, quick)
    cfg = SolverConfig(stop=StopRule("rse_below", tol), max_iters=2_000_000, trace_stride=10_000)
    bad, ratios, rows = [], [], []
    for j in range(n_prob):
        spec = ExperimentSpec(RandomSpec(35, 60, 80, 20, seed=100 + j),
                              ("RBK", "GRBK", "MWRBK"), cfg, trials=trials)
        med = {r.method: float(np.median(r.iterations)) for r in run_trials(spec)}
        ratio = med["GRBK"] / med["RBK"]
        ratios.append(ratio)
        rows.append(f"{med['MWRBK']:.0f}/{med['GRBK']:.0f}/{med['RBK']:.0f}")
        if not (med["MWRBK"] <= med["GRBK"] <= med["RBK"] and ratio <= 0.8):
            bad.append(j)
    t = clock.elapsed
    return [CheckResult("greedy vs random iteration ordering", not bad and t <= 120.0,
                        f"median IT MWRBK/GRBK/RBK {' '.join(rows)}; GRBK/RBK max {max(ratios):.3f} "
                        f"(limit 0.8); {t:.1f}s (limit 120s)", t)]


# ---------------------------------------------------------------- candidate sets

def _grbk_set(R, row_norms2, a_fro2):
    # plain greedy rule: ||R_i||^2 >= eps ||R||^2 ||A_i||^2 with
    # eps = (max_i ||R_i||^2/||A_i||^2 / ||R||^2 + 1/||A||_F^2) / 2
    rn2 = np.einsum("ij,ij->i", R, R)
    total = rn2.sum()
    eps = 0.5 * ((rn2 / row_norms2).max() / total + 1.0 / a_fro2)
    return np.flatnonzero(rn2 >= eps * total * row_norms2)


def check_candidate_sets(quick=False):
    clock = _Clock()
    n_states = _n(100_000, 5_000, quick)
    rng = np.random.default_rng(16)
    problems = []
    for j, (m, p) in enumerate([(6, 4), (12, 9), (25, 10), (3, 5)]):
        A = rng.standard_normal((m, p))
        if j == 1:
            A /= np.linalg.norm(A, axis=1, keepdims=True)  # equal row norms invite ties
        problems.append(Problem(A, np.eye(2), np.zeros((m, 2))))
    empty = missing = grbk_diff = mw_diff = 0
    x = np.zeros((1, 1))
    for s in range(n_states):
        prob = problems[s % len(problems)]
        R = rng.standard_normal((prob.m, 2))
        if s % 5 == 0:
            R = np.round(R)  # duplicated rows give exact ties
            R[0] = R[-1]
        if not np.any(R):
            R[0, 0] = 1.0
        st = IterateState(x, R)
        theta = float(rng.uniform(0, 1))
        d = greedy_threshold(st, prob, theta)
        ratios = np.einsum("ij,ij->i", R, R) / prob.row_norms2
        first = int(np.flatnonzero(ratios == ratios.max())[0])
        if d.candidate_set.size == 0:
            empty += 1
        if first not in d.candidate_set:
            missing += 1
        half = greedy_threshold(st, prob, 0.5)
        diff = np.setxor1d(half.candidate_set, _grbk_set(R, prob.row_norms2, prob.a_fro2))
        # rows sitting exactly on the threshold may fall either way under rounding
        if np.any(np.abs(ratios[diff] - half.threshold) > 1e-12 * half.threshold):
            grbk_diff += 1
        g = np.random.Generator(np.random.Philox(s))
        if greedy_sample(g, greedy_threshold(st, prob, 1.0), theta=1.0) != mwrbk_select(st, prob):
            mw_diff += 1
    t = clock.elapsed
    ok = not (empty or missing or grbk_diff or mw_diff)
    return [CheckResult("candidate-set soundness", ok,
                        f"{n_states} states: {empty} empty, {missing} missing argmax, "
                        f"{grbk_diff} theta=1/2 vs greedy-rule mismatches, "
                        f"{mw_diff} theta=1 vs max-ratio mismatches", t)]


# ---------------------------------------------------------------- invariances

def check_invariances(quick=False):
    """Positive row scaling leaves BK and MWRBK traces unchanged; a row
    permutation permutes the RBK and GRBK weights."""
    clock = _Clock()
    count = _n(5, 2, quick)
    rng = np.random.default_rng(17)
    worst, row_diff, perm_bad = 0.0, 0, 0
    for j in range(count):
        prob = random_problem(RandomSpec(15, 10, 6, 8, seed=5000 + j))
        d = rng.uniform(0.2, 5.0, size=prob.m)
        A = prob.a.toarray()
        scaled = Problem(A * d[:, None], prob.b, prob.c * d[:, None], prob.x_star)
        for method in ("BK", "MWRBK"):
            cfg = SolverConfig(max_iters=3000, trace_stride=1, stop=StopRule("rse", 0.0))
            r1, r2 = solve(prob, method, cfg), solve(scaled, method, cfg)
            worst = max(worst, float(np.max(np.abs(r1.trace.rse - r2.trace.rse))))
            row_diff += int(not np.array_equal(r1.trace.row, r2.trace.row))
        perm = rng.permutation(prob.m)
        permuted = Problem(A[perm], prob.b, prob.c[perm], prob.x_star)
        if not np.allclose(permuted.row_norms2, prob.row_norms2[perm], rtol=1e-14, atol=0):
            perm_bad += 1
        R = prob.c - A @ (rng.standard_normal((prob.p, prob.q)) @ prob.b)
        x = np.zeros((1, 1))
        base = greedy_threshold(IterateState(x, R), prob, 0.5)
        moved = greedy_threshold(IterateState(x, R[perm]), permuted, 0.5)
        if not (np.array_equal(np.sort(perm[moved.candidate_set]), base.candidate_set)
                and np.allclose(np.sort(moved.weights), np.sort(base.weights), rtol=1e-14, atol=0)):
            perm_bad += 1
    t = clock.elapsed
    ok = worst <= 1e-12 and row_diff == 0 and perm_bad == 0
    return [CheckResult("scaling and permutation invariance", ok,
                        f"max trace gap under row scaling {worst:.2e} (limit 1e-12), "
                        f"{row_diff} row-sequence differences, {perm_bad} permutation mismatches", t)]


# ---------------------------------------------------------------- deblurring

def check_deblur(quick=False, repeats=3):
    """MWRBK restores a blurred 32x32 image by at least 5 dB; GI needs at
    least three times the wall time to reach the same error."""
    clock = _Clock()
    img = synthetic_image(32, 32, seed=0)
    A = blur_matrix(gaussian_kernel(5, 6.0), 32, 32, "reflexive")
    C = forward_blur(img, A)
    ac = CROSS_CHANNEL
    blurred = columns_to_channels(C, 32, 32)
    cfg = SolverConfig(stop=StopRule("rse_below", 8e-2), max_iters=5_000_000, trace_stride=10**6)
    best = {}
    restored = None
    for method in ("MWRBK", "GI"):
        for _ in range(1 if quick else repeats):
            out, rep = deblur(C, A, ac, method=method, config=cfg, reference=img)
            if rep.stop_reason != "rse_below":
                return [CheckResult("deblurring", False, f"{method} stopped by {rep.stop_reason}",
                                    clock.elapsed)]
            best[method] = min(best.get(method, np.inf), rep.wall_time)
            if method == "MWRBK":
                restored = out
    gain = psnr(img, restored) - psnr(img, blurred)
    ratio = best["GI"] / best["MWRBK"]
    t = clock.elapsed
    ok = gain >= 5.0 and ratio >= 3.0 and t <= 120.0
    return [CheckResult("deblurring", ok,
                        f"PSNR gain {gain:.2f} dB (need 5), GI/MWRBK time {ratio:.2f} (need 3), "
                        f"{t:.1f}s (limit 120s)", t)]


# ---------------------------------------------------------------- residual recurrence

def check_residual_recurrence(quick=False):
    clock = _Clock()
    worst = 0.0
    for method in ("MWRBK", "GRBK"):
        prob = random_problem(RandomSpec(40, 30, 20, 25, seed=6000))
        cfg = SolverConfig(max_iters=10_000, residual_refresh_every=0,
                           stop=StopRule("residual_fro_below", 0.0))
        rep = solve(prob, method, cfg)
        gap = np.linalg.norm(rep.extra["residual"] - prob.residual(rep.x))
        worst = max(worst, gap / (1.0 + prob.c_fro))
    t = clock.elapsed
    return [CheckResult("residual recurrence fidelity", worst <= 1e-8,
                        f"after 1e4 steps, max gap / (1+||C||_F) {worst:.2e} (limit 1e-8)", t)]


# ---------------------------------------------------------------- realized contraction

def check_contraction(quick=False):
    """Observed error decay stays within the theoretical factors.

    Greedy runs: the mean per-step ratio of squared errors is at most
    ``delta + 0.05``. Transformed cyclic sweeps: the late-sweep error
    reduction per sweep is at most the restricted spectral radius + 0.05.
    """
    clock = _Clock()
    count = _n(6, 2, quick)
    worst_step, worst_sweep = -np.inf, -np.inf
    for j in range(count):
        prob = random_problem(RandomSpec(12, 8, 4, 6, seed=7000 + j))
        alpha = 1.0 / prob.b_norm**2
        delta = analysis.delta_bound(prob.a, prob.b, alpha)
        xs_norm = np.linalg.norm(prob.x_star)
        for method in ("GRBK", "RGRBK", "MWRBK"):
            rep = solve(prob, method, SolverConfig(max_iters=2000, trace_stride=1, seed=j,
                                                   stop=StopRule("rse_below", 1e-7)))
            e = np.concatenate([[rep.initial_rse], rep.trace.rse]) * xs_norm
            ratio = float(np.mean((e[1:] / e[:-1]) ** 2))
            worst_step = max(worst_step, ratio - delta)
        for kind in ("fullrow", "fullcol"):
            if kind == "fullrow":
                p2 = random_problem(RandomSpec(10, 14, 3, 7, seed=7100 + j))
                eff = transform_fullrow(p2)
                rho = analysis.spectral_radius_fullrow(eff.a, 1.0)
            else:
                p2 = random_problem(RandomSpec(10, 8, 6, 3, seed=7200 + j))
                eff = transform_fullcol(p2)[0]
                rho = analysis.restricted_spectral_radius_fullcol(eff.a, eff.b, 1.0)
            op = analysis.build_sweep_operator(eff.a, 1.0)
            x = np.zeros((p2.p, p2.q))
            errs = []
            for _ in range(400):
                x = sweep_formula_step(x, eff, op, 1.0)
                errs.append(np.linalg.norm(x - p2.x_star))
                if errs[-1] < 1e-9 * np.linalg.norm(p2.x_star):
                    break
            errs = np.array(errs)
            late = errs[len(errs) // 2:]
            if len(late) >= 3:
                rate = (late[-1] / late[0]) ** (1.0 / (len(late) - 1))
                worst_sweep = max(worst_sweep, rate - rho)
    t = clock.elapsed
    ok = worst_step <= 0.05 and worst_sweep <= 0.05
    return [CheckResult("realized contraction", ok,
                        f"mean step ratio minus delta at most {worst_step:.3f}, late sweep rate minus "
                        f"spectral radius at most {worst_sweep:.3f} (limits 0.05)", t)]


# ---------------------------------------------------------------- module invariants

def check_module_invariants(quick=False):
    """Smaller invariants of the individual modules."""
    clock = _Clock()
    out = []
    rng = np.random.default_rng(18)
    M = rng.standard_normal((7, 5)) @ rng.standard_normal((5, 9))
    B = rng.standard_normal((4, 6))
    C = M @ rng.standard_normal((9, 4)) @ B
    X = min_norm_solution(M, B, C)
    res = np.linalg.norm(M @ X @ B - C) / np.linalg.norm(C)
    gap = np.linalg.norm(X - np.linalg.pinv(M) @ C @ np.linalg.pinv(B)) / np.linalg.norm(X)
    out.append(("minimum-norm oracle", res < 1e-10 and gap < 1e-10,
                f"relative residual {res:.1e}, gap to A^+ C B^+ {gap:.1e}"))

    A = blur_matrix(gaussian_kernel(5, 6.0), 9, 7, "reflexive")
    rows = np.abs(np.asarray(A.sum(axis=1)).ravel() - 1).max()
    img = synthetic_image(8, 8, seed=1)
    out.append(("blur rows sum to one", rows < 1e-12, f"max deviation {rows:.1e}"))
    out.append(("PSNR of identical images", psnr(img, img) == float("inf"), "inf"))

    prob = random_problem(RandomSpec(10, 8, 5, 6, seed=7))
    cfg = SolverConfig(max_iters=500, trace_stride=7, seed=3, stop=StopRule("rse", 1e-12))
    same = all(format_trace(solve(prob, m, cfg).trace, timings=False)
               == format_trace(solve(prob, m, cfg).trace, timings=False)
               for m in ("RBK", "RGRBK"))
    out.append(("reproducible traces", same, "same spec and seed give identical CSV"))

    gap = 0.0
    for method in ("BK", "RBK", "GRBK", "MWRBK"):
        kern = solve(prob, method, SolverConfig(max_iters=60, seed=5, trace_stride=1,
                                                stop=StopRule("rse", 0.0)))
        st = IterateState(np.zeros((prob.p, prob.q)), prob.residual(np.zeros((prob.p, prob.q))))
        for i in kern.trace.row:
            if method == "MWRBK" and mwrbk_select(st, prob) != i:
                gap = np.inf
            st = row_step(st, prob, int(i), kern.alpha)
        gap = max(gap, float(np.linalg.norm(st.x - kern.x) / np.linalg.norm(kern.x)))
    out.append(("compiled kernel matches reference steps", gap < 1e-10, f"max gap {gap:.1e}"))
    t = clock.elapsed
    return [CheckResult(name, bool(ok), detail, t) for name, ok, detail in out]


def write_bound_reports(path, seed=0, n_states=5):
    """CSV of contraction bounds over a theta grid for a few residual states."""
    rng = np.random.default_rng(seed)
    prob = random_problem(RandomSpec(12, 8, 5, 6, seed=seed))
    alpha = 1.0 / prob.b_norm**2
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("state,theta,alpha,delta,delta_k_theta,varphi_k_theta,epsilon,omega_size,degenerate\n")
        for s in range(n_states):
            R = _residual_state(rng, prob.m, prob.n)
            for r in analysis.delta_k_theta_curve(prob.a, prob.b, alpha, np.linspace(0, 1, 11), R):
                fh.write(f"{s},{r.theta:.17g},{r.alpha:.17g},{r.delta:.17g},{r.delta_k_theta:.17g},"
                         f"{r.varphi_k_theta:.17g},{r.epsilon:.17g},{r.omega_set.size},"
                         f"{int(r.degenerate)}\n")


CHECKS = (
    check_convergence, check_sweep_formula, check_transform_equivalence,
    check_bk_invariant, check_bound_ordering, check_spectral_radii,
    check_greedy_ordering, check_candidate_sets, check_invariances,
    check_deblur, check_residual_recurrence, check_contraction,
    check_module_invariants,
)


def run_all(quick=False, report=print):
    """Run every check; returns the list of results."""
    warmup()
    results = []
    for check in CHECKS:
        for res in check(quick=quick):
            results.append(res)
            if report is not None:
                report(res.line())
    return results


__all__ = ["CheckResult", "CHECKS", "run_all", "write_bound_reports"] + [c.__name__ for c in CHECKS]
