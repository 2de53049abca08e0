"""Command-line entry point: ``matkaczmarz {solve,bench,verify,deblur}``.

Exit codes: 0 on success, 1 when ``verify`` finds a violated invariant,
2 on usage errors (bad flags, inadmissible parameters, unreadable input).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..imaging import (BOUNDARIES, blur_matrix, columns_to_channels, deblur,
                       forward_blur, gaussian_kernel, psnr, read_ppm,
                       synthetic_image, write_ppm)
from ..linalg import as_dense, min_norm_solution
from ..solvers import METHODS, Problem, SolverConfig, StopRule, solve
from .generate import RandomSpec, random_problem
from .mmio import read_matrix_market
from .tracefile import write_trace_csv
from .trials import ExperimentSpec, format_summary, run_trials

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

# flags that may also come from a --config file; None marks "not given"
_CONFIG_KEYS = {
    "method": str, "alpha": str, "theta": str, "seed": int, "trials": int,
    "max_iters": int, "stop": str, "boundary": str, "out": str, "random": str,
    "a": str, "b": str, "c": str, "problem_seed": int, "stride": int,
    "image": str, "synthetic": str,
}
_DEFAULTS = {"seed": 0, "trials": 20, "max_iters": 1_000_000, "boundary": "reflexive",
             "problem_seed": 0}


class UsageError(Exception):
    pass


def _alpha(text):
    if text is None or text == "auto":
        return None
    try:
        val = float(text)
    except ValueError:
        raise UsageError(f"--alpha must be a number or 'auto', got {text!r}") from None
    if not val > 0:
        raise UsageError("--alpha must be positive")
    return val


def _thetas(text):
    if text is None:
        return None
    try:
        vals = tuple(float(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise UsageError(f"--theta must be a comma-separated list of numbers, got {text!r}") from None
    if not vals or any(not 0.0 <= t <= 1.0 for t in vals):
        raise UsageError("--theta values must lie in [0, 1]")
    return vals


def _stop(text):
    if text is None:
        return None
    try:
        return StopRule.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys use flag
    names with dashes or underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: expected key=value with a known key, got {raw!r}")
        try:
            out[key] = _CONFIG_KEYS[key](val.strip())
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}") from None
    return out


def _merge_config(args):
    """Fill unset flags from --config, then from built-in defaults."""
    if getattr(args, "config", None):
        try:
            values = read_config_file(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        for key, val in values.items():
            if hasattr(args, key) and getattr(args, key) is None:
                setattr(args, key, val)
    for key, val in _DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, val)


def _solver_config(args, stride=None):
    thetas = _thetas(args.theta)
    theta = thetas[0] if thetas else 0.75
    return SolverConfig(alpha=_alpha(args.alpha), theta=theta, max_iters=args.max_iters,
                        seed=args.seed, stop=_stop(args.stop),
                        trace_stride=stride if stride is not None else args.stride)


def _load_problem(args):
    """Problem from --random or from Matrix Market files."""
    if args.a:
        A = read_matrix_market(args.a)
        if not args.b:
            raise UsageError("--b is required with --a")
        B = as_dense(read_matrix_market(args.b))
        if args.c:
            C = as_dense(read_matrix_market(args.c))
            return Problem(A, B, C)
        # consistent right-hand side from a seeded Gaussian solution
        rng = np.random.Generator(np.random.Philox(args.problem_seed))
        X = rng.standard_normal((A.shape[1], B.shape[0]))
        C = np.asarray(A @ X) @ B
        return Problem(A, B, C, min_norm_solution(A, B, C))
    spec = RandomSpec.parse(args.random or "35,60,80,20", seed=args.problem_seed)
    return random_problem(spec)


def _common(p, method_default=None):
    p.add_argument("--method", default=method_default,
                   help=f"one of {', '.join(METHODS)}")
    p.add_argument("--alpha", default=None, help="stepsize, or 'auto' (default)")
    p.add_argument("--theta", default=None, help="relaxation of RGRBK; comma list in bench")
    p.add_argument("--seed", type=int, default=None, help="base seed of the row sampling")
    p.add_argument("--max-iters", type=int, default=None, dest="max_iters")
    p.add_argument("--stop", default=None, metavar="RULE:TOL",
                   help="rse, update_norm or residual, e.g. rse:1e-6")
    p.add_argument("--stride", type=int, default=None, help="trace stride")
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None, help="key=value file; flags win")


def _problem_args(p):
    p.add_argument("--random", default=None, metavar="m,p,q,n[,ra,rb]",
                   help="Gaussian test problem (default 35,60,80,20)")
    p.add_argument("--problem-seed", type=int, default=None, dest="problem_seed")
    p.add_argument("--a", default=None, help="Matrix Market file for A")
    p.add_argument("--b", default=None, help="Matrix Market file for B")
    p.add_argument("--c", default=None, help="Matrix Market file for C (default: A X B, X Gaussian)")


def build_parser():
    parser = argparse.ArgumentParser(prog="matkaczmarz",
                                     description="Kaczmarz-type solvers for A X B = C")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run one method on one problem")
    _common(ps)
    _problem_args(ps)

    pb = sub.add_parser("bench", help="repeated trials and an IT/CPU summary table")
    _common(pb)
    _problem_args(pb)
    pb.add_argument("--trials", type=int, default=None)

    pv = sub.add_parser("verify", help="run the invariant suite")
    pv.add_argument("--quick", action="store_true", help="smaller instance counts")
    pv.add_argument("--out", default=None,
                    help="directory for checks.csv and a sample of bound reports (bounds.csv)")

    pd = sub.add_parser("deblur", help="restore a blurred color image")
    _common(pd)
    pd.add_argument("--image", default=None, help="sharp P6 image to blur and restore")
    pd.add_argument("--synthetic", default=None, metavar="HxW",
                    help="use a generated test image (default 32x32)")
    pd.add_argument("--boundary", default=None, choices=BOUNDARIES)
    pd.add_argument("--image-seed", type=int, default=0, dest="image_seed")
    return parser


def _cmd_solve(args, out):
    prob = _load_problem(args)
    cfg = _solver_config(args)
    method = (args.method or "MWRBK").upper()
    rep = solve(prob, method, cfg)
    print(f"method {rep.method}  alpha {rep.alpha:.6g}  iterations {rep.iterations}  "
          f"stop {rep.stop_reason}  time {rep.wall_time:.4f}s", file=out)
    if prob.x_star is not None:
        print(f"relative solution error {prob.rse(rep.x):.3e}", file=out)
    print(f"residual ||C - AXB||_F {np.linalg.norm(prob.residual(rep.x)):.3e}", file=out)
    if args.out:
        write_trace_csv(rep, args.out)
        print(f"trace written to {args.out}", file=out)
    return EXIT_OK


def _cmd_bench(args, out):
    prob = _load_problem(args)
    thetas = _thetas(args.theta)
    if args.method:
        methods = tuple(m.strip().upper() for m in args.method.split(",") if m.strip())
    elif thetas and len(thetas) > 1:
        methods = ("RGRBK",)
    else:
        methods = ("RBK", "GRBK", "MWRBK")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"unknown method(s) {', '.join(bad)}")
    stride = args.stride or max(1, args.max_iters // 10_000)
    cfg = _solver_config(args, stride)
    # bench rejects inadmissible stepsizes up front rather than per trial
    for m in methods:
        solve(prob, m, replace(cfg, max_iters=1))
    spec = ExperimentSpec(prob, methods, cfg, trials=args.trials, thetas=thetas,
                          base_seed=args.seed)
    results = run_trials(spec, prob)
    stop = cfg.stop if cfg.stop is not None else "update_norm_below (default)"
    print(format_summary(results, f"problem {prob.m}x{prob.p} / {prob.q}x{prob.n}, "
                                  f"{args.trials} trials, stop {stop}"), file=out)
    print("iteration counts depend on the stopping rule and tolerance", file=out)
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        for res in results:
            for j, rep in enumerate(res.reports):
                name = res.label.replace("(", "_").replace(")", "").replace("=", "")
                write_trace_csv(rep, d / f"{name}_trial{j:02d}.csv")
    return EXIT_OK


def _cmd_verify(args, out):
    from .verify import run_all, write_bound_reports
    results = run_all(quick=args.quick, report=lambda s: print(s, file=out, flush=True))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=out)
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        with open(d / "checks.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("check", "passed", "seconds", "detail"))
            for r in results:
                w.writerow((r.name, int(r.passed), f"{r.seconds:.3f}", r.detail))
        write_bound_reports(d / "bounds.csv")
        print(f"results written to {d}", file=out)
    return EXIT_VIOLATION if failed else EXIT_OK


def _cmd_deblur(args, out):
    if args.image and args.synthetic:
        raise UsageError("give either --image or --synthetic")
    if args.image:
        try:
            img = read_ppm(args.image)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read image: {exc}") from None
    else:
        try:
            h, w = (int(t) for t in (args.synthetic or "32x32").lower().split("x"))
        except ValueError:
            raise UsageError("--synthetic expects HxW, e.g. 32x32") from None
        img = synthetic_image(h, w, seed=args.image_seed)
    A = blur_matrix(gaussian_kernel(5, 6.0), img.height, img.width, args.boundary)
    C = forward_blur(img, A)
    blurred = columns_to_channels(C, img.height, img.width)
    stop = _stop(args.stop) or StopRule("rse_below", 8e-2)
    cfg = replace(_solver_config(args), stop=stop)
    restored, rep = deblur(C, A, method=(args.method or "MWRBK").upper(), config=cfg,
                           reference=img)
    print(f"method {rep.method}  iterations {rep.iterations}  stop {rep.stop_reason}  "
          f"time {rep.wall_time:.4f}s", file=out)
    print(f"PSNR blurred {psnr(img, blurred):.2f} dB  restored {psnr(img, restored):.2f} dB",
          file=out)
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        write_ppm(blurred.clipped(), d / "blurred.ppm")
        write_ppm(restored.clipped(), d / "restored.ppm")
        write_trace_csv(rep, d / "trace.csv")
        print(f"images and trace written to {d}", file=out)
    return EXIT_OK


_COMMANDS = {"solve": _cmd_solve, "bench": _cmd_bench, "verify": _cmd_verify,
             "deblur": _cmd_deblur}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 2 on bad flags, 0 for --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        _merge_config(args)
        if getattr(args, "trials", None) is not None and args.trials < 1:
            raise UsageError("--trials must be at least 1")
        return _COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"matkaczmarz: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, OSError) as exc:
        # inadmissible parameters, rank conditions, malformed input files
        print(f"matkaczmarz: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
