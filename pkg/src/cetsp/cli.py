"""Command line entry point: ``cetsp <command> ...``.

Exit codes: 0 success, 1 usage or I/O error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from pathlib import Path
from statistics import mean

from . import bench as benchmod
from .instance_io import (
    ParseError,
    SolutionFormatError,
    emit_svg,
    format_instance,
    read_instance,
    read_points,
    read_solution,
    reconstruct_radius,
    validate,
    write_solution,
)
from .local_opt import simulate_gadget
from .solver import SolveParams, solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2


class CliError(Exception):
    """Usage or I/O problem; reported on stderr with exit code 1."""


def _int_list(text: str) -> list[int]:
    try:
        out = [int(float(t)) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("sizes must be positive")
    return out


def _load_instance(path: str, radius=None):
    try:
        return read_instance(path, radius=radius)
    except OSError as exc:
        raise CliError(f"cannot read instance {path}: {exc.strerror or exc}")
    except ParseError as exc:
        raise CliError(f"{path}: {exc}")


def _load_solution(path: str):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read solution {path}: {exc.strerror or exc}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return read_solution(data)
    except SolutionFormatError as exc:
        raise CliError(f"{path}: {exc}")


def _write(path: str, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}")


# ---------------------------------------------------------------- commands


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance, args.radius)
    factor = math.inf if args.no_budget else args.budget_factor
    try:
        params = SolveParams(seed=args.seed, restarts=args.restarts, k_cluster=args.k_cluster,
                             k_segments=args.k_segments, newton=args.newton,
                             reinsertion_budget_factor=factor, trace=args.trace)
    except ValueError as exc:
        raise CliError(str(exc))

    trace_fh = None
    trace = None
    if args.trace:
        try:
            trace_fh = open(args.trace, "w", encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {args.trace}: {exc.strerror or exc}")

        def trace(event):
            trace_fh.write(json.dumps(event, sort_keys=True) + "\n")

    t0 = time.perf_counter()
    try:
        best, runs = solve(inst, params, trace=trace)
    finally:
        if trace_fh is not None:
            trace_fh.close()
    wall = time.perf_counter() - t0

    report = validate(inst, best.solution)
    if args.out:
        _write(args.out, write_solution(best.solution))
    lengths = [r.length for r in runs]
    print(f"{inst.name} n={len(inst)} best={best.length:.6f} mean={mean(lengths):.6f} "
          f"runs={len(runs)} time/run={wall / len(runs):.3f}s points={best.tour_points} "
          f"seed={best.solution.seed}")
    if not report.ok:
        print(report.summary(), file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_bench(args) -> int:
    benchmod.warm_up()

    def progress(row):
        if not args.quiet:
            print(f"n={row.n} seed={row.seed} {row.millis:.1f} ms points={row.tour_points}",
                  file=sys.stderr, flush=True)

    rows = benchmod.run_bench(args.kind, args.n, args.reps, args.seed,
                              per_phase=args.per_phase, progress=progress)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                benchmod.write_csv(rows, fh)
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc.strerror or exc}")
    else:
        benchmod.write_csv(rows, sys.stdout)

    times = benchmod.totals_by_n(rows)
    if len(times) >= 2:
        fit = benchmod.fit_nlogn(list(times), list(times.values()))
        print(f"fit T = {fit.slope:.4g} * n log2 n + {fit.intercept:.4g} ms, R^2 = {fit.r2:.4f}")
        ratios = " ".join(f"{n}:{r:.2f}" for n, r in benchmod.doubling_ratios(times))
        if ratios:
            print(f"doubling ratios {ratios}")
    per_point = benchmod.totals_by_n(rows, "tour_points")
    print("tour_points/n " + " ".join(f"{n}:{p / n:.4f}" for n, p in per_point.items()))
    return EXIT_OK


def cmd_gadget(args) -> int:
    if args.n < 0 or args.seeds < 1:
        raise CliError("need n >= 0 and seeds >= 1")
    worst = 0
    bad = []
    for seed in range(args.seed, args.seed + args.seeds):
        res = simulate_gadget(args.n, seed)
        worst = max(worst, res.extra_ops)
        if not (res.terminated and res.bound_held):
            bad.append(res)
    print(f"gadget n={args.n} seeds={args.seeds} max_extra={worst} bound={2 * args.n} "
          f"{'OK' if not bad else 'VIOLATED'}")
    for res in bad:
        print(f"  seed {res.seed}: extra={res.extra_ops} terminated={res.terminated}", file=sys.stderr)
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_generate(args) -> int:
    try:
        inst = benchmod.make_instance(args.kind, args.n, args.seed, args.limit)
    except ValueError as exc:
        raise CliError(str(exc))
    text = format_instance(inst).encode("utf-8")
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text.decode("utf-8"))
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = _load_instance(args.instance, args.radius)
    sol = _load_solution(args.solution)
    report = validate(inst, sol, args.epsilon)
    print(report.summary())
    for v in report.violations[:20]:
        print(f"  circle {v.circle}: {v.reason} (excess {v.excess:.3g})")
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_render(args) -> int:
    inst = _load_instance(args.instance, args.radius)
    sol = _load_solution(args.solution) if args.solution else None
    _write(args.out, emit_svg(inst, sol))
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    try:
        centers = read_points(Path(args.centers).read_bytes())
        tour = read_points(Path(args.tour).read_bytes())
    except OSError as exc:
        raise CliError(f"cannot read input: {exc.strerror or exc}")
    except (ParseError, SolutionFormatError) as exc:
        raise CliError(str(exc))
    print(f"{reconstruct_radius(centers, tour):.12g}")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cetsp", description="Close-enough TSP solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--k-cluster", type=int, default=8)
    p.add_argument("--k-segments", type=int, default=6)
    p.add_argument("--newton", action="store_true", help="refine insertion points with one Newton step")
    p.add_argument("--budget-factor", type=float, default=2.0,
                   help="reinsertion budget as a multiple of n (default 2)")
    p.add_argument("--no-budget", action="store_true", help="disable the reinsertion budget")
    p.add_argument("--radius", type=float, default=None, help="override every radius")
    p.add_argument("--trace", default=None, help="write JSON-lines events here")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="time solves over growing n")
    p.add_argument("--kind", choices=("random", "structured"), default="structured")
    p.add_argument("--n", type=_int_list, default=[2 ** k for k in range(10, 15)])
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-phase", action="store_true", help="one row per phase instead of per run")
    p.add_argument("--out", default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gadget", help="simulate the reinsertion gadget process")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.set_defaults(func=cmd_gadget)

    p = sub.add_parser("generate", help="write a random or structured instance")
    p.add_argument("--kind", choices=("random", "structured"), default="random")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--limit", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="check a solution against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("render", help="draw instance and tour as SVG")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("reconstruct", help="recover a uniform radius from centers and a tour")
    p.add_argument("--centers", required=True)
    p.add_argument("--tour", required=True)
    p.set_defaults(func=cmd_reconstruct)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if getattr(args, "reps", 1) < 1:
        print("cetsp: error: --reps must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except CliError as exc:
        print(f"cetsp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
