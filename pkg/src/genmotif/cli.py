"""Command-line front end.

``genmotif discover`` runs the genetic search on a CSV series and writes a
JSON motif report. ``genmotif bench {plant,race,sweep,score}`` drives the
planted-motif benchmark.

Exit codes: 0 success, 1 invalid flags, 2 unreadable or invalid input,
3 infeasible task.
"""

from __future__ import annotations

import argparse
import logging
import re
import signal
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import kernels
from .bench import (
    SWEEP_RHOS,
    SWEEP_SIGMAS,
    PlantedGroundTruth,
    PlantedSpec,
    convergence_experiment,
    generate_planted,
    parameter_sweep,
    recovery_score,
    sign_test,
)
from .engine import Budget, GaParams, InfeasibleTaskError, TaskSpec, evolve
from .report import build_report, load_report, report_solution, write_report
from .scoring import FitnessConfig
from .timeseries import CsvFormatError, TimeSeries, read_csv, write_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3

log = logging.getLogger("genmotif")

_UNITS = {"ms": 1e-3, "s": 1.0, "sec": 1.0, "min": 60.0, "m": 60.0, "h": 3600.0}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_duration(text: str) -> float:
    """Seconds from ``"120"``, ``"120s"``, ``"500ms"`` or ``"2min"``."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([a-z]*)\s*", text)
    if not m or m.group(2) not in ("", *_UNITS):
        raise argparse.ArgumentTypeError(f"invalid duration {text!r} (use e.g. 500ms, 30s, 2min)")
    return float(m.group(1)) * _UNITS.get(m.group(2), 1.0)


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number list {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer list {text!r}") from None


def _duration_list(text: str) -> list[float]:
    return [parse_duration(t) for t in text.split(",") if t.strip()]


def _add_task_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_argument_group("task")
    g.add_argument("--k", type=int, required=required, default=None if required else 4, help="number of motifs")
    g.add_argument("--support", type=int, required=required, default=None if required else 5,
                   help="segments per motif")
    g.add_argument("--lmin", type=int, required=required, default=None if required else 50,
                   help="minimum segment length (samples)")
    g.add_argument("--lmax", type=int, required=required, default=None if required else 60,
                   help="maximum segment length (samples)")
    g.add_argument("--index", choices=("db", "silhouette"), default="db")
    g.add_argument("--centroid", choices=("mean", "medoid"), default="mean")
    g.add_argument("--overlap-tolerance", type=float, default=0.0, metavar="FRACTION")
    g.add_argument("--no-znorm", action="store_true", help="skip segment z-normalization")


def _add_ga_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("search")
    g.add_argument("--pop-size", type=int, default=51)
    g.add_argument("--sigma", type=float, default=1e-2)
    g.add_argument("--selection", choices=("uniform", "tournament"), default="uniform")
    g.add_argument("--threads", type=int, default=1, help="parallel fitness evaluations")
    g.add_argument("--backend", choices=("auto", "cython", "python"), default="auto")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="genmotif", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("discover", help="find k motifs with support s in a CSV series")
    d.add_argument("--input", required=True, type=Path)
    _add_task_flags(d)
    _add_ga_flags(d)
    d.add_argument("--time", type=parse_duration, default=None, help="wall-clock budget (default 60s)")
    d.add_argument("--generations", type=int, default=None, help="number of scoring passes")
    d.add_argument("--seed", type=int, default=None)
    d.add_argument("--output", type=Path, default=Path("report.json"))
    d.add_argument("--trace", type=Path, default=None, help="write the convergence trace CSV")
    d.add_argument("--progress", action="store_true", help="print one line per generation")
    d.set_defaults(func=run_discover)

    b = sub.add_parser("bench", help="planted-motif benchmark tools")
    bsub = b.add_subparsers(dest="bench_command", required=True)

    pl = bsub.add_parser("plant", help="write a planted-motif series and its ground truth")
    pl.add_argument("--seed", type=int, default=1)
    pl.add_argument("--output", type=Path, default=Path("planted.csv"))
    pl.add_argument("--truth", type=Path, default=Path("planted_truth.csv"))
    pl.add_argument("--pattern-length", type=int, default=58)
    pl.add_argument("--reps", type=int, default=50, help="instances per pattern")
    pl.add_argument("--min-scale", type=float, default=0.9)
    pl.add_argument("--motif-mass", type=float, default=0.10)
    pl.add_argument("--walk-std", type=float, default=0.1)
    pl.set_defaults(func=run_plant)

    for name, helptext in (("race", "GA versus random search"), ("sweep", "sigma and rho sweeps")):
        r = bsub.add_parser(name, help=helptext)
        r.add_argument("--input", type=Path, default=None,
                       help="series CSV (default: planted series with --plant-seed)")
        r.add_argument("--plant-seed", type=int, default=1)
        _add_task_flags(r, required=False)
        _add_ga_flags(r)
        r.add_argument("--reps", type=int, default=10)
        r.add_argument("--time", type=parse_duration, default=60.0, help="budget per run")
        r.add_argument("--checkpoints", type=_duration_list, default=None,
                       help="comma-separated checkpoint times (default: decades up to --time)")
        r.add_argument("--seed", type=int, default=0, help="seed of the first repetition")
        r.add_argument("--workers", type=int, default=1, help="parallel runs")
        r.add_argument("--output", type=Path, default=Path(f"{name}.csv"))
        if name == "sweep":
            r.add_argument("--sigmas", type=_float_list, default=list(SWEEP_SIGMAS))
            r.add_argument("--rhos", type=_int_list, default=list(SWEEP_RHOS))
        r.set_defaults(func=run_race if name == "race" else run_sweep)

    sc = bsub.add_parser("score", help="recovery of planted patterns by a report")
    sc.add_argument("--report", type=Path, required=True)
    sc.add_argument("--truth", type=Path, required=True)
    sc.add_argument("--threshold", type=float, default=0.5)
    sc.set_defaults(func=run_score)
    return parser


def _task_from(args) -> TaskSpec:
    if args.lmin > args.lmax:
        raise UsageError(f"--lmin ({args.lmin}) must not exceed --lmax ({args.lmax})")
    if args.k < 2:
        raise UsageError(f"--k must be at least 2 (got {args.k})")
    if args.support < 2:
        raise UsageError(f"--support must be at least 2 (got {args.support})")
    if args.lmin < 1:
        raise UsageError("--lmin must be positive")
    try:
        fitness = FitnessConfig(
            index="davies_bouldin" if args.index == "db" else "silhouette",
            representative=args.centroid,
            znorm=not args.no_znorm,
            overlap_tolerance=args.overlap_tolerance,
        )
        return TaskSpec(args.k, args.support, args.lmin, args.lmax, fitness)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _params_from(args, budget: Budget, seed) -> GaParams:
    if args.backend != "auto":
        try:
            kernels.set_backend(args.backend)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        return GaParams(rho=args.pop_size, sigma=args.sigma, seed=seed, budget=budget,
                        selection=args.selection, threads=args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_series(path: Path) -> TimeSeries:
    return read_csv(path)


def run_discover(args) -> int:
    if args.time is not None and args.time <= 0:
        raise UsageError("--time must be positive")
    if args.generations is not None and args.generations < 1:
        raise UsageError("--generations must be at least 1")
    task = _task_from(args)
    if args.time is None and args.generations is None:
        budget = Budget(time_limit=60.0)
    else:
        budget = Budget(time_limit=args.time, generations=args.generations)
    params = _params_from(args, budget, args.seed)
    z = _load_series(args.input)
    task.check_feasible(z.n)

    stopping = False

    def on_sigint(signum, frame):
        nonlocal stopping
        stopping = True

    def progress(rec):
        print(f"gen {rec.generation:>7d}  t={rec.elapsed_ms / 1e3:9.3f}s  best={rec.best_fitness:.6g}  "
              f"evals={rec.evaluations}", file=sys.stderr, flush=True)

    previous = signal.signal(signal.SIGINT, on_sigint)
    t0 = time.monotonic()
    try:
        result = evolve(z, task, params, observer=progress if args.progress else None,
                        stop=lambda: stopping)
    finally:
        signal.signal(signal.SIGINT, previous)
    elapsed = time.monotonic() - t0

    report = build_report(z, result, task, params, elapsed,
                          {"input": str(args.input), "backend": kernels.BACKEND})
    write_report(report, args.output)
    if args.trace is not None:
        result.trace.to_csv(args.trace)
    print(f"fitness {report['fitness']} after {report['generations']} generations "
          f"({report['evaluations']} evaluations, {elapsed:.1f}s); report written to {args.output}")
    return EXIT_OK


def run_plant(args) -> int:
    try:
        spec = PlantedSpec(pattern_length=args.pattern_length, reps_per_pattern=args.reps,
                           min_scale=args.min_scale, motif_mass=args.motif_mass,
                           walk_step_std=args.walk_std, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    z, truth = generate_planted(spec)
    write_csv(args.output, z)
    truth.to_csv(args.truth)
    print(f"{z.n} samples -> {args.output}; {len(truth.occurrences)} planted instances -> {args.truth}")
    return EXIT_OK


def _experiment_inputs(args):
    task = _task_from(args)
    params = _params_from(args, Budget(time_limit=args.time), None)
    if args.input is None:
        z, _ = generate_planted(PlantedSpec(seed=args.plant_seed))
    else:
        z = _load_series(args.input)
    task.check_feasible(z.n)
    if args.reps < 2:
        raise UsageError("--reps must be at least 2")
    checkpoints = args.checkpoints
    if checkpoints is None:
        checkpoints = [t for t in (0.1, 1.0, 10.0, 100.0, 1000.0) if t < args.time] + [args.time]
    if max(checkpoints) > args.time + 1e-9:
        raise UsageError("--checkpoints must not exceed --time")
    return z, task, params, [round(t * 1e3, 6) for t in checkpoints]


def run_race(args) -> int:
    z, task, params, checkpoints = _experiment_inputs(args)
    table = convergence_experiment(z, task, params, checkpoints, args.reps,
                                   base_seed=args.seed, workers=args.workers)
    table.to_csv(args.output)
    print(table.format_summary())
    ga, rs = table.final("ga"), table.final("random")
    seeds = sorted(ga)
    p = sign_test([ga[s] for s in seeds], [rs[s] for s in seeds])
    print(f"final checkpoint: sign test GA < random p = {p:.4g}")
    return EXIT_OK


def run_sweep(args) -> int:
    z, task, params, checkpoints = _experiment_inputs(args)
    table = parameter_sweep(z, task, params, checkpoints, args.reps, sigmas=args.sigmas,
                            rhos=args.rhos, base_seed=args.seed, workers=args.workers)
    table.to_csv(args.output, sweep=True)
    print(table.format_summary())
    return EXIT_OK


def run_score(args) -> int:
    try:
        report = load_report(args.report)
        truth = PlantedGroundTruth.from_csv(args.truth)
    except (OSError, ValueError, KeyError) as exc:
        print(f"genmotif: cannot read input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    res = recovery_score(report_solution(report), truth, report["config"]["s"], threshold=args.threshold)
    print(res.table())
    found = sorted(res.recovered_patterns)
    print("recovered patterns: " + (", ".join(map(str, found)) if found else "none"))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"genmotif: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CsvFormatError as exc:
        print(f"genmotif: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleTaskError as exc:
        print(f"genmotif: infeasible task: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
