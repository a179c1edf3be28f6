"""Planted-motif benchmark, random-search baseline and experiment runners."""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .engine import (
    Budget,
    BudgetState,
    GaParams,
    RunResult,
    RunTrace,
    TaskSpec,
    TraceRecord,
    evolve,
    new_solution,
    out_of_time,
    score_population,
)
from .scoring import group_order
from .timeseries import Solution, TimeSeries

SWEEP_SIGMAS = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0)
SWEEP_RHOS = (15, 25, 51, 101, 201)


class PlantingError(RuntimeError):
    pass


@dataclass(frozen=True)
class PlantedSpec:
    pattern_length: int = 58
    patterns: int = 2
    reps_per_pattern: int = 50
    min_scale: float = 0.9
    motif_mass: float = 0.10
    walk_step_std: float = 0.1
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.min_scale <= 1:
            raise ValueError("min_scale must lie in (0, 1]")
        if not 0 < self.motif_mass < 1:
            raise ValueError("motif_mass must lie in (0, 1)")
        if self.pattern_length < 2 or self.patterns < 1 or self.reps_per_pattern < 1:
            raise ValueError("need pattern_length >= 2 and at least one pattern and repetition")

    @property
    def min_length(self) -> int:
        return max(1, math.ceil(self.min_scale * self.pattern_length - 1e-9))

    @property
    def n(self) -> int:
        """Series length: planted material at full length is ``motif_mass`` of it."""
        return round(self.reps_per_pattern * self.patterns * self.pattern_length / self.motif_mass)


class Occurrence(NamedTuple):
    pattern_id: int
    start: int  # 1-based
    length: int

    @property
    def end(self) -> int:
        return self.start + self.length - 1


@dataclass
class PlantedGroundTruth:
    occurrences: list[Occurrence]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(Occurrence._fields)
            w.writerows(self.occurrences)

    @classmethod
    def from_csv(cls, path) -> "PlantedGroundTruth":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        return cls([Occurrence(int(r["pattern_id"]), int(r["start"]), int(r["length"])) for r in rows])

    def covered(self) -> int:
        return sum(o.length for o in self.occurrences)


def square_wave(length: int, phase: int = 0) -> np.ndarray:
    """One period, low (-1) then high (+1); ``phase=1`` flips it."""
    wave = np.where(np.arange(length) < length // 2, -1.0, 1.0)
    return -wave if phase % 2 else wave


def resample(pattern: np.ndarray, length: int) -> np.ndarray:
    src = np.arange(pattern.shape[0])
    dst = np.linspace(0.0, pattern.shape[0] - 1, length)
    return np.interp(dst, src, pattern)


def generate_planted(spec: PlantedSpec = PlantedSpec()) -> tuple[TimeSeries, PlantedGroundTruth]:
    """Random walk with square-wave instances spliced in at random positions."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    m = spec.patterns * spec.reps_per_pattern
    ids = rng.permutation(np.repeat(np.arange(1, spec.patterns + 1), spec.reps_per_pattern))
    lengths = rng.integers(spec.min_length, spec.pattern_length + 1, size=m)
    free = n - int(lengths.sum())
    if free < 0:
        raise PlantingError(f"{m} instances of total length {lengths.sum()} do not fit in {n} samples")
    # uniform placement of m ordered blocks among the free samples
    slots = np.sort(rng.choice(free + m, size=m, replace=False))
    starts = slots - np.arange(m) + np.concatenate(([0], np.cumsum(lengths)[:-1]))

    series = np.cumsum(rng.normal(0.0, spec.walk_step_std, size=n))
    shapes = {p: square_wave(spec.pattern_length, p - 1) for p in range(1, spec.patterns + 1)}
    occurrences = []
    for pid, start, length in zip(ids, starts, lengths):
        start, length = int(start), int(length)
        inst = resample(shapes[int(pid)], length)
        level = series[start - 1] if start > 0 else 0.0
        series[start : start + length] = inst - inst[0] + level
        occurrences.append(Occurrence(int(pid), start + 1, length))
    return TimeSeries(series), PlantedGroundTruth(occurrences)


def random_search(
    z: TimeSeries,
    task: TaskSpec,
    budget: Budget,
    rng: np.random.Generator | int | None = None,
    batch: int = 32,
    record_every: int = 1024,
    threads: int = 1,
    stop=None,
) -> RunResult:
    """Score independent uniform draws, keeping the best.

    The trace gets a record on every improvement, every ``record_every``
    evaluations and at the end; ``generation`` counts draws.
    """
    if budget.unbounded and stop is None:
        raise ValueError("an unbounded budget needs a stop flag")
    task.check_feasible(z.n)
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    t0 = time.monotonic()
    trace = RunTrace()
    state = BudgetState(replace(budget, generations=None), step=1)
    best_sol, best_g = None, math.inf
    evals = 0
    last = t0
    while True:
        size = batch
        if budget.evaluations is not None:
            size = min(size, budget.evaluations - evals)
        draws = [
            new_solution(rng, z.n, task.l_min, task.l_max, task.ks, task.fitness.overlap_tolerance)
            for _ in range(size)
        ]
        scores = score_population(z, draws, task, threads)
        elapsed_ms = (time.monotonic() - t0) * 1e3
        for sol, g in zip(draws, scores):
            evals += 1
            if g < best_g or best_sol is None:
                best_sol, best_g = sol, float(g)
                trace.append(TraceRecord(elapsed_ms, evals, best_g, evals))
            elif evals % record_every == 0:
                trace.append(TraceRecord(elapsed_ms, evals, best_g, evals))
        now = time.monotonic()
        state.evaluations = evals
        state.tick(now - t0, now - last)
        last = now
        if (stop is not None and stop()) or out_of_time(state):
            break
    end = TraceRecord((time.monotonic() - t0) * 1e3, evals, best_g, evals)
    if trace.records[-1][1:] != end[1:]:
        trace.append(end)
    return RunResult(best_sol, trace)


@dataclass
class GroupHits:
    group: int
    hits: dict[int, int]
    supports: list[Optional[int]]  # matched pattern id per support, None for a miss
    recovered: Optional[int]


@dataclass
class RecoveryReport:
    groups: list[GroupHits]

    @property
    def recovered_patterns(self) -> set[int]:
        return {g.recovered for g in self.groups if g.recovered is not None}

    def recovers_all(self, pattern_ids: Iterable[int]) -> bool:
        return set(pattern_ids) <= self.recovered_patterns

    def table(self) -> str:
        ids = sorted({p for g in self.groups for p in g.hits})
        lines = ["group," + ",".join(f"pattern_{p}" for p in ids) + ",recovered"]
        for g in self.groups:
            cells = [str(g.hits.get(p, 0)) for p in ids]
            lines.append(f"{g.group}," + ",".join(cells) + f",{g.recovered or ''}")
        return "\n".join(lines)


def _match(f: int, l: int, occurrences: Sequence[Occurrence], threshold: float) -> Optional[int]:
    best, best_shared = None, 0
    end = f + l - 1
    for o in occurrences:
        shared = min(end, o.end) - max(f, o.start) + 1
        if shared > 0 and shared >= threshold * min(l, o.length) and shared > best_shared:
            best, best_shared = o.pattern_id, shared
    return best


def recovery_score(
    sol: Solution,
    truth: PlantedGroundTruth,
    s: int,
    threshold: float = 0.5,
    majority: Optional[int] = None,
) -> RecoveryReport:
    """Count, per discovered group, supports that land on planted instances.

    A support hits an instance when they share at least ``threshold`` of the
    shorter interval. A group recovers a pattern when ``majority`` (default
    ``ceil(s/2)``) of its supports hit that same pattern.
    """
    need = math.ceil(s / 2) if majority is None else majority
    order = group_order(sol.c)
    groups = []
    for g in range(len(sol) // s):
        members = order[g * s : (g + 1) * s]
        matched = [_match(int(sol.f[u]), int(sol.l[u]), truth.occurrences, threshold) for u in members]
        hits: dict[int, int] = {}
        for pid in matched:
            if pid is not None:
                hits[pid] = hits.get(pid, 0) + 1
        top = max(hits.items(), key=lambda kv: (kv[1], -kv[0]), default=(None, 0))
        groups.append(GroupHits(g + 1, hits, matched, top[0] if top[1] >= need else None))
    return RecoveryReport(groups)


def sign_test(better: Sequence[float], worse: Sequence[float]) -> float:
    """One-sided exact sign test that ``better`` is paired-lower than ``worse``.

    Ties are dropped. Returns the p-value.
    """
    wins = sum(1 for a, b in zip(better, worse) if a < b)
    losses = sum(1 for a, b in zip(better, worse) if a > b)
    m = wins + losses
    if m == 0:
        return 1.0
    return sum(math.comb(m, i) for i in range(wins, m + 1)) / 2.0**m


# experiment runners ---------------------------------------------------------

class Row(NamedTuple):
    method: str
    seed: int
    checkpoint: float
    generation: int
    best_fitness: float
    sigma: Optional[float] = None
    rho: Optional[int] = None


def _budget_for(checkpoints, unit):
    top = max(checkpoints)
    if unit == "ms":
        return Budget(time_limit=top / 1e3)
    if unit == "evals":
        return Budget(evaluations=int(top))
    raise ValueError(f"unknown checkpoint unit {unit!r}")


def _run_job(job):
    method, z, task, params, seed, checkpoints, unit = job
    budget = _budget_for(checkpoints, unit)
    if method == "ga":
        res = evolve(z, task, replace(params, seed=seed, budget=budget))
    else:
        res = random_search(z, task, budget, seed, threads=params.threads)
    rows = []
    for cp in checkpoints:
        best, gen = res.trace.best_at(cp, unit)
        rows.append(Row(method, seed, cp, gen, best, params.sigma if method == "ga" else None,
                        params.rho if method == "ga" else None))
    return rows


def _run_all(jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    return [row for rows in results for row in rows]


@dataclass
class ExperimentTable:
    rows: list[Row]
    unit: str = "ms"

    def final(self, method: str, **match) -> dict[int, float]:
        """Best fitness per seed at the last checkpoint of ``method``."""
        rows = [r for r in self.rows if r.method == method and all(getattr(r, k) == v for k, v in match.items())]
        last = max(r.checkpoint for r in rows)
        return {r.seed: r.best_fitness for r in rows if r.checkpoint == last}

    def summary(self) -> list[dict]:
        """Median and 2.5/97.5 percentile band per method, setting and checkpoint."""
        keys = sorted({(r.method, r.sigma or 0.0, r.rho or 0, r.checkpoint) for r in self.rows})
        out = []
        for method, sigma, rho, cp in keys:
            vals = np.array([
                r.best_fitness for r in self.rows
                if r.method == method and (r.sigma or 0.0) == sigma and (r.rho or 0) == rho and r.checkpoint == cp
            ])
            lo, med, hi = np.percentile(vals, [2.5, 50, 97.5])
            out.append({
                "method": method, "sigma": sigma or None, "rho": rho or None, "checkpoint": cp,
                "median": float(med), "p2.5": float(lo), "p97.5": float(hi), "runs": len(vals),
            })
        return out

    def to_csv(self, path, sweep: bool = False) -> None:
        cp_name = "checkpoint_ms" if self.unit == "ms" else "checkpoint_evals"
        cols = ["method", "seed", cp_name, "generation", "best_fitness"] + (["sigma", "rho"] if sweep else [])
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.rows:
                row = [r.method, r.seed, r.checkpoint, r.generation, repr(r.best_fitness)]
                if sweep:
                    row += [r.sigma, r.rho]
                w.writerow(row)

    def format_summary(self) -> str:
        lines = [f"{'method':<8}{'sigma':>9}{'rho':>6}{'checkpoint':>12}{'median':>14}{'p2.5':>14}{'p97.5':>14}"]
        for s in self.summary():
            sigma = "" if s["sigma"] is None else f"{s['sigma']:g}"
            rho = "" if s["rho"] is None else str(s["rho"])
            lines.append(
                f"{s['method']:<8}{sigma:>9}{rho:>6}{s['checkpoint']:>12g}"
                f"{s['median']:>14.6g}{s['p2.5']:>14.6g}{s['p97.5']:>14.6g}"
            )
        return "\n".join(lines)


def convergence_experiment(
    z: TimeSeries,
    task: TaskSpec,
    params: GaParams,
    checkpoints: Sequence[float],
    repetitions: int,
    unit: str = "ms",
    base_seed: int = 0,
    workers: int = 1,
) -> ExperimentTable:
    """GA versus random search under matched budgets, one paired seed per repetition."""
    if repetitions < 2:
        raise ValueError("need at least two repetitions")
    checkpoints = sorted(checkpoints)
    jobs = [
        (method, z, task, params, base_seed + i, checkpoints, unit)
        for i in range(repetitions)
        for method in ("ga", "random")
    ]
    return ExperimentTable(_run_all(jobs, workers), unit)


def parameter_sweep(
    z: TimeSeries,
    task: TaskSpec,
    params: GaParams,
    checkpoints: Sequence[float],
    repetitions: int,
    sigmas: Sequence[float] = (),
    rhos: Sequence[int] = (),
    unit: str = "ms",
    base_seed: int = 0,
    workers: int = 1,
) -> ExperimentTable:
    """One-factor sweeps: each sigma at ``params.rho``, each rho at ``params.sigma``."""
    if repetitions < 1:
        raise ValueError("need at least one repetition")
    checkpoints = sorted(checkpoints)
    settings = [replace(params, sigma=float(sg)) for sg in sigmas]
    settings += [replace(params, rho=int(r)) for r in rhos if replace(params, rho=int(r)) not in settings]
    jobs = [
        ("ga", z, task, p, base_seed + i, checkpoints, unit)
        for p in settings
        for i in range(repetitions)
    ]
    return ExperimentTable(_run_all(jobs, workers), unit)
