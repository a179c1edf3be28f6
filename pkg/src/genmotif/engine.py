"""The genetic search: initialization, crossover, Cauchy mutation, main loop.

The loop is anytime. After every scoring pass the best solution so far is
recorded in the trace and handed to the optional observer, and the run can
be stopped by the time/generation/evaluation budget or a cooperative stop
flag at that point.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import kernels
from .scoring import FitnessConfig, goodness_reference
from .timeseries import Solution, TimeSeries, some_overlap

logger = logging.getLogger(__name__)

# smoothing of the per-generation duration estimate used by out_of_time
EMA_ALPHA = 0.3


class InfeasibleTaskError(ValueError):
    """No valid placement of the requested segments could be found."""


@dataclass(frozen=True)
class TaskSpec:
    k: int
    s: int
    l_min: int
    l_max: int
    fitness: FitnessConfig = field(default_factory=FitnessConfig)

    def __post_init__(self):
        if self.k < 1 or self.s < 2:
            raise ValueError(f"need k >= 1 and s >= 2 (got k={self.k}, s={self.s})")
        if not 1 <= self.l_min <= self.l_max:
            raise ValueError(f"need 1 <= l_min <= l_max (got {self.l_min}, {self.l_max})")
        if self.k == 1:
            raise ValueError(f"the {self.fitness.index} index needs k >= 2 motifs")

    @property
    def ks(self) -> int:
        return self.k * self.s

    def min_length(self) -> int:
        """Shortest series that admits a non-overlapping placement."""
        return self.ks * self.l_min

    def check_feasible(self, n: int) -> None:
        if self.l_max > n:
            raise InfeasibleTaskError(f"l_max={self.l_max} exceeds the series length n={n}")
        if self.fitness.overlap_tolerance == 0.0 and self.min_length() > n:
            raise InfeasibleTaskError(
                f"k*s*l_min = {self.min_length()} exceeds the series length n={n}"
            )


@dataclass(frozen=True)
class Budget:
    """Stopping limits; any that is set can end the run."""

    time_limit: Optional[float] = None  # seconds
    generations: Optional[int] = None  # scoring passes
    evaluations: Optional[int] = None

    def __post_init__(self):
        if self.time_limit is not None and self.time_limit < 0:
            raise ValueError("time limit must be non-negative")
        if self.generations is not None and self.generations < 1:
            raise ValueError("generation limit must be >= 1")
        if self.evaluations is not None and self.evaluations < 1:
            raise ValueError("evaluation limit must be >= 1")

    @property
    def unbounded(self) -> bool:
        return self.time_limit is None and self.generations is None and self.evaluations is None


@dataclass(frozen=True)
class GaParams:
    rho: int = 51
    sigma: float = 1e-2
    seed: Optional[int] = None
    budget: Budget = field(default_factory=lambda: Budget(time_limit=60.0))
    selection: str = "uniform"  # or "tournament"
    tournament_size: int = 2
    threads: int = 1
    max_init_tries: int = 10**6

    def __post_init__(self):
        if self.rho < 3 or self.rho % 2 == 0:
            raise ValueError(f"population size must be an odd integer >= 3 (got {self.rho})")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive (got {self.sigma})")
        if self.selection not in ("uniform", "tournament"):
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.tournament_size < 1:
            raise ValueError("tournament size must be >= 1")


class TraceRecord(NamedTuple):
    elapsed_ms: float
    generation: int
    best_fitness: float
    evaluations: int


@dataclass
class RunTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def best(self) -> float:
        return self.records[-1].best_fitness if self.records else math.inf

    def fitness(self) -> np.ndarray:
        return np.array([r.best_fitness for r in self.records])

    def best_at(self, checkpoint: float, unit: str = "ms") -> tuple[float, int]:
        """Best fitness and generation of the last record at or before ``checkpoint``.

        ``unit`` is ``"ms"`` (elapsed time) or ``"evals"`` (evaluation count).
        Returns ``(inf, 0)`` when nothing had been recorded yet.
        """
        best, gen = math.inf, 0
        for r in self.records:
            key = r.elapsed_ms if unit == "ms" else r.evaluations
            if key > checkpoint:
                break
            best, gen = r.best_fitness, r.generation
        return best, gen

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(TraceRecord._fields)
            for r in self.records:
                w.writerow([f"{r.elapsed_ms:.3f}", r.generation, repr(r.best_fitness), r.evaluations])


class RunResult(NamedTuple):
    solution: Solution
    trace: RunTrace

    @property
    def fitness(self) -> float:
        return self.trace.best


@dataclass
class BudgetState:
    budget: Budget
    elapsed: float = 0.0  # seconds
    ema: Optional[float] = None  # smoothed seconds per generation
    generations: int = 0
    evaluations: int = 0
    step: int = 0  # evaluations one more generation would add

    def tick(self, elapsed: float, duration: float) -> None:
        self.elapsed = elapsed
        if self.ema is None:
            self.ema = duration
        else:
            self.ema = EMA_ALPHA * duration + (1.0 - EMA_ALPHA) * self.ema


def out_of_time(state: BudgetState) -> bool:
    """Whether another generation would overrun the budget."""
    b = state.budget
    if b.generations is not None and state.generations >= b.generations:
        return True
    if b.evaluations is not None and state.evaluations + state.step > b.evaluations:
        return True
    if b.time_limit is not None:
        if state.elapsed >= b.time_limit:
            return True
        if state.ema is not None and state.elapsed + state.ema > b.time_limit:
            return True
    return False


def cauchy_sample(rng: np.random.Generator) -> float:
    """One standard Cauchy draw as the ratio of a normal and an absolute normal."""
    num = rng.standard_normal()
    den = abs(rng.standard_normal())
    while den < 1e-300:
        den = abs(rng.standard_normal())
    return num / den


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def new_solution(
    rng: np.random.Generator,
    n: int,
    l_min: int,
    l_max: int,
    ks: int,
    tolerance: float = 0.0,
    max_tries: int = 10**6,
) -> Solution:
    """Uniformly random solution, redrawn as a whole until nothing overlaps.

    Starts are drawn over every position where a segment of the drawn length
    fits, i.e. ``f`` in ``[1, n - l + 1]``.
    """
    r = l_max + 1 - l_min
    if l_max > n:
        raise InfeasibleTaskError(f"l_max={l_max} exceeds the series length n={n}")
    for _ in range(max_tries):
        u = rng.random((ks, 3))
        c = u[:, 0]
        l = np.minimum(np.floor(l_min + r * u[:, 1]).astype(np.int64), l_max)
        span = n - l + 1
        f = 1 + np.minimum(np.floor(span * u[:, 2]).astype(np.int64), span - 1)
        sol = Solution(f, l, c)
        if not some_overlap(sol, tolerance):
            return sol
    raise InfeasibleTaskError(
        f"no non-overlapping placement of {ks} segments with lengths in "
        f"[{l_min}, {l_max}] found in a series of {n} samples after {max_tries} tries"
    )


def crossover_rows(
    A: tuple[np.ndarray, np.ndarray, np.ndarray],
    B: tuple[np.ndarray, np.ndarray, np.ndarray],
    rng: np.random.Generator,
) -> None:
    """Uniform crossover of row-aligned parent matrices, in place.

    ``A`` and ``B`` are ``(F, L, C)`` triples of ``m x ks`` matrices; row ``i``
    of ``A`` is crossed with row ``i`` of ``B``.
    """
    m, ks = A[0].shape
    swap = rng.random((m, ks)) < 1.0 / ks
    for col_a, col_b in zip(A, B):
        tmp = col_a[swap]
        col_a[swap] = col_b[swap]
        col_b[swap] = tmp


def crossover(a: Solution, b: Solution, rng: np.random.Generator) -> tuple[Solution, Solution]:
    """Uniform crossover: swap aligned genes with probability ``1/ks`` each."""
    ks = len(a)
    if len(b) != ks:
        raise ValueError(f"parents differ in length ({ks} vs {len(b)})")
    A = (a.f[None].copy(), a.l[None].copy(), a.c[None].copy())
    B = (b.f[None].copy(), b.l[None].copy(), b.c[None].copy())
    crossover_rows(A, B, rng)
    return Solution(A[0][0], A[1][0], A[2][0]), Solution(B[0][0], B[1][0], B[2][0])


def _jump(scale: float, draw: float) -> int:
    # clamp keeps float overflow (inf) out of the integer conversion
    return round_half_away(min(max(scale * draw, -1e300), 1e300))


def mutate_gene(
    gene, draws: tuple[float, float, float], sigma: float, n: int, l_min: int, l_max: int
) -> tuple[int, int, float]:
    """Apply one Cauchy-flight step to ``(f, l, c)`` given three standard draws.

    The indicator wraps around ``[0, 1)``, the length around
    ``[l_min, l_max]``, and the start around the positions valid for the new
    length.
    """
    f, l, c = gene
    c_draw, l_draw, f_draw = draws
    r = l_max + 1 - l_min
    c = (float(c) + sigma * c_draw) % 1.0
    if c >= 1.0:  # tiny negative sums round up to 1.0
        c = 0.0
    l = (int(l) + _jump(sigma * r, l_draw) - l_min) % r + l_min
    f0 = (int(f) - 1 + _jump(sigma * (n - l), f_draw)) % (n - l + 1)
    return f0 + 1, l, c


def cauchy_samples(rng: np.random.Generator, size) -> np.ndarray:
    """Array version of :func:`cauchy_sample`."""
    num = rng.standard_normal(size)
    den = np.abs(rng.standard_normal(size))
    tiny = den < 1e-300
    while tiny.any():
        den[tiny] = np.abs(rng.standard_normal(int(tiny.sum())))
        tiny = den < 1e-300
    return num / den


# beyond this a float jump is no longer an exact integer; such rows go through
# the exact scalar path
_EXACT = 2.0**52


def _round_jumps(x: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def mutate_rows(
    F: np.ndarray, L: np.ndarray, C: np.ndarray,
    sigma: float, n: int, l_min: int, l_max: int, rng: np.random.Generator,
) -> None:
    """Mutate ``m x ks`` gene matrices in place, one solution per row.

    Same rules as :func:`mutate_gene`; each gene is hit with probability
    ``1/ks``, then every row is shuffled independently.
    """
    m, ks = F.shape
    rows, cols = np.nonzero(rng.random((m, ks)) < 1.0 / ks)
    if rows.size:
        draws = cauchy_samples(rng, (rows.size, 3))
        r = l_max + 1 - l_min
        c = np.mod(C[rows, cols] + sigma * draws[:, 0], 1.0)
        c[c >= 1.0] = 0.0
        jl = _round_jumps(sigma * r * draws[:, 1])
        big = np.abs(jl) >= _EXACT
        jl[big] = 0
        l = np.mod(L[rows, cols] + jl.astype(np.int64) - l_min, r) + l_min
        span = n - l
        jf = _round_jumps(sigma * span * draws[:, 2])
        big |= np.abs(jf) >= _EXACT
        jf[big] = 0
        f = np.mod(F[rows, cols] - 1 + jf.astype(np.int64), span + 1) + 1
        for u in np.flatnonzero(big):
            i, j = rows[u], cols[u]
            f[u], l[u], c[u] = mutate_gene((F[i, j], L[i, j], C[i, j]), draws[u], sigma, n, l_min, l_max)
        F[rows, cols], L[rows, cols], C[rows, cols] = f, l, c
    order = np.argsort(rng.random((m, ks)), axis=1)
    row = np.arange(m)[:, None]
    for M in (F, L, C):
        M[...] = M[row, order]


def mutate(
    x: Solution, sigma: float, n: int, l_min: int, l_max: int, rng: np.random.Generator
) -> Solution:
    """Mutate each gene with probability ``1/ks`` (see :func:`mutate_gene`), then shuffle."""
    F, L, C = x.f[None].copy(), x.l[None].copy(), x.c[None].copy()
    mutate_rows(F, L, C, sigma, n, l_min, l_max, rng)
    return Solution(F[0], L[0], C[0])


def score_population(
    z: TimeSeries, population: list[Solution], task: TaskSpec, threads: int = 1
) -> np.ndarray:
    return _score_matrices(z, kernels.stack(population), task, threads)


def _score_matrices(z, genes, task, threads):
    cfg = task.fitness
    if cfg.uses_builtin_distance:
        return kernels.score_matrices(z.values, *genes, cfg, task.l_max, task.s, threads)
    return np.array([
        goodness_reference(z, Solution(f, l, c), cfg, task.l_max, task.s) for f, l, c in zip(*genes)
    ])


def _check_population(genes, n, task):
    F, L, C = genes
    if F.shape[1] != task.ks:
        raise AssertionError(f"solution with {F.shape[1]} genes, expected {task.ks}")
    if (
        (L < task.l_min).any()
        or (L > task.l_max).any()
        or (F < 1).any()
        or (F > n - L + 1).any()
        or (C < 0).any()
        or (C >= 1).any()
    ):
        raise AssertionError("gene out of bounds in population")


def _select(rng, scores, params, size):
    """Indices of ``size`` parents drawn with replacement."""
    rho = scores.shape[0]
    if params.selection == "uniform":
        return rng.integers(rho, size=size)
    picks = rng.integers(rho, size=(size, params.tournament_size))
    return picks[np.arange(size), np.argmin(scores[picks], axis=1)]


StopFlag = Callable[[], bool]


def evolve(
    z: TimeSeries,
    task: TaskSpec,
    params: GaParams = GaParams(),
    observer: Optional[Callable[[TraceRecord], None]] = None,
    stop: Optional[StopFlag] = None,
) -> RunResult:
    """Run the genetic search until the budget or ``stop()`` ends it.

    ``observer`` receives a :class:`TraceRecord` after every scoring pass;
    ``stop`` is polled at the same point. Returns the best solution seen and
    the full trace.
    """
    if params.budget.unbounded and stop is None:
        raise ValueError("an unbounded budget needs a stop flag")
    task.check_feasible(z.n)
    rng = np.random.default_rng(params.seed)
    n = z.n
    t0 = time.monotonic()

    init = [
        new_solution(rng, n, task.l_min, task.l_max, task.ks, task.fitness.overlap_tolerance,
                     params.max_init_tries)
        for _ in range(params.rho)
    ]
    genes = kernels.stack(init)
    state = BudgetState(params.budget, step=params.rho)
    trace = RunTrace()
    best_sol, best_g = init[0], math.inf
    pairs = (params.rho - 1) // 2
    last = t0
    while True:
        _check_population(genes, n, task)
        scores = _score_matrices(z, genes, task, params.threads)
        i_best = int(np.argmin(scores))
        if scores[i_best] < best_g:
            best_g = float(scores[i_best])
            best_sol = Solution(*(M[i_best].copy() for M in genes))
        state.generations += 1
        state.evaluations += params.rho

        now = time.monotonic()
        state.tick(now - t0, now - last)
        last = now
        record = TraceRecord((now - t0) * 1e3, state.generations, best_g, state.evaluations)
        trace.append(record)
        if observer is not None:
            observer(record)
        if (stop is not None and stop()) or out_of_time(state):
            break

        # parents of pair i sit in rows i and pairs + i
        parents = _select(rng, scores, params, 2 * pairs)
        A = tuple(M[parents[:pairs]] for M in genes)
        B = tuple(M[parents[pairs:]] for M in genes)
        crossover_rows(A, B, rng)
        kids = tuple(np.concatenate((a, b)) for a, b in zip(A, B))
        mutate_rows(*kids, params.sigma, n, task.l_min, task.l_max, rng)
        genes = tuple(
            np.ascontiguousarray(np.concatenate((M[i_best : i_best + 1], K))) for M, K in zip(genes, kids)
        )

    logger.debug("stopped after %d generations, best %g", state.generations, best_g)
    return RunResult(best_sol, trace)
