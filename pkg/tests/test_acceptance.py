"""Acceptance criteria 1-7.

Each test prints one ``PASS``/``FAIL`` line for its criterion. Criteria 3-5
are full desk-scale experiments on the planted series and take about an hour
together on one core; they are marked ``slow`` (deselect with ``-m "not slow"``).
"""

import math
import random
import time
from collections import Counter
from itertools import combinations

import numpy as np
import pytest

import oracles
from genmotif import cli
from genmotif.bench import (
    PlantedSpec,
    convergence_experiment,
    generate_planted,
    parameter_sweep,
    recovery_score,
)
from genmotif.engine import (
    Budget,
    GaParams,
    TaskSpec,
    cauchy_samples,
    crossover,
    evolve,
    mutate,
    new_solution,
)
from genmotif.report import load_report, rescore_report
from genmotif.scoring import (
    FitnessConfig,
    SegmentGroupSet,
    davies_bouldin,
    goodness,
    search_space_size,
    silhouette_index,
)
from genmotif.timeseries import Solution, TimeSeries, znormalize_array

PLANTED_TASK = TaskSpec(4, 5, 50, 60)


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def planted():
    return generate_planted(PlantedSpec(seed=1))


def test_1_oracle_equivalence(verdict):
    rnd = random.Random(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        k, s, L, d = rnd.randint(2, 4), rnd.randint(1, 5), rnd.randint(1, 8), rnd.randint(1, 3)
        raw = [[[[rnd.uniform(-3, 3) for _ in range(d)] for _ in range(L)] for _ in range(s)] for _ in range(k)]
        G = SegmentGroupSet.from_arrays(raw)
        for rep in ("mean", "medoid"):
            worst = max(worst, abs(davies_bouldin(G, rep=rep) - oracles.davies_bouldin(raw, rep)))
        worst = max(worst, abs(silhouette_index(G) - oracles.silhouette(raw)))
    elapsed = time.perf_counter() - t0
    verdict(1, worst <= 1e-9 and elapsed < 10, f"max |diff| {worst:.2e} over 200 instances in {elapsed:.2f}s")


def test_2_search_space_size(verdict):
    value = search_space_size(10_000, 1, 100, 2, 5)
    verdict(2, 53.3 <= value <= 53.6, f"log10 size {value:.4f}")


@pytest.mark.slow
def test_3_planted_recovery(verdict, planted):
    z, truth = planted
    recovered, lines = 0, []
    for seed in range(10):
        res = evolve(z, PLANTED_TASK, GaParams(seed=seed, budget=Budget(time_limit=120)))
        report = recovery_score(res.solution, truth, PLANTED_TASK.s)
        ok = report.recovers_all({1, 2})
        recovered += ok
        lines.append(f"seed {seed}: I_DB {res.fitness:.4g}, recovered {sorted(report.recovered_patterns)}")
    print("\n".join(lines))
    verdict(3, recovered >= 7, f"{recovered}/10 runs recover both planted patterns")


@pytest.mark.slow
def test_4_ga_beats_random_search(verdict, planted):
    from genmotif.bench import sign_test

    z, _ = planted
    table = convergence_experiment(z, PLANTED_TASK, GaParams(), [60_000], repetitions=10)
    ga, rs = table.final("ga"), table.final("random")
    seeds = sorted(ga)
    ga_med = float(np.median([ga[i] for i in seeds]))
    rs_med = float(np.median([rs[i] for i in seeds]))
    p = sign_test([ga[i] for i in seeds], [rs[i] for i in seeds])
    print(table.format_summary())
    verdict(4, ga_med <= 0.5 * rs_med and p < 0.05,
            f"GA median {ga_med:.4g}, random median {rs_med:.4g}, sign test p={p:.2g}")


@pytest.mark.slow
def test_5_sigma_robustness(verdict, planted):
    z, _ = planted
    sigmas = [1e-1, 1e-2, 1e-3, 1e-5]
    table = parameter_sweep(z, PLANTED_TASK, GaParams(), [30_000], repetitions=10, sigmas=sigmas)
    final = {sg: table.final("ga", sigma=sg) for sg in sigmas}
    med = {sg: float(np.median(list(final[sg].values()))) for sg in sigmas}
    gaps = {
        (a, b): abs(med[a] - med[b]) / min(med[a], med[b]) for a, b in combinations(sigmas[:3], 2)
    }
    worse = sum(final[1e-5][i] > final[1e-2][i] for i in final[1e-2])
    print(table.format_summary())
    ok = all(g < 0.5 for g in gaps.values()) and worse >= 8
    detail = ", ".join(f"{a:g}/{b:g} gap {g:.0%}" for (a, b), g in gaps.items())
    verdict(5, ok, f"{detail}; sigma=1e-5 worse than 1e-2 in {worse}/10 seeds")


def test_6_invariants(verdict, walk):
    rng = np.random.default_rng(6)
    failures = []

    # elitism: best-so-far never increases, on every trace
    task = TaskSpec(3, 4, 20, 30)
    for seed in range(5):
        for sel in ("uniform", "tournament"):
            res = evolve(walk, task, GaParams(rho=11, seed=seed, selection=sel, budget=Budget(generations=60)))
            best = res.trace.fitness()
            if np.any(np.diff(best) > 0):
                failures.append(f"elitism seed {seed} {sel}")

    # gene bounds over 1e5 mutations
    n, l_min, l_max = 900, 15, 40
    x = new_solution(rng, n, l_min, l_max, 6)
    for i in range(100_000):
        x = mutate(x, (1e-3, 1e-2, 0.5, 20.0)[i % 4], n, l_min, l_max, rng)
    try:
        x.check_bounds(n, l_min, l_max)
    except ValueError as exc:
        failures.append(f"bounds: {exc}")

    # crossover preserves the gene multiset of the pair
    for _ in range(2000):
        a, b = new_solution(rng, n, l_min, l_max, 8), new_solution(rng, n, l_min, l_max, 8)
        c, d = crossover(a, b, rng)
        if Counter(a.genes) + Counter(b.genes) != Counter(c.genes) + Counter(d.genes):
            failures.append("crossover multiset")
            break

    # z-normalization is idempotent
    for _ in range(200):
        v = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 10), size=(rng.integers(2, 60), 3))
        once = znormalize_array(v)
        if not np.allclose(znormalize_array(once), once, atol=1e-12):
            failures.append("znorm idempotence")
            break

    # goodness is invariant to gene order and to a*z + b, a > 0
    for index in ("davies_bouldin", "silhouette"):
        cfg = FitnessConfig(index=index)
        for _ in range(50):
            sol = new_solution(rng, walk.n, 20, 30, 12)
            g = goodness(walk, sol, cfg, 30, 4)
            perm = goodness(walk, sol.permuted(rng.permutation(12)), cfg, 30, 4)
            aff = goodness(walk.affine(rng.uniform(0.1, 50), rng.uniform(-100, 100)), sol, cfg, 30, 4)
            if abs(perm - g) > 1e-6 or abs(aff - g) > 1e-6:
                failures.append(f"{index} invariance: {g} {perm} {aff}")
                break

    # Cauchy tail mass P(|C| > 10) = 1 - 2 atan(10) / pi
    tail = float(np.mean(np.abs(cauchy_samples(np.random.default_rng(66), 100_000)) > 10))
    if abs(tail - 0.0635) > 0.005:
        failures.append(f"cauchy tail {tail}")

    # generation-budgeted runs are reproducible
    p = GaParams(rho=15, seed=3, budget=Budget(generations=40))
    r1, r2 = evolve(walk, task, p), evolve(walk, task, p)
    if r1.solution != r2.solution or list(r1.trace.fitness()) != list(r2.trace.fitness()):
        failures.append("determinism")

    verdict(6, not failures, "all invariants hold" if not failures else "; ".join(failures))


def test_7_report_round_trip(verdict, tmp_path, planted):
    z, _ = planted
    part = TimeSeries(z.values[:8000])
    src = tmp_path / "series.csv"
    np.savetxt(src, part.values, delimiter=",")
    worst = 0.0
    variants = [[], ["--index", "silhouette"], ["--centroid", "medoid", "--no-znorm"],
                ["--overlap-tolerance", "0.3"]]
    for i, extra in enumerate(variants):
        out = tmp_path / f"r{i}.json"
        code = cli.main(["discover", "--input", str(src), "--k", "3", "--support", "4", "--lmin", "50",
                         "--lmax", "60", "--generations", "30", "--seed", str(i), "--output", str(out), *extra])
        assert code == 0
        report = load_report(out)
        worst = max(worst, abs(rescore_report(report, part) - report["fitness"]))
    verdict(7, worst <= 1e-9 and math.isfinite(worst), f"max re-score difference {worst:.2e} over {len(variants)} reports")
