"""Time the compiled scoring kernel against the numpy fallback.

    python3 benchmarks/bench_kernels.py --pop 51 --repeat 200

Both backends score the same random populations on a planted series; the
script checks they agree and prints microseconds per evaluation.
"""

import argparse
import time

import numpy as np

from genmotif import kernels
from genmotif.bench import PlantedSpec, generate_planted
from genmotif.engine import TaskSpec, new_solution
from genmotif.scoring import FitnessConfig


def time_backend(name, z, genes, cfg, task, repeat):
    kernels.score_matrices(z.values, *genes, cfg, task.l_max, task.s, backend=name)  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeat):
        out = kernels.score_matrices(z.values, *genes, cfg, task.l_max, task.s, backend=name)
    return (time.perf_counter() - t0) / repeat, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pop", type=int, default=51)
    ap.add_argument("--repeat", type=int, default=100)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--support", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    z, _ = generate_planted(PlantedSpec(seed=1))
    task = TaskSpec(args.k, args.support, 50, 60)
    rng = np.random.default_rng(args.seed)
    genes = kernels.stack([new_solution(rng, z.n, 50, 60, task.ks) for _ in range(args.pop)])
    backends = kernels.available_backends()
    print(f"population {args.pop}, k*s = {task.ks}, l_max = {task.l_max}, backends: {', '.join(backends)}")
    for index in ("davies_bouldin", "silhouette"):
        cfg = FitnessConfig(index=index)
        results = {b: time_backend(b, z, genes, cfg, task, args.repeat) for b in backends}
        ref = results["python"][1]
        for b, (dt, out) in results.items():
            err = float(np.max(np.abs(out - ref) / np.maximum(1.0, np.abs(ref))))
            speedup = results["python"][0] / dt
            print(f"{index:<15}{b:<8}{dt / args.pop * 1e6:10.1f} us/eval  x{speedup:6.1f}  max rel diff {err:.1e}")


if __name__ == "__main__":
    main()
