"""Motif report document: construction, atomic writing, re-scoring."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .engine import GaParams, RunResult, TaskSpec
from .scoring import (
    FitnessConfig,
    build_groups,
    goodness,
    mean_dissim,
    representative,
)
from .timeseries import Solution, TimeSeries, extract_segment

FORMAT_VERSION = 1


def _num(x: float) -> Optional[float]:
    return float(x) if math.isfinite(x) else None


def _matrix(v: np.ndarray) -> list[list[float]]:
    return [[float(a) for a in row] for row in v]


def build_report(
    z: TimeSeries,
    result: RunResult,
    task: TaskSpec,
    params: GaParams,
    elapsed: float,
    extra_config: Optional[dict] = None,
) -> dict[str, Any]:
    """Describe every motif of ``result.solution`` plus the run metadata."""
    sol = result.solution
    cfg = task.fitness
    fitness = goodness(z, sol, cfg, task.l_max, task.s)
    groups, order = build_groups(z, sol, task.l_max, task.s, cfg.znorm)
    motifs = []
    for g, members in enumerate(groups.groups):
        rep = representative(members, cfg.representative, cfg.dissimilarity)
        supports = []
        for seg, u in zip(members, order[g * task.s : (g + 1) * task.s]):
            f, l, c = sol[int(u)]
            supports.append({
                "f": f, "l": l, "c": c,
                "values": _matrix(extract_segment(z, f, l).values),
                "normalized": _matrix(seg.values),
            })
        motifs.append({
            "index": g + 1,
            "representative": _matrix(rep.values),
            "spread": float(mean_dissim(rep, members, cfg.dissimilarity)),
            "supports": supports,
        })
    last = result.trace.records[-1] if result.trace.records else None
    budget = params.budget
    config = {
        "k": task.k, "s": task.s, "l_min": task.l_min, "l_max": task.l_max,
        **cfg.echo(),
        "rho": params.rho, "sigma": params.sigma, "selection": params.selection,
        "time_limit": budget.time_limit, "generations": budget.generations,
        "evaluations": budget.evaluations, "threads": params.threads,
    }
    config.update(extra_config or {})
    return {
        "format_version": FORMAT_VERSION,
        "fitness": _num(fitness),
        "index": cfg.index,
        "elapsed_s": elapsed,
        "generations": last.generation if last else 0,
        "evaluations": last.evaluations if last else 0,
        "seed": params.seed,
        "config": config,
        "solution": [list(g) for g in sol.genes],
        "motifs": motifs,
    }


def write_report(report: dict, path: str | os.PathLike) -> None:
    """Write ``report`` as UTF-8 JSON; the target appears only when complete."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=1, allow_nan=False)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_report(path: str | os.PathLike) -> dict:
    with open(path, encoding="utf-8") as fh:
        report = json.load(fh)
    version = report.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported report format version {version!r}")
    return report


def report_solution(report: dict) -> Solution:
    return Solution.from_genes(report["solution"])


def report_task(report: dict) -> TaskSpec:
    cfg = report["config"]
    if cfg.get("dissimilarity", "sq_euclidean") != "sq_euclidean":
        raise ValueError(f"cannot rebuild dissimilarity {cfg['dissimilarity']!r}")
    fitness = FitnessConfig(
        index=cfg["index"],
        representative=cfg["representative"],
        znorm=cfg["znorm"],
        overlap_tolerance=cfg["overlap_tolerance"],
    )
    return TaskSpec(cfg["k"], cfg["s"], cfg["l_min"], cfg["l_max"], fitness)


def rescore_report(report: dict, z: TimeSeries) -> float:
    """Recompute the fitness of a report's solution from the echoed configuration."""
    task = report_task(report)
    return goodness(z, report_solution(report), task.fitness, task.l_max, task.s)
