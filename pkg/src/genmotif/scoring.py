"""Dissimilarities, motif representatives, validity indices and fitness.

All indices here are minimized. The reference pipeline in
:func:`goodness_reference` works with any :class:`DissimilarityMeasure`;
:func:`goodness` routes the built-in squared Euclidean case to the compiled
(or vectorized) kernels in :mod:`genmotif.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .timeseries import (
    Segment,
    Solution,
    TimeSeries,
    extract_segment,
    some_overlap,
    upsample_linear,
    znormalize,
)

WORST = math.inf

INDICES = ("davies_bouldin", "silhouette")
REPRESENTATIVES = ("mean", "medoid")


@dataclass(frozen=True)
class DissimilarityMeasure:
    """A named, symmetric, non-negative segment dissimilarity."""

    name: str
    evaluate: Callable[[Segment, Segment], float]

    def __call__(self, x: Segment, y: Segment) -> float:
        return self.evaluate(x, y)


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, Segment) else np.asarray(x, dtype=np.float64)


def sq_euclidean(x: Segment, y: Segment) -> float:
    """Sum of squared differences over all samples and dimensions."""
    a, b = _values(x), _values(y)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.sum(diff * diff))


SQ_EUCLIDEAN = DissimilarityMeasure("sq_euclidean", sq_euclidean)


@dataclass(frozen=True)
class SegmentGroupSet:
    """``k`` disjoint groups of ``s`` equal-length preprocessed segments."""

    groups: tuple[tuple[Segment, ...], ...]

    def __post_init__(self):
        groups = tuple(tuple(g) for g in self.groups)
        if not groups:
            raise ValueError("need at least one group")
        s = len(groups[0])
        if s == 0 or any(len(g) != s for g in groups):
            raise ValueError("every group must hold the same, non-zero number of segments")
        shapes = {seg.values.shape for g in groups for seg in g}
        if len(shapes) != 1:
            raise ValueError(f"segments differ in shape: {sorted(shapes)}")
        object.__setattr__(self, "groups", groups)

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def s(self) -> int:
        return len(self.groups[0])

    @classmethod
    def from_arrays(cls, groups) -> "SegmentGroupSet":
        """Build from nested sequences of ``L x d`` (or length-``L``) arrays."""
        out = []
        for g in groups:
            segs = []
            for v in g:
                v = np.asarray(v, dtype=np.float64)
                segs.append(Segment(v[:, None] if v.ndim == 1 else v))
            out.append(tuple(segs))
        return cls(tuple(out))


@dataclass(frozen=True)
class FitnessConfig:
    index: str = "davies_bouldin"
    representative: str = "mean"
    dissimilarity: DissimilarityMeasure = SQ_EUCLIDEAN
    znorm: bool = True
    overlap_tolerance: float = 0.0

    def __post_init__(self):
        if self.index not in INDICES:
            raise ValueError(f"unknown index {self.index!r}; choose from {INDICES}")
        if self.representative not in REPRESENTATIVES:
            raise ValueError(f"unknown representative {self.representative!r}")
        if not 0.0 <= self.overlap_tolerance < 1.0:
            raise ValueError("overlap tolerance must lie in [0, 1)")

    @property
    def uses_builtin_distance(self) -> bool:
        # equality, not identity: configs sent to worker processes are copies
        return self.dissimilarity == SQ_EUCLIDEAN

    def echo(self) -> dict:
        return {
            "index": self.index,
            "representative": self.representative,
            "dissimilarity": self.dissimilarity.name,
            "znorm": self.znorm,
            "overlap_tolerance": self.overlap_tolerance,
        }


def mean_dissim(y: Segment, X: Sequence[Segment], D: Callable = SQ_EUCLIDEAN) -> float:
    """Average dissimilarity between ``y`` and the members of ``X``."""
    if len(X) == 0:
        raise ValueError("mean dissimilarity over an empty group")
    return sum(D(y, x) for x in X) / len(X)


def motif_mean(X: Sequence[Segment]) -> Segment:
    if len(X) == 0:
        raise ValueError("mean of an empty group")
    return Segment(np.mean([x.values for x in X], axis=0))


def medoid_index(X: Sequence[Segment], D: Callable = SQ_EUCLIDEAN) -> int:
    """Position of the member with the smallest distance sum; first wins ties."""
    if len(X) == 0:
        raise ValueError("medoid of an empty group")
    sums = [sum(D(x, y) for x in X) for y in X]
    return int(np.argmin(sums))


def motif_medoid(X: Sequence[Segment], D: Callable = SQ_EUCLIDEAN) -> Segment:
    return X[medoid_index(X, D)]


def representative(X: Sequence[Segment], rep: str, D: Callable = SQ_EUCLIDEAN) -> Segment:
    if rep == "mean":
        return motif_mean(X)
    if rep == "medoid":
        return motif_medoid(X, D)
    raise ValueError(f"unknown representative {rep!r}")


def davies_bouldin(
    G: SegmentGroupSet, D: Callable = SQ_EUCLIDEAN, rep: str = "mean"
) -> float:
    """Davies-Bouldin index over the groups; ``inf`` if two representatives coincide."""
    if G.k < 2:
        raise ValueError("the Davies-Bouldin index needs at least two groups")
    reps = [representative(g, rep, D) for g in G.groups]
    spread = [mean_dissim(m, g, D) for m, g in zip(reps, G.groups)]
    total = 0.0
    for i in range(G.k):
        worst = -math.inf
        for j in range(G.k):
            if i == j:
                continue
            sep = D(reps[i], reps[j])
            if sep == 0.0:
                return WORST
            worst = max(worst, (spread[i] + spread[j]) / sep)
        total += worst
    return total / G.k


def silhouette_index(G: SegmentGroupSet, D: Callable = SQ_EUCLIDEAN) -> float:
    """One minus the mean silhouette-style summand; lower is better.

    The "outside" term averages over every segment not in the point's own
    group, and the "inside" term includes the point itself.
    """
    if G.k < 2:
        raise ValueError("the silhouette index needs at least two groups")
    total = 0.0
    for i, group in enumerate(G.groups):
        others = [x for j, g in enumerate(G.groups) if j != i for x in g]
        for x in group:
            a = mean_dissim(x, group, D)
            b = mean_dissim(x, others, D)
            m = max(a, b)
            if m > 0.0:
                total += (b - a) / m
    return 1.0 - total / (G.k * G.s)


def group_order(c: np.ndarray) -> np.ndarray:
    """Stable ascending argsort of the grouping indicators."""
    return np.argsort(np.asarray(c), kind="stable")


def build_groups(
    z: TimeSeries, sol: Solution, l_max: int, s: int, znorm: bool = True
) -> tuple[SegmentGroupSet, np.ndarray]:
    """Extract, upsample, normalize and group the segments of ``sol``.

    Returns the group set together with the gene positions in group order
    (``order[g*s:(g+1)*s]`` are the genes of group ``g``).
    """
    segs = []
    for f, l, _ in sol.genes:
        x = upsample_linear(extract_segment(z, f, l), l_max)
        segs.append(znormalize(x) if znorm else x)
    order = group_order(sol.c)
    k = len(sol) // s
    groups = tuple(tuple(segs[u] for u in order[g * s : (g + 1) * s]) for g in range(k))
    return SegmentGroupSet(groups), order


def index_value(G: SegmentGroupSet, cfg: FitnessConfig) -> float:
    if cfg.index == "davies_bouldin":
        return davies_bouldin(G, cfg.dissimilarity, cfg.representative)
    return silhouette_index(G, cfg.dissimilarity)


def goodness_reference(
    z: TimeSeries, sol: Solution, cfg: FitnessConfig, l_max: int, s: int
) -> float:
    """Segment-by-segment fitness pipeline for any dissimilarity measure."""
    if len(sol) % s:
        raise ValueError(f"solution of {len(sol)} genes is not a multiple of s={s}")
    if some_overlap(sol, cfg.overlap_tolerance):
        return WORST
    G, _ = build_groups(z, sol, l_max, s, cfg.znorm)
    return index_value(G, cfg)


def goodness(z: TimeSeries, sol: Solution, cfg: FitnessConfig, l_max: int, s: int) -> float:
    """Fitness of one solution (lower is better, ``inf`` when invalid)."""
    if not cfg.uses_builtin_distance:
        return goodness_reference(z, sol, cfg, l_max, s)
    from . import kernels

    return float(kernels.evaluate(z, [sol], cfg, l_max, s)[0])


def search_space_size(n: int, l_min: int, l_max: int, k: int, s: int) -> float:
    """``log10`` of the number of ways to choose ``k*s`` (start, length) pairs."""
    r = l_max + 1 - l_min
    m, ks = n * r, k * s
    if r < 1 or ks < 1 or m < ks:
        raise ValueError(f"need n*r >= k*s with r >= 1 (n*r={m}, k*s={ks})")
    ln = math.lgamma(m + 1) - math.lgamma(ks + 1) - math.lgamma(m - ks + 1)
    return ln / math.log(10)
