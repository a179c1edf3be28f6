"""Backend selection for population fitness evaluation.

The compiled extension ``genmotif._ckernels`` is used when it imports; the
numpy implementation in ``genmotif._pykernels`` is the fallback. Set
``GENMOTIF_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np

from . import _pykernels
from ._pykernels import INDEX_DB, INDEX_SILHOUETTE, REP_MEAN, REP_MEDOID

_backends = {"python": _pykernels.score_batch}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    _backends["cython"] = _ckernels.score_batch

if os.environ.get("GENMOTIF_PURE_PYTHON", "").strip() not in ("", "0"):
    BACKEND = "python"
else:
    BACKEND = "cython" if "cython" in _backends else "python"


def available_backends() -> list[str]:
    return sorted(_backends)


def set_backend(name: str) -> None:
    global BACKEND
    if name not in _backends:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    BACKEND = name


def codes(cfg) -> tuple[int, int]:
    index = INDEX_DB if cfg.index == "davies_bouldin" else INDEX_SILHOUETTE
    rep = REP_MEAN if cfg.representative == "mean" else REP_MEDOID
    return index, rep


def stack(solutions: Sequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pack solutions into contiguous ``P x ks`` gene matrices."""
    F = np.ascontiguousarray(np.stack([s.f for s in solutions]), dtype=np.int64)
    L = np.ascontiguousarray(np.stack([s.l for s in solutions]), dtype=np.int64)
    C = np.ascontiguousarray(np.stack([s.c for s in solutions]), dtype=np.float64)
    return F, L, C


def score_matrices(values, F, L, C, cfg, l_max, s, threads=1, backend=None):
    index, rep = codes(cfg)
    fn = _backends[backend or BACKEND]
    return fn(
        np.ascontiguousarray(values, dtype=np.float64), F, L, C,
        int(l_max), int(s), index, rep, bool(cfg.znorm), float(cfg.overlap_tolerance), int(threads),
    )


def evaluate(z, solutions: Sequence, cfg, l_max: int, s: int, threads: int = 1, backend=None) -> np.ndarray:
    """Fitness of every solution, built-in squared Euclidean distance only."""
    if not cfg.uses_builtin_distance:
        raise ValueError("kernels only support the built-in squared Euclidean distance")
    if not solutions:
        return np.empty(0)
    ks = len(solutions[0])
    if ks % s:
        raise ValueError(f"solution of {ks} genes is not a multiple of s={s}")
    F, L, C = stack(solutions)
    return score_matrices(z.values, F, L, C, cfg, l_max, s, threads, backend)
