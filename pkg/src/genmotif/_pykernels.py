"""Vectorized numpy implementation of the batch fitness kernel.

Mirrors ``_ckernels.pyx`` exactly in arithmetic; used when the compiled
extension is unavailable or disabled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .timeseries import EPS_VAR, allowed_shared

INDEX_DB = 0
INDEX_SILHOUETTE = 1
REP_MEAN = 0
REP_MEDOID = 1


def _overlaps(f, l, tolerance):
    end = f + l - 1
    shared = np.minimum(end[:, None], end[None, :]) - np.maximum(f[:, None], f[None, :]) + 1
    clash = shared > allowed_shared(tolerance, l[:, None], l[None, :])
    np.fill_diagonal(clash, False)
    return clash.any()


def _segments(values, f, l, l_max, znorm):
    ks = f.shape[0]
    j = np.arange(l_max, dtype=np.int64)
    if l_max > 1:
        pos = (j[None, :] * (l[:, None] - 1)) / (l_max - 1)
    else:
        pos = np.zeros((ks, 1))
    left = np.floor(pos).astype(np.int64)
    frac = pos - left
    right = np.minimum(left + 1, (l - 1)[:, None])
    base = (f - 1)[:, None]
    y0 = values[base + left]
    segs = y0 + (values[base + right] - y0) * frac[:, :, None]
    if znorm:
        mu = segs.mean(axis=1, keepdims=True)
        centered = segs - mu
        sd = np.sqrt((centered * centered).mean(axis=1, keepdims=True))
        bad = sd < EPS_VAR
        segs = np.where(bad, 0.0, centered / np.where(bad, 1.0, sd))
    return segs


def _davies_bouldin(grouped, rep_code):
    k, s = grouped.shape[:2]
    if rep_code == REP_MEAN:
        reps = grouped.mean(axis=1)
        diff = grouped - reps[:, None]
        spread = (diff * diff).sum(axis=(2, 3)).mean(axis=1)
    else:
        diff = grouped[:, :, None] - grouped[:, None, :]
        within = (diff * diff).sum(axis=(3, 4))
        idx = within.sum(axis=1).argmin(axis=1)
        reps = grouped[np.arange(k), idx]
        spread = within[np.arange(k), idx].mean(axis=1)
    diff = reps[:, None] - reps[None, :]
    sep = (diff * diff).sum(axis=(2, 3))
    off = ~np.eye(k, dtype=bool)
    if np.any(sep[off] == 0.0):
        return np.inf
    ratio = np.where(off, (spread[:, None] + spread[None, :]) / np.where(off, sep, 1.0), -np.inf)
    return ratio.max(axis=1).mean()


def _silhouette(grouped):
    k, s = grouped.shape[:2]
    flat = grouped.reshape(k * s, -1)
    diff = flat[:, None] - flat[None, :]
    dist = (diff * diff).sum(axis=2)
    label = np.repeat(np.arange(k), s)
    same = label[:, None] == label[None, :]
    a = np.where(same, dist, 0.0).sum(axis=1) / s
    b = np.where(same, 0.0, dist).sum(axis=1) / ((k - 1) * s)
    m = np.maximum(a, b)
    term = np.where(m > 0.0, (b - a) / np.where(m > 0.0, m, 1.0), 0.0)
    return 1.0 - term.sum() / (k * s)


def score_one(values, f, l, c, l_max, s, index_code, rep_code, znorm, tolerance):
    if _overlaps(f, l, tolerance):
        return np.inf
    segs = _segments(values, f, l, l_max, znorm)
    order = np.argsort(c, kind="stable")
    k = f.shape[0] // s
    grouped = segs[order].reshape(k, s, l_max, values.shape[1])
    if index_code == INDEX_DB:
        return float(_davies_bouldin(grouped, rep_code))
    return float(_silhouette(grouped))


def score_batch(values, F, L, C, l_max, s, index_code, rep_code, znorm, tolerance, threads=1):
    """Fitness of each row of the ``P x ks`` gene matrices ``F``, ``L``, ``C``."""
    P = F.shape[0]

    def one(p):
        return score_one(values, F[p], L[p], C[p], l_max, s, index_code, rep_code, znorm, tolerance)

    if threads > 1 and P > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.fromiter(pool.map(one, range(P)), dtype=np.float64, count=P)
    return np.fromiter((one(p) for p in range(P)), dtype=np.float64, count=P)
