# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch fitness kernel.

Same arithmetic as ``_pykernels`` (which is the reference for this file),
operating on raw buffers so a whole population can be scored without
touching the interpreter. Rows are independent; with OpenMP available the
batch is split across ``threads`` workers.
"""

import numpy as np

from cython.parallel cimport prange
from libc.math cimport INFINITY, floor, sqrt
from libc.stdint cimport int64_t
from libc.stdlib cimport free, malloc

cdef int INDEX_DB = 0
cdef int REP_MEAN = 0

cdef double EPS_VAR = 1e-12


cdef bint _overlaps(const int64_t* f, const int64_t* l, Py_ssize_t ks, double tol) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef int64_t ei, ej, shared, shortest, allowed
    for i in range(ks):
        ei = f[i] + l[i] - 1
        for j in range(i + 1, ks):
            ej = f[j] + l[j] - 1
            shared = (ei if ei < ej else ej) - (f[i] if f[i] > f[j] else f[j]) + 1
            shortest = l[i] if l[i] < l[j] else l[j]
            allowed = <int64_t>floor(tol * shortest + 1e-9)
            if shared > allowed:
                return True
    return False


cdef double _sqdist(const double* a, const double* b, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i
    cdef double t, acc = 0.0
    for i in range(m):
        t = a[i] - b[i]
        acc += t * t
    return acc


cdef void _fill_segments(
    const double* values, Py_ssize_t d, const int64_t* f, const int64_t* l,
    const Py_ssize_t* order, Py_ssize_t ks, Py_ssize_t lmax, bint znorm, double* segs,
) noexcept nogil:
    cdef Py_ssize_t p, u, jj, q, left, right, lu, base
    cdef Py_ssize_t seglen = lmax * d
    cdef double pos, frac, y0, y1, mu, var, t, sd
    cdef double* dst
    for p in range(ks):
        u = order[p]
        base = f[u] - 1
        lu = l[u]
        dst = segs + p * seglen
        for jj in range(lmax):
            if lmax > 1:
                pos = <double>(jj * (lu - 1)) / <double>(lmax - 1)
            else:
                pos = 0.0
            left = <Py_ssize_t>floor(pos)
            frac = pos - left
            right = left + 1 if left + 1 < lu else lu - 1
            for q in range(d):
                y0 = values[(base + left) * d + q]
                y1 = values[(base + right) * d + q]
                dst[jj * d + q] = y0 + (y1 - y0) * frac
        if not znorm:
            continue
        for q in range(d):
            mu = 0.0
            for jj in range(lmax):
                mu += dst[jj * d + q]
            mu = mu / lmax
            var = 0.0
            for jj in range(lmax):
                t = dst[jj * d + q] - mu
                var += t * t
            sd = sqrt(var / lmax)
            for jj in range(lmax):
                if sd < EPS_VAR:
                    dst[jj * d + q] = 0.0
                else:
                    dst[jj * d + q] = (dst[jj * d + q] - mu) / sd


cdef double _davies_bouldin(
    const double* segs, Py_ssize_t k, Py_ssize_t s, Py_ssize_t m, int rep_code,
) noexcept nogil:
    cdef Py_ssize_t g, h, u, v, i, best
    cdef double acc, worst, ratio, sep, bestsum
    cdef double* reps = <double*>malloc(k * m * sizeof(double))
    cdef double* spread = <double*>malloc(k * sizeof(double))
    cdef double* within = NULL
    cdef double result = 0.0
    if rep_code == REP_MEAN:
        for g in range(k):
            for i in range(m):
                acc = 0.0
                for u in range(s):
                    acc += segs[(g * s + u) * m + i]
                reps[g * m + i] = acc / s
            acc = 0.0
            for u in range(s):
                acc += _sqdist(segs + (g * s + u) * m, reps + g * m, m)
            spread[g] = acc / s
    else:
        within = <double*>malloc(s * s * sizeof(double))
        for g in range(k):
            for u in range(s):
                within[u * s + u] = 0.0
                for v in range(u + 1, s):
                    acc = _sqdist(segs + (g * s + u) * m, segs + (g * s + v) * m, m)
                    within[u * s + v] = acc
                    within[v * s + u] = acc
            best = 0
            bestsum = INFINITY
            for v in range(s):
                acc = 0.0
                for u in range(s):
                    acc += within[u * s + v]
                if acc < bestsum:
                    bestsum = acc
                    best = v
            for i in range(m):
                reps[g * m + i] = segs[(g * s + best) * m + i]
            acc = 0.0
            for u in range(s):
                acc += within[best * s + u]
            spread[g] = acc / s
        free(within)
    for g in range(k):
        worst = -INFINITY
        for h in range(k):
            if h == g:
                continue
            sep = _sqdist(reps + g * m, reps + h * m, m)
            if sep == 0.0:
                free(reps)
                free(spread)
                return INFINITY
            ratio = (spread[g] + spread[h]) / sep
            if ratio > worst:
                worst = ratio
        result += worst
    free(reps)
    free(spread)
    return result / k


cdef double _silhouette(const double* segs, Py_ssize_t k, Py_ssize_t s, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t ks = k * s
    cdef Py_ssize_t u, v
    cdef double a, b, top, acc, total = 0.0
    cdef double* dist = <double*>malloc(ks * ks * sizeof(double))
    for u in range(ks):
        dist[u * ks + u] = 0.0
        for v in range(u + 1, ks):
            acc = _sqdist(segs + u * m, segs + v * m, m)
            dist[u * ks + v] = acc
            dist[v * ks + u] = acc
    for u in range(ks):
        a = 0.0
        b = 0.0
        for v in range(ks):
            if v // s == u // s:
                a += dist[u * ks + v]
            else:
                b += dist[u * ks + v]
        a = a / s
        b = b / ((k - 1) * s)
        top = a if a > b else b
        if top > 0.0:
            total += (b - a) / top
    free(dist)
    return 1.0 - total / ks


cdef double _score(
    const double* values, Py_ssize_t d, const int64_t* f, const int64_t* l, const double* c,
    Py_ssize_t ks, Py_ssize_t lmax, Py_ssize_t s, int index_code, int rep_code,
    bint znorm, double tol,
) noexcept nogil:
    cdef Py_ssize_t u, j, key
    cdef Py_ssize_t k = ks // s
    cdef double out
    if _overlaps(f, l, ks, tol):
        return INFINITY
    cdef Py_ssize_t* order = <Py_ssize_t*>malloc(ks * sizeof(Py_ssize_t))
    cdef double* segs = <double*>malloc(ks * lmax * d * sizeof(double))
    for u in range(ks):
        order[u] = u
    # stable insertion sort on the indicators
    for u in range(1, ks):
        key = order[u]
        j = u - 1
        while j >= 0 and c[order[j]] > c[key]:
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = key
    _fill_segments(values, d, f, l, order, ks, lmax, znorm, segs)
    if index_code == INDEX_DB:
        out = _davies_bouldin(segs, k, s, lmax * d, rep_code)
    else:
        out = _silhouette(segs, k, s, lmax * d)
    free(order)
    free(segs)
    return out


def score_batch(
    const double[:, ::1] values,
    const int64_t[:, ::1] F,
    const int64_t[:, ::1] L,
    const double[:, ::1] C,
    Py_ssize_t l_max,
    Py_ssize_t s,
    int index_code,
    int rep_code,
    bint znorm,
    double tolerance,
    int threads=1,
):
    """Fitness of each row of the ``P x ks`` gene matrices ``F``, ``L``, ``C``."""
    cdef Py_ssize_t P = F.shape[0]
    cdef Py_ssize_t ks = F.shape[1]
    cdef Py_ssize_t d = values.shape[1]
    cdef Py_ssize_t p
    out = np.empty(P, dtype=np.float64)
    cdef double[::1] res = out
    if P == 0 or ks == 0:
        out[:] = np.inf
        return out
    cdef const double* vp = &values[0, 0]
    cdef const int64_t* fp = &F[0, 0]
    cdef const int64_t* lp = &L[0, 0]
    cdef const double* cp = &C[0, 0]
    if threads < 1:
        threads = 1
    for p in prange(P, nogil=True, schedule="static", num_threads=threads):
        res[p] = _score(vp, d, fp + p * ks, lp + p * ks, cp + p * ks, ks, l_max, s,
                        index_code, rep_code, znorm, tolerance)
    return out
