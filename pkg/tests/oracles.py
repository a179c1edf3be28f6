"""Brute-force transcriptions of the validity indices.

Plain Python lists and loops only; nothing here imports genmotif, so these
serve as an independent check of the library and kernel code paths.
Segments are lists of rows (``L x d``).
"""


def sqe(a, b):
    return sum((x - y) ** 2 for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def mean_to(y, group):
    return sum(sqe(y, x) for x in group) / len(group)


def mean_segment(group):
    L, d = len(group[0]), len(group[0][0])
    return [[sum(x[i][q] for x in group) / len(group) for q in range(d)] for i in range(L)]


def medoid_segment(group):
    best, best_sum = None, None
    for cand in group:
        total = sum(sqe(x, cand) for x in group)
        if best_sum is None or total < best_sum:
            best, best_sum = cand, total
    return best


def davies_bouldin(groups, rep="mean"):
    k = len(groups)
    reps = [mean_segment(g) if rep == "mean" else medoid_segment(g) for g in groups]
    total = 0.0
    for i in range(k):
        candidates = []
        for j in range(k):
            if j == i:
                continue
            sep = sqe(reps[i], reps[j])
            if sep == 0:
                return float("inf")
            candidates.append((mean_to(reps[i], groups[i]) + mean_to(reps[j], groups[j])) / sep)
        total += max(candidates)
    return total / k


def silhouette(groups):
    k, s = len(groups), len(groups[0])
    acc = 0.0
    for i, g in enumerate(groups):
        rest = [x for j, h in enumerate(groups) if j != i for x in h]
        for x in g:
            a = mean_to(x, g)
            b = mean_to(x, rest)
            if max(a, b) > 0:
                acc += (b - a) / max(a, b)
    return 1 - acc / (k * s)
