"""Slow, obviously-correct reference computations used as test oracles.

Nothing here touches the vectorised code paths in finpop.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def rate(labels_pred, labels_true, idx) -> Fraction:
    idx = list(idx)
    return Fraction(sum(labels_pred[i] != labels_true[i] for i in idx), len(idx))


def brute_counting_measure(y, dichotomies, l, eps: Fraction, statistic: str) -> Fraction:
    N = len(y)
    bad = total = 0
    for train in itertools.combinations(range(N), l):
        rest = [i for i in range(N) if i not in train]
        total += 1
        for d in dichotomies:
            u = rate(d, y, range(N))
            v = rate(d, y, train)
            other = u if statistic == "u_minus_vtr" else rate(d, y, rest)
            if abs(other - v) > eps:
                bad += 1
                break
    return Fraction(bad, total)


def brute_paired_measure(y, dichotomies, l, thr: Fraction) -> Fraction:
    N = len(y)
    bad = total = 0
    for train in itertools.combinations(range(N), l):
        rest = [i for i in range(N) if i not in train]
        for test in itertools.combinations(rest, l):
            total += 1
            if any(abs(rate(d, y, test) - rate(d, y, train)) > thr for d in dichotomies):
                bad += 1
    return Fraction(bad, total)


def brute_hypergeom_pmf(N, K, n, k) -> Fraction:
    urn = [1] * K + [0] * (N - K)
    draws = list(itertools.combinations(range(N), n))
    return Fraction(sum(sum(urn[i] for i in d) == k for d in draws), len(draws))


def brute_dichotomies_threshold(xs, direction="up"):
    """Labelings from thresholds placed at every data value and beyond."""
    if direction == "up":
        return {tuple(int(x >= t) for x in xs) for t in sorted(set(xs)) + [float("inf")]}
    return {tuple(int(x <= t) for x in xs) for t in [float("-inf")] + sorted(set(xs))}


def brute_dichotomies_interval(xs):
    vals = sorted(set(xs))
    out = {tuple(0 for _ in xs)}
    for a in vals:
        for b in vals:
            if a <= b:
                out.add(tuple(int(a <= x <= b) for x in xs))
    return out


def brute_growth(dichotomies, N, l) -> int:
    return max(len({tuple(d[i] for i in s) for d in dichotomies}) for s in itertools.combinations(range(N), l))


def brute_vc(dichotomies, N) -> int:
    h = 0
    for s in range(1, N + 1):
        if any(len({tuple(d[i] for i in sub) for d in dichotomies}) == 2**s for sub in itertools.combinations(range(N), s)):
            h = s
    return h
