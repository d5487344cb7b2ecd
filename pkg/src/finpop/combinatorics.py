"""Lexicographic k-subset streams, chunked into numpy arrays."""

from __future__ import annotations

import itertools
from math import comb
from typing import Iterator

import numpy as np


def combination_chunks(n: int, k: int, chunk: int = 65536, start: int = 0, stop: int | None = None) -> Iterator[np.ndarray]:
    """Yield ``(m, k)`` int arrays covering the k-subsets of ``range(n)`` in
    lexicographic order, restricted to ranks ``[start, stop)``."""
    total = comb(n, k)
    stop = total if stop is None else min(stop, total)
    if start >= stop:
        return
    it = itertools.islice(itertools.combinations(range(n), k), start, stop)
    remaining = stop - start
    while remaining > 0:
        m = min(chunk, remaining)
        if k == 0:
            arr = np.zeros((m, 0), dtype=np.intp)
            for _ in range(m):
                next(it)
        else:
            flat = np.fromiter(itertools.chain.from_iterable(itertools.islice(it, m)), dtype=np.intp, count=m * k)
            arr = flat.reshape(m, k)
        remaining -= m
        yield arr


def unrank_combination(n: int, k: int, rank: int) -> tuple[int, ...]:
    """The ``rank``-th k-subset of ``range(n)`` in lexicographic order."""
    out = []
    x = 0
    for slot in range(k, 0, -1):
        while comb(n - x - 1, slot - 1) <= rank:
            rank -= comb(n - x - 1, slot - 1)
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def indicator_rows(idx: np.ndarray, n: int, dtype=np.int32) -> np.ndarray:
    """0/1 matrix with a row per subset in ``idx``."""
    out = np.zeros((idx.shape[0], n), dtype=dtype)
    if idx.size:
        np.put_along_axis(out, idx, 1, axis=1)
    return out


def complement_rows(idx: np.ndarray, n: int) -> np.ndarray:
    """For each subset row, the sorted indices not in it."""
    mask = np.ones((idx.shape[0], n), dtype=bool)
    if idx.size:
        np.put_along_axis(mask, idx, False, axis=1)
    return np.nonzero(mask)[1].reshape(idx.shape[0], n - idx.shape[1])
