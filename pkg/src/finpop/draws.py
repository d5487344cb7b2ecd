"""Draws without replacement and the counting measure over them.

Error statistics are compared in scaled integer form, so a draw is counted
as violating exactly when the rational difference strictly exceeds the
threshold. Pick thresholds off the rate lattice (not a multiple of ``1/l``
or ``1/N``) to stay away from knife-edge cases.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Iterator, Sequence

import numpy as np

from .combinatorics import combination_chunks, complement_rows, indicator_rows
from .errors import BudgetError, DimensionError, ParameterError
from .exact import as_fraction, floor_int
from .hypotheses import HypothesisClass, effective_dichotomies
from .population import FinitePopulation

DEFAULT_BUDGET = 10_000_000
BLOCK_SIZE = 8192
CONFIDENCE = 0.99
STATISTICS = ("u_minus_vtr", "uprime_minus_vtr")


@dataclass(frozen=True)
class DrawSpec:
    """How to traverse the size-``l`` draws from ``N`` points.

    ``mode`` is ``exhaustive`` or ``monte-carlo``; the latter needs ``trials``
    and ``seed``. ``budget`` caps exhaustive enumeration (draws or pairs).
    """

    N: int
    l: int
    mode: str = "exhaustive"
    trials: int | None = None
    seed: int | None = None
    budget: int = DEFAULT_BUDGET
    workers: int = 1

    def __post_init__(self):
        if not 1 <= self.l <= self.N:
            raise DimensionError(f"draw size l={self.l} must satisfy 1 <= l <= N={self.N}")
        if self.mode not in ("exhaustive", "monte-carlo"):
            raise ParameterError(f"unknown draw mode {self.mode!r}")
        if self.mode == "monte-carlo":
            if self.trials is None or self.trials < 1:
                raise ParameterError("monte-carlo mode needs trials >= 1")
            if self.seed is None:
                raise ParameterError("monte-carlo mode needs an explicit seed")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")

    @classmethod
    def exhaustive(cls, N: int, l: int, budget: int = DEFAULT_BUDGET, workers: int = 1) -> DrawSpec:
        return cls(N, l, "exhaustive", budget=budget, workers=workers)

    @classmethod
    def monte_carlo(cls, N: int, l: int, trials: int, seed: int, workers: int = 1) -> DrawSpec:
        return cls(N, l, "monte-carlo", trials=trials, seed=seed, workers=workers)


def hoeffding_half_width(trials: int, confidence: float = CONFIDENCE) -> float:
    """Distribution-free two-sided half-width for a proportion of ``trials``."""
    return math.sqrt(math.log(2 / (1 - confidence)) / (2 * trials))


@dataclass(frozen=True)
class CountingMeasureResult:
    bad: int
    total: int
    mode: str
    proportion: Fraction | None = None
    estimate: float = 0.0
    ci_half_width: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        assert 0 <= self.bad <= self.total

    @classmethod
    def from_counts(cls, bad: int, total: int, spec: DrawSpec) -> CountingMeasureResult:
        if spec.mode == "exhaustive":
            p = Fraction(bad, total)
            return cls(bad, total, spec.mode, p, float(p), 0.0, None)
        return cls(bad, total, spec.mode, None, bad / total, hoeffding_half_width(total), spec.seed)

    @property
    def value(self) -> Fraction | float:
        """Exact proportion when available, otherwise the estimate."""
        return self.proportion if self.proportion is not None else self.estimate

    def to_json(self) -> dict:
        return {
            "bad": self.bad,
            "total": self.total,
            "proportion_num": self.proportion.numerator if self.proportion is not None else None,
            "proportion_den": self.proportion.denominator if self.proportion is not None else None,
            "estimate": self.estimate,
            "ci_half_width": self.ci_half_width,
            "mode": self.mode,
            "seed": self.seed,
        }


class PairedDrawResult(CountingMeasureResult):
    """Counting measure over ordered (train, test) pairs of size-``l`` draws."""


# --- enumeration -----------------------------------------------------------


def _check_budget(count: int, budget: int, what: str = "draws") -> None:
    if count > budget:
        raise BudgetError(f"{count} {what} exceed the enumeration budget {budget}; use monte-carlo mode instead")


def enumerate_draws(N: int, l: int, budget: int = DEFAULT_BUDGET) -> Iterator[tuple[int, ...]]:
    """Every size-``l`` subset of ``range(N)`` once, in lexicographic order."""
    if not 1 <= l <= N:
        raise DimensionError(f"draw size l={l} must satisfy 1 <= l <= N={N}")
    _check_budget(comb(N, l), budget)
    for chunk in combination_chunks(N, l):
        yield from map(tuple, chunk.tolist())


def _partitions(total: int, workers: int) -> list[tuple[int, int]]:
    step = -(-total // workers)
    return [(s, min(s + step, total)) for s in range(0, total, step)]


def _run_exhaustive(N: int, l: int, workers: int, count_chunk: Callable[[np.ndarray], int], chunk: int) -> int:
    """Sum ``count_chunk`` over all l-subsets, splitting the rank range."""
    total = comb(N, l)

    def work(bounds):
        return sum(count_chunk(c) for c in combination_chunks(N, l, chunk, *bounds))

    if workers == 1 or total < 4 * chunk:
        return work((0, total))
    with ThreadPoolExecutor(workers) as ex:
        return sum(ex.map(work, _partitions(total, workers)))


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Independent generator for trial block ``block`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _run_monte_carlo(
    N: int, spec: DrawSpec, take: int, count_perm: Callable[[np.ndarray], int], block_size: int = BLOCK_SIZE
) -> int:
    """Sum ``count_perm`` over seeded blocks of random orderings of ``range(N)``.

    Each block has its own generator derived from (seed, block index), so
    the total does not depend on how blocks are spread over workers.
    """
    trials = spec.trials
    nblocks = -(-trials // block_size)

    def work(b):
        n = min(block_size, trials - b * block_size)
        rng = block_rng(spec.seed, b)
        perm = rng.random((n, N)).argsort(axis=1)[:, :take]
        return count_perm(perm)

    if spec.workers == 1:
        return sum(map(work, range(nblocks)))
    with ThreadPoolExecutor(spec.workers) as ex:
        return sum(ex.map(work, range(nblocks)))


# --- counting measure ------------------------------------------------------


def error_matrix(pop: FinitePopulation, dichotomies: np.ndarray) -> np.ndarray:
    """``(N, m)`` 0/1 matrix: point ``i`` is mislabelled by dichotomy ``j``."""
    return (dichotomies != pop.y[None, :]).T.astype(np.float64)


def _draw_threshold(statistic: str, N: int, l: int, eps: Fraction) -> int:
    k = N - l
    if statistic == "u_minus_vtr":
        return floor_int(eps * N * l)
    return floor_int(eps * k * l)


def _draw_violations(Err: np.ndarray, U: np.ndarray, c: np.ndarray, statistic: str, N: int, l: int, T: int) -> np.ndarray:
    """Boolean per draw: some dichotomy's scaled |difference| exceeds ``T``.

    ``c`` holds training error counts per draw and dichotomy.
    """
    if statistic == "u_minus_vtr":
        diff = np.abs(U * l - c * N)
    else:
        diff = np.abs((U - c) * l - c * (N - l))
    return (diff > T).any(axis=1)


def counting_measure_from_errors(
    Err: np.ndarray, eps, statistic: str, spec: DrawSpec
) -> CountingMeasureResult:
    """Counting measure given a precomputed :func:`error_matrix`."""
    if statistic not in STATISTICS:
        raise ParameterError(f"statistic must be one of {STATISTICS}")
    eps = as_fraction(eps)
    if eps <= 0:
        raise ParameterError("epsilon must be > 0")
    N, l = spec.N, spec.l
    if Err.shape[0] != N:
        raise DimensionError(f"draw spec has N={spec.N}, population has N={Err.shape[0]}")
    if statistic == "uprime_minus_vtr" and l == N:
        raise DimensionError("uprime statistic needs a non-empty remainder (l < N)")
    T = _draw_threshold(statistic, N, l, eps)
    U = Err.sum(axis=0).astype(np.int64)

    def count_idx(idx: np.ndarray) -> int:
        c = np.rint(indicator_rows(idx, N, np.float64) @ Err).astype(np.int64)
        return int(np.count_nonzero(_draw_violations(Err, U, c, statistic, N, l, T)))

    if spec.mode == "exhaustive":
        total = comb(N, l)
        _check_budget(total, spec.budget)
        bad = _run_exhaustive(N, l, spec.workers, count_idx, chunk=max(1, min(65536, 2_000_000 // (N * Err.shape[1] + 1))))
    else:
        total = spec.trials
        bad = _run_monte_carlo(N, spec, l, count_idx)
    return CountingMeasureResult.from_counts(bad, total, spec)


def counting_measure(
    pop: FinitePopulation, cls: HypothesisClass, eps, statistic: str, spec: DrawSpec
) -> CountingMeasureResult:
    """Share of size-``l`` draws on which the supremum over the class of
    ``|u - v_tr|`` (``u_minus_vtr``) or ``|u' - v_tr|`` (``uprime_minus_vtr``)
    strictly exceeds ``eps``.
    """
    if spec.N != pop.N:
        raise DimensionError(f"draw spec has N={spec.N}, population has N={pop.N}")
    Err = error_matrix(pop, effective_dichotomies(cls, pop))
    return counting_measure_from_errors(Err, eps, statistic, spec)


def paired_counting_measure_from_errors(Err: np.ndarray, threshold, spec: DrawSpec) -> PairedDrawResult:
    threshold = as_fraction(threshold)
    if threshold <= 0:
        raise ParameterError("threshold must be > 0")
    N, l = spec.N, spec.l
    if Err.shape[0] != N:
        raise DimensionError(f"draw spec has N={spec.N}, population has N={Err.shape[0]}")
    if 2 * l > N:
        raise DimensionError(f"paired draws need 2l <= N (l={l}, N={N})")
    T = floor_int(threshold * l)
    E = Err.astype(np.int64)
    m = E.shape[1]

    if spec.mode == "monte-carlo":

        def count_perm(perm: np.ndarray) -> int:
            ctr = E[perm[:, :l]].sum(axis=1)
            cte = E[perm[:, l:]].sum(axis=1)
            return int(np.count_nonzero((np.abs(cte - ctr) > T).any(axis=1)))

        bad = _run_monte_carlo(N, spec, 2 * l, count_perm)
        return PairedDrawResult.from_counts(bad, spec.trials, spec)

    q = comb(N - l, l)
    total = comb(N, l) * q
    _check_budget(total, spec.budget, "train/test pairs")
    test_pos = np.array(list(_lex(N - l, l)), dtype=np.intp).reshape(q, l)

    def count_idx(idx: np.ndarray) -> int:
        ctr = E[idx].sum(axis=1)
        comp = complement_rows(idx, N)
        cte = E[comp[:, test_pos]].sum(axis=2)
        return int(np.count_nonzero((np.abs(cte - ctr[:, None, :]) > T).any(axis=2)))

    chunk = max(1, min(65536, 4_000_000 // (q * l * m + 1)))
    bad = _run_exhaustive(N, l, spec.workers, count_idx, chunk)
    return PairedDrawResult.from_counts(bad, total, spec)


def _lex(n: int, k: int):
    for c in combination_chunks(n, k):
        yield from map(tuple, c.tolist())


def paired_counting_measure(
    pop: FinitePopulation, cls: HypothesisClass, threshold, spec: DrawSpec
) -> PairedDrawResult:
    """Share of ordered (train, test) pairs, train of size ``l`` and test of
    size ``l`` from the remaining points, with ``sup |v_te - v_tr| > threshold``.
    """
    if spec.N != pop.N:
        raise DimensionError(f"draw spec has N={spec.N}, population has N={pop.N}")
    Err = error_matrix(pop, effective_dichotomies(cls, pop))
    return paired_counting_measure_from_errors(Err, threshold, spec)


# --- hypergeometric --------------------------------------------------------


def hypergeom_pmf(N: int, K: int, n: int, k: int) -> Fraction:
    """P(k red in n draws) from an urn of N balls with K red."""
    _check_urn(N, K, n)
    if k < max(0, n - (N - K)) or k > min(n, K):
        return Fraction(0)
    return Fraction(comb(K, k) * comb(N - K, n - k), comb(N, n))


def hypergeom_tail(N: int, K: int, n: int, k: int) -> Fraction:
    """P(at least k red in n draws); thresholds below the support give 1."""
    _check_urn(N, K, n)
    lo = max(k, 0, n - (N - K))
    hi = min(n, K)
    if lo > hi:
        return Fraction(0)
    return Fraction(sum(comb(K, j) * comb(N - K, n - j) for j in range(lo, hi + 1)), comb(N, n))


def _check_urn(N: int, K: int, n: int) -> None:
    if not (0 <= K <= N and 0 <= n <= N):
        raise ParameterError(f"hypergeometric needs 0 <= K <= N and 0 <= n <= N (N={N}, K={K}, n={n})")


def hypergeometric(N: int, K: int, n: int, k: int, mode: str = "pmf") -> Fraction:
    if mode == "pmf":
        return hypergeom_pmf(N, K, n, k)
    if mode == "tail_at_least":
        return hypergeom_tail(N, K, n, k)
    raise ParameterError(f"unknown hypergeometric mode {mode!r}")


# --- half splits -----------------------------------------------------------


def half_split_concentration(labels: Sequence[int], eps) -> Fraction:
    """Share of the C(2m, m) ways to cut ``labels`` into two halves of size
    ``m`` whose label-1 ratios differ by at most ``eps``."""
    y = np.asarray(labels, dtype=np.int64)
    n = len(y)
    if n < 2 or n % 2:
        raise DimensionError(f"half splits need an even length >= 2, got {n}")
    eps = as_fraction(eps)
    if eps < 0:
        raise ParameterError("epsilon must be >= 0")
    m = n // 2
    K = int(y.sum())
    T = floor_int(eps * m)
    good = 0
    for idx in combination_chunks(n, m):
        j = y[idx].sum(axis=1)
        good += int(np.count_nonzero(np.abs(2 * j - K) <= T))
    return Fraction(good, comb(n, m))
