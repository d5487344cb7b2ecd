"""Hypothesis classes, induced labelings, growth functions and VC dimension.

Every error statistic used downstream depends on a hypothesis only through
the labeling it induces on the population, so a class is reduced to its
finite set of effective dichotomies.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence, Union

import numpy as np

from .combinatorics import combination_chunks
from .errors import BudgetError, DimensionError, EmptySetError, InconsistencyError, ParameterError, SchemaError
from .population import FinitePopulation, LabeledPoint

KINDS = ("explicit-finite", "threshold-1d", "interval-1d", "axis-rectangle")

EXHAUSTIVE_LIMIT = 20


# --- hypotheses ------------------------------------------------------------


@dataclass(frozen=True)
class Threshold:
    """Predict 1 iff ``x[coord] >= t`` (direction ``up``) or ``<= t`` (``down``)."""

    t: float
    coord: int = 0
    direction: str = "up"

    def predict(self, features: Sequence[float]) -> int:
        x = features[self.coord]
        return int(x >= self.t) if self.direction == "up" else int(x <= self.t)

    def predict_points(self, points: Sequence[LabeledPoint]) -> np.ndarray:
        return np.array([self.predict(p.features) for p in points], dtype=np.int8)


@dataclass(frozen=True)
class Interval:
    """Predict 1 iff ``lo <= x[coord] <= hi``; empty when ``lo > hi``."""

    lo: float
    hi: float
    coord: int = 0

    def predict(self, features: Sequence[float]) -> int:
        return int(self.lo <= features[self.coord] <= self.hi)

    def predict_points(self, points: Sequence[LabeledPoint]) -> np.ndarray:
        return np.array([self.predict(p.features) for p in points], dtype=np.int8)


@dataclass(frozen=True)
class Rectangle:
    """Closed axis-aligned box over ``coords``."""

    lows: tuple[float, ...]
    highs: tuple[float, ...]
    coords: tuple[int, ...] = (0, 1)

    def predict(self, features: Sequence[float]) -> int:
        return int(all(lo <= features[c] <= hi for c, lo, hi in zip(self.coords, self.lows, self.highs)))

    def predict_points(self, points: Sequence[LabeledPoint]) -> np.ndarray:
        return np.array([self.predict(p.features) for p in points], dtype=np.int8)


@dataclass(frozen=True)
class ExplicitLabeling:
    """A labeling given point-by-point over population indices."""

    labels: tuple[int, ...]

    def predict_points(self, points: Sequence[LabeledPoint]) -> np.ndarray:
        return np.array([self.labels[p.index] for p in points], dtype=np.int8)


Hypothesis = Union[Threshold, Interval, Rectangle, ExplicitLabeling]


def error_rate(h: Hypothesis | np.ndarray | Sequence[int], points: Sequence[LabeledPoint]) -> Fraction:
    """Exact share of ``points`` that ``h`` mislabels.

    ``h`` may be a hypothesis object or a dichotomy vector indexed by
    population index. Passing the whole population, a training draw, or the
    remainder gives the whole-set, training and remainder error rates.
    """
    points = list(points)
    if not points:
        raise EmptySetError("error rate of an empty point multiset is undefined")
    if hasattr(h, "predict_points"):
        pred = h.predict_points(points)
    else:
        vec = np.asarray(h)
        pred = vec[[p.index for p in points]]
    labels = np.array([p.label for p in points])
    return Fraction(int(np.count_nonzero(pred != labels)), len(points))


# --- classes ---------------------------------------------------------------


def _boundaries(values: np.ndarray) -> np.ndarray:
    """-inf, midpoints between consecutive distinct sorted values, +inf."""
    v = np.unique(values)
    mids = v[:-1] + (v[1:] - v[:-1]) / 2
    # adjacent doubles: the midpoint can round onto the lower value
    mids = np.where(mids > v[:-1], mids, v[1:])
    return np.concatenate(([-np.inf], mids, [np.inf]))


def _interval_table(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed intervals [lo, hi] over distinct values, empty one first.

    Returns the (lo, hi) pairs and their membership matrix over ``values``.
    """
    v = np.unique(values)
    n = len(v)
    i, j = np.triu_indices(n)
    lo = np.concatenate(([np.inf], v[i]))
    hi = np.concatenate(([-np.inf], v[j]))
    member = (values[None, :] >= lo[:, None]) & (values[None, :] <= hi[:, None])
    return np.stack([lo, hi], axis=1), member


@dataclass(frozen=True)
class HypothesisClass:
    """A family of binary classifiers.

    ``kind`` is one of ``explicit-finite`` (``labelings`` over the population
    indices), ``threshold-1d`` (``coord``, ``direction``), ``interval-1d``
    (``coord``) or ``axis-rectangle`` (``coords``).
    """

    kind: str
    coord: int = 0
    direction: str = "up"
    coords: tuple[int, ...] = (0, 1)
    labelings: tuple[tuple[int, ...], ...] | None = None
    declared_vc: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown hypothesis class kind {self.kind!r}; expected one of {KINDS}")
        if self.declared_vc is not None and self.declared_vc < 1:
            raise ParameterError("declared_vc must be >= 1")
        if self.direction not in ("up", "down"):
            raise ParameterError("direction must be 'up' or 'down'")
        if self.kind == "explicit-finite":
            if not self.labelings:
                raise ParameterError("explicit-finite class must contain at least one labeling")
            labs = tuple(tuple(int(b) for b in row) for row in self.labelings)
            if len({len(row) for row in labs}) != 1:
                raise SchemaError("explicit labelings must all have the same length")
            if any(b not in (0, 1) for row in labs for b in row):
                raise SchemaError("explicit labelings must be binary")
            object.__setattr__(self, "labelings", labs)

    @classmethod
    def explicit(cls, labelings: Iterable[Sequence[int]], declared_vc: int | None = None) -> HypothesisClass:
        return cls("explicit-finite", labelings=tuple(tuple(r) for r in labelings), declared_vc=declared_vc)

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.kind in ("threshold-1d", "interval-1d"):
            d["coord"] = self.coord
        if self.kind == "threshold-1d":
            d["direction"] = self.direction
        if self.kind == "axis-rectangle":
            d["coords"] = list(self.coords)
        if self.kind == "explicit-finite":
            d["size"] = len(self.labelings)
        if self.declared_vc is not None:
            d["declared_vc"] = self.declared_vc
        return d

    def _check_coords(self, pop: FinitePopulation) -> None:
        used = self.coords if self.kind == "axis-rectangle" else (self.coord,)
        if self.kind != "explicit-finite" and any(c < 0 or c >= pop.dim for c in used):
            raise DimensionError(f"class uses coordinates {used} but population has {pop.dim} features")
        if self.kind == "explicit-finite" and len(self.labelings[0]) != pop.N:
            raise DimensionError(f"explicit labelings have length {len(self.labelings[0])}, population has N={pop.N}")

    def candidates(self, pop: FinitePopulation) -> tuple[np.ndarray, list]:
        """Prediction matrix of the canonical candidate members, plus the
        parameters needed to rebuild each candidate as a hypothesis."""
        self._check_coords(pop)
        if self.kind == "explicit-finite":
            P = np.array(self.labelings, dtype=np.int8)
            return P, list(range(len(P)))
        if self.kind == "threshold-1d":
            x = pop.X[:, self.coord]
            b = _boundaries(x)
            if self.direction == "up":
                P = x[None, :] >= b[:, None]
            else:
                P = x[None, :] <= b[:, None]
                b = b[::-1]
                P = P[::-1]
            return P.astype(np.int8), list(b)
        if self.kind == "interval-1d":
            table, member = _interval_table(pop.X[:, self.coord])
            return member.astype(np.int8), [tuple(r) for r in table]
        tables = [_interval_table(pop.X[:, c]) for c in self.coords]
        P = np.ones((1, pop.N), dtype=bool)
        params: list = [()]
        for table, member in tables:
            # skip each coordinate's empty interval; one global empty box is added below
            P = (P[:, None, :] & member[None, 1:, :]).reshape(-1, pop.N)
            params = [p + (tuple(t),) for p in params for t in table[1:]]
        P = np.vstack([np.zeros((1, pop.N), dtype=bool), P])
        params = [None] + params
        return P.astype(np.int8), params

    def _build(self, param) -> Hypothesis:
        if self.kind == "explicit-finite":
            return ExplicitLabeling(self.labelings[param])
        if self.kind == "threshold-1d":
            return Threshold(float(param), self.coord, self.direction)
        if self.kind == "interval-1d":
            return Interval(float(param[0]), float(param[1]), self.coord)
        if param is None:
            k = len(self.coords)
            return Rectangle((math.inf,) * k, (-math.inf,) * k, tuple(self.coords))
        return Rectangle(tuple(float(p[0]) for p in param), tuple(float(p[1]) for p in param), tuple(self.coords))

    def representatives(self, pop: FinitePopulation) -> tuple[np.ndarray, list[Hypothesis]]:
        """Effective dichotomies and one concrete hypothesis realising each."""
        P, params = self.candidates(pop)
        D, first = np.unique(P, axis=0, return_index=True)
        return D, [self._build(params[i]) for i in first]


def effective_dichotomies(cls: HypothesisClass, pop: FinitePopulation) -> np.ndarray:
    """Distinct labelings of ``pop`` realised by ``cls``, rows in lexicographic order."""
    P, _ = cls.candidates(pop)
    return np.unique(P, axis=0)


def load_explicit_class(path: str | os.PathLike | io.TextIOBase, declared_vc: int | None = None) -> HypothesisClass:
    """One row per hypothesis, N binary columns; an optional header row is skipped."""
    if hasattr(path, "read"):
        text = path.read()
    else:
        with open(path, newline="") as fh:
            text = fh.read()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows and not all(c.strip() in ("0", "1") for c in rows[0]):
        rows = rows[1:]
    labelings = []
    for n, row in enumerate(rows, start=1):
        cells = [c.strip() for c in row]
        if any(c not in ("0", "1") for c in cells):
            raise SchemaError("hypothesis labelings must be 0/1", row=n)
        labelings.append(tuple(int(c) for c in cells))
    if not labelings:
        raise SchemaError("explicit class file contains no hypotheses")
    return HypothesisClass.explicit(labelings, declared_vc=declared_vc)


# --- growth function and VC dimension --------------------------------------


class GrowthCount(int):
    """Integer growth-function value; ``lower_bound`` is set when only a sample
    of subsets was searched."""

    lower_bound: bool

    def __new__(cls, value: int, lower_bound: bool = False):
        obj = super().__new__(cls, value)
        obj.lower_bound = lower_bound
        return obj

    def __repr__(self) -> str:
        return f"GrowthCount({int(self)}, lower_bound={self.lower_bound})"


def _distinct_counts(D: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    """Number of distinct restrictions of the rows of ``D`` to each subset."""
    l = subsets.shape[1]
    weights = np.left_shift(np.int64(1), np.arange(l, dtype=np.int64))
    # codes[m, s] = integer code of dichotomy m restricted to subset s
    codes = (D[:, subsets].astype(np.int64) * weights).sum(axis=2)
    codes.sort(axis=0)
    return 1 + np.count_nonzero(np.diff(codes, axis=0), axis=0)


def _max_restrictions(D: np.ndarray, l: int, N: int, subset_source) -> int:
    cap = min(len(D), 2**l)
    best = 0
    for chunk in subset_source:
        best = max(best, int(_distinct_counts(D, chunk).max()))
        if best >= cap:
            break
    return best


def _chunk_size(m: int, l: int) -> int:
    return max(1, min(65536, 4_000_000 // max(1, m * l)))


def growth_function(
    cls: HypothesisClass,
    l: int,
    pop: FinitePopulation,
    *,
    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
    sample_subsets: int | None = None,
    seed: int | None = None,
) -> GrowthCount:
    """Maximum number of distinct labelings the class induces on any ``l``
    points of ``pop``.

    Exact for ``pop.N <= exhaustive_limit``. Beyond that, ``sample_subsets``
    random subsets are searched (with ``seed``) and the result is flagged as a
    lower bound; without a sample size a :class:`BudgetError` is raised.
    """
    if not 1 <= l <= pop.N:
        raise DimensionError(f"l={l} out of range 1..{pop.N}")
    if l > 62:
        raise ParameterError("growth function restricted to l <= 62")
    D = effective_dichotomies(cls, pop)
    N = pop.N
    chunk = _chunk_size(len(D), l)
    if N <= exhaustive_limit or comb(N, l) <= (sample_subsets or 0):
        return GrowthCount(_max_restrictions(D, l, N, combination_chunks(N, l, chunk)))
    if sample_subsets is None:
        raise BudgetError(
            f"N={N} exceeds the exhaustive limit {exhaustive_limit}; pass sample_subsets for a flagged lower bound"
        )
    if seed is None:
        raise ParameterError("sampled growth search needs an explicit seed")
    rng = np.random.default_rng(seed)

    def sampled():
        left = sample_subsets
        while left > 0:
            m = min(chunk, left)
            left -= m
            yield np.sort(rng.random((m, N)).argsort(axis=1)[:, :l], axis=1)

    return GrowthCount(_max_restrictions(D, l, N, sampled()), lower_bound=True)


def growth_bound(l: int, h: int) -> float:
    """``1.5 * l**h / h!`` evaluated in log space."""
    if l < 1 or h < 1:
        raise ParameterError("growth_bound needs l >= 1 and h >= 1")
    return math.exp(math.log(1.5) + h * math.log(l) - math.lgamma(h + 1))


def growth_bound_exact(l: int, h: int) -> Fraction:
    """The same bound as an exact rational, for integer comparisons."""
    return Fraction(3 * l**h, 2 * math.factorial(h))


def _shatters_some(D: np.ndarray, s: int, N: int, exhaustive_limit: int) -> bool:
    if len(D) < 2**s:
        return False
    if N > exhaustive_limit:
        raise BudgetError(f"exhaustive shattering search limited to N <= {exhaustive_limit}")
    return _max_restrictions(D, s, N, combination_chunks(N, s, _chunk_size(len(D), s))) == 2**s


def vc_dimension(cls: HypothesisClass, pop: FinitePopulation, *, exhaustive_limit: int = EXHAUSTIVE_LIMIT) -> int:
    """Size of the largest subset of ``pop`` shattered by ``cls``.

    With ``declared_vc`` set, verifies that no larger set is shattered inside
    the population and returns the declared value.
    """
    D = effective_dichotomies(cls, pop)
    N = pop.N
    if cls.declared_vc is not None:
        s = cls.declared_vc + 1
        if s <= N and _shatters_some(D, s, N, exhaustive_limit):
            raise InconsistencyError(f"class shatters a set of size {s} > declared_vc={cls.declared_vc}")
        return cls.declared_vc
    h = 0
    # shattering is hereditary, so the first unshattered size ends the search
    for s in range(1, N + 1):
        if not _shatters_some(D, s, N, exhaustive_limit):
            break
        h = s
    return h
