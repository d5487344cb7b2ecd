"""Finite populations of labelled points, inclusion splits and conditional rates."""

from __future__ import annotations

import csv
import io
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, EmptySetError, ParseError, SchemaError

_FEATURE_COL = re.compile(r"^x(\d+)$")


@dataclass(frozen=True)
class LabeledPoint:
    index: int
    features: tuple[float, ...]
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise SchemaError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class InclusionVector:
    """0/1 inclusion indicator over the population indices."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise SchemaError("inclusion bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_indices(cls, N: int, indices: Iterable[int]) -> InclusionVector:
        bits = [0] * N
        for i in indices:
            bits[i] = 1
        return cls(tuple(bits))

    @property
    def l(self) -> int:
        return sum(self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=np.int8)

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)


@dataclass(frozen=True)
class FinitePopulation:
    """The urn: N indexed, binary-labelled points.

    Duplicated feature/label rows are allowed; everything downstream counts
    over indices, not values.
    """

    points: tuple[LabeledPoint, ...]
    inclusion: InclusionVector | None = field(default=None, compare=False)

    def __post_init__(self):
        points = tuple(self.points)
        if not points:
            raise EmptySetError("population must contain at least one point")
        for i, p in enumerate(points):
            if p.index != i:
                raise SchemaError(f"point indices must be 0..N-1 in order; position {i} has index {p.index}")
        dims = {len(p.features) for p in points}
        if len(dims) != 1:
            raise SchemaError("all points must have the same number of features")
        object.__setattr__(self, "points", points)
        if self.inclusion is not None and len(self.inclusion) != len(points):
            raise DimensionError(f"inclusion vector has length {len(self.inclusion)}, population has N={len(points)}")

    @classmethod
    def from_arrays(cls, features, labels, inclusion=None) -> FinitePopulation:
        X = np.asarray(features, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = [int(v) for v in labels]
        if len(y) != X.shape[0]:
            raise DimensionError("features and labels differ in length")
        pts = tuple(LabeledPoint(i, tuple(float(v) for v in X[i]), y[i]) for i in range(len(y)))
        if inclusion is not None and not isinstance(inclusion, InclusionVector):
            inclusion = InclusionVector(tuple(inclusion))
        return cls(pts, inclusion)

    @property
    def N(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return len(self.points[0].features)

    @cached_property
    def X(self) -> np.ndarray:
        X = np.array([p.features for p in self.points], dtype=float).reshape(self.N, self.dim)
        X.setflags(write=False)
        return X

    @cached_property
    def y(self) -> np.ndarray:
        y = np.array([p.label for p in self.points], dtype=np.int8)
        y.setflags(write=False)
        return y

    def __len__(self) -> int:
        return self.N

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i: int) -> LabeledPoint:
        return self.points[i]


def split_by_inclusion(
    pop: FinitePopulation, r: InclusionVector
) -> tuple[tuple[LabeledPoint, ...], tuple[LabeledPoint, ...]]:
    """Return (sample, remainder) for the indicator ``r``."""
    if len(r) != pop.N:
        raise DimensionError(f"inclusion vector has length {len(r)}, population has N={pop.N}")
    sample = tuple(p for p, b in zip(pop.points, r.bits) if b)
    remainder = tuple(p for p, b in zip(pop.points, r.bits) if not b)
    return sample, remainder


def conditional_rate(pop: FinitePopulation, cell: Callable[[tuple[float, ...]], bool]) -> Fraction:
    """Share of label-1 points among those whose features satisfy ``cell``."""
    inside = [p.label for p in pop.points if cell(p.features)]
    if not inside:
        raise EmptySetError("no point satisfies the cell predicate; rate undefined")
    return Fraction(sum(inside), len(inside))


# --- CSV -------------------------------------------------------------------


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for population CSV files.

    ``features=None`` picks every ``x<d>`` column ordered by ``d``.
    """

    features: Sequence[str] | None = None
    label: str = "y"
    inclusion: str | None = "r"


def _parse_bit(text: str, what: str, row: int) -> int:
    text = text.strip()
    if text not in ("0", "1"):
        raise SchemaError(f"{what} must be 0 or 1, got {text!r}", row=row)
    return int(text)


def load_population(path: str | os.PathLike | io.TextIOBase, schema: CsvSchema | None = None) -> FinitePopulation:
    """Read a population from CSV; rows are numbered from 1 after the header."""
    schema = schema or CsvSchema()
    if hasattr(path, "read"):
        text = path.read()
    else:
        with open(path, newline="") as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise EmptySetError("population must contain at least one point")
    header = [h.strip() for h in header]
    if schema.features is None:
        fcols = sorted((int(m.group(1)), h) for h in header if (m := _FEATURE_COL.match(h)))
        feature_names = [h for _, h in fcols]
    else:
        feature_names = list(schema.features)
    missing = [c for c in [*feature_names, schema.label] if c not in header]
    if missing:
        raise SchemaError(f"missing columns: {', '.join(missing)}")
    if not feature_names:
        raise SchemaError("no feature columns found")
    fidx = [header.index(c) for c in feature_names]
    yidx = header.index(schema.label)
    ridx = header.index(schema.inclusion) if schema.inclusion and schema.inclusion in header else None

    points, bits = [], []
    for rownum, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", row=rownum)
        try:
            feats = tuple(float(row[i]) for i in fidx)
        except ValueError as exc:
            raise ParseError(f"non-numeric feature: {exc}", row=rownum) from None
        label = _parse_bit(row[yidx], "label", rownum)
        if ridx is not None:
            bits.append(_parse_bit(row[ridx], "inclusion", rownum))
        points.append(LabeledPoint(len(points), feats, label))
    if not points:
        raise EmptySetError("population must contain at least one point")
    inclusion = InclusionVector(tuple(bits)) if ridx is not None else None
    return FinitePopulation(tuple(points), inclusion)


def population_to_csv(pop: FinitePopulation, inclusion: InclusionVector | None = None) -> str:
    """Canonical CSV text: ``x0..xd,y[,r]``, ``\\n`` endings, repr floats."""
    inclusion = inclusion if inclusion is not None else pop.inclusion
    cols = [f"x{d}" for d in range(pop.dim)] + ["y"] + (["r"] if inclusion is not None else [])
    lines = [",".join(cols)]
    for p in pop.points:
        fields = [repr(float(v)) for v in p.features] + [str(p.label)]
        if inclusion is not None:
            fields.append(str(inclusion.bits[p.index]))
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


def dump_population(pop: FinitePopulation, path: str | os.PathLike, inclusion: InclusionVector | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(population_to_csv(pop, inclusion))
