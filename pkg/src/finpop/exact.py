"""Helpers for exact rational arithmetic."""

from __future__ import annotations

import math
from decimal import Decimal
from fractions import Fraction
from numbers import Rational


def as_fraction(x) -> Fraction:
    """Exact rational for ``x``.

    Floats are read through their shortest repr, so ``0.41`` becomes
    ``41/100`` rather than the nearest binary double.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"cannot convert {x!r} to an exact rational")
        return Fraction(Decimal(repr(x)))
    if isinstance(x, (str, Decimal)):
        return Fraction(x)
    return Fraction(x)


def floor_int(x: Fraction) -> int:
    return x.numerator // x.denominator


def ceil_int(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def fraction_json(x: Fraction | None) -> dict | None:
    if x is None:
        return None
    return {"num": x.numerator, "den": x.denominator}
