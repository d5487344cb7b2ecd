"""Finite-population error decomposition, inclusion schemes and the
Horvitz-Thompson estimator.

Sample-minus-population mean error equals
``rho(R, E) * sqrt((N - l) / l) * sigma_E`` exactly when all moments use
``1/N`` normalisation.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DegenerateError, DimensionError, SchemeError
from .population import FinitePopulation, InclusionVector


def _moments(a: np.ndarray) -> tuple[float, np.ndarray]:
    mean = math.fsum(a) / len(a)
    return mean, a - mean


def finite_pop_std(a: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    _, c = _moments(a)
    return math.sqrt(math.fsum(c * c) / len(a))


def finite_pop_correlation(a: Sequence[float], b: Sequence[float]) -> float:
    """Pearson correlation with ``1/N`` moments."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError("correlation needs two 1-D sequences of equal length")
    if len(a) < 2:
        raise DimensionError("correlation needs at least two values")
    _, ca = _moments(a)
    _, cb = _moments(b)
    saa = math.fsum(ca * ca)
    sbb = math.fsum(cb * cb)
    if saa == 0 or sbb == 0:
        raise DegenerateError("correlation undefined for a constant sequence")
    r = math.fsum(ca * cb) / math.sqrt(saa * sbb)
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class DecompositionReport:
    rho: float | None
    sigma_e: float
    quantity_factor: float
    gap_sample_minus_pop: float
    rhs_product: float
    residual: float
    degenerate: bool
    N: int
    l: int

    @property
    def gap_pop_minus_sample(self) -> float:
        return -self.gap_sample_minus_pop

    def to_json(self) -> dict:
        return {
            "rho": self.rho,
            "sigma_e": self.sigma_e,
            "quantity_factor": self.quantity_factor,
            "gap_sample_minus_pop": self.gap_sample_minus_pop,
            "rhs_product": self.rhs_product,
            "residual": self.residual,
            "degenerate": self.degenerate,
            "N": self.N,
            "l": self.l,
        }


def residual_tolerance(gap: float) -> float:
    return 1e-12 * max(1.0, abs(gap))


def meng_decomposition(errors: Sequence[float], r: InclusionVector | Sequence[int]) -> DecompositionReport:
    """Split the sample-minus-population mean error into data-defect
    correlation, data-quantity factor and error spread.

    ``errors`` are signed residuals ``y_i - f(x_i)`` over the whole
    population; ``r`` marks the sampled indices.
    """
    E = np.asarray(errors, dtype=float)
    bits = r.as_array() if isinstance(r, InclusionVector) else np.asarray(r)
    if E.ndim != 1 or bits.shape != E.shape:
        raise DimensionError(f"errors (length {E.size}) and inclusion vector (length {bits.size}) differ")
    R = bits.astype(float)
    N = len(E)
    l = int(bits.sum())
    if l == 0 or l == N:
        raise DegenerateError(f"inclusion with l={l} of N={N} has zero variance")
    pop_mean = math.fsum(E) / N
    gap = math.fsum(E[bits == 1]) / l - pop_mean
    sigma_e = finite_pop_std(E)
    factor = math.sqrt((N - l) / l)
    if sigma_e == 0:
        if abs(gap) > residual_tolerance(0.0):
            raise AssertionError(f"constant errors but non-zero gap {gap}")
        return DecompositionReport(None, 0.0, factor, gap, 0.0, gap, True, N, l)
    rho = finite_pop_correlation(R, E)
    rhs = rho * factor * sigma_e
    return DecompositionReport(rho, sigma_e, factor, gap, rhs, gap - rhs, False, N, l)


# --- inclusion schemes -----------------------------------------------------


@dataclass(frozen=True)
class FixedScheme:
    r: InclusionVector


@dataclass(frozen=True)
class UniformScheme:
    """Size-``l`` subset, uniform over all ``C(N, l)``."""

    l: int


@dataclass(frozen=True)
class PropensityScheme:
    """Independent inclusion of each point with probability ``propensity(x)``.

    The propensity sees features only, which is the missing-at-random case;
    nothing here assumes it holds for real data.
    """

    propensity: Callable[[tuple[float, ...]], float]

    def probabilities(self, pop: FinitePopulation) -> np.ndarray:
        pi = np.array([float(self.propensity(p.features)) for p in pop.points])
        bad = np.flatnonzero(~((pi > 0) & (pi <= 1)))
        if bad.size:
            raise SchemeError(f"propensity must lie in (0, 1]; point {int(bad[0])} has {pi[bad[0]]}")
        return pi


InclusionScheme = Union[FixedScheme, UniformScheme, PropensityScheme]


def inclusion_probabilities(scheme: InclusionScheme, pop: FinitePopulation) -> np.ndarray:
    if isinstance(scheme, FixedScheme):
        return scheme.r.as_array().astype(float)
    if isinstance(scheme, UniformScheme):
        return np.full(pop.N, scheme.l / pop.N)
    return scheme.probabilities(pop)


def _validate(scheme: InclusionScheme, pop: FinitePopulation) -> None:
    if isinstance(scheme, FixedScheme):
        if len(scheme.r) != pop.N:
            raise SchemeError(f"fixed inclusion vector has length {len(scheme.r)}, population has N={pop.N}")
    elif isinstance(scheme, UniformScheme):
        if not 1 <= scheme.l <= pop.N:
            raise SchemeError(f"uniform scheme needs 1 <= l <= N (l={scheme.l}, N={pop.N})")
    elif isinstance(scheme, PropensityScheme):
        scheme.probabilities(pop)
    else:
        raise SchemeError(f"unknown scheme {scheme!r}")


def _draw(scheme: InclusionScheme, pop: FinitePopulation, rng: np.random.Generator, pi=None) -> np.ndarray:
    if isinstance(scheme, FixedScheme):
        return scheme.r.as_array()
    if isinstance(scheme, UniformScheme):
        bits = np.zeros(pop.N, dtype=np.int8)
        bits[rng.choice(pop.N, size=scheme.l, replace=False)] = 1
        return bits
    pi = scheme.probabilities(pop) if pi is None else pi
    return (rng.random(pop.N) < pi).astype(np.int8)


def sample_inclusion(scheme: InclusionScheme, pop: FinitePopulation, seed: int) -> InclusionVector:
    """One inclusion vector drawn from ``scheme``; deterministic per seed."""
    _validate(scheme, pop)
    rng = np.random.default_rng(seed)
    return InclusionVector(tuple(_draw(scheme, pop, rng).tolist()))


def horvitz_thompson(values: Sequence, r: InclusionVector | Sequence[int], inclusion_probs: Sequence):
    """Inverse-probability weighted estimate of the population mean.

    Uses plain arithmetic on the inputs, so ``Fraction`` values give an
    exact result.
    """
    bits = r.bits if isinstance(r, InclusionVector) else tuple(int(b) for b in r)
    N = len(values)
    if len(bits) != N or len(inclusion_probs) != N:
        raise DimensionError("values, inclusion vector and probabilities must have equal length")
    if not any(bits):
        raise DegenerateError("Horvitz-Thompson estimate needs a non-empty sample")
    total = 0
    for v, b, p in zip(values, bits, inclusion_probs):
        if b:
            if not p > 0:
                raise DegenerateError(f"inclusion probability must be > 0 for sampled points (got {p})")
            total += v / p
    if isinstance(total, Fraction) or isinstance(total, int):
        return Fraction(total) / N
    return total / N


@dataclass(frozen=True)
class GapEstimate:
    mean_gap: float
    mean_abs_gap: float
    ci_half_width: float
    trials: int
    resampled: int
    degenerate: bool


def mc_expected_gap(
    scheme: InclusionScheme,
    errors: Sequence[float],
    pop: FinitePopulation,
    trials: int,
    seed: int,
    *,
    confidence: float = 0.99,
    max_resample: int = 1000,
    trace_path: str | os.PathLike | None = None,
) -> GapEstimate:
    """Monte-Carlo mean of the sample-minus-population error gap.

    Draws with an empty or full sample are redrawn (and counted). The
    half-width is Hoeffding's at ``confidence``, using the range of the
    errors as the range of the gap.
    """
    if trials < 1:
        raise SchemeError("trials must be >= 1")
    E = np.asarray(errors, dtype=float)
    if len(E) != pop.N:
        raise DimensionError(f"errors have length {len(E)}, population has N={pop.N}")
    _validate(scheme, pop)
    N = pop.N
    pi = inclusion_probabilities(scheme, pop)
    if isinstance(scheme, PropensityScheme) and np.all(pi == 1):
        return GapEstimate(0.0, 0.0, 0.0, trials, 0, True)
    if isinstance(scheme, FixedScheme):
        l = scheme.r.l
        if l in (0, N):
            return GapEstimate(0.0, 0.0, 0.0, trials, 0, True)
        rep = meng_decomposition(E, scheme.r)
        g = rep.gap_sample_minus_pop
        rows = [(t, l, g) for t in range(trials)] if trace_path else None
        if rows:
            _write_trace(trace_path, rows)
        return GapEstimate(g, abs(g), 0.0, trials, 0, False)
    if isinstance(scheme, UniformScheme) and scheme.l == N:
        return GapEstimate(0.0, 0.0, 0.0, trials, 0, True)

    rng = np.random.default_rng(seed)
    pop_mean = math.fsum(E) / N
    gaps = np.empty(trials)
    rows = [] if trace_path else None
    resampled = 0
    for t in range(trials):
        for _ in range(max_resample + 1):
            bits = _draw(scheme, pop, rng, pi)
            l = int(bits.sum())
            if 0 < l < N:
                break
            resampled += 1
        else:
            raise DegenerateError(f"no non-degenerate draw within {max_resample} attempts")
        gaps[t] = math.fsum(E[bits == 1]) / l - pop_mean
        if rows is not None:
            rows.append((t, l, float(gaps[t])))
    if rows is not None:
        _write_trace(trace_path, rows)
    spread = float(E.max() - E.min())
    hw = spread * math.sqrt(math.log(2 / (1 - confidence)) / (2 * trials))
    return GapEstimate(float(gaps.mean()), float(np.abs(gaps).mean()), hw, trials, resampled, False)


def _write_trace(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "l_drawn", "gap"])
        for t, l, g in rows:
            w.writerow([t, l, repr(g)])
