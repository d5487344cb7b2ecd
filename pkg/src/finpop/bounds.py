"""Generalisation bounds for finite urns and exact checks of the
symmetrisation argument behind them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .draws import (
    CountingMeasureResult,
    DrawSpec,
    counting_measure_from_errors,
    error_matrix,
    hypergeom_tail,
    paired_counting_measure_from_errors,
)
from .errors import DimensionError, ParameterError
from .exact import as_fraction, ceil_int
from .hypotheses import HypothesisClass, effective_dichotomies, vc_dimension
from .population import FinitePopulation

VARIANTS = ("u", "uprime")


@dataclass(frozen=True)
class BoundParams:
    """Train size ``l``, remainder size ``k``, VC dimension ``h`` and ``eps``.

    The bounds are stated for ``k >= l > 2/eps``; ``allow_out_of_regime``
    skips that check for exploratory runs.
    """

    l: int
    k: float
    h: int
    eps: float
    allow_out_of_regime: bool = False

    def __post_init__(self):
        if not self.eps > 0:
            raise ParameterError(f"eps must be > 0 (got {self.eps})")
        if self.h < 0:
            raise ParameterError(f"h must be >= 0 (got {self.h})")
        if self.l < 1:
            raise ParameterError(f"l must be >= 1 (got {self.l})")
        if self.allow_out_of_regime:
            return
        if not self.k >= self.l:
            raise ParameterError(f"constraint k >= l violated (k={self.k}, l={self.l})")
        if not self.l * self.eps > 2:
            raise ParameterError(f"constraint l > 2/eps violated (l={self.l}, 2/eps={2 / self.eps:.6g})")

    @property
    def in_regime(self) -> bool:
        return self.k >= self.l and self.l * self.eps > 2


def _log_prefactor(l: int, h: int) -> float:
    # log of 9 (2l)^h / h!
    return math.log(9) + h * math.log(2 * l) - math.lgamma(h + 1)


def log_theorem_bound(params: BoundParams, variant: str = "u") -> float:
    l, k, eps = params.l, params.k, float(params.eps)
    if variant == "u":
        c = (0.5 + l / k) ** 2
    elif variant == "uprime":
        c = 0.25
    else:
        raise ParameterError(f"variant must be one of {VARIANTS}")
    return _log_prefactor(l, params.h) - eps * eps * l * c


def theorem_bound(params: BoundParams, variant: str = "u") -> float:
    """Upper bound on the share of draws whose generalisation gap exceeds eps.

    ``u``: ``9 (2l)^h/h! exp(-eps^2 l (1/2 + l/k)^2)``, for ``|u - v_tr|``.
    ``uprime``: ``9 (2l)^h/h! exp(-eps^2 l / 4)``, for ``|u' - v_tr|``.
    """
    return math.exp(log_theorem_bound(params, variant))


def vapnik_limit_bound(l: int, h: int, eps: float) -> float:
    """The ``k -> infinity`` limit of :func:`theorem_bound`."""
    if not l * eps > 2:
        raise ParameterError(f"constraint l > 2/eps violated (l={l}, eps={eps})")
    return math.exp(_log_prefactor(l, h) - eps * eps * l / 4)


def class_vc(cls: HypothesisClass, pop: FinitePopulation) -> int:
    """VC dimension used in bounds: declared if set, else measured on ``pop``.

    The population-restricted value can understate the class's abstract one.
    """
    return cls.declared_vc if cls.declared_vc is not None else vc_dimension(cls, pop)


# --- u' identity -----------------------------------------------------------


@dataclass(frozen=True)
class UprimeReport:
    u: tuple[Fraction, ...]
    v_tr: tuple[Fraction, ...]
    uprime_direct: tuple[Fraction, ...]
    uprime_formula: tuple[Fraction, ...]
    exact_equal: bool


def uprime_identity_check(
    pop: FinitePopulation,
    cls: HypothesisClass,
    train_indices: Sequence[int],
    dichotomies: np.ndarray | None = None,
) -> UprimeReport:
    """Compare the remainder error rate counted directly with
    ``u + (l/k)(u - v_tr)``, for every effective dichotomy."""
    N = pop.N
    train = sorted(set(int(i) for i in train_indices))
    if len(train) != len(train_indices):
        raise DimensionError("train indices must be distinct")
    l = len(train)
    k = N - l
    if l == 0 or k == 0:
        raise DimensionError(f"train draw and remainder must both be non-empty (l={l}, N={N})")
    if train[0] < 0 or train[-1] >= N:
        raise DimensionError("train index out of range")
    D = effective_dichotomies(cls, pop) if dichotomies is None else dichotomies
    wrong = D != pop.y[None, :]
    mask = np.zeros(N, dtype=bool)
    mask[train] = True
    whole = wrong.sum(axis=1).tolist()
    in_train = wrong[:, mask].sum(axis=1).tolist()
    in_rest = wrong[:, ~mask].sum(axis=1).tolist()
    u = tuple(Fraction(w, N) for w in whole)
    v = tuple(Fraction(t, l) for t in in_train)
    direct = tuple(Fraction(r, k) for r in in_rest)
    formula = tuple(a + Fraction(l, k) * (a - b) for a, b in zip(u, v))
    return UprimeReport(u, v, direct, formula, direct == formula)


# --- symmetrisation lemmata ------------------------------------------------


@dataclass(frozen=True)
class LemmaReport:
    version: str
    lhs: Fraction | float
    rhs: Fraction | float
    factor: Fraction
    holds: bool
    vacuous: bool
    out_of_regime: bool
    eps: Fraction
    l: int
    k: int
    population: dict = field(default_factory=dict)
    hypothesis_class: dict = field(default_factory=dict)
    lhs_result: CountingMeasureResult | None = None
    rhs_result: CountingMeasureResult | None = None


def lemma_threshold(version: str, eps, l: int, k: int) -> Fraction:
    """Right-hand-side threshold: ``(1/2 + l/k) eps`` (v1) or ``eps/2`` (v2)."""
    eps = as_fraction(eps)
    if version == "v1":
        return (Fraction(1, 2) + Fraction(l, k)) * eps
    if version == "v2":
        return eps / 2
    raise ParameterError("version must be 'v1' or 'v2'")


def lemma_check(
    pop: FinitePopulation,
    cls: HypothesisClass,
    eps,
    l: int,
    version: str,
    spec: DrawSpec | None = None,
    *,
    allow_out_of_regime: bool = False,
    error_mat: np.ndarray | None = None,
) -> LemmaReport:
    """Evaluate both sides of a symmetrisation lemma.

    lhs is the share of draws with ``sup |u - v_tr| > eps`` (v1) or
    ``sup |u' - v_tr| > eps`` (v2); rhs is twice the share of train/test pairs
    with ``sup |v_te - v_tr|`` above the version's threshold.
    """
    eps = as_fraction(eps)
    N = pop.N
    k = N - l
    if eps <= 0:
        raise ParameterError("eps must be > 0")
    if not 1 <= l < N:
        raise DimensionError(f"l={l} must satisfy 1 <= l < N={N}")
    in_regime = k >= l and l * eps > 2
    if not in_regime and not allow_out_of_regime:
        raise ParameterError(f"lemma regime k >= l > 2/eps violated (l={l}, k={k}, eps={eps})")
    if 2 * l > N:
        raise DimensionError(f"paired draws need 2l <= N (l={l}, N={N})")
    spec = spec or DrawSpec.exhaustive(N, l)
    if (spec.N, spec.l) != (N, l):
        raise DimensionError("draw spec does not match population size and l")
    Err = error_mat if error_mat is not None else error_matrix(pop, effective_dichotomies(cls, pop))
    statistic = "u_minus_vtr" if version == "v1" else "uprime_minus_vtr"
    factor = lemma_threshold(version, eps, l, k)
    left = counting_measure_from_errors(Err, eps, statistic, spec)
    right = paired_counting_measure_from_errors(Err, factor, spec)
    lhs = left.value
    rhs = 2 * right.value
    vacuous = lhs == 0 and rhs == 0
    return LemmaReport(
        version=version,
        lhs=lhs,
        rhs=rhs,
        factor=factor,
        holds=bool(lhs < rhs or vacuous),
        vacuous=vacuous,
        out_of_regime=not in_regime,
        eps=eps,
        l=l,
        k=k,
        population={"N": N},
        hypothesis_class=cls.describe(),
        lhs_result=left,
        rhs_result=right,
    )


# --- the 1/2-probability step ----------------------------------------------


@dataclass(frozen=True)
class HalfCheck:
    probability: Fraction
    exceeds_half: bool
    min_red_drawn: int


def conditional_half_check(k: int, red: int, l: int, eps) -> HalfCheck:
    """Chance of drawing at least ``ceil((red/k - eps/2) l)`` red balls in
    ``l`` draws from ``k`` balls of which ``red`` are red."""
    eps = as_fraction(eps)
    if not eps * l / 2 > 1:
        raise ParameterError(f"need eps*l/2 > 1 (eps={eps}, l={l})")
    if not 1 <= l <= k:
        raise ParameterError(f"need 1 <= l <= k (l={l}, k={k})")
    if not 0 <= red <= k:
        raise ParameterError(f"need 0 <= red <= k (red={red}, k={k})")
    need = ceil_int((Fraction(red, k) - eps / 2) * l)
    p = hypergeom_tail(k, red, l, need)
    return HalfCheck(p, p > Fraction(1, 2), need)


# --- theorem check ---------------------------------------------------------


@dataclass(frozen=True)
class TheoremCheck:
    variant: str
    measure: CountingMeasureResult
    bound: float
    vacuous: bool
    holds: bool
    h: int


def theorem_check(
    pop: FinitePopulation,
    cls: HypothesisClass,
    eps,
    l: int,
    spec: DrawSpec | None = None,
    *,
    h: int | None = None,
    allow_out_of_regime: bool = False,
    error_mat: np.ndarray | None = None,
) -> list[TheoremCheck]:
    """Counting measure of both statistics against the matching bound."""
    N = pop.N
    h = class_vc(cls, pop) if h is None else h
    eps_f = as_fraction(eps)
    params = BoundParams(l, N - l, h, float(eps_f), allow_out_of_regime)
    spec = spec or DrawSpec.exhaustive(N, l)
    Err = error_mat if error_mat is not None else error_matrix(pop, effective_dichotomies(cls, pop))
    out = []
    for variant, statistic in (("u", "u_minus_vtr"), ("uprime", "uprime_minus_vtr")):
        res = counting_measure_from_errors(Err, eps_f, statistic, spec)
        b = theorem_bound(params, variant)
        out.append(TheoremCheck(variant, res, b, b >= 1, bool(res.value <= b), h))
    return out
