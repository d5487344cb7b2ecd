import itertools
import json
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finpop.corpus import corpus_classes, corpus_population
from finpop.draws import (
    DrawSpec,
    counting_measure,
    enumerate_draws,
    half_split_concentration,
    hoeffding_half_width,
    hypergeom_pmf,
    hypergeom_tail,
    hypergeometric,
    paired_counting_measure,
)
from finpop.errors import BudgetError, DimensionError, ParameterError
from finpop.hypotheses import HypothesisClass, effective_dichotomies
from finpop.population import FinitePopulation

from oracles import brute_counting_measure, brute_hypergeom_pmf, brute_paired_measure


def test_enumerate_draws_order():
    draws = list(enumerate_draws(4, 2))
    assert len(draws) == 6
    assert draws[0] == (0, 1) and draws[-1] == (2, 3)
    assert draws == list(itertools.combinations(range(4), 2))
    assert list(enumerate_draws(5, 5)) == [(0, 1, 2, 3, 4)]


def test_enumerate_draws_budget():
    assert comb(30, 15) == 155117520
    with pytest.raises(BudgetError, match="monte-carlo"):
        next(enumerate_draws(30, 15, budget=10**6))


def test_draw_spec_validation():
    with pytest.raises(DimensionError):
        DrawSpec(4, 5)
    with pytest.raises(ParameterError):
        DrawSpec(4, 2, "monte-carlo", trials=0, seed=1)
    with pytest.raises(ParameterError):
        DrawSpec(4, 2, "monte-carlo", trials=10)


def test_counting_measure_urn4(urn4, all_zeros4):
    res = counting_measure(urn4, all_zeros4, 0.4, "u_minus_vtr", DrawSpec(4, 2))
    assert (res.bad, res.total, res.proportion) == (2, 6, Fraction(1, 3))


def test_counting_measure_monte_carlo_urn4(urn4, all_zeros4):
    res = counting_measure(urn4, all_zeros4, 0.4, "u_minus_vtr", DrawSpec.monte_carlo(4, 2, 10**4, seed=17))
    assert res.total == 10**4
    assert abs(res.estimate - 1 / 3) <= res.ci_half_width
    assert res.ci_half_width == pytest.approx(hoeffding_half_width(10**4))


def test_zero_error_class_never_violates():
    pop = FinitePopulation.from_arrays(np.arange(8.0), [0, 0, 0, 1, 1, 1, 1, 1])
    perfect = HypothesisClass.explicit([tuple(pop.y.tolist())])
    for eps in (0.01, 0.3):
        for stat in ("u_minus_vtr", "uprime_minus_vtr"):
            assert counting_measure(pop, perfect, eps, stat, DrawSpec(8, 3)).bad == 0
        assert paired_counting_measure(pop, perfect, eps, DrawSpec(8, 3)).bad == 0


def test_uprime_needs_remainder(urn4, all_zeros4):
    with pytest.raises(DimensionError):
        counting_measure(urn4, all_zeros4, 0.4, "uprime_minus_vtr", DrawSpec(4, 4))


def test_paired_urn4(urn4, all_zeros4):
    res = paired_counting_measure(urn4, all_zeros4, 0.9, DrawSpec(4, 2))
    assert (res.bad, res.total, res.proportion) == (2, 6, Fraction(1, 3))
    assert paired_counting_measure(urn4, all_zeros4, 1, DrawSpec(4, 2)).bad == 0
    with pytest.raises(DimensionError):
        paired_counting_measure(urn4, all_zeros4, 0.5, DrawSpec(4, 3))


small_instance = st.integers(3, 7).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n),
        st.lists(st.lists(st.integers(0, 1), min_size=n, max_size=n), min_size=1, max_size=5),
        st.integers(1, n - 1),
        st.sampled_from(["0.05", "0.21", "0.33", "0.47", "0.61"]),
    )
)


@settings(max_examples=40, deadline=None)
@given(small_instance, st.sampled_from(["u_minus_vtr", "uprime_minus_vtr"]))
def test_counting_measure_matches_brute_force(inst, statistic):
    n, y, labs, l, e = inst
    pop = FinitePopulation.from_arrays(np.arange(n, dtype=float), y)
    cls = HypothesisClass.explicit(labs)
    got = counting_measure(pop, cls, e, statistic, DrawSpec(n, l))
    assert got.total == comb(n, l)
    assert got.proportion == brute_counting_measure(y, labs, l, Fraction(e), statistic)


@settings(max_examples=30, deadline=None)
@given(small_instance)
def test_paired_matches_brute_force(inst):
    n, y, labs, l, e = inst
    l = max(1, min(l, n // 2))
    pop = FinitePopulation.from_arrays(np.arange(n, dtype=float), y)
    got = paired_counting_measure(pop, HypothesisClass.explicit(labs), e, DrawSpec(n, l))
    assert got.total == comb(n, l) * comb(n - l, l)
    assert got.proportion == brute_paired_measure(y, labs, l, Fraction(e))


@pytest.mark.parametrize("workers", [2, 3, 4])
def test_parallel_exhaustive_equals_serial(workers):
    pop = corpus_population(14)
    cls = HypothesisClass("interval-1d")
    serial = counting_measure(pop, cls, "0.23", "u_minus_vtr", DrawSpec(14, 7))
    par = counting_measure(pop, cls, "0.23", "u_minus_vtr", DrawSpec(14, 7, workers=workers))
    assert serial == par
    # chunk boundaries land mid-stream as well
    from finpop.draws import counting_measure_from_errors, error_matrix
    import finpop.draws as draws_mod

    Err = error_matrix(pop, effective_dichotomies(cls, pop))
    assert draws_mod._run_exhaustive(14, 7, workers, lambda idx: len(idx), chunk=97) == comb(14, 7)
    assert counting_measure_from_errors(Err, "0.23", "u_minus_vtr", DrawSpec(14, 7, workers=workers)) == serial


def test_monte_carlo_bit_identical_across_workers():
    pop = corpus_population(12)
    cls = HypothesisClass("threshold-1d")
    runs = [
        counting_measure(pop, cls, "0.21", "uprime_minus_vtr", DrawSpec.monte_carlo(12, 5, 30_001, seed=9, workers=w))
        for w in (1, 4, 1, 3)
    ]
    assert all(r == runs[0] for r in runs)
    pairs = [paired_counting_measure(pop, cls, "0.3", DrawSpec.monte_carlo(12, 5, 20_000, seed=2, workers=w)) for w in (1, 4)]
    assert pairs[0] == pairs[1]
    other = counting_measure(pop, cls, "0.21", "uprime_minus_vtr", DrawSpec.monte_carlo(12, 5, 30_001, seed=10))
    assert other.bad != runs[0].bad


def test_monte_carlo_paired_agrees_with_exhaustive():
    pop = corpus_population(10)
    cls = HypothesisClass("interval-1d")
    exact = paired_counting_measure(pop, cls, "0.45", DrawSpec(10, 4)).proportion
    mc = paired_counting_measure(pop, cls, "0.45", DrawSpec.monte_carlo(10, 4, 50_000, seed=4))
    assert abs(mc.estimate - float(exact)) <= mc.ci_half_width


@pytest.mark.parametrize("statistic", ["u_minus_vtr", "uprime_minus_vtr"])
def test_monotone_in_epsilon(statistic):
    pop = corpus_population(10)
    for _, cls in corpus_classes(10):
        vals = [counting_measure(pop, cls, e / 100, statistic, DrawSpec(10, 4)).proportion for e in range(1, 100, 3)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_result_json_fields(urn4, all_zeros4):
    res = counting_measure(urn4, all_zeros4, 0.4, "u_minus_vtr", DrawSpec(4, 2))
    js = json.loads(json.dumps(res.to_json()))
    assert js == {
        "bad": 2,
        "total": 6,
        "proportion_num": 1,
        "proportion_den": 3,
        "estimate": 1 / 3,
        "ci_half_width": 0.0,
        "mode": "exhaustive",
        "seed": None,
    }


def test_hypergeometric_examples():
    assert hypergeometric(4, 2, 2, 1) == Fraction(2, 3) == brute_hypergeom_pmf(4, 2, 2, 1)
    assert hypergeometric(10, 5, 6, 2, "tail_at_least") == Fraction(41, 42)
    # only one red drawn is excluded: C(5,1) C(5,5) / C(10,6) = 5/210
    assert 1 - Fraction(5, 210) == Fraction(41, 42)
    assert hypergeom_pmf(10, 5, 6, 0) == 0
    assert hypergeom_tail(10, 5, 6, -3) == 1
    assert hypergeom_tail(10, 5, 6, 7) == 0
    with pytest.raises(ParameterError):
        hypergeometric(4, 5, 2, 1)


@settings(max_examples=60)
@given(st.integers(0, 9).flatmap(lambda N: st.tuples(st.just(N), st.integers(0, N), st.integers(0, N))))
def test_hypergeometric_normalised_and_brute(urn):
    N, K, n = urn
    pmf = [hypergeom_pmf(N, K, n, k) for k in range(n + 1)]
    assert sum(pmf) == 1
    assert pmf == [brute_hypergeom_pmf(N, K, n, k) for k in range(n + 1)]
    for k in range(n + 2):
        assert hypergeom_tail(N, K, n, k) == sum(pmf[k:], Fraction(0))


def test_half_split_examples():
    assert half_split_concentration([1, 1, 0, 0], 0.5) == Fraction(2, 3)
    assert half_split_concentration([1, 0, 1, 1, 0, 0], 1) == 1
    assert half_split_concentration([1] * 6, 0) == 1
    assert half_split_concentration([0] * 4, 0.2) == 1
    with pytest.raises(DimensionError):
        half_split_concentration([1, 0, 1], 0.5)


def half_split_via_hypergeometric(n, K, eps: Fraction) -> Fraction:
    m = n // 2
    return sum((hypergeom_pmf(n, K, m, j) for j in range(m + 1) if abs(Fraction(2 * j - K, m)) <= eps), Fraction(0))


@pytest.mark.parametrize("n", [2, 4, 6, 8, 10, 12, 14, 16])
def test_half_split_equals_hypergeometric_tail(n):
    rng = np.random.default_rng(n)
    for K in range(n + 1):
        labels = rng.permutation([1] * K + [0] * (n - K))
        for e in ("0", "0.1", "0.26", "0.5", "0.74", "1"):
            assert half_split_concentration(labels, e) == half_split_via_hypergeometric(n, K, Fraction(e))
