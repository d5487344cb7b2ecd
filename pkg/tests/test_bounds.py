import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from finpop.bounds import (
    BoundParams,
    class_vc,
    conditional_half_check,
    lemma_check,
    lemma_threshold,
    theorem_bound,
    theorem_check,
    uprime_identity_check,
    vapnik_limit_bound,
)
from finpop.corpus import corpus_classes, corpus_population
from finpop.draws import DrawSpec, counting_measure, hypergeom_tail, paired_counting_measure
from finpop.errors import DimensionError, ParameterError
from finpop.hypotheses import HypothesisClass
from finpop.population import FinitePopulation


def test_theorem_bound_reference_values():
    p = BoundParams(64, 64, 1, 0.45)
    # 9 * 128 * exp(-0.45^2 * 64 * 1.5^2) = 1152 exp(-29.16)
    assert theorem_bound(p, "u") == pytest.approx(1152 * math.exp(-29.16), rel=1e-12)
    assert theorem_bound(p, "u") == pytest.approx(2.5e-10, rel=0.01)
    assert theorem_bound(p, "uprime") == pytest.approx(1152 * math.exp(-3.24), rel=1e-12)
    assert theorem_bound(p, "uprime") == pytest.approx(45.1, abs=0.1)
    assert vapnik_limit_bound(64, 1, 0.45) == theorem_bound(p, "uprime")


def test_k_to_infinity_limit():
    limit = vapnik_limit_bound(64, 1, 0.45)
    far = theorem_bound(BoundParams(64, 1e12, 1, 0.45), "u")
    assert abs(far - limit) / limit < 1e-6


@pytest.mark.parametrize(
    "args, name",
    [((10, 8, 1, 0.5), "k >= l"), ((4, 8, 1, 0.5), "l > 2/eps"), ((10, 10, 1, 0.0), "eps must be > 0")],
)
def test_bound_params_name_failing_constraint(args, name):
    with pytest.raises(ParameterError, match=name.replace("(", r"\(")):
        BoundParams(*args)
    assert not BoundParams(*args[:3], max(args[3], 1e-9), allow_out_of_regime=True).in_regime


def test_large_h_does_not_overflow():
    b = theorem_bound(BoundParams(400, 400, 50, 0.3), "uprime")
    assert math.isfinite(b) and b > 1


params = st.builds(
    lambda l, ratio, h, eps: (l, l * ratio, h, eps),
    st.integers(1, 500),
    st.floats(1.0, 100.0),
    st.integers(0, 30),
    st.floats(0.01, 1.0),
).filter(lambda t: t[0] * t[3] > 2)


@settings(max_examples=200)
@given(params)
def test_u_bound_never_exceeds_uprime_bound(t):
    p = BoundParams(*t)
    assert theorem_bound(p, "u") <= theorem_bound(p, "uprime")


@settings(max_examples=200)
@given(params, st.floats(1.001, 2.0))
def test_bound_decreasing_in_eps_increasing_in_h(t, scale):
    l, k, h, eps = t
    p = BoundParams(l, k, h, eps)
    for v in ("u", "uprime"):
        assert theorem_bound(BoundParams(l, k, h, eps * scale), v) < theorem_bound(p, v) or theorem_bound(p, v) == 0
        assert theorem_bound(BoundParams(l, k, h + 1, eps), v) > theorem_bound(p, v) or theorem_bound(p, v) == 0


@pytest.mark.parametrize("variant, c", [("u", 2.25), ("uprime", 0.25)])
def test_bound_decreasing_in_l_beyond_turning_point(variant, c):
    # for fixed l/k = 1 the log-bound is h log(2l) - eps^2 l c + const,
    # which decreases exactly when l > h / (eps^2 c)
    h, eps = 1, 0.45
    turn = h / (eps**2 * c)
    vals = [theorem_bound(BoundParams(l, l, h, eps), variant) for l in range(5, 200)]
    for l, (a, b) in zip(range(5, 200), zip(vals, vals[1:])):
        if l >= turn:
            assert b < a
        elif l + 1 <= turn:
            assert b > a


def test_uprime_identity_hand_example(urn4, all_zeros4):
    rep = uprime_identity_check(urn4, all_zeros4, [0, 1])
    assert rep.u == (Fraction(1, 2),)
    assert rep.v_tr == (1,)
    assert rep.uprime_direct == (0,) == rep.uprime_formula
    assert rep.exact_equal


def test_uprime_identity_fixed_points():
    pop = FinitePopulation.from_arrays(np.arange(6.0), [1, 0, 1, 0, 1, 0])
    rep = uprime_identity_check(pop, HypothesisClass.explicit([(0,) * 6]), [0, 1])
    assert rep.v_tr == rep.u and rep.uprime_direct == rep.u
    perfect = HypothesisClass.explicit([tuple(pop.y.tolist())])
    rep = uprime_identity_check(pop, perfect, [2, 3, 5])
    assert rep.u == rep.v_tr == rep.uprime_direct == (0,)


def test_uprime_identity_rejects_degenerate(urn4, all_zeros4):
    with pytest.raises(DimensionError):
        uprime_identity_check(urn4, all_zeros4, [])
    with pytest.raises(DimensionError):
        uprime_identity_check(urn4, all_zeros4, [0, 1, 2, 3])


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_uprime_identity_random(data):
    n = data.draw(st.integers(2, 12))
    y = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    pop = FinitePopulation.from_arrays(data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)), y)
    cls = HypothesisClass(data.draw(st.sampled_from(["threshold-1d", "interval-1d"])))
    train = data.draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n - 1))
    assert uprime_identity_check(pop, cls, sorted(train)).exact_equal


def test_lemma_thresholds():
    assert lemma_threshold("v1", "0.5", 4, 8) == Fraction(1, 2) * Fraction(1, 2) + Fraction(1, 2) * Fraction(1, 2)
    assert lemma_threshold("v2", "0.5", 4, 8) == Fraction(1, 4)


def test_lemma_regime_enforced():
    pop = corpus_population(10)
    cls = HypothesisClass("threshold-1d")
    with pytest.raises(ParameterError):
        lemma_check(pop, cls, "0.3", 5, "v1")
    rep = lemma_check(pop, cls, "0.3", 5, "v1", allow_out_of_regime=True)
    assert rep.out_of_regime


def test_lemma_zero_error_singleton_is_vacuous():
    pop = corpus_population(10)
    perfect = HypothesisClass.explicit([tuple(pop.y.tolist())])
    for v in ("v1", "v2"):
        rep = lemma_check(pop, perfect, "0.53", 5, v)
        assert rep.lhs == 0 and rep.rhs == 0 and rep.vacuous and rep.holds


def test_lemma_nontrivial_instance():
    pop = corpus_population(12)
    for _, cls in corpus_classes(12):
        for v in ("v1", "v2"):
            rep = lemma_check(pop, cls, "0.41", 5, v)
            assert rep.holds
            assert rep.lhs < rep.rhs or rep.vacuous


@pytest.mark.parametrize("N", [8, 10, 12])
def test_equal_halves_consistency(N):
    # with k = l the remainder is the test set, so u' = v_te and u - v_tr = (u' - v_tr)/2
    pop = corpus_population(N)
    l = N // 2
    for _, cls in corpus_classes(N):
        for e in ("0.19", "0.31", "0.43"):
            eps = Fraction(e)
            spec = DrawSpec(N, l)
            up = counting_measure(pop, cls, eps, "uprime_minus_vtr", spec).proportion
            assert up == paired_counting_measure(pop, cls, eps, spec).proportion
            assert counting_measure(pop, cls, eps / 2, "u_minus_vtr", spec).proportion == up
            v1 = lemma_check(pop, cls, eps / 2, l, "v1", allow_out_of_regime=True)
            v2 = lemma_check(pop, cls, eps, l, "v2", allow_out_of_regime=True)
            assert v1.factor == Fraction(3, 4) * eps
            assert v1.lhs == v2.lhs
            assert v1.rhs <= v2.rhs


def test_conditional_half_examples():
    r = conditional_half_check(10, 5, 6, "0.4")
    assert r.probability == Fraction(41, 42) and r.exceeds_half
    assert r.min_red_drawn == 2
    assert conditional_half_check(10, 0, 6, "0.4").probability == 1
    with pytest.raises(ParameterError):
        conditional_half_check(10, 5, 5, "0.4")  # eps*l/2 = 1
    with pytest.raises(ParameterError):
        conditional_half_check(10, 11, 6, "0.4")
    with pytest.raises(ParameterError):
        conditional_half_check(5, 2, 6, "0.4")


def test_theorem_check_uses_declared_vc():
    pop = corpus_population(10)
    checks = theorem_check(pop, HypothesisClass("interval-1d", declared_vc=2), "0.53", 5)
    assert {c.h for c in checks} == {2}
    assert class_vc(HypothesisClass("interval-1d"), pop) == 2
    assert all(c.holds for c in checks)
    assert all(c.vacuous for c in checks)
