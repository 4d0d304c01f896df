import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from spheretail.compare import (
    C0,
    ComparisonResult,
    base_case_supremum,
    binomial_two_sided_tail,
    compare_general,
    compare_ko,
    counterexample,
    gaussian_side,
    proof_thresholds,
    random_instances,
    rows_from_csv,
    rows_to_csv,
    run_harness,
    search_constant,
    structured_families,
    theorem_check,
    trivial_threshold,
)
from spheretail.errors import DomainError, InternalError
from spheretail.specfun import chi_square_sf
from spheretail.spheresum import CoefficientVector, norm_distribution


def vec(d, *a):
    return CoefficientVector(d, a)


# the Gaussian side


def test_gaussian_side_closed_forms():
    assert gaussian_side(vec(2, 1.0), 1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert gaussian_side(vec(2, 1.0), 0.0) == 1.0
    assert gaussian_side(vec(4, 1.0, 1.0), math.sqrt(2.0)) == pytest.approx(3.0 * math.exp(-2.0), rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(
    d=st.integers(2, 40),
    a=st.lists(st.floats(0.05, 5.0), min_size=1, max_size=6),
    t=st.floats(0.0, 10.0),
    lam=st.floats(0.1, 10.0),
    data=st.data(),
)
def test_gaussian_side_invariances(d, a, t, lam, data):
    signs = data.draw(st.lists(st.sampled_from([-1.0, 1.0]), min_size=len(a), max_size=len(a)))
    base = gaussian_side(CoefficientVector(d, tuple(a)), t)
    flipped = CoefficientVector(d, tuple(s * x for s, x in zip(signs, reversed(a))))
    assert gaussian_side(flipped, t) == pytest.approx(base, rel=1e-12, abs=1e-300)
    scaled = CoefficientVector(d, tuple(lam * x for x in a))
    assert gaussian_side(scaled, lam * t) == pytest.approx(base, rel=1e-10, abs=1e-300)


# single comparisons


def test_single_summand_ratio():
    r = compare_ko(vec(2, 1.0), 0.5)
    assert r.lhs == 1.0
    assert r.rhs == pytest.approx(math.exp(-0.25), rel=1e-14)
    assert r.ratio == pytest.approx(math.exp(0.25), rel=1e-14)
    assert r.regime == "base-case"


@pytest.mark.parametrize("d", [2, 3, 5, 16, 200])
def test_single_summand_supremum(d):
    r = compare_ko(vec(d, 1.0), 1.0 - 1e-12)
    assert r.ratio == pytest.approx(base_case_supremum(d), rel=1e-9)
    assert r.ratio <= 33.0


def test_two_unit_vectors_in_the_plane():
    r = compare_ko(vec(2, 1.0, 1.0), 1.0)
    assert r.lhs == pytest.approx(2.0 / 3.0, abs=1e-6)
    assert r.rhs == pytest.approx(math.exp(-0.5), rel=1e-14)
    assert r.ratio == pytest.approx(1.0991, abs=1e-4)


def test_constant_radius_reduces_to_sphere_sum():
    c = vec(3, 1.0, 0.6)
    assert compare_general(c, "const:1", 0.9) == compare_ko(c, 0.9)
    half = compare_general(c, "const:0.5", 0.4)
    assert half.lhs == pytest.approx(compare_ko(c.scaled(0.5), 0.4).lhs, abs=1e-12)
    # the Gaussian side keeps the full coefficients
    assert half.rhs == gaussian_side(c, 0.4)


def test_t_must_be_positive():
    with pytest.raises(DomainError):
        compare_ko(vec(3, 1.0), 0.0)


def test_result_rejects_non_probabilities():
    with pytest.raises(InternalError):
        ComparisonResult(2, (1.0,), 1.0, 1.5, 0.5, 3.0, "main")
    with pytest.raises(DomainError):
        ComparisonResult(2, (1.0,), 1.0, 0.5, 0.5, 1.0, "unknown")


def test_underflowing_gaussian_side_goes_to_log_path():
    from spheretail.compare import _result

    c = vec(2, 1.0)
    # beyond the support: lhs = 0 and rhs = e^{-900}
    r = compare_ko(c, 30.0)
    assert r.log_path and r.lhs == 0.0 and r.ratio == 0.0
    assert not r.checked
    # a positive lhs against an underflowed rhs keeps its ratio in logs
    r = _result(c, 30.0, 1e-5, "base-case")
    assert r.log_path and r.checked and math.isinf(r.ratio)
    assert r.log_ratio == pytest.approx(math.log(1e-5) + 900.0, rel=1e-12)
    assert r.violates()


# regimes


def test_regime_split():
    c = vec(4, 3.0, 1.0, 1.0)
    scale, threshold = trivial_threshold(c)
    # sum_{i>=2} a_i^2 = 2 is rescaled to d = 4
    assert scale == pytest.approx(math.sqrt(2.0))
    assert threshold == pytest.approx(math.sqrt(6.0) * math.sqrt((18.0 + 4.0) / 4.0))
    boundary = threshold / scale
    assert proof_thresholds(c, 0.1) == "trivial-bound"
    assert proof_thresholds(c, boundary) == "trivial-bound"
    assert proof_thresholds(c, boundary * (1 + 1e-14)) == "trivial-bound"
    assert proof_thresholds(c, boundary * (1 + 1e-9)) == "main"
    assert proof_thresholds(c, 4.9) == "main"
    with pytest.raises(DomainError):
        proof_thresholds(vec(4, 1.0), 0.5)


@settings(max_examples=80, deadline=None)
@given(d=st.integers(2, 60), a=st.lists(st.floats(0.01, 10.0), min_size=2, max_size=8), frac=st.floats(0.0, 1.0))
def test_trivial_regime_gaussian_side_is_large(d, a, frac):
    c = CoefficientVector(d, tuple(a))
    scale, threshold = trivial_threshold(c)
    t = frac * threshold / scale
    if t > 0:
        assert proof_thresholds(c, t) == "trivial-bound"
        assert C0 * gaussian_side(c, t) >= 1.0


# counterexample


def test_binomial_tail_exact():
    assert binomial_two_sided_tail(100, 2.0) == pytest.approx(2.0 * stats.binom.sf(60, 100, 0.5), rel=1e-14)
    # |sum| > 2 sqrt(4) = 4 is impossible for four signs
    assert binomial_two_sided_tail(4, 2.0) == 0.0
    assert binomial_two_sided_tail(4, 1.0) == pytest.approx(2.0 / 16.0)


def test_counterexample_table():
    table = counterexample(100, range(2, 201))
    assert table.rows[0][1] == pytest.approx(math.exp(-4.0), rel=1e-14)
    assert table.rhs_decreasing
    d_star = table.first_violation
    assert d_star is not None and d_star <= 200
    row = table.rows[d_star - 2]
    assert table.lhs > C0 * row[1]
    assert all(not r[3] for r in table.rows[: d_star - 2])
    assert table.to_csv().splitlines()[0] == "d,lhs,rhs,c0_rhs,exceeds"


# harness


def test_instances_are_seeded():
    a = random_instances(5, 42)
    assert a == random_instances(5, 42)
    assert a != random_instances(5, 43)
    for c in a:
        assert 2 <= c.d <= 16 and 1 <= c.m <= 8 and all(0 < abs(x) <= 3 for x in c.a)


def test_harness_rows_and_csv_round_trip():
    instances = random_instances(3, 1)
    rows = run_harness(instances)
    assert len(rows) == 21 * len(instances)
    for r in rows:
        assert 0 < r.t <= 1.05 * CoefficientVector(r.d, r.coefficients).sum_abs + 1e-12
        assert r.ratio <= C0
    back = rows_from_csv(rows_to_csv(rows))
    for r, b in zip(rows, back):
        assert b["lhs"] == r.lhs and b["rhs"] == r.rhs and b["ratio"] == r.ratio
        assert b["coefficients"] == tuple(r.coefficients)


def test_harness_threads_do_not_change_rows():
    instances = random_instances(3, 2)
    assert run_harness(instances, threads=1) == run_harness(instances, threads=3)


def test_theorem_check_small():
    summary = theorem_check(5, seed=9)
    assert summary.passed
    out = summary.summary()
    assert out["max_ratio"] <= C0 and out["violations"] == 0


# search


def test_search_reaches_single_summand_supremum():
    res = search_constant(2, 1, 3, seed=0)
    assert res.best_ratio == pytest.approx(math.e, rel=1e-3)
    assert "empirical best ratio" in res.summary()["claim"]


def test_search_dominates_structured_families():
    d, m_max = 2, 3
    res = search_constant(d, m_max, 40, seed=1)
    for _, a in structured_families(m_max):
        c = CoefficientVector(d, a)
        law = norm_distribution(c)
        for q in (0.2, 0.5, 0.8):
            t = float(law.quantile(q)) if not law.is_atomic else 0.5
            assert compare_ko(c, t, law).ratio <= res.best_ratio + 1e-12
    assert res.best_ratio <= C0
    assert res.evaluations <= 40


def test_search_is_deterministic():
    a = search_constant(3, 3, 20, seed=5)
    b = search_constant(3, 3, 20, seed=5)
    assert a.best_ratio == b.best_ratio and a.witness == b.witness


def test_search_arguments():
    with pytest.raises(DomainError):
        search_constant(2, 0, 10)
    with pytest.raises(DomainError):
        search_constant(2, 2, 0)
