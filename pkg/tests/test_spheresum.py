import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spheretail.errors import ConfigError, DomainError
from spheretail.laplace import jd_zero
from spheretail.specfun import chi_square_sf
from spheretail.spheresum import (
    CoefficientVector,
    NormDistribution,
    RadialLaw,
    ThetaLaw,
    ball_mixture_distribution,
    lemma4_quadrature,
    lemma4_transform,
    mc_survival,
    norm_distribution,
    point_mass,
    propagate,
    radial_mixture_by_steps,
    radial_mixture_distribution,
    sample_norm,
    survival,
    theta_cdf,
    theta_moments,
    verify_monte_carlo,
    verify_shift_consistency,
)


# direction law


@pytest.mark.parametrize("d", [2, 3, 4, 7, 16, 100])
def test_theta_moments(d):
    mean, second = theta_moments(d)
    assert abs(mean) <= 1e-12
    assert second == pytest.approx(1.0 / d, abs=1e-10)


@pytest.mark.parametrize("d", [2, 3, 8, 30])
def test_theta_normaliser_matches_jd(d):
    assert ThetaLaw(d).normaliser == pytest.approx(1.0 / jd_zero(d - 3), rel=1e-12)


def test_theta_cdf_closed_forms():
    u = np.linspace(-1, 1, 11)
    # uniform for d = 3, arcsine for d = 2
    np.testing.assert_allclose(theta_cdf(3, u), (1 + u) / 2, atol=1e-15)
    np.testing.assert_allclose(theta_cdf(2, u), 1 - np.arccos(u) / np.pi, atol=1e-14)


# closed-form laws


def test_two_unit_vectors_in_the_plane():
    law = norm_distribution(CoefficientVector(2, (1.0, 1.0)))
    assert survival(law, 1.0) == pytest.approx(2.0 / 3.0, abs=1e-6)
    for t in (0.3, 1.5, 1.9):
        assert survival(law, t) == pytest.approx(2.0 / math.pi * math.acos(t / 2.0), abs=1e-6)


def test_two_unit_vectors_in_space():
    # ||xi_1 + xi_2||^2 is uniform on [0, 4]
    law = norm_distribution(CoefficientVector(3, (1.0, 1.0)))
    for t in (0.5, 1.0, 1.7):
        assert survival(law, t) == pytest.approx(1.0 - t * t / 4.0, abs=1e-6)


def test_three_unit_vectors_in_space():
    # density of the norm: t^2/2 on [0,1], t(3-t)/4 on [1,3]
    law = norm_distribution(CoefficientVector(3, (1.0, 1.0, 1.0)))
    assert survival(law, 1.0) == pytest.approx(5.0 / 6.0, abs=1e-6)
    assert survival(law, 2.0) == pytest.approx(7.0 / 24.0, abs=1e-6)
    assert survival(law, 0.5) == pytest.approx(1.0 - 0.5 ** 3 / 6.0, abs=1e-6)


def test_single_summand_is_a_step():
    law = norm_distribution(CoefficientVector(5, (-2.5,)))
    assert law.is_atomic
    assert survival(law, 2.4999) == 1.0
    assert survival(law, 2.5) == 0.0
    assert survival(law, 0.0) == 1.0


def test_step_from_zero_is_a_point_mass():
    law = propagate(point_mass(3, 0.0), 1.7)
    assert law.is_atomic and law.atoms == ((1.7, 1.0),)


def test_support_and_normalisation():
    c = CoefficientVector(4, (1.0, -0.5, 0.25))
    law = norm_distribution(c)
    assert law.support_max == pytest.approx(c.sum_abs, rel=1e-15)
    assert law.support_min == pytest.approx(0.25, rel=1e-12)
    assert law.cdf[-1] == 1.0 and law.cdf[0] == 0.0
    assert np.all(np.diff(law.cdf) >= 0)
    assert np.all(np.diff(law.grid) > 0)
    np.testing.assert_allclose(law.cdf + law.sf, 1.0, atol=1e-12)
    assert survival(law, 0.0) == 1.0
    assert survival(law, c.sum_abs) == 0.0


def test_mean_square_is_sum_of_squares():
    c = CoefficientVector(6, (1.0, 0.7, -0.3))
    assert norm_distribution(c).mean_square() == pytest.approx(c.sum_sq, rel=1e-6)


# invariances


@pytest.mark.parametrize("lam", [0.5, 2.0, 10.0])
def test_scale_equivariance(lam):
    c = CoefficientVector(5, (1.0, 0.6, 0.3))
    base = norm_distribution(c)
    scaled = norm_distribution(c.scaled(lam))
    for t in np.linspace(0.1, 1.8, 9):
        assert survival(scaled, lam * t) == pytest.approx(survival(base, t), abs=1e-8)


def test_permutation_and_sign_invariance():
    a = norm_distribution(CoefficientVector(4, (1.0, 0.4, 0.7)))
    b = norm_distribution(CoefficientVector(4, (-0.7, 1.0, -0.4)))
    np.testing.assert_allclose(a.grid, b.grid, atol=1e-10)
    np.testing.assert_allclose(a.cdf, b.cdf, atol=1e-10)


@pytest.mark.parametrize("d", [2, 5, 10])
def test_gaussian_limit_band(d):
    m = 64
    law = norm_distribution(CoefficientVector(d, (1.0 / math.sqrt(m),) * m))
    for t in np.linspace(0.5, 1.5, 11):
        assert abs(survival(law, t) - chi_square_sf(d, t * t * d)) < 0.01


# the shift transform


def test_arc_length_anchor():
    # unit circle shifted by 0.5: the part outside radius 1.2 has angle arccos(0.19)
    assert lemma4_transform(point_mass(2, 1.0), 0.5, 1.2) == pytest.approx(math.acos(0.19) / math.pi, abs=1e-6)


def test_zero_shift_is_plain_survival():
    law = norm_distribution(CoefficientVector(3, (1.0, 0.5)))
    assert lemma4_transform(law, 0.0, 0.8) == survival(law, 0.8)


def test_shift_needs_t_beyond_it():
    law = norm_distribution(CoefficientVector(3, (1.0, 0.5)))
    with pytest.raises(DomainError):
        lemma4_transform(law, 1.0, 1.0)


def test_two_evaluation_orders_agree():
    a = (1.2, 0.8, 0.5)
    full = norm_distribution(CoefficientVector(6, a))
    rest = norm_distribution(CoefficientVector(6, a[1:]))
    for t in (1.3, 1.8, 2.2):
        assert lemma4_transform(rest, 1.2, t) == pytest.approx(survival(full, t), abs=1e-6)


def test_plain_theta_rule_on_a_smooth_law():
    # in high dimension the law is smooth and the Gauss-Jacobi rule alone is accurate
    rest = norm_distribution(CoefficientVector(12, (1.0, 0.9, 0.8)))
    for t in (1.3, 1.6):
        assert lemma4_quadrature(rest, 0.4, t) == pytest.approx(lemma4_transform(rest, 0.4, t), abs=1e-5)


def test_shift_consistency_report():
    report = verify_shift_consistency(6, seed=3)
    assert report.passed, report.envelope()


# Monte Carlo


def test_sampler_is_deterministic_and_checks_input():
    c = CoefficientVector(3, (1.0, 2.0))
    np.testing.assert_array_equal(sample_norm(c, 1000, 5), sample_norm(c, 1000, 5))
    assert not np.array_equal(sample_norm(c, 1000, 5), sample_norm(c, 1000, 6))
    with pytest.raises(DomainError):
        sample_norm(c, 0, 1)


def test_sampler_single_summand_and_second_moment():
    c = CoefficientVector(4, (-1.5,))
    np.testing.assert_allclose(sample_norm(c, 100, 0), 1.5, rtol=1e-15)
    c = CoefficientVector(4, (1.0, 0.5, -2.0))
    s2 = sample_norm(c, 200_000, 9) ** 2
    assert abs(s2.mean() - c.sum_sq) < 4 * s2.std() / math.sqrt(len(s2))


def test_monte_carlo_survival_two_dimensions():
    s = sample_norm(CoefficientVector(2, (1.0, 1.0)), 400_000, 1)
    p, se = mc_survival(s, 1.0)
    assert abs(p[0] - 2.0 / 3.0) < 4 * se[0]


def test_five_dimensions_against_ten_million_samples():
    c = CoefficientVector(5, (1.0 / math.sqrt(3),) * 3)
    law = norm_distribution(c)
    p, se = mc_survival(sample_norm(c, 10_000_000, 2024), 1.0)
    assert abs(survival(law, 1.0) - p[0]) < 4 * se[0]


def test_monte_carlo_report_small():
    report = verify_monte_carlo(4, 200_000, seed=5)
    assert report.passed, report.envelope()


# radial mixtures


def test_radial_constant_one_is_the_sphere_sum():
    c = CoefficientVector(3, (1.0, 0.5, 0.25))
    a = radial_mixture_distribution(c, "const:1")
    b = norm_distribution(c)
    np.testing.assert_array_equal(a.cdf, b.cdf)


def test_radial_constant_scales():
    c = CoefficientVector(3, (1.0, 0.5))
    law = radial_mixture_distribution(c, RadialLaw("const", (0.5,)))
    ref = norm_distribution(c.scaled(0.5))
    for t in (0.3, 0.5, 0.7):
        assert survival(law, t) == pytest.approx(survival(ref, t), abs=1e-12)


def test_uniform_ball_against_ten_million_samples():
    c = CoefficientVector(2, (1.0, 1.0))
    law = radial_mixture_distribution(c, "ball")
    p, se = mc_survival(sample_norm(c, 10_000_000, 77, radial="ball"), 0.8)
    assert abs(survival(law, 0.8) - p[0]) < 4 * se[0]


@pytest.mark.parametrize("d,a", [(2, (1.0, 0.6)), (5, (1.0, 0.7, 0.4))])
def test_ball_projection_agrees_with_radial_quadrature(d, a):
    c = CoefficientVector(d, a)
    fast = ball_mixture_distribution(c)
    slow = radial_mixture_by_steps(c, "ball")
    ts = np.linspace(0.05, 0.95 * c.sum_abs, 15)
    np.testing.assert_allclose(fast.sf_at(ts), slow.sf_at(ts), atol=1e-4)


def test_single_ball_summand_closed_form():
    law = radial_mixture_distribution(CoefficientVector(3, (2.0,)), "ball")
    # P(2 U^{1/3} > t) = 1 - (t/2)^3
    for t in (0.5, 1.0, 1.9):
        assert survival(law, t) == pytest.approx(1.0 - (t / 2.0) ** 3, abs=1e-7)


def test_two_point_mixture_against_samples():
    c = CoefficientVector(4, (1.0, 0.8, 0.5))
    law = radial_mixture_distribution(c, "twopoint:0.3,1,0.4")
    ts = np.linspace(0.1, 2.2, 8)
    p, se = mc_survival(sample_norm(c, 1_000_000, 13, radial="twopoint:0.3,1,0.4"), ts)
    assert np.all(np.abs(law.sf_at(ts) - p) < 4 * se)


@pytest.mark.parametrize("text", ["const:1.5", "const:0", "twopoint:0.5,1.2,0.5", "twopoint:0.5,1,2", "ball:1", "disk"])
def test_radial_support_must_lie_in_unit_interval(text):
    with pytest.raises(DomainError):
        RadialLaw.parse(text)


# validation and serialisation


def test_coefficient_validation():
    with pytest.raises(DomainError):
        CoefficientVector(1, (1.0,))
    with pytest.raises(DomainError):
        CoefficientVector(3, ())
    with pytest.raises(DomainError):
        CoefficientVector(3, (1.0, 0.0))
    with pytest.raises(DomainError):
        CoefficientVector(3, (float("inf"),))
    with pytest.raises(DomainError):
        propagate(point_mass(3, 1.0), 0.0)


def test_grid_size_floor():
    from spheretail.spheresum import propagate_steps

    with pytest.raises(ConfigError):
        propagate_steps(point_mass(3, 1.0), [(1.0, 1.0)], grid_size=16)


def test_round_trip_json_and_csv():
    law = norm_distribution(CoefficientVector(3, (1.0, 0.5, 0.2)))
    back = NormDistribution.from_json(law.to_json())
    np.testing.assert_array_equal(back.grid, law.grid)
    np.testing.assert_array_equal(back.cdf, law.cdf)
    assert back.knots == law.knots and back.coefficients == law.coefficients
    again = NormDistribution.from_csv(law.to_csv(), d=3)
    np.testing.assert_array_equal(again.sf, law.sf)
    assert survival(again, 0.9) == survival(law, 0.9)


@settings(max_examples=12, deadline=None)
@given(
    d=st.integers(2, 9),
    a=st.lists(st.floats(0.2, 2.0), min_size=2, max_size=3),
    q=st.floats(0.05, 0.95),
)
def test_survival_monotone_and_bracketed(d, a, q):
    c = CoefficientVector(d, tuple(a))
    law = norm_distribution(c, 1024)
    t = np.sort(np.linspace(0, c.sum_abs, 50))
    s = law.sf_at(t)
    assert np.all(np.diff(s) <= 1e-15)
    assert np.all((s >= 0) & (s <= 1))
    qt = float(law.quantile(q))
    assert law.cdf_at(np.array([qt]))[0] == pytest.approx(q, abs=1e-6)
