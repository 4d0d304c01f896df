import math

import pytest
from scipy import stats

from spheretail.balls import (
    LEMMA1_CONSTANTS,
    centred_ball_prob,
    lemma3_rhs,
    lemma3_standard_grid,
    shifted_ball_prob,
    verify_lemma1,
    verify_lemma3,
    verify_lemma3_sweep,
)
from spheretail.errors import DomainError
from spheretail.specfun import chi_square_sf


def test_lemma1_minimum_sits_at_dimension_two():
    r1, r2 = verify_lemma1(200)
    assert r1.passed and r2.passed
    assert r1.details["argmin"] == 2 and r2.details["argmin"] == 2
    assert r1.details["minimum"] == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert r2.details["minimum"] == pytest.approx(math.exp(-2.0), rel=1e-14)
    assert r1.details["minimum"] > LEMMA1_CONSTANTS[0]
    assert r2.details["minimum"] > LEMMA1_CONSTANTS[1]


def test_lemma1_tail_tends_to_one_half():
    # the chi-square median sits just below the mean, so both tails approach 1/2 from below
    assert chi_square_sf(10_000, 10_000) == pytest.approx(0.5, abs=0.01)
    assert chi_square_sf(10_000, 10_000) < 0.5


def test_ball_probabilities_against_scipy():
    for d in (2, 5, 12):
        for R in (0.5, math.sqrt(d), 3.0 * math.sqrt(d)):
            assert centred_ball_prob(d, R) == pytest.approx(stats.chi2.cdf(R * R, d), rel=1e-11)
            assert shifted_ball_prob(d, 1.3, R) == pytest.approx(stats.ncx2.cdf(R * R, d, 1.69), rel=1e-9)


def test_shift_zero_is_centred():
    assert shifted_ball_prob(4, 0.0, 2.0) == pytest.approx(centred_ball_prob(4, 2.0), rel=1e-14)
    assert lemma3_rhs(4, 0.0, 3.0) == pytest.approx(centred_ball_prob(4, 3.0), rel=1e-14)


def test_lemma3_single_dimension_grid():
    a_grid, R_grid = lemma3_standard_grid(4)
    report, mono = verify_lemma3(4, a_grid, R_grid)
    assert report.passed and mono.passed
    assert report.checked == len(a_grid) * len(R_grid)


def test_lemma3_sweep_small_dimensions():
    report, mono = verify_lemma3_sweep(range(2, 6))
    assert report.passed and mono.passed
    assert report.envelope()["pass"] is True


def test_lemma3_needs_large_radius():
    with pytest.raises(DomainError):
        verify_lemma3(3, [0.0, 1.0], [1.0])
    with pytest.raises(DomainError):
        verify_lemma3(3, [1.0, 0.5], [math.sqrt(5)])


def test_lemma1_argument_check():
    with pytest.raises(DomainError):
        verify_lemma1(1)
