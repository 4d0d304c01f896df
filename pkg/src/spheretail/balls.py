"""Standard Gaussian measure of centred and shifted Euclidean balls in R^d."""
import math

import numpy as np

from .errors import DomainError
from .report import VerificationReport
from .specfun import chi_square_sf, noncentral_chi_square_cdf

LEMMA1_CONSTANTS = (1.0 / 33.0, 1.0 / 397.0)
BALL_TOL = 1e-9


def _check(d, *values):
    if int(d) != d or d < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {d!r}")
    for v in values:
        if not (math.isfinite(v) and v >= 0.0):
            raise DomainError(f"expected a finite nonnegative value, got {v!r}")
    return int(d)


def centred_ball_prob(d, R):
    """P(||G|| <= R)."""
    d = _check(d, R)
    return 1.0 - chi_square_sf(d, R * R)


def shifted_ball_prob(d, shift_norm, radius):
    """P(||G - x|| <= radius) for any x with ||x|| = shift_norm."""
    d = _check(d, shift_norm, radius)
    return noncentral_chi_square_cdf(d, shift_norm * shift_norm, radius * radius)


def lemma3_rhs(d, a, R):
    """h(a, R) = P(||G - a sqrt(d) e_1|| <= R sqrt(1 + a^2))."""
    return shifted_ball_prob(d, a * math.sqrt(d), R * math.sqrt(1.0 + a * a))


def verify_lemma1(d_max):
    """Check P(||G|| > sqrt d) >= 1/33 and P(||G|| > sqrt(d+2)) >= 1/397 for 2 <= d <= d_max."""
    if int(d_max) != d_max or d_max < 2:
        raise DomainError(f"d_max must be an integer >= 2, got {d_max!r}")
    grid = {"d": [2, int(d_max)]}
    c1, c2 = LEMMA1_CONSTANTS
    r1 = VerificationReport("lemma1.sqrt_d", grid, 0.0, details={"constant": c1})
    r2 = VerificationReport("lemma1.sqrt_d_plus_2", grid, 0.0, details={"constant": c2})
    best1 = (math.inf, None)
    best2 = (math.inf, None)
    for d in range(2, int(d_max) + 1):
        p1 = chi_square_sf(d, d)
        p2 = chi_square_sf(d, d + 2)
        # strict inequality required: a zero margin counts as a failure
        r1.update(p1 - c1 if p1 > c1 else -math.inf, d=d, value=p1)
        r2.update(p2 - c2 if p2 > c2 else -math.inf, d=d, value=p2)
        best1 = min(best1, (p1, d))
        best2 = min(best2, (p2, d))
    r1.details.update(minimum=best1[0], argmin=best1[1])
    r2.details.update(minimum=best2[0], argmin=best2[1])
    return [r1, r2]


def _a_grid_ok(d, R_grid):
    floor = math.sqrt(d + 2)
    for R in R_grid:
        if not R >= floor * (1.0 - 1e-15):
            raise DomainError(f"R = {R!r} violates R >= sqrt(d+2) = {floor!r}")


def verify_lemma3(d, a_grid, R_grid, tol=BALL_TOL, report=None, mono=None):
    """P(||G|| <= R) <= h(a, R) and monotonicity of h in a, on a grid.

    a_grid must be increasing; the monotonicity check compares successive
    entries.  Pass existing reports to accumulate several dimensions.
    """
    d = _check(d)
    _a_grid_ok(d, R_grid)
    a_grid = [float(a) for a in a_grid]
    if any(b <= a for a, b in zip(a_grid, a_grid[1:])):
        raise DomainError("a_grid must be strictly increasing")
    grid = {"d": d, "a": [a_grid[0], a_grid[-1], len(a_grid)], "R": [min(R_grid), max(R_grid), len(R_grid)]}
    if report is None:
        report = VerificationReport("lemma3.ball_comparison", grid, tol)
    if mono is None:
        mono = VerificationReport("lemma3.monotone_in_a", grid, tol)
    for R in R_grid:
        centred = centred_ball_prob(d, R)
        prev = None
        for a in a_grid:
            h = lemma3_rhs(d, a, R)
            report.update(h - centred, d=d, a=a, R=R)
            if prev is not None:
                mono.update(h - prev, d=d, a=a, R=R)
            prev = h
    return report, mono


def lemma3_standard_grid(d):
    a_grid = [round(0.1 * k, 10) for k in range(51)]
    R_grid = [math.sqrt(d + 2) + 0.25 * k for k in range(41)]
    return a_grid, R_grid


def verify_lemma3_sweep(d_values, tol=BALL_TOL):
    """Shifted-ball comparison over several dimensions, each on the standard (a, R) grid."""
    grid = {"d": list(d_values), "a": [0.0, 5.0, 0.1], "R": ["sqrt(d+2)", "sqrt(d+2)+10", 0.25]}
    report = VerificationReport("lemma3.ball_comparison", grid, tol)
    mono = VerificationReport("lemma3.monotone_in_a", grid, tol)
    for d in d_values:
        a_grid, R_grid = lemma3_standard_grid(d)
        verify_lemma3(d, a_grid, R_grid, tol, report, mono)
    return report, mono


def probe_small_radius(d, a_grid=None, scale=0.5):
    """Look for decreases of a -> h(a, R) at R = scale * sqrt(d), outside the hypothesis.

    Exploratory: returns the a-values where h dropped, with no pass/fail verdict.
    """
    d = _check(d)
    if a_grid is None:
        a_grid = np.linspace(0.0, 3.0, 61)
    R = scale * math.sqrt(d)
    values = [lemma3_rhs(d, float(a), R) for a in a_grid]
    drops = [float(a_grid[i]) for i in range(1, len(values)) if values[i] < values[i - 1] - 1e-12]
    return {"d": d, "R": R, "sign_changes": drops, "values": values}
