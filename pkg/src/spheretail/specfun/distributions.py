"""Normal, central and noncentral chi-square distribution functions."""
import math

import numpy as np

from ..errors import ConvergenceError, DomainError
from .gamma import (
    _lower_upper,
    clamp_probability,
    log_poisson_term,
    log_reg_gamma_upper,
    reg_gamma_upper,
)

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Poisson weights below this (relative to the mode) are treated as negligible.
NONCENTRAL_TERM_CUTOFF = 1e-16
NONCENTRAL_MAX_TERMS = 1_000_000


def std_normal_cdf(t):
    return 0.5 * math.erfc(-float(t) / _SQRT2)


def std_normal_pdf(t):
    t = float(t)
    return _INV_SQRT_2PI * math.exp(-0.5 * t * t)


def _check_dof(d):
    if int(d) != d or d < 1:
        raise DomainError(f"degrees of freedom must be an integer >= 1, got {d!r}")
    return int(d)


def chi_square_sf(d, x):
    """P(chi^2_d > x)."""
    d = _check_dof(d)
    return reg_gamma_upper(0.5 * d, 0.5 * x)


def chi_square_cdf(d, x):
    d = _check_dof(d)
    return 1.0 - chi_square_sf(d, x) if x > 0 else 0.0


def log_chi_square_sf(d, x):
    d = _check_dof(d)
    return log_reg_gamma_upper(0.5 * d, 0.5 * x)


def noncentral_chi_square_cdf(d, lam, x):
    """P(chi'^2_d(lam) <= x) as a Poisson(lam/2) mixture of central CDFs.

    The mixture is centred on the Poisson mode j* and widened in both
    directions until the boundary weights drop below NONCENTRAL_TERM_CUTOFF.
    The central CDFs along the window come from the exact one-step recurrences
    P(s+1, y) = P(s, y) - y^s e^{-y}/Gamma(s+1), anchored at j*, which keeps the
    absolute error at rounding level.
    """
    d = _check_dof(d)
    lam = float(lam)
    x = float(x)
    if not (math.isfinite(lam) and lam >= 0.0):
        raise DomainError(f"noncentrality must be finite and >= 0, got {lam!r}")
    if math.isnan(x) or x < 0.0:
        raise DomainError(f"x must be >= 0, got {x!r}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if lam == 0.0:
        return clamp_probability(_lower_upper(0.5 * d, 0.5 * x)[0])

    mu = 0.5 * lam
    y = 0.5 * x
    # subnormal inputs whose halves underflow: the central limit is exact to rounding
    if y == 0.0:
        return 0.0
    if mu == 0.0:
        return clamp_probability(_lower_upper(0.5 * d, y)[0])
    s0 = 0.5 * d
    jstar = int(math.floor(mu))
    half = int(40 + 12 * math.sqrt(mu + 1.0))
    while True:
        lo = max(0, jstar - half)
        hi = jstar + half
        if hi - lo + 1 > NONCENTRAL_MAX_TERMS:
            raise ConvergenceError(
                f"noncentral chi-square needs more than {NONCENTRAL_MAX_TERMS} terms (lam={lam})"
            )
        j = np.arange(lo, hi + 1, dtype=float)
        logw = _ratio_chain(log_poisson_term(float(jstar), mu), jstar - lo, mu, j)
        wmax = logw.max()
        cut = wmax + math.log(NONCENTRAL_TERM_CUTOFF)
        if (lo == 0 or logw[0] < cut) and logw[-1] < cut:
            break
        half *= 2

    k = jstar - lo
    s = s0 + j  # shapes along the window
    p_star = _lower_upper(s[k], y)[0]
    # log of y^s e^{-y} / Gamma(s + 1) along the window, by exact ratios from j*.
    terms = np.exp(_ratio_chain(log_poisson_term(s[k], y), k, y, s))
    p = np.empty_like(s)
    p[k] = p_star
    # upward: P(s_{i+1}) = P(s_i) - T(s_i)
    if k + 1 < len(s):
        p[k + 1:] = p_star - np.cumsum(terms[k:-1])
    # downward: P(s_{i-1}) = P(s_i) + T(s_{i-1})
    if k > 0:
        p[:k] = p_star + np.cumsum(terms[:k][::-1])[::-1]
    np.clip(p, 0.0, 1.0, out=p)
    w = np.exp(logw)
    w /= w.sum()  # neglected mass is below the cutoff; this only removes rounding drift
    value = float(np.dot(w, p))
    return clamp_probability(value, "noncentral chi-square CDF")



def _ratio_chain(anchor, k, y, s):
    """ln(y^s e^{-y}/Gamma(s+1)) along unit-spaced shapes s, anchored at index k."""
    out = np.empty(len(s))
    out[k] = anchor
    if k + 1 < len(s):
        out[k + 1:] = anchor + np.cumsum(math.log(y) - np.log(s[k + 1:]))
    if k > 0:
        out[:k] = anchor - np.cumsum(math.log(y) - np.log(s[k:0:-1]))[::-1]
    return out
