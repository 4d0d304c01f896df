"""Gamma-family kernels: log-gamma and the regularized incomplete gamma pair.

P(s, x) is summed as a power series below the switchover x = s + 1 and Q(s, x)
is evaluated by a Lentz continued fraction above it.  Both share the prefactor
x^s e^{-x} / Gamma(s + 1), which is computed through the Stirling remainder so
that it stays accurate to a few ulps even for s in the thousands.
"""
import math

from ..errors import ConvergenceError, DomainError, InternalError

_TINY = 1e-300
_EPS = 1e-17
_MAX_ITER = 200_000
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Stirling remainder coefficients B_2k / (2k (2k - 1)), k = 1..8.
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)


def _check_finite(name, x):
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")


def log_gamma(x):
    """ln Gamma(x) for x > 0."""
    x = float(x)
    _check_finite("x", x)
    if x <= 0.0:
        raise DomainError(f"log_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)


def stirling_remainder(s):
    """ln Gamma(s) - [(s - 1/2) ln s - s + ln sqrt(2 pi)]."""
    if s < 10.0:
        return math.lgamma(s) - ((s - 0.5) * math.log(s) - s + _HALF_LOG_2PI)
    inv = 1.0 / s
    inv2 = inv * inv
    total = 0.0
    power = inv
    for c in _STIRLING:
        total += c * power
        power *= inv2
    return total


def log_poisson_term(s, x):
    """ln( x^s e^{-x} / Gamma(s + 1) ), accurate for large s and x."""
    if x == 0.0:
        return -math.inf
    if s < 10.0 or x < 0.5 * s:
        # far below the mode there is no cancellation to avoid
        return s * math.log(x) - x - math.lgamma(s + 1.0)
    eta = (x - s) / s
    return -s * (eta - math.log1p(eta)) - 0.5 * math.log(2.0 * math.pi * s) - stirling_remainder(s)


def _validate(s, x):
    s = float(s)
    x = float(x)
    _check_finite("s", s)
    if s <= 0.0:
        raise DomainError(f"shape s must be > 0, got {s!r}")
    if math.isnan(x) or x < 0.0:
        raise DomainError(f"x must be >= 0, got {x!r}")
    return s, x


def _series_lower(s, x):
    """Sum_{n>=0} x^n / ((s+1)...(s+n)); multiply by the Poisson term to get P."""
    term = 1.0
    total = 1.0
    ap = s
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if term < total * _EPS:
            return total
    raise ConvergenceError(f"incomplete gamma series did not converge (s={s}, x={x})")


def _cf_upper(s, x):
    """Continued fraction for Q(s, x) * Gamma(s) * e^x / x^s (modified Lentz)."""
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b if b != 0.0 else 1.0 / _TINY
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS * 4:
            return h
    raise ConvergenceError(f"incomplete gamma continued fraction did not converge (s={s}, x={x})")


def clamp_probability(p, what="probability"):
    """Clamp rounding overshoot into [0, 1]; anything beyond 1e-12 is a bug."""
    if p < 0.0:
        if p < -1e-12:
            raise InternalError(f"{what} = {p!r} below 0 beyond rounding")
        return 0.0
    if p > 1.0:
        if p > 1.0 + 1e-12:
            raise InternalError(f"{what} = {p!r} above 1 beyond rounding")
        return 1.0
    return p


def _lower_upper(s, x):
    if x == 0.0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    if x < s + 1.0:
        p = math.exp(log_poisson_term(s, x)) * _series_lower(s, x)
        p = clamp_probability(p, "P(s,x)")
        return p, 1.0 - p
    q = s * math.exp(log_poisson_term(s, x)) * _cf_upper(s, x)
    q = clamp_probability(q, "Q(s,x)")
    return 1.0 - q, q


def reg_gamma_lower(s, x):
    """Regularized lower incomplete gamma P(s, x)."""
    s, x = _validate(s, x)
    return _lower_upper(s, x)[0]


def reg_gamma_upper(s, x):
    """Regularized upper incomplete gamma Q(s, x) = Gamma(s, x) / Gamma(s)."""
    s, x = _validate(s, x)
    return _lower_upper(s, x)[1]


def log_reg_gamma_upper(s, x):
    """ln Q(s, x), finite far past the point where Q itself underflows."""
    s, x = _validate(s, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return -math.inf
    if x < s + 1.0:
        q = _lower_upper(s, x)[1]
        return math.log(q) if q > 0.0 else -math.inf
    return math.log(s) + log_poisson_term(s, x) + math.log(_cf_upper(s, x))
