"""Modified Bessel function of the first kind, I_nu(z), for real nu, z >= 0.

Small and moderate z use the power series, summed in log space so that the
terms never overflow.  Above ASYMPTOTIC_SWITCH the large-argument (Hankel)
expansion e^z / sqrt(2 pi z) * sum_k (-1)^k a_k(nu) / z^k takes over.
"""
import math

import numpy as np

from ..errors import ConvergenceError, DomainError
from .results import EvalResult

ASYMPTOTIC_SWITCH = 700.0
_EPS = 1e-17


def _validate(nu, z):
    nu = float(nu)
    z = float(z)
    if not (math.isfinite(nu) and nu >= 0.0):
        raise DomainError(f"order nu must be finite and >= 0, got {nu!r}")
    if not (math.isfinite(z) and z >= 0.0):
        raise DomainError(f"argument z must be finite and >= 0, got {z!r}")
    return nu, z


def _log_series(nu, z):
    """ln I_nu(z) by the power series; returns (value, number of terms)."""
    log_half = math.log(0.5 * z)
    q = 0.25 * z * z
    peak = 0.5 * (math.sqrt(nu * nu + z * z) - nu)
    n = int(peak + 30 + 12 * math.sqrt(peak + 1.0))
    while True:
        k = np.arange(1, n + 1, dtype=float)
        logs = np.empty(n + 1)
        logs[0] = nu * log_half - math.lgamma(nu + 1.0)
        logs[1:] = logs[0] + np.cumsum(math.log(q) - np.log(k) - np.log(k + nu))
        top = logs.max()
        if logs[-1] - top < math.log(_EPS):
            break
        n *= 2
        if n > 10_000_000:
            raise ConvergenceError(f"Bessel series did not converge (nu={nu}, z={z})")
    return top + math.log(np.exp(logs - top).sum()), n + 1


def _log_asymptotic(nu, z):
    """ln I_nu(z) from the Hankel expansion; returns (value, last relative term)."""
    mu = 4.0 * nu * nu
    total = 1.0
    term = 1.0
    prev = math.inf
    for k in range(1, 200):
        term *= -(mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        if abs(term) > prev:  # asymptotic series started to diverge
            break
        total += term
        prev = abs(term)
        if prev < _EPS * abs(total):
            break
    return z - 0.5 * math.log(2.0 * math.pi * z) + math.log(total), prev


def log_bessel_i(nu, z):
    """ln I_nu(z); -inf at z = 0 for nu > 0."""
    nu, z = _validate(nu, z)
    if z == 0.0:
        return 0.0 if nu == 0.0 else -math.inf
    if z > ASYMPTOTIC_SWITCH and z > nu * nu:
        return _log_asymptotic(nu, z)[0]
    return _log_series(nu, z)[0]


def bessel_i(nu, z):
    """I_nu(z) as an EvalResult.

    Raises OverflowError when I_nu(z) is not representable; use log_bessel_i
    for those arguments.
    """
    nu, z = _validate(nu, z)
    if z == 0.0:
        return EvalResult(1.0 if nu == 0.0 else 0.0, 0.0, "closed-form")
    if z > ASYMPTOTIC_SWITCH and z > nu * nu:
        logv, last = _log_asymptotic(nu, z)
        method = "asymptotic"
        rel = max(last, 4e-16)
    else:
        logv, nterms = _log_series(nu, z)
        method = "series"
        rel = 4e-16 * (1.0 + math.sqrt(nterms)) * max(1.0, abs(logv))
    if logv > 709.0:
        raise OverflowError(f"I_{nu}({z}) overflows double precision; use log_bessel_i")
    value = math.exp(logv)
    return EvalResult(value, rel * value, method)
