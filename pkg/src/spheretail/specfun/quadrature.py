"""Symmetric Gauss-Jacobi rules for the weight (1 - x^2)^alpha on [-1, 1].

Nodes are eigenvalues of the Jacobi matrix of the Gegenbauer recurrence
(Golub-Welsch), polished by Newton steps on the three-term recurrence.
Weights come from the Christoffel function 1 / sum_k p_k(x_i)^2 over the
orthonormal polynomials, which keeps small endpoint weights accurate.
alpha = -1/2 is the Chebyshev rule and is returned in closed form.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from ..errors import DomainError, InternalError


def weight_integral(alpha):
    """Integral of (1 - x^2)^alpha over [-1, 1] = B(1/2, alpha + 1)."""
    return math.exp(
        0.5 * math.log(math.pi) + math.lgamma(alpha + 1.0) - math.lgamma(alpha + 1.5)
    )


@dataclass(frozen=True)
class QuadratureRule:
    exponent: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self):
        return len(self.nodes)

    def integrate(self, f):
        """Sum of weights * f(nodes); f must accept an array."""
        return float(np.dot(self.weights, f(self.nodes)))


def _recurrence(alpha, n):
    k = np.arange(1, n, dtype=float)
    return np.sqrt(k * (k + 2.0 * alpha) / (4.0 * (k + alpha) ** 2 - 1.0))


def _orthonormal_sums(x, beta, mu0, n):
    """Return (sum_k p_k(x)^2 for k < n, p_n(x), p_n'(x)) for orthonormal p_k."""
    p_prev = np.zeros_like(x)
    p = np.full_like(x, 1.0 / math.sqrt(mu0))
    dp_prev = np.zeros_like(x)
    dp = np.zeros_like(x)
    total = p * p
    for k in range(n):
        b_next = beta[k] if k < n - 1 else _beta_n(beta, n)
        b_here = beta[k - 1] if k > 0 else 0.0
        p_next = (x * p - b_here * p_prev) / b_next
        dp_next = (p + x * dp - b_here * dp_prev) / b_next
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
        if k < n - 1:
            total += p * p
    return total, p, dp


def _beta_n(beta, n):
    # off-diagonal entry b_n, needed only to scale p_n; any positive value works
    # for root finding, so reuse the nearest available entry.
    return beta[-1] if len(beta) else 1.0


@lru_cache(maxsize=512)
def gauss_jacobi_rule(alpha, n):
    """n-point Gauss rule for the weight (1 - x^2)^alpha, alpha >= -1/2."""
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha >= -0.5):
        raise DomainError(f"alpha must be >= -1/2, got {alpha!r}")
    if int(n) != n or n < 1:
        raise DomainError(f"rule size must be a positive integer, got {n!r}")
    n = int(n)
    if alpha == -0.5:
        k = np.arange(n, 0, -1)
        nodes = np.cos((2.0 * k - 1.0) * math.pi / (2.0 * n))
        return QuadratureRule(alpha, nodes, np.full(n, math.pi / n))
    mu0 = weight_integral(alpha)
    if n == 1:
        return QuadratureRule(alpha, np.zeros(1), np.array([mu0]))

    beta = _recurrence(alpha, n)
    x = eigvalsh_tridiagonal(np.zeros(n), beta)
    for _ in range(3):
        _, pn, dpn = _orthonormal_sums(x, beta, mu0, n)
        step = pn / dpn
        x = x - step
        if np.max(np.abs(step)) < 1e-15:
            break
    x = np.sort(x)
    x = 0.5 * (x - x[::-1])  # exact symmetry
    if n % 2:
        x[n // 2] = 0.0
    total, _, _ = _orthonormal_sums(x, beta, mu0, n)
    w = 1.0 / total
    w = 0.5 * (w + w[::-1])
    if not (np.all(np.diff(x) > 0) and x[0] > -1.0 and x[-1] < 1.0 and np.all(w > 0)):
        raise InternalError(f"Gauss-Jacobi construction failed for alpha={alpha}, n={n}")
    return QuadratureRule(alpha, x, w)
