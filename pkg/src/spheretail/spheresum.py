"""Distribution of ||a_1 xi_1 + ... + a_m xi_m|| for independent uniform xi_i on S^{d-1}.

The law of the norm is built one summand at a time.  If v is rotationally
invariant with ||v|| ~ F and xi is uniform on the sphere, independent of v,
then with phi the angle between -v and xi (so <v, xi> = -||v|| cos phi)

    ||v + a xi|| <= t  <=>  r_-(phi) <= ||v|| <= r_+(phi),
    r_(+/-)(phi) = a cos(phi) +/- sqrt(t^2 - a^2 sin^2(phi)),

and phi has density c_d sin^{d-2}(phi) on [0, pi].  The new CDF at t is the
phi-integral of F(r_+) - F(r_-), done with composite Gauss rules whose panels
break wherever r_+ or r_- crosses a radius at which F is not smooth (support
ends and, in low dimension, the radii where the density blows up).  In the
phi variable the direction density is smooth, including d = 2.

Each law is stored on a non-uniform grid carrying both the CDF and the
survival function, so that both tails keep relative accuracy.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import json
import math

import numpy as np
from scipy.special import betainc

from .errors import ConfigError, DomainError, InternalError
from .report import VerificationReport, fmt
from .specfun import gauss_jacobi_rule, weight_integral

GRID_SIZE = 4096
PILOT_SIZE = 512
BASE_PANELS = 6
PANEL_NODES = 10
TAIL_NODES = 160
UNIFORM_NODES = 512
KNOT_NODES = 24
MAX_KNOTS = 64
KNOT_ORDER_LIMIT = 6.0
SUPPORT_BREAKS = 4
RADIAL_NODES = 24
_CHUNK = 512


# --------------------------------------------------------------------------
# problem instance


@dataclass(frozen=True)
class CoefficientVector:
    d: int
    a: tuple

    def __post_init__(self):
        if isinstance(self.d, bool) or int(self.d) != self.d or self.d < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.d!r}")
        a = tuple(float(x) for x in self.a)
        if not a:
            raise DomainError("need at least one coefficient")
        for x in a:
            if not math.isfinite(x) or x == 0.0:
                raise DomainError(f"coefficients must be finite and nonzero, got {x!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "a", a)

    @property
    def m(self):
        return len(self.a)

    @property
    def sum_abs(self):
        return math.fsum(abs(x) for x in self.a)

    @property
    def sum_sq(self):
        return math.fsum(x * x for x in self.a)

    def ordered(self):
        """|a_i| in decreasing order (the order summands are folded in)."""
        return sorted((abs(x) for x in self.a), reverse=True)

    def scaled(self, factor):
        return CoefficientVector(self.d, tuple(factor * x for x in self.a))


# --------------------------------------------------------------------------
# the law of one coordinate of a uniform point on S^{d-1}


def theta_cdf(d, u):
    """P(theta <= u) for theta the first coordinate of a uniform point on S^{d-1}."""
    h = 0.5 * (d - 1)
    x = np.clip(0.5 * (1.0 + np.asarray(u, dtype=float)), 0.0, 1.0)
    return betainc(h, h, x)


def _theta_cdf_from_halves(d, half_lo):
    """theta CDF given (1 + u)/2 directly, avoiding cancellation near u = -1."""
    h = 0.5 * (d - 1)
    return betainc(h, h, np.clip(half_lo, 0.0, 1.0))


@lru_cache(maxsize=None)
def _angle_constant(d):
    """1 / int_0^pi sin^{d-2}(phi) dphi."""
    return 1.0 / weight_integral(0.5 * (d - 3))


@dataclass(frozen=True)
class ThetaLaw:
    """Density c_d (1 - u^2)^{(d-3)/2} on [-1, 1] with its Gauss-Jacobi rule."""

    d: int
    quadrature: object = field(init=False, repr=False)
    normaliser: float = field(init=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.d!r}")
        rule = gauss_jacobi_rule(0.5 * (self.d - 3), max(64, int(self.d)))
        object.__setattr__(self, "quadrature", rule)
        object.__setattr__(self, "normaliser", _angle_constant(int(self.d)))

    def expect(self, f):
        """E f(theta) by the Gauss-Jacobi rule; accurate for smooth f only."""
        return self.normaliser * self.quadrature.integrate(f)

    def cdf(self, u):
        return theta_cdf(self.d, u)

    def sf(self, u):
        return theta_cdf(self.d, -np.asarray(u, dtype=float))


def theta_moments(d):
    """(E theta, E theta^2) by quadrature; exact values are 0 and 1/d."""
    law = ThetaLaw(d)
    return law.expect(lambda u: u), law.expect(lambda u: u * u)


# --------------------------------------------------------------------------
# grid laws


def _interp(grid, values, t, anchor, lower):
    """Interpolate a CDF (lower=True) or SF between grid nodes.

    Each cell is treated as a power law in the distance to the support end
    `anchor` (linear in log-log coordinates), which is exact for the power
    behaviour at the ends; cells with a zero value fall back to linear.
    """
    n = len(grid)
    i = np.clip(np.searchsorted(grid, t, side="right") - 1, 0, n - 2)
    x0 = grid[i]
    x1 = grid[i + 1]
    y0 = values[i]
    y1 = values[i + 1]
    w = np.clip((t - x0) / (x1 - x0), 0.0, 1.0)
    out = y0 + w * (y1 - y0)
    if lower:
        u0, u1, u = x0 - anchor, x1 - anchor, t - anchor
    else:
        u0, u1, u = anchor - x0, anchor - x1, anchor - t
    ok = (y0 > 0.0) & (y1 > 0.0) & (y0 != y1) & (u0 > 0.0) & (u1 > 0.0) & (u > 0.0)
    if np.any(ok):
        lw = np.log(u[ok] / u0[ok]) / np.log(u1[ok] / u0[ok])
        out[ok] = y0[ok] * np.exp(lw * np.log(y1[ok] / y0[ok]))
    return out


@dataclass(frozen=True)
class NormDistribution:
    """Law of a nonnegative radius, either finitely many atoms or a grid CDF.

    For a grid law, `cdf` and `sf` are complementary up to rounding; each is
    accurate in relative terms on its own small-value side.  `knots` lists
    (radius, order) pairs where the law may fail to be smooth; the order is
    a rough count of the derivatives the CDF has there.
    """

    d: int
    grid: np.ndarray
    cdf: np.ndarray
    sf: np.ndarray
    atoms: tuple = ()
    knots: tuple = ()
    coefficients: tuple = ()
    method: str = "grid"

    def __post_init__(self):
        for arr in (self.grid, self.cdf, self.sf):
            arr.setflags(write=False)

    @property
    def is_atomic(self):
        return bool(self.atoms)

    @property
    def support_min(self):
        return float(self.grid[0])

    @property
    def support_max(self):
        return float(self.grid[-1])

    def _split(self):
        """Grid index where the CDF first exceeds 1/2."""
        return min(int(np.searchsorted(self.cdf, 0.5, side="right")), len(self.grid) - 1)

    def _both(self, t):
        """(cdf, sf) at t: the small side is interpolated, the other is its complement."""
        shape = t.shape
        t = t.reshape(-1)
        cdf = np.where(t < self.grid[0], 0.0, 1.0)
        sf = 1.0 - cdf
        inside = (t >= self.grid[0]) & (t < self.grid[-1])
        if np.any(inside):
            ti = t[inside]
            low = ti < self.grid[self._split()]
            c = np.empty_like(ti)
            s = np.empty_like(ti)
            if np.any(low):
                c[low] = _interp(self.grid, self.cdf, ti[low], self.grid[0], True)
                s[low] = 1.0 - c[low]
            if np.any(~low):
                s[~low] = _interp(self.grid, self.sf, ti[~low], self.grid[-1], False)
                c[~low] = 1.0 - s[~low]
            cdf[inside] = c
            sf[inside] = s
        return cdf.reshape(shape), sf.reshape(shape)

    def _atom_arrays(self):
        return np.array([p for p, _ in self.atoms]), np.array([w for _, w in self.atoms])

    def cdf_at(self, t):
        """P(R <= t), vectorised."""
        t = np.asarray(t, dtype=float)
        if self.is_atomic:
            pos, mass = self._atom_arrays()
            return (mass * (pos <= t[..., None])).sum(axis=-1)
        return self._both(t)[0]

    def sf_at(self, t):
        """P(R > t), vectorised."""
        t = np.asarray(t, dtype=float)
        if self.is_atomic:
            pos, mass = self._atom_arrays()
            return (mass * (pos > t[..., None])).sum(axis=-1)
        return self._both(t)[1]

    def survival(self, t):
        return float(self.sf_at(np.array([float(t)]))[0])

    def quantile(self, p):
        """Smallest grid-interpolated t with P(R <= t) >= p."""
        p = np.asarray(p, dtype=float)
        if self.is_atomic:
            pos = np.array([x for x, _ in self.atoms])
            cum = np.cumsum([w for _, w in self.atoms])
            idx = np.minimum(np.searchsorted(cum, p - 1e-15), len(pos) - 1)
            return pos[idx]
        # bisection on the interpolated CDF, so that cdf_at(quantile(p)) ~ p
        lo = np.full(p.shape, self.grid[0])
        hi = np.full(p.shape, self.grid[-1])
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self.cdf_at(mid) < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return hi

    def mean_square(self):
        """E R^2, integrated over the grid with the piecewise-linear CDF."""
        if self.is_atomic:
            return math.fsum(w * p * p for p, w in self.atoms)
        g = self.grid
        dF = np.diff(self.cdf)
        return float(np.sum(dF * (g[:-1] ** 2 + g[:-1] * g[1:] + g[1:] ** 2) / 3.0))

    # serialisation --------------------------------------------------------

    def to_csv(self):
        lines = ["grid,cdf,sf"]
        for x, c, s in zip(self.grid, self.cdf, self.sf):
            lines.append(f"{fmt(x)},{fmt(c)},{fmt(s)}")
        return "\n".join(lines) + "\n"

    def envelope(self):
        return {
            "d": self.d,
            "coefficients": list(self.coefficients),
            "method": self.method,
            "support_min": self.support_min,
            "support_max": self.support_max,
            "grid_size": int(len(self.grid)),
            "atoms": [list(a) for a in self.atoms],
            "knots": [list(k) for k in self.knots],
        }

    def to_json(self):
        env = self.envelope()
        env["grid"] = [float(x) for x in self.grid]
        env["cdf"] = [float(x) for x in self.cdf]
        env["sf"] = [float(x) for x in self.sf]
        return json.dumps(env)

    @classmethod
    def from_json(cls, text):
        env = json.loads(text)
        return cls(
            d=env["d"],
            grid=np.array(env["grid"], dtype=float),
            cdf=np.array(env["cdf"], dtype=float),
            sf=np.array(env["sf"], dtype=float),
            atoms=tuple(tuple(a) for a in env["atoms"]),
            knots=tuple(tuple(k) for k in env["knots"]),
            coefficients=tuple(env["coefficients"]),
            method=env["method"],
        )

    @classmethod
    def from_csv(cls, text, d, **meta):
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        arr = np.array([[float(v) for v in row] for row in rows])
        return cls(d=d, grid=arr[:, 0].copy(), cdf=arr[:, 1].copy(), sf=arr[:, 2].copy(), **meta)


def point_mass(d, radius, coefficients=()):
    return atomic_law(d, [(abs(float(radius)), 1.0)], coefficients)


def atomic_law(d, atoms, coefficients=()):
    merged = {}
    for pos, mass in atoms:
        if mass > 0:
            merged[float(pos)] = merged.get(float(pos), 0.0) + float(mass)
    items = sorted(merged.items())
    pos = np.array([p for p, _ in items])
    cum = np.cumsum([w for _, w in items])
    return NormDistribution(
        d=int(d),
        grid=pos,
        cdf=cum,
        sf=np.maximum(1.0 - cum, 0.0),
        atoms=tuple(items),
        knots=tuple((p, 0.0) for p in pos.tolist()),
        coefficients=tuple(coefficients),
        method="atoms",
    )


# --------------------------------------------------------------------------
# one summation step


@lru_cache(maxsize=None)
def _panel_rule(q):
    """Gauss-Legendre on [0, 1] composed with the smoothstep 3s^2 - 2s^3."""
    x, w = np.polynomial.legendre.leggauss(q)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    return 3.0 * s * s - 2.0 * s ** 3, w * 6.0 * s * (1.0 - s)


def _atomic_step(law, a, t, d):
    """CDF and SF of ||v + a xi|| at t when ||v|| takes finitely many values."""
    cdf = np.zeros_like(t)
    sf = np.zeros_like(t)
    for rho, mass in law.atoms:
        if rho == 0.0:
            cdf += mass * (t >= a)
            sf += mass * (t < a)
            continue
        lo = abs(rho - a)
        hi = rho + a
        tt = np.clip(t, lo, hi)
        # (1 + g)/2 and (1 - g)/2 with g = (t^2 - rho^2 - a^2) / (2 rho a)
        up = (tt - lo) * (tt + lo) / (4.0 * rho * a)
        down = (hi - tt) * (hi + tt) / (4.0 * rho * a)
        cdf += mass * _theta_cdf_from_halves(d, up)
        sf += mass * _theta_cdf_from_halves(d, down)
    return cdf, sf


def _grid_step(law, a, t, d, which, panels=BASE_PANELS, q=PANEL_NODES):
    """New CDF (which='cdf') or SF (which='sf') at the points t, for a grid law."""
    t = np.asarray(t, dtype=float)
    lo, hi = law.support_min, law.support_max
    # support-spread points keep panels small where the law has its mass
    spread = lo + (hi - lo) * np.arange(1, SUPPORT_BREAKS) / SUPPORT_BREAKS
    knots = np.array(sorted({k for k, _ in law.knots} | {lo, hi} | set(spread.tolist())))
    knots = knots[knots > 0.0]
    sig, wts = _panel_rule(q)
    c = _angle_constant(d)
    out = np.empty_like(t)
    for start in range(0, len(t), _CHUNK):
        tc = t[start:start + _CHUNK]
        small = tc < a
        phi_end = np.where(small, np.arcsin(np.minimum(tc / a, 1.0)), math.pi)
        # breakpoints: base panels plus knot crossings (law of cosines)
        base = phi_end[:, None] * (np.arange(panels + 1) / panels)[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            cosk = (knots[None, :] ** 2 + a * a - tc[:, None] ** 2) / (2.0 * a * knots[None, :])
        crossing = np.arccos(np.clip(cosk, -1.0, 1.0))
        crossing = np.where(np.abs(cosk) <= 1.0, crossing, 0.0)
        crossing = np.minimum(crossing, phi_end[:, None])
        br = np.sort(np.concatenate([base, crossing], axis=1), axis=1)
        left = br[:, :-1]
        width = br[:, 1:] - left
        phi = left[:, :, None] + width[:, :, None] * sig[None, None, :]
        dphi = width[:, :, None] * wts[None, None, :]
        sphi = np.sin(phi)
        tt = tc[:, None, None]
        root = np.sqrt(np.maximum((tt - a * sphi) * (tt + a * sphi), 0.0))
        acos = a * np.cos(phi)
        r_plus = acos + root
        r_minus = acos - root
        measure = c * dphi * (sphi ** (d - 2) if d > 2 else 1.0)
        if which == "cdf":
            vals = law.cdf_at(r_plus) - law.cdf_at(r_minus)
            out[start:start + len(tc)] = np.sum(vals * measure, axis=(1, 2))
        else:
            vals = law.sf_at(r_plus) + law.cdf_at(r_minus)
            body = np.sum(vals * measure, axis=(1, 2))
            # directions beyond phi_end never reach the ball of radius t
            rest = np.where(small, theta_cdf(d, np.cos(phi_end)), 0.0)
            out[start:start + len(tc)] = body + rest
    return out


def _step_values(law, steps, t, which):
    """Mixture over (step length, weight) pairs of the one-step CDF or SF."""
    d = law.d
    total = np.zeros_like(t)
    for a, weight in steps:
        if law.is_atomic:
            cdf, sf = _atomic_step(law, a, t, d)
            vals = cdf if which == "cdf" else sf
        else:
            vals = _grid_step(law, a, t, d, which)
        total += weight * vals
    return total


def _tail_points(lo, hi, count):
    """Points crowding geometrically towards both ends of [lo, hi]."""
    span = hi - lo
    offsets = span * np.logspace(-10, math.log10(0.2), count)
    return np.concatenate([lo + offsets, hi - offsets])


def _build_grid(lo, hi, pilot_t, pilot_cdf, knots, size):
    span = hi - lo
    extra = [np.linspace(lo, hi, UNIFORM_NODES), _tail_points(lo, hi, TAIL_NODES)]
    inner = [k for k, _ in knots if lo < k < hi]
    for k in inner:
        off = span * np.logspace(-9, -2, KNOT_NODES // 2)
        extra.append(np.concatenate([[k], k - off, k + off]))
    extra = np.concatenate(extra)
    n_eq = max(size - len(extra), 64)
    levels = (np.arange(n_eq) + 0.5) / n_eq
    mono = np.maximum.accumulate(pilot_cdf)
    eq = np.interp(levels, mono, pilot_t)
    grid = np.unique(np.clip(np.concatenate([eq, extra]), lo, hi))
    # drop near-duplicates that would make interpolation cells degenerate
    keep = np.concatenate([[True], np.diff(grid) > 1e-14 * max(hi, 1.0)])
    keep[-1] = True
    return grid[keep]


def _new_knots(old_knots, step_lengths, lo, hi, d):
    """Knots of the law after one step.

    A step of length a moves a non-smooth point k to k + a and |k - a| and
    adds about (d - 1)/2 orders of smoothness, the order of the endpoint
    behaviour of the direction density.  Knots smooth enough for the panel
    rule are dropped.
    """
    gain = 0.5 * (d - 1)
    found = {}
    for k, order in old_knots:
        new_order = order + gain
        if new_order >= KNOT_ORDER_LIMIT:
            continue
        for a in step_lengths:
            for v in (k + a, abs(k - a)):
                if lo < v < hi:
                    v = round(v, 13)
                    found[v] = min(found.get(v, math.inf), new_order)
    inner = sorted(found.items(), key=lambda kv: (kv[1], kv[0]))[:MAX_KNOTS]
    return tuple(sorted([(lo, 0.0), (hi, 0.0)] + inner))


def propagate_steps(law, steps, coefficients=(), grid_size=GRID_SIZE):
    """Law of ||v + A xi|| where ||v|| ~ law and A takes value a_j with weight w_j."""
    steps = [(float(a), float(w)) for a, w in steps if w > 0]
    if not steps or any(a < 0 or not math.isfinite(a) for a, _ in steps):
        raise DomainError(f"invalid step lengths {steps!r}")
    if abs(sum(w for _, w in steps) - 1.0) > 1e-12:
        raise DomainError("step weights must sum to 1")
    if grid_size < 256:
        raise ConfigError(f"grid_size must be >= 256, got {grid_size!r}")
    d = law.d
    positive = [(a, w) for a, w in steps if a > 0]
    if not positive:
        return law
    if law.is_atomic and all(p == 0.0 for p, _ in law.atoms):
        return atomic_law(d, [(a, w) for a, w in steps], coefficients)
    if any(a == 0.0 for a, _ in steps):
        raise DomainError("zero step lengths are only supported from the zero law")
    a_min = min(a for a, _ in steps)
    a_max = max(a for a, _ in steps)
    lo_old, hi_old = law.support_min, law.support_max
    lo = max(0.0, lo_old - a_max, a_min - hi_old)
    hi = hi_old + a_max
    pilot_t = np.linspace(lo, hi, PILOT_SIZE)
    pilot = _step_values(law, steps, pilot_t, "cdf")
    knots = _new_knots(law.knots, [a for a, _ in steps], lo, hi, d)
    grid = _build_grid(lo, hi, pilot_t, pilot, knots, grid_size)
    lower = np.interp(grid, pilot_t, np.maximum.accumulate(pilot)) <= 0.5
    cdf = np.empty_like(grid)
    sf = np.empty_like(grid)
    if np.any(lower):
        cdf[lower] = _step_values(law, steps, grid[lower], "cdf")
        sf[lower] = 1.0 - cdf[lower]
    if np.any(~lower):
        sf[~lower] = _step_values(law, steps, grid[~lower], "sf")
        cdf[~lower] = 1.0 - sf[~lower]
    return _finish(d, grid, cdf, sf, knots, tuple(coefficients), "grid")


def _finish(d, grid, cdf, sf, knots, coefficients, method):
    """Sanity-check, monotonise and pin the ends of a freshly computed grid law."""
    for arr in (cdf, sf):
        bad = np.max(np.maximum(arr - 1.0, -arr))
        if bad > 1e-9:
            raise InternalError(f"probability out of [0, 1] by {bad!r} while propagating")
    cdf = np.maximum.accumulate(np.clip(cdf, 0.0, 1.0))
    sf = np.minimum.accumulate(np.clip(sf, 0.0, 1.0))
    cdf[0] = 0.0
    sf[0] = 1.0
    cdf[-1] = 1.0
    sf[-1] = 0.0
    return NormDistribution(
        d=d,
        grid=grid,
        cdf=cdf,
        sf=sf,
        knots=knots,
        coefficients=coefficients,
        method=method,
    )


def propagate(dist, a_next, grid_size=GRID_SIZE):
    """Law of ||v + a_next xi|| for ||v|| ~ dist and xi uniform on the sphere."""
    a_next = float(a_next)
    if not math.isfinite(a_next) or a_next == 0.0:
        raise DomainError(f"a_next must be finite and nonzero, got {a_next!r}")
    coeffs = tuple(dist.coefficients) + (a_next,)
    return propagate_steps(dist, [(abs(a_next), 1.0)], coeffs, grid_size)


def norm_distribution(c, grid_size=GRID_SIZE):
    """Law of ||sum_i a_i xi_i||, folding summands in by decreasing |a_i|."""
    order = c.ordered()
    law = point_mass(c.d, order[0], coefficients=(order[0],))
    for a in order[1:]:
        law = propagate(law, a, grid_size)
    return law


def survival(dist, t):
    """P(||sum|| > t)."""
    t = float(t)
    if not t >= 0.0:
        raise DomainError(f"t must be >= 0, got {t!r}")
    return dist.survival(t)


# --------------------------------------------------------------------------
# shifting a rotationally invariant vector


def lemma4_transform(dist, shift, t):
    """P(||X + x|| > t) for ||X|| ~ dist rotationally invariant and ||x|| = shift < t.

    Equals E_theta P(||X|| > -theta*shift + sqrt(t^2 + theta^2 shift^2 - shift^2)).
    """
    shift = float(shift)
    t = float(t)
    if not (math.isfinite(shift) and shift >= 0.0):
        raise DomainError(f"shift must be finite and >= 0, got {shift!r}")
    if not t > shift:
        raise DomainError(f"need t > shift, got t={t!r}, shift={shift!r}")
    if shift == 0.0:
        return survival(dist, t)
    tt = np.array([t])
    if dist.is_atomic:
        return float(_atomic_step(dist, shift, tt, dist.d)[1][0])
    return float(_grid_step(dist, shift, tt, dist.d, "sf")[0])


def lemma4_quadrature(dist, shift, t):
    """The same expectation by the plain Gauss-Jacobi theta rule.

    Only accurate when the survival function of `dist` is smooth; kept as a
    cross-check for smooth laws.
    """
    law = ThetaLaw(dist.d)

    def integrand(theta):
        arg = -theta * shift + np.sqrt(t * t + theta * theta * shift * shift - shift * shift)
        return dist.sf_at(arg)

    return law.expect(integrand)


def verify_shift_consistency(n_instances=20, seed=0, m_max=4, d_max=8, tol=1e-6, grid_size=GRID_SIZE):
    """Compare the shift transform of the law of a_2..a_m with the full law of a_1..a_m.

    Both are P(||sum a_i xi_i|| > t); they are computed along different
    evaluation orders, so agreement checks the engine against itself.
    """
    grid = {"instances": int(n_instances), "seed": int(seed), "m": [2, int(m_max)], "d": [2, int(d_max)]}
    report = VerificationReport("lemma4.shift_consistency", grid, tol)
    rng = np.random.default_rng(seed)
    for _ in range(int(n_instances)):
        d = int(rng.integers(2, d_max + 1))
        m = int(rng.integers(2, m_max + 1))
        a = rng.uniform(0.1, 2.0, m) * rng.choice([-1.0, 1.0], m)
        c = CoefficientVector(d, tuple(a.tolist()))
        rest = norm_distribution(CoefficientVector(d, c.a[1:]), grid_size)
        full = norm_distribution(c, grid_size)
        shift = abs(c.a[0])
        for t in np.linspace(shift, c.sum_abs, 9)[1:-1]:
            diff = abs(lemma4_transform(rest, shift, t) - survival(full, t))
            report.update(-diff, d=d, coefficients=list(c.a), t=float(t))
    return report


# --------------------------------------------------------------------------
# radial mixtures R_i xi_i with R_i in [0, 1]


@dataclass(frozen=True)
class RadialLaw:
    """Law of R = ||X|| for a rotationally invariant X in the unit ball.

    kind is 'const' (params (r,)), 'ball' (uniform in the ball, R = U^{1/d})
    or 'twopoint' (params (r1, r2, p): R = r1 with probability p).
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind == "const":
            (r,) = self.params
            if not 0.0 < r <= 1.0:
                raise DomainError(f"constant radius must lie in (0, 1], got {r!r}")
        elif self.kind == "twopoint":
            r1, r2, p = self.params
            if not (0.0 < r1 <= 1.0 and 0.0 < r2 <= 1.0 and 0.0 <= p <= 1.0):
                raise DomainError(f"two-point law needs radii in (0, 1] and p in [0, 1], got {self.params!r}")
        elif self.kind == "ball":
            if self.params:
                raise DomainError("the uniform-ball law takes no parameters")
        else:
            raise DomainError(f"unknown radial law {self.kind!r}")

    @classmethod
    def parse(cls, text):
        """'const:r', 'ball' or 'twopoint:r1,r2,p'."""
        kind, _, rest = text.partition(":")
        params = tuple(float(x) for x in rest.split(",")) if rest else ()
        try:
            return cls(kind, params)
        except (ValueError, TypeError) as exc:
            raise DomainError(f"bad radial law {text!r}: {exc}") from None

    def label(self):
        if self.kind == "ball":
            return "ball"
        return self.kind + ":" + ",".join(repr(float(p)) for p in self.params)

    def steps(self, a, d):
        """(radius, weight) pairs approximating the law of a * R."""
        if self.kind == "const":
            return [(a * self.params[0], 1.0)]
        if self.kind == "twopoint":
            r1, r2, p = self.params
            return [(a * r1, p), (a * r2, 1.0 - p)]
        return [(a * r, w) for r, w in _ball_radius_rule(d)]

    def sample(self, rng, size, d):
        if self.kind == "const":
            return np.full(size, self.params[0])
        if self.kind == "twopoint":
            r1, r2, p = self.params
            return np.where(rng.random(size) < p, r1, r2)
        return rng.random(size) ** (1.0 / d)


@lru_cache(maxsize=None)
def _ball_radius_rule(d, n=RADIAL_NODES):
    """Gauss-Legendre nodes on [0, 1] weighted by the density d r^{d-1}."""
    x, w = np.polynomial.legendre.leggauss(n)
    r = 0.5 * (x + 1.0)
    w = 0.5 * w * d * r ** (d - 1)
    w = w / w.sum()
    return tuple(zip(r.tolist(), w.tolist()))


def _ball_start(d, a, grid_size):
    """Grid law of a * U^{1/d}: CDF (t/a)^d on [0, a]."""
    levels = (np.arange(grid_size - 2 * TAIL_NODES - 2) + 0.5) / (grid_size - 2 * TAIL_NODES - 2)
    grid = np.unique(np.concatenate([[0.0, a], a * levels ** (1.0 / d), _tail_points(0.0, a, TAIL_NODES)]))
    ratio_ = grid / a
    cdf = ratio_ ** d
    sf = -np.expm1(d * np.log(np.maximum(ratio_, 1e-300)))
    sf[0] = 1.0
    return NormDistribution(d=d, grid=grid, cdf=cdf, sf=sf, knots=((0.0, float(d)), (a, 1.0)), method="grid")


def _ball_from_sphere_values(law, d, t, which, panels=8, q=PANEL_NODES):
    """CDF or SF of S * U^{1/d} at t, with S ~ law (a grid law) independent of U.

    With b = t/s and s_max the top of the support of S,
        sf(t)  = int_{t/s_max}^1 sf_S(t/b) d b^{d-1} db,
        cdf(t) = (t/s_max)^d + int_{t/s_max}^1 F_S(t/b) d b^{d-1} db.
    """
    t = np.asarray(t, dtype=float)
    s_lo, s_hi = law.support_min, law.support_max
    sig, wts = _panel_rule(q)
    out = np.zeros_like(t)
    pos = t > 0.0
    tp = t[pos]
    b0 = np.minimum(tp / s_hi, 1.0)
    base = b0[:, None] + (1.0 - b0)[:, None] * (np.arange(panels + 1) / panels)[None, :]
    # b = t / s_lo is where t/b leaves the support of S from below
    kink = tp / s_lo if s_lo > 0.0 else np.full_like(tp, 2.0)
    kink = np.clip(kink, b0, 1.0)[:, None]
    br = np.sort(np.concatenate([base, kink], axis=1), axis=1)
    left = br[:, :-1]
    width = br[:, 1:] - left
    b = left[:, :, None] + width[:, :, None] * sig[None, None, :]
    wb = width[:, :, None] * wts[None, None, :] * d * b ** (d - 1)
    with np.errstate(divide="ignore"):
        r = np.where(b > 0.0, tp[:, None, None] / np.maximum(b, 1e-300), np.inf)
    if which == "cdf":
        vals = np.where(np.isfinite(r), law.cdf_at(np.minimum(r, s_hi)), 1.0)
        out[pos] = b0 ** d + np.sum(vals * wb, axis=(1, 2))
    else:
        vals = np.where(np.isfinite(r), law.sf_at(np.minimum(r, s_hi)), 0.0)
        out[pos] = np.sum(vals * wb, axis=(1, 2))
        out[~pos] = 1.0
    return out


def ball_mixture_distribution(c, grid_size=GRID_SIZE):
    """Law of ||sum_i a_i X_i|| for i.i.d. X_i uniform in the unit ball of R^d.

    A uniform point of the unit ball in R^d is the projection onto the first
    d coordinates of a uniform point of the unit sphere in R^{d+2}.  The sum
    sum a_i eta_i of sphere points in R^{d+2} is rotationally invariant, so its
    projection has norm S * B with S the (d+2)-dimensional sphere-sum norm and
    B = U^{1/d} independent of S.
    """
    d = c.d
    law = norm_distribution(CoefficientVector(d + 2, c.a), grid_size)
    if law.is_atomic:
        start = _ball_start(d, law.support_max, grid_size)
        return NormDistribution(**{**start.__dict__, "coefficients": tuple(c.a)})
    hi = law.support_max
    pilot_t = np.linspace(0.0, hi, PILOT_SIZE)
    pilot = _ball_from_sphere_values(law, d, pilot_t, "cdf")
    ends = ((0.0, float(d)), (hi, 1.0))
    grid = _build_grid(0.0, hi, pilot_t, pilot, ends, grid_size)
    lower = np.interp(grid, pilot_t, np.maximum.accumulate(pilot)) <= 0.5
    cdf = np.empty_like(grid)
    sf = np.empty_like(grid)
    cdf[lower] = _ball_from_sphere_values(law, d, grid[lower], "cdf")
    sf[lower] = 1.0 - cdf[lower]
    sf[~lower] = _ball_from_sphere_values(law, d, grid[~lower], "sf")
    cdf[~lower] = 1.0 - sf[~lower]
    return _finish(d, grid, cdf, sf, ends, tuple(c.a), "ball-projection")


def radial_mixture_by_steps(c, radial, grid_size=GRID_SIZE):
    """Law of ||sum_i a_i R_i xi_i|| by mixing sphere steps over the radius law."""
    if isinstance(radial, str):
        radial = RadialLaw.parse(radial)
    order = c.ordered()
    d = c.d
    if radial.kind == "ball":
        law = _ball_start(d, order[0], grid_size)
        law = NormDistribution(**{**law.__dict__, "coefficients": (order[0],)})
    else:
        law = atomic_law(d, radial.steps(order[0], d), coefficients=(order[0],))
    for a in order[1:]:
        law = propagate_steps(law, radial.steps(a, d), law.coefficients + (a,), grid_size)
    return law


def radial_mixture_distribution(c, radial, grid_size=GRID_SIZE):
    """Law of ||sum_i a_i R_i xi_i|| with i.i.d. radii R_i ~ radial, independent of the xi_i."""
    if isinstance(radial, str):
        radial = RadialLaw.parse(radial)
    if radial.kind == "const":
        return norm_distribution(c.scaled(radial.params[0]), grid_size)
    if radial.kind == "ball":
        return ball_mixture_distribution(c, grid_size)
    return radial_mixture_by_steps(c, radial, grid_size)


# --------------------------------------------------------------------------
# Monte Carlo


def sample_norm(c, n, seed, radial=None, chunk=200_000):
    """n draws of ||sum_i a_i R_i xi_i|| (R_i = 1 unless a radial law is given).

    Directions are normalised Gaussian vectors from numpy's PCG64 generator
    seeded with `seed`; the stream is consumed in fixed-size chunks, so the
    result depends only on (c, n, seed, radial, chunk).
    """
    if int(n) != n or n < 1:
        raise DomainError(f"sample size must be a positive integer, got {n!r}")
    if isinstance(radial, str):
        radial = RadialLaw.parse(radial)
    rng = np.random.default_rng(seed)
    a = np.array(c.a)
    d = c.d
    out = np.empty(int(n))
    done = 0
    while done < n:
        size = min(chunk, int(n) - done)
        g = rng.standard_normal((size, c.m, d))
        g /= np.linalg.norm(g, axis=2, keepdims=True)
        weights = np.broadcast_to(a, (size, c.m))
        if radial is not None:
            weights = weights * radial.sample(rng, (size, c.m), d)
        s = np.einsum("nm,nmd->nd", weights, g)
        out[done:done + size] = np.linalg.norm(s, axis=1)
        done += size
    return out


def mc_survival(samples, t):
    """Empirical P(norm > t) for each t, with binomial standard errors.

    The variance p(1-p) is floored at 1/n so that an empirical 0 or 1 still
    carries the resolution of the sample.
    """
    samples = np.sort(np.asarray(samples))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = len(samples)
    p = 1.0 - np.searchsorted(samples, t, side="right") / n
    return p, np.sqrt(np.maximum(p * (1.0 - p), 1.0 / n) / n)


def random_mc_instances(n, seed, m_max=6, d_max=16, a_max=2.0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(int(n)):
        d = int(rng.integers(2, d_max + 1))
        m = int(rng.integers(1, m_max + 1))
        a = rng.uniform(-a_max, a_max, m)
        while np.any(np.abs(a) < 1e-6):
            a = rng.uniform(-a_max, a_max, m)
        out.append(CoefficientVector(d, tuple(a.tolist())))
    return out


def verify_monte_carlo(n_instances=50, n_samples=1_000_000, seed=0, z_max=4.0, grid_size=GRID_SIZE, radial=None):
    """Engine survival against sampled survival at 21 evenly spaced t per instance.

    The margin is z_max minus the standardised difference, so the claim holds
    when every difference is within z_max standard errors.
    """
    grid = {"instances": int(n_instances), "samples": int(n_samples), "seed": int(seed), "t_points": 21}
    report = VerificationReport("engine.monte_carlo_agreement", grid, 0.0, details={"z_max": z_max})
    seeds = np.random.SeedSequence(seed).spawn(int(n_instances))
    for c, child in zip(random_mc_instances(n_instances, seed), seeds):
        if radial is None:
            law = norm_distribution(c, grid_size)
        else:
            law = radial_mixture_distribution(c, radial, grid_size)
        ts = c.sum_abs * np.arange(1, 22) / 22.0
        sample_seed = int(child.generate_state(1, dtype=np.uint64)[0])
        p, se = mc_survival(sample_norm(c, n_samples, sample_seed, radial), ts)
        z = np.abs(law.sf_at(ts) - p) / se
        for t, zi in zip(ts, z):
            report.update(z_max - float(zi), d=c.d, coefficients=list(c.a), t=float(t))
    return report
