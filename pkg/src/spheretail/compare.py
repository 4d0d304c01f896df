"""Tail comparison between sphere sums and their Gaussian counterparts.

For coefficients a_1..a_m in dimension d the two sides are

    lhs(t) = P(||sum a_i xi_i|| > t),   xi_i uniform on S^{d-1},
    rhs(t) = P(||sum a_i G_i / sqrt(d)|| > t) = P(chi^2_d > t^2 d / sum a_i^2),

and the claim under test is lhs <= C0 * rhs with C0 = 397.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import csv
import io
import math

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, InternalError
from .report import fmt, jsonable
from .specfun import chi_square_sf, log_chi_square_sf
from .spheresum import (
    GRID_SIZE,
    CoefficientVector,
    RadialLaw,
    norm_distribution,
    radial_mixture_distribution,
    survival,
)

C0 = 397.0
BASE_CASE_CONSTANT = 33.0
RATIO_SLACK = 1e-6
TIE_TOL = 1e-12
LOG_PATH_FLOOR = 1e-300
QUANTILE_LEVELS = (1e-3,) + tuple(k / 20 for k in range(1, 20))

REGIMES = ("base-case", "trivial-bound", "main")
CSV_COLUMNS = ("d", "m", "coefficients", "t", "lhs", "rhs", "ratio", "regime")


@dataclass(frozen=True)
class ComparisonResult:
    d: int
    coefficients: tuple
    t: float
    lhs: float
    rhs: float
    ratio: float
    regime: str
    log_path: bool = False
    log_ratio: float = math.nan

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise DomainError(f"unknown regime {self.regime!r}")
        for name in ("lhs", "rhs"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InternalError(f"{name} = {v!r} is not a probability")

    @property
    def m(self):
        return len(self.coefficients)

    @property
    def checked(self):
        """Whether this row counts towards the lhs <= C0 * rhs assertion."""
        if self.log_path:
            return self.lhs >= LOG_PATH_FLOOR
        return math.isfinite(self.ratio)

    def violates(self, bound=C0, slack=RATIO_SLACK):
        if not self.checked:
            return False
        if self.log_path:
            return self.log_ratio > math.log(bound + slack)
        return self.ratio > bound + slack

    def record(self):
        """Numeric form of the row, for JSON."""
        return {
            "d": self.d, "m": self.m, "coefficients": list(self.coefficients), "t": self.t,
            "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio, "regime": self.regime,
            "log_path": self.log_path,
        }

    def row(self):
        """String form of the row, for CSV."""
        return {
            "d": self.d,
            "m": self.m,
            "coefficients": ";".join(fmt(a) for a in self.coefficients),
            "t": fmt(self.t),
            "lhs": fmt(self.lhs),
            "rhs": fmt(self.rhs),
            "ratio": fmt(self.ratio),
            "regime": self.regime,
        }


# --------------------------------------------------------------------------
# the Gaussian side and the regime split


def gaussian_side(c, t):
    """P(||sum a_i G_i / sqrt(d)|| > t) for independent standard Gaussian G_i in R^d."""
    t = float(t)
    if not t >= 0.0:
        raise DomainError(f"t must be >= 0, got {t!r}")
    return chi_square_sf(c.d, t * t * c.d / c.sum_sq)


def log_gaussian_side(c, t):
    t = float(t)
    if not t >= 0.0:
        raise DomainError(f"t must be >= 0, got {t!r}")
    return log_chi_square_sf(c.d, t * t * c.d / c.sum_sq)


def trivial_threshold(c):
    """(t_normalised_per_unit_t, threshold) after scaling so that sum_{i>=2} a_i^2 = d.

    a_1 is the largest |a_i|.  The regime is trivial-bound iff
    t * scale <= threshold.
    """
    if c.m < 2:
        raise DomainError("the regime split needs at least two coefficients")
    order = c.ordered()
    rest = math.fsum(x * x for x in order[1:])
    scale = math.sqrt(c.d / rest)
    a1 = scale * order[0]
    d = c.d
    return scale, math.sqrt(d + 2) * math.sqrt((a1 * a1 + d) / d)


def proof_thresholds(c, t):
    """'trivial-bound' or 'main' for m >= 2.

    In the trivial-bound range the Gaussian side is at least
    P(chi^2_d > d + 2) >= 1/397, which is checked here as well.
    """
    scale, threshold = trivial_threshold(c)
    tn = scale * float(t)
    if tn <= threshold * (1.0 + TIE_TOL):
        if C0 * gaussian_side(c, t) < 1.0 - TIE_TOL:
            raise InternalError(
                f"trivial-bound regime but 397 * rhs < 1 at d={c.d}, t={t!r}"
            )
        return "trivial-bound"
    return "main"


# --------------------------------------------------------------------------
# single comparisons


def _result(c, t, lhs, regime):
    rhs = gaussian_side(c, t)
    lhs = min(max(float(lhs), 0.0), 1.0)
    if rhs < LOG_PATH_FLOOR:
        log_rhs = log_gaussian_side(c, t)
        log_ratio = math.log(lhs) - log_rhs if lhs > 0.0 else -math.inf
        ratio = math.exp(log_ratio) if log_ratio < 709.0 else math.inf
        return ComparisonResult(c.d, c.a, float(t), lhs, rhs, ratio, regime, True, log_ratio)
    ratio = lhs / rhs
    log_ratio = math.log(ratio) if ratio > 0.0 else -math.inf
    return ComparisonResult(c.d, c.a, float(t), lhs, rhs, ratio, regime, False, log_ratio)


def _regime(c, t):
    return "base-case" if c.m == 1 else proof_thresholds(c, t)


def compare_ko(c, t, dist=None):
    """Both sides at t and their ratio; `dist` may be a prebuilt norm law of c."""
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"t must be > 0, got {t!r}")
    if dist is None:
        dist = norm_distribution(c)
    return _result(c, t, survival(dist, t), _regime(c, t))


def compare_general(c, radial, t, dist=None):
    """As compare_ko with a_i xi_i replaced by a_i R_i xi_i, R_i ~ radial in [0, 1]."""
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"t must be > 0, got {t!r}")
    if dist is None:
        dist = radial_mixture_distribution(c, radial)
    return _result(c, t, survival(dist, t), _regime(c, t))


def t_values(c, dist):
    """21 comparison points in (0, 1.05 sum|a_i|], placed at quantiles of the sphere side."""
    top = 1.05 * c.sum_abs
    if dist.is_atomic:
        r = max(p for p, _ in dist.atoms)
        pts = [r * k / 20 for k in range(1, 20)] + [r * (1.0 - 1e-9), top]
        return [p for p in pts if p > 0.0]
    q = dist.quantile(np.array(QUANTILE_LEVELS))
    pts = [float(x) for x in q if x > 0.0]
    return pts + [top]


# --------------------------------------------------------------------------
# seeded harnesses


def random_instances(n, seed, d_max=16, m_max=8, a_max=3.0):
    """n seeded (d, a) instances with d in [2, d_max], m in [1, m_max], a_i in [-a_max, a_max]."""
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


def _instance_rows(c, radial, grid_size):
    if radial is None:
        dist = norm_distribution(c, grid_size)
    else:
        dist = radial_mixture_distribution(c, radial, grid_size)
    return [_result(c, t, survival(dist, t), _regime(c, t)) for t in t_values(c, dist)]


def _pool_map(fn, items, threads):
    if threads is None or threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, items))


def run_harness(instances, radial=None, grid_size=GRID_SIZE, threads=1):
    """ComparisonResult rows for every instance at its 21 t-values, in instance order."""
    if isinstance(radial, str):
        radial = RadialLaw.parse(radial)
    per = _pool_map(lambda c: _instance_rows(c, radial, grid_size), instances, threads)
    return [r for rows in per for r in rows]


@dataclass
class HarnessSummary:
    rows: list
    radial: str
    bound: float = C0
    slack: float = RATIO_SLACK

    @property
    def checked_rows(self):
        return [r for r in self.rows if r.checked]

    @property
    def worst(self):
        rows = self.checked_rows
        return max(rows, key=lambda r: r.log_ratio) if rows else None

    @property
    def violations(self):
        return [r for r in self.rows if r.violates(self.bound, self.slack)]

    @property
    def passed(self):
        return bool(self.checked_rows) and not self.violations

    def summary(self):
        w = self.worst
        return jsonable({
            "claim": "sphere tail <= 397 * gaussian tail",
            "radial": self.radial,
            "rows": len(self.rows),
            "checked": len(self.checked_rows),
            "log_path_rows": sum(r.log_path for r in self.rows),
            "max_ratio": w.ratio if w else math.nan,
            "witness": None if w is None else {
                "d": w.d, "coefficients": list(w.coefficients), "t": w.t,
                "lhs": w.lhs, "rhs": w.rhs, "regime": w.regime,
            },
            "bound": self.bound,
            "slack": self.slack,
            "violations": len(self.violations),
            "pass": self.passed,
        })


def theorem_check(n_instances=200, seed=0, radial=None, grid_size=GRID_SIZE, threads=1, **kw):
    instances = random_instances(n_instances, seed, **kw)
    rows = run_harness(instances, radial, grid_size, threads)
    label = "sphere" if radial is None else (radial if isinstance(radial, str) else radial.label())
    return HarnessSummary(rows, label)


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(r.row())
    return buf.getvalue()


def rows_from_csv(text):
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        out.append({
            "d": int(rec["d"]),
            "m": int(rec["m"]),
            "coefficients": tuple(float(x) for x in rec["coefficients"].split(";")),
            "t": float(rec["t"]),
            "lhs": float(rec["lhs"]),
            "rhs": float(rec["rhs"]),
            "ratio": float(rec["ratio"]),
            "regime": rec["regime"],
        })
    return out


# --------------------------------------------------------------------------
# the Rademacher counterexample


def binomial_two_sided_tail(m, t):
    """P(|eps_1 + ... + eps_m| / sqrt(m) > t) for Rademacher eps_i, exactly.

    With k successes the sum is 2k - m; the event is (2k - m)^2 > t^2 m.
    Python compares the integer square with the float cut exactly.
    """
    m = int(m)
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m!r}")
    t2 = float(t) ** 2
    cut = t2 * m
    hits = 0
    for k in range(m + 1):
        s = 2 * k - m
        if s * s > cut:
            hits += math.comb(m, k)
    return hits / 2 ** m


@dataclass
class CounterexampleTable:
    m: int
    t: float
    lhs: float
    rows: list  # (d, rhs, C0 * rhs, lhs > C0 * rhs)

    @property
    def first_violation(self):
        for d, _, _, exceeds in self.rows:
            if exceeds:
                return d
        return None

    @property
    def rhs_decreasing(self):
        vals = [r for _, r, _, _ in self.rows]
        return all(b < a for a, b in zip(vals, vals[1:]))

    def to_csv(self):
        lines = ["d,lhs,rhs,c0_rhs,exceeds"]
        for d, rhs, scaled, exceeds in self.rows:
            lines.append(f"{d},{fmt(self.lhs)},{fmt(rhs)},{fmt(scaled)},{fmt(exceeds)}")
        return "\n".join(lines) + "\n"

    def summary(self):
        return jsonable({
            "claim": "a Rademacher sum in a fixed direction beats 397 * gaussian tail for large d",
            "m": self.m,
            "t": self.t,
            "lhs": self.lhs,
            "first_d": self.first_violation,
            "rhs_decreasing": self.rhs_decreasing,
            "d_range": [self.rows[0][0], self.rows[-1][0]] if self.rows else [],
        })


def counterexample(m=100, d_list=range(2, 201), t=2.0):
    """lhs = P(|sum eps_i|/sqrt(m) > t) against rhs(d) = P(chi^2_d > t^2 d) for each d."""
    lhs = binomial_two_sided_tail(m, t)
    rows = []
    for d in d_list:
        rhs = chi_square_sf(int(d), t * t * d)
        rows.append((int(d), rhs, C0 * rhs, lhs > C0 * rhs))
    return CounterexampleTable(int(m), float(t), lhs, rows)


# --------------------------------------------------------------------------
# empirical worst-case ratio


def base_case_supremum(d):
    """sup_t of the m = 1 ratio: 1 / P(chi^2_d > d), approached as t -> |a_1|."""
    return 1.0 / chi_square_sf(d, d)


@dataclass
class SearchResult:
    best_ratio: float
    witness: ComparisonResult
    evaluations: int
    family: str

    def summary(self):
        w = self.witness
        return jsonable({
            "claim": "empirical best ratio (a lower bound on the optimal constant)",
            "empirical_best_ratio": self.best_ratio,
            "witness": {"d": w.d, "coefficients": list(w.coefficients), "t": w.t,
                        "lhs": w.lhs, "rhs": w.rhs, "regime": w.regime},
            "found_by": self.family,
            "evaluations": self.evaluations,
            "bound": C0,
            "within_bound": self.best_ratio <= C0 + RATIO_SLACK,
        })


class _Evaluator:
    """Counts distribution builds and keeps the best ratio seen."""

    def __init__(self, d, budget, grid_size):
        self.d = d
        self.budget = int(budget)
        self.grid_size = grid_size
        self.used = 0
        self.best = None
        self.family = ""

    @property
    def exhausted(self):
        return self.used >= self.budget

    def sup_ratio(self, a, family):
        """Best ratio over t for coefficients a, or None once the budget is spent."""
        if self.exhausted:
            return None
        self.used += 1
        c = CoefficientVector(self.d, tuple(a))
        dist = norm_distribution(c, self.grid_size)
        if dist.is_atomic:
            r = abs(c.a[0])
            ts = [r * k / 64 for k in range(1, 64)] + [r * (1.0 - 1e-9)]
        else:
            levels = np.concatenate([[1e-4, 1e-3], np.linspace(0.01, 0.99, 50), [0.999, 0.9999]])
            ts = [float(x) for x in dist.quantile(levels) if x > 0.0]
        results = [_result(c, t, survival(dist, t), _regime(c, t)) for t in ts]
        best = max((r for r in results if r.checked), key=lambda r: r.log_ratio)
        if not dist.is_atomic:
            best = self._refine(c, dist, ts, best)
        if self.best is None or best.ratio > self.best.ratio:
            self.best = best
            self.family = family
        return best.ratio

    def _refine(self, c, dist, ts, best):
        i = ts.index(best.t)
        lo = ts[i - 1] if i > 0 else 0.5 * ts[0]
        hi = ts[i + 1] if i + 1 < len(ts) else dist.support_max

        def neg(t):
            return -_result(c, t, survival(dist, t), "main").ratio

        res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10 * hi})
        if -res.fun > best.ratio:
            return _result(c, float(res.x), survival(dist, float(res.x)), _regime(c, float(res.x)))
        return best


def structured_families(m_max):
    """(label, coefficients) pairs: one atom, equal weights, one spike, geometric decay."""
    out = [("single", (1.0,))]
    for m in range(2, m_max + 1):
        out.append((f"equal-{m}", (1.0,) * m))
        for eps in (0.05, 0.3):
            out.append((f"spike-{m}-{eps!r}", (1.0,) + (eps,) * (m - 1)))
        for q in (0.5, 0.8):
            out.append((f"geometric-{m}-{q!r}", tuple(q ** k for k in range(m))))
    return out


def _coordinate_search(ev, x0, rng, family, step=1.0, min_step=1e-3):
    """Coordinate search over log|a_i|, i >= 2, with a_1 = 1 fixed by homogeneity."""
    x = np.array(x0, dtype=float)
    best = ev.sup_ratio(np.concatenate([[1.0], np.exp(x)]), family)
    if best is None:
        return
    while step >= min_step and not ev.exhausted:
        improved = False
        for i in rng.permutation(len(x)):
            for sgn in (1.0, -1.0):
                y = x.copy()
                y[i] = np.clip(y[i] + sgn * step, -6.0, 2.0)
                val = ev.sup_ratio(np.concatenate([[1.0], np.exp(y)]), family)
                if val is None:
                    return
                if val > best:
                    best, x, improved = val, y, True
                    break
        if not improved:
            step *= 0.5


def search_constant(d, m_max, budget, seed=0, grid_size=GRID_SIZE, restarts=4):
    """Derivative-free search for the largest lhs/rhs; returns an empirical lower bound.

    The budget counts distribution builds.  Structured families are tried
    first, then seeded coordinate searches from random starts (one child seed
    per restart, spawned from `seed`).
    """
    if int(m_max) != m_max or m_max < 1:
        raise DomainError(f"m_max must be a positive integer, got {m_max!r}")
    if int(budget) != budget or budget < 1:
        raise DomainError(f"budget must be a positive integer, got {budget!r}")
    ev = _Evaluator(int(d), budget, grid_size)
    for label, a in structured_families(int(m_max)):
        if ev.sup_ratio(a, label) is None:
            break
    if m_max >= 2:
        children = np.random.SeedSequence(seed).spawn(restarts)
        for k, child in enumerate(children):
            if ev.exhausted:
                break
            rng = np.random.default_rng(child)
            m = int(rng.integers(2, int(m_max) + 1))
            x0 = rng.uniform(-3.0, 0.0, m - 1)
            _coordinate_search(ev, x0, rng, f"coordinate-search-{k}")
    return SearchResult(ev.best.ratio, ev.best, ev.used, ev.family)
