"""Verification reports and the float formatting shared by every emitter."""
from dataclasses import dataclass, field
import json
import math


def fmt(x):
    """17 significant digits, enough to round-trip a double exactly."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def jsonable(obj):
    """Recursively convert floats to round-trippable JSON numbers."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return fmt(obj)
    return obj


@dataclass
class VerificationReport:
    """Worst-case outcome of checking one claim over a parameter grid.

    A margin is "claimed quantity minus bound", oriented so that the claim
    holds iff margin >= -tolerance.
    """

    claim: str
    grid: dict
    tolerance: float
    worst_margin: float = math.inf
    worst_point: dict = field(default_factory=dict)
    checked: int = 0
    failures: int = 0
    details: dict = field(default_factory=dict)

    def update(self, margin, **point):
        self.checked += 1
        if not margin >= -self.tolerance:  # NaN counts as a failure
            self.failures += 1
        if math.isnan(margin) or margin < self.worst_margin:
            self.worst_margin = margin
            self.worst_point = dict(point)

    @property
    def passed(self):
        return self.checked > 0 and self.failures == 0

    def envelope(self):
        out = {
            "claim": self.claim,
            "grid": self.grid,
            "worst_margin": self.worst_margin,
            "worst_point": self.worst_point,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "checked": self.checked,
            "failures": self.failures,
        }
        if self.details:
            out["details"] = self.details
        return jsonable(out)


def dumps(obj, indent=2):
    """Deterministic JSON: sorted keys, every float written with 17 significant digits."""
    pad = " " * indent

    def enc(x, depth):
        if isinstance(x, dict):
            if not x:
                return "{}"
            inner = ",\n".join(
                pad * (depth + 1) + json.dumps(str(k)) + ": " + enc(x[k], depth + 1)
                for k in sorted(x, key=str)
            )
            return "{\n" + inner + "\n" + pad * depth + "}"
        if isinstance(x, (list, tuple)):
            if not x:
                return "[]"
            inner = ",\n".join(pad * (depth + 1) + enc(v, depth + 1) for v in x)
            return "[\n" + inner + "\n" + pad * depth + "]"
        if hasattr(x, "item") and not isinstance(x, (str, bytes)):
            x = x.item()
        if x is None:
            return "null"
        if isinstance(x, bool):
            return "true" if x else "false"
        if isinstance(x, int):
            return str(x)
        if isinstance(x, float):
            return fmt(x) if math.isfinite(x) else json.dumps(fmt(x))
        return json.dumps(str(x))

    return enc(obj, 0) + "\n"
