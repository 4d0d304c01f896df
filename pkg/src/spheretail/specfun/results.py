from dataclasses import dataclass
import math


@dataclass(frozen=True)
class EvalResult:
    """A computed scalar with an absolute error estimate and the method used."""

    value: float
    abs_error_estimate: float
    method: str  # series | quadrature | closed-form | monte-carlo | asymptotic

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"EvalResult value must be finite, got {self.value!r}")
        if not (math.isfinite(self.abs_error_estimate) and self.abs_error_estimate >= 0):
            raise ValueError(f"bad error estimate {self.abs_error_estimate!r}")
