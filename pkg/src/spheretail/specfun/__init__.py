"""Special-function kernels used throughout the package."""
from .bessel import bessel_i, log_bessel_i
from .distributions import (
    chi_square_cdf,
    chi_square_sf,
    log_chi_square_sf,
    noncentral_chi_square_cdf,
    std_normal_cdf,
    std_normal_pdf,
)
from .gamma import log_gamma, log_reg_gamma_upper, reg_gamma_lower, reg_gamma_upper
from .quadrature import QuadratureRule, gauss_jacobi_rule, weight_integral
from .results import EvalResult

__all__ = [
    "EvalResult",
    "QuadratureRule",
    "bessel_i",
    "chi_square_cdf",
    "chi_square_sf",
    "gauss_jacobi_rule",
    "log_bessel_i",
    "log_chi_square_sf",
    "log_gamma",
    "log_reg_gamma_upper",
    "noncentral_chi_square_cdf",
    "reg_gamma_lower",
    "reg_gamma_upper",
    "std_normal_cdf",
    "std_normal_pdf",
    "weight_integral",
]
