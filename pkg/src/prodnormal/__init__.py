"""Exact distribution of products, sums and means of correlated normals.

For a bivariate normal pair (X, Y) the package evaluates the probability
density of Z = X*Y, of sums S_n = Z_1 + ... + Z_n of independent copies,
of the sample mean, and of the fractional-order divisor densities whose
m-fold convolution reconstructs Z (a constructive proof that the product
distribution is infinitely divisible).  Three mutually independent
representations (hypergeometric series, Bessel integral, characteristic
function inversion) cross-check each other.
"""

from .charfun import BivariateParams, OrderSpec, cf_order, partial_fraction_terms
from .errors import (
    ConvergenceError,
    DomainError,
    OverflowRangeError,
    PoleError,
    PreconditionError,
    ProdNormalError,
)
from .series import (
    EvalOptions,
    EvalResult,
    pdf_mean,
    pdf_product_cui,
    pdf_sum_reduced,
    pdf_sum_rho0_series,
    pdf_sum_series,
    pdf_sum_zero_means,
    sign_and_index,
)
from .integral import (
    QuadOptions,
    pdf_sum_integral,
    pdf_sum_rho0_integral,
    quad_semiinfinite,
)
from .divisibility import (
    pdf_divisor,
    verify_divisibility_cf,
    verify_divisibility_convolution,
)
from .verify import (
    GridSpec,
    McConfig,
    cdf_numeric,
    check_int1,
    check_int11,
    ks_check,
    pdf_cf_inversion,
    sample_sum,
)
from .evaluate import pdf_auto

__all__ = [
    "BivariateParams",
    "OrderSpec",
    "cf_order",
    "partial_fraction_terms",
    "EvalOptions",
    "EvalResult",
    "pdf_sum_series",
    "pdf_sum_reduced",
    "pdf_sum_zero_means",
    "pdf_sum_rho0_series",
    "pdf_product_cui",
    "pdf_mean",
    "QuadOptions",
    "pdf_sum_integral",
    "pdf_sum_rho0_integral",
    "quad_semiinfinite",
    "pdf_divisor",
    "verify_divisibility_cf",
    "verify_divisibility_convolution",
    "GridSpec",
    "McConfig",
    "sample_sum",
    "ks_check",
    "pdf_cf_inversion",
    "cdf_numeric",
    "check_int1",
    "check_int11",
    "pdf_auto",
    "sign_and_index",
    "ProdNormalError",
    "DomainError",
    "PoleError",
    "PreconditionError",
    "ConvergenceError",
    "OverflowRangeError",
]
