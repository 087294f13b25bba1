"""Series representations of the product/sum densities.

The density of the order-nu convolution S_nu (nu = n gives the sum of n
independent copies of Z = XY) is a double series over the triangle
0 <= j <= k of non-negative summands

    pref * (nu/8)^k / (k! Gamma(nu/2 + a_jk))
         * C(k,j) r^j A^(2j) r^-(k-j) B^(2k-2j)
         * U(1 - nu/2 - a_jk, 2 - nu - k, z)

with r = (1+rho)/(1-rho), A = m1 - m2, B = m1 + m2,
z = 2|x| / (s (1 - rho^2)), a_jk = k - j for x >= 0 and j for x < 0, and
pref the shared exponential prefactor.  Negative x reduces to positive x
through the reflection (x, rho, mu_y) -> (-x, -rho, -mu_y), under which
the product changes sign in law.

Every summand is evaluated as exp(log weight + log U).  Kummer's
transformation rewrites the U factor as z^(nu+k-1) U(nu/2 + j, nu + k, z),
whose second parameter walks a unit ladder in k; the values come from two
quadrature starts per j and the forward recurrence

    U(a, b+1, z) = ((z + b - 1) U(a, b, z) - (b - a - 1) U(a, b-1, z)) / z,

which follows the dominant solution and is numerically stable upward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln as _gammaln

from . import specfun as sf
from .charfun import BivariateParams, OrderSpec
from .errors import ConvergenceError, DomainError, PreconditionError

__all__ = [
    "EvalOptions",
    "EvalResult",
    "sign_and_index",
    "pdf_sum_series",
    "pdf_mean",
    "pdf_sum_reduced",
    "pdf_sum_zero_means",
    "pdf_sum_rho0_series",
    "pdf_product_cui",
    "series_terms",
    "EQUAL_RATIO_RTOL",
    "ratio_case",
]

_NEG_INF = -math.inf
_LOG_RENORM = 250.0 * math.log(10.0)

#: relative tolerance deciding when two standardized means count as equal;
#: shared with the integral module so both pick the same formula branch
EQUAL_RATIO_RTOL = 1e-12


@dataclass(frozen=True)
class EvalOptions:
    """Tolerances and the outer-series truncation cap."""

    rel_tol: float = 1e-12
    abs_tol: float = 1e-300
    max_k: int = 400

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if self.abs_tol < 0:
            raise DomainError("abs_tol must be non-negative")
        if self.max_k < 1:
            raise DomainError("max_k must be >= 1")


@dataclass(frozen=True)
class EvalResult:
    """Density value with an error estimate and evaluation diagnostics."""

    value: float
    err_estimate: float
    terms_used: int
    method: str

    def __post_init__(self) -> None:
        if not (self.value >= 0 or math.isnan(self.value)):
            raise DomainError("density value must be non-negative")
        if self.err_estimate < 0:
            raise DomainError("err_estimate must be non-negative")


_DEFAULT_OPTS = EvalOptions()


def sign_and_index(x: float, j: int, k: int) -> tuple[int, int]:
    """(sgn(x), a_jk(x)) with a_jk = k - j for x >= 0 and j for x < 0."""
    if not 0 <= j <= k:
        raise DomainError("need 0 <= j <= k")
    sgn = 1 if x > 0 else (-1 if x < 0 else 0)
    return sgn, (k - j if x >= 0 else j)


def ratio_case(m1: float, m2: float) -> str:
    """Classify standardized means: 'zero', 'equal', 'opposite', 'general'."""
    scale = max(1.0, abs(m1), abs(m2))
    if max(abs(m1), abs(m2)) <= EQUAL_RATIO_RTOL:
        return "zero"
    if abs(m1 - m2) <= EQUAL_RATIO_RTOL * scale:
        return "equal"
    if abs(m1 + m2) <= EQUAL_RATIO_RTOL * scale:
        return "opposite"
    return "general"


class _LogAcc:
    """Streaming signed sum tracked as (max log magnitude, rescaled sum)."""

    __slots__ = ("m", "s", "s_abs")

    def __init__(self) -> None:
        self.m = _NEG_INF
        self.s = 0.0
        self.s_abs = 0.0

    def add(self, log_mag: float, sign: float = 1.0) -> None:
        if log_mag == _NEG_INF:
            return
        if log_mag <= self.m:
            t = math.exp(log_mag - self.m)
            self.s += sign * t
            self.s_abs += t
        else:
            scale = math.exp(self.m - log_mag) if self.m != _NEG_INF else 0.0
            self.s = self.s * scale + sign
            self.s_abs = self.s_abs * scale + 1.0
            self.m = log_mag

    @property
    def log_abs(self) -> float:
        if self.m == _NEG_INF or self.s == 0.0:
            return _NEG_INF
        return self.m + math.log(abs(self.s))

    @property
    def log_abs_unsigned(self) -> float:
        if self.m == _NEG_INF or self.s_abs == 0.0:
            return _NEG_INF
        return self.m + math.log(self.s_abs)

    @property
    def sign(self) -> float:
        return 1.0 if self.s >= 0 else -1.0


class _UChain:
    """U(a, b0 + i, z) for i = 0, 1, 2, ... handed out one value per call."""

    __slots__ = ("a", "z", "b", "vp", "vc", "offset", "l0", "l1", "emitted")

    def __init__(self, a: float, z: float, b0: float,
                 opts: sf.SpecFunOptions) -> None:
        self.a = a
        self.z = z
        self.l0 = sf._log_laplace_u(a, b0, z, opts)
        self.l1 = sf._log_laplace_u(a, b0 + 1.0, z, opts)
        self.b = b0 + 1.0
        self.offset = self.l1
        self.vp = math.exp(self.l0 - self.l1)
        self.vc = 1.0
        self.emitted = 0

    def next_log(self) -> float:
        if self.emitted == 0:
            self.emitted = 1
            return self.l0
        if self.emitted == 1:
            self.emitted = 2
            return self.l1
        vn = ((self.z + self.b - 1.0) * self.vc
              - (self.b - self.a - 1.0) * self.vp) / self.z
        self.b += 1.0
        self.vp, self.vc = self.vc, vn
        if self.vc > 1e250:
            self.vp /= 1e250
            self.vc /= 1e250
            self.offset += _LOG_RENORM
        self.emitted += 1
        return self.offset + math.log(self.vc)


def _sf_opts(opts: EvalOptions) -> sf.SpecFunOptions:
    return sf.SpecFunOptions(rel_tol=min(1e-13, opts.rel_tol), abs_tol=0.0,
                             max_terms=2000, quad_points=40000)


def _lchoose_vec(k: int, j: np.ndarray) -> np.ndarray:
    return (_gammaln(k + 1.0) - _gammaln(j + 1.0) - _gammaln(k - j + 1.0))


def _finish(log_value: float, terms: int, rel_trunc: float,
            method: str) -> EvalResult:
    if log_value == _NEG_INF:
        return EvalResult(0.0, 0.0, terms, method)
    value = math.inf if log_value > 709.0 else math.exp(log_value)
    err = value * (rel_trunc + 1e-13) if math.isfinite(value) else math.inf
    return EvalResult(value, err, terms, method)


def _sum_series_log(m1: float, m2: float, rho: float, s: float, nu: float,
                    x: float, opts: EvalOptions) -> tuple[float, int, float]:
    """log density for x >= 0 (x = 0 only when nu > 1).

    Returns (log value, outer terms used, relative size of last term).
    """
    r2 = 1.0 - rho * rho
    a2 = (m1 - m2) ** 2
    b2 = (m1 + m2) ** 2
    log_r = math.log1p(rho) - math.log1p(-rho)
    la = math.log(a2) if a2 > 0 else _NEG_INF
    lb = math.log(b2) if b2 > 0 else _NEG_INF
    msq = m1 * m1 + m2 * m2 - 2.0 * rho * m1 * m2
    log_pref = ((nu / 2.0 - 1.0) * math.log(r2) - (nu - 1.0) * math.log(2.0)
                - math.log(s) - nu * msq / (2.0 * r2) - x / (s * (1.0 + rho)))
    z = 2.0 * x / (s * r2)
    log_z = math.log(z) if x > 0 else _NEG_INF
    log_c = math.log(nu / 8.0)
    squad = _sf_opts(opts)
    log_abs_floor = math.log(opts.abs_tol) - log_pref if opts.abs_tol > 0 else _NEG_INF

    chains: list[_UChain] = []
    acc = _LogAcc()
    below = 0
    terms_used = 0
    log_term = _NEG_INF
    log_term_prev = _NEG_INF
    for k in range(opts.max_k + 1):
        j = np.arange(k + 1)
        if x > 0:
            chains.append(_UChain(nu / 2.0 + k, z, nu + k, squad))
            log_u = np.array([chains[i].next_log() for i in range(k + 1)])
            log_u += (nu + k - 1.0) * log_z
        else:
            log_u = _gammaln(nu + k - 1.0) - _gammaln(nu / 2.0 + j)
        with np.errstate(invalid="ignore"):
            w = (k * log_c - _gammaln(k + 1.0) - _gammaln(nu / 2.0 + (k - j))
                 + _lchoose_vec(k, j)
                 + (2.0 * j - k) * log_r
                 + np.where(j > 0, j * la, 0.0)
                 + np.where(k - j > 0, (k - j) * lb, 0.0))
        col = w + log_u
        col = col[~np.isnan(col)]
        log_term_prev = log_term
        log_term = sf._logsumexp(col) if col.size else _NEG_INF
        acc.add(log_term)
        terms_used = k + 1
        threshold = max(acc.log_abs + math.log(opts.rel_tol), log_abs_floor)
        if log_term <= threshold:
            below += 1
            if below >= 2 and k >= 2:
                break
        else:
            below = 0
    else:
        raise ConvergenceError(
            f"outer series not converged within max_k={opts.max_k}")
    log_sum = acc.log_abs
    rel_trunc = math.exp(max(log_term, log_term_prev) - log_sum) if log_sum != _NEG_INF else 0.0
    return log_pref + log_sum, terms_used, rel_trunc


def pdf_sum_series(params: BivariateParams, order: OrderSpec, x: float,
                   opts: EvalOptions | None = None) -> EvalResult:
    """Density of the order-nu convolution at x, by the general double series.

    At x = 0 the density is finite only for nu > 1; for nu <= 1 the value
    is a positive-infinity marker (logarithmic mode singularity).
    """
    o = opts or _DEFAULT_OPTS
    nu = order.nu
    if not math.isfinite(x):
        raise DomainError("x must be finite")
    if x < 0:
        params = params.reflected()
        x = -x
    if x == 0.0 and nu <= 1.0:
        return EvalResult(math.inf, math.inf, 0, "series_general")
    log_val, terms, rel = _sum_series_log(
        params.m1, params.m2, params.rho, params.scale, nu, x, o)
    res = _finish(log_val, terms, rel, "series_general")
    return res


def pdf_mean(params: BivariateParams, n: int, x: float,
             opts: EvalOptions | None = None) -> EvalResult:
    """Density of the sample mean of n copies: n * f_{S_n}(n x)."""
    if n < 1 or int(n) != n:
        raise DomainError("n must be an integer >= 1")
    inner = pdf_sum_series(params, OrderSpec(float(n)), n * x, opts)
    return EvalResult(n * inner.value, n * inner.err_estimate,
                      inner.terms_used, inner.method)


def pdf_sum_zero_means(params: BivariateParams, order: OrderSpec,
                       x: float) -> EvalResult:
    """Closed form for mu_x = mu_y = 0:

    f(x) = 2^((1-nu)/2) |x|^((nu-1)/2)
           / (s^((nu+1)/2) sqrt(pi (1-rho^2)) Gamma(nu/2))
           * exp(rho x / (s (1-rho^2))) * K_((nu-1)/2)(|x| / (s (1-rho^2))).
    """
    if params.mu_x != 0.0 or params.mu_y != 0.0:
        raise DomainError("closed form requires mu_x = mu_y = 0")
    nu = order.nu
    s = params.scale
    rho = params.rho
    r2 = 1.0 - rho * rho
    if x == 0.0:
        if nu <= 1.0:
            return EvalResult(math.inf, math.inf, 1, "closed_form")
        # |x|^mu K_mu(|x|/c) -> Gamma(mu) (2c)^mu / 2 as x -> 0, mu = (nu-1)/2
        mu = (nu - 1.0) / 2.0
        log_val = ((1.0 - nu) / 2.0 * math.log(2.0)
                   - (nu + 1.0) / 2.0 * math.log(s)
                   - 0.5 * math.log(math.pi * r2) - math.lgamma(nu / 2.0)
                   + math.lgamma(mu) + mu * math.log(2.0 * s * r2)
                   - math.log(2.0))
        value = math.exp(log_val)
        return EvalResult(value, value * 1e-13, 1, "closed_form")
    w = abs(x) / (s * r2)
    log_val = ((1.0 - nu) / 2.0 * math.log(2.0)
               + (nu - 1.0) / 2.0 * math.log(abs(x))
               - (nu + 1.0) / 2.0 * math.log(s)
               - 0.5 * math.log(math.pi * r2) - math.lgamma(nu / 2.0)
               + rho * x / (s * r2)
               + sf.log_bessel_k_scaled((nu - 1.0) / 2.0, w) - w)
    value = math.inf if log_val > 709.0 else math.exp(log_val)
    return EvalResult(value, value * 1e-13 if math.isfinite(value) else math.inf,
                      1, "closed_form")


def pdf_sum_reduced(params: BivariateParams, order: OrderSpec, x: float,
                    opts: EvalOptions | None = None) -> EvalResult:
    """Single-series value when mu_x/sigma_x = +- mu_y/sigma_y.

    Raises :class:`PreconditionError` when neither ratio condition holds.
    """
    o = opts or _DEFAULT_OPTS
    case = ratio_case(params.m1, params.m2)
    if case == "general":
        raise PreconditionError(
            "reduced series needs mu_x/sigma_x = +- mu_y/sigma_y")
    nu = order.nu
    if x < 0:
        params = params.reflected()
        x = -x
        if case == "equal":
            case = "opposite"
        elif case == "opposite":
            case = "equal"
    if x == 0.0 and nu <= 1.0:
        return EvalResult(math.inf, math.inf, 0, "series_reduced")
    if case == "zero":
        case = "equal"
    m1, rho, s = params.m1, params.rho, params.scale
    r2 = 1.0 - rho * rho
    z = 2.0 * x / (s * r2)
    log_z = math.log(z) if x > 0 else _NEG_INF
    lm = math.log(m1 * m1) if m1 != 0.0 else _NEG_INF
    log_r = math.log1p(rho) - math.log1p(-rho)
    if case == "equal":
        log_expf = -nu * m1 * m1 / (1.0 + rho)
        lw_geom = -log_r + lm       # ((1-rho)/(1+rho)) m1^2 per k
    else:
        log_expf = -nu * m1 * m1 / (1.0 - rho)
        lw_geom = log_r + lm        # ((1+rho)/(1-rho)) m1^2 per k
    log_pref = ((nu / 2.0 - 1.0) * math.log(r2) - (nu - 1.0) * math.log(2.0)
                - math.log(s) + log_expf - x / (s * (1.0 + rho)))
    squad = _sf_opts(o)
    log_c = math.log(nu / 2.0)
    acc = _LogAcc()
    chain = _UChain(nu / 2.0, z, nu, squad) if (case == "equal" and x > 0) else None
    below = 0
    log_term = _NEG_INF
    log_term_prev = _NEG_INF
    terms = 0
    for k in range(o.max_k + 1):
        base = k * (log_c + lw_geom) - math.lgamma(k + 1.0) if k > 0 or lm != _NEG_INF else 0.0
        if k > 0 and lm == _NEG_INF:
            base = _NEG_INF
        if case == "equal":
            # a_jk = k: 1/Gamma(nu/2 + k), U(1 - nu/2 - k, 2 - nu - k, z)
            if x > 0:
                log_u = (nu + k - 1.0) * log_z + chain.next_log()
            else:
                log_u = math.lgamma(nu + k - 1.0) - math.lgamma(nu / 2.0)
            lt = base - math.lgamma(nu / 2.0 + k) + log_u
        else:
            # a_jk = 0: 1/Gamma(nu/2), U(1 - nu/2, 2 - nu - k, z)
            if x > 0:
                log_u = ((nu + k - 1.0) * log_z
                         + sf._log_laplace_u(nu / 2.0 + k, nu + k, z, squad))
            else:
                log_u = math.lgamma(nu + k - 1.0) - math.lgamma(nu / 2.0 + k)
            lt = base - math.lgamma(nu / 2.0) + log_u
        log_term_prev = log_term
        log_term = lt
        acc.add(lt)
        terms = k + 1
        if lt <= acc.log_abs + math.log(o.rel_tol):
            below += 1
            if below >= 2 and k >= 2:
                break
        else:
            below = 0
    else:
        raise ConvergenceError("reduced series not converged within max_k")
    log_sum = acc.log_abs
    rel = math.exp(max(log_term, log_term_prev) - log_sum) if log_sum != _NEG_INF else 0.0
    res = _finish(log_pref + log_sum, terms, rel, "series_reduced")
    return res


def pdf_sum_rho0_series(params: BivariateParams, order: OrderSpec, x: float,
                        opts: EvalOptions | None = None) -> EvalResult:
    """Bessel-K series for rho = 0, mu_y = 0 (single series in k):

    f(x) = 2^((1-nu)/2) / (s^((nu+1)/2) sqrt(pi)) exp(-nu mu_x^2/(2 sigma_x^2))
           * sum_k (nu mu_x^2/4)^k |x|^((nu-1)/2 + k)
                   / (k! Gamma(nu/2+k) sigma_x^(3k) sigma_y^k)
                   * K_((nu-1)/2 + k)(|x|/s).
    """
    o = opts or _DEFAULT_OPTS
    if params.rho != 0.0 or params.mu_y != 0.0:
        raise DomainError("Bessel-K series requires rho = 0 and mu_y = 0")
    nu = order.nu
    if x == 0.0 and nu <= 1.0:
        return EvalResult(math.inf, math.inf, 0, "bessel_series")
    s = params.scale
    m1 = params.m1
    w = abs(x) / s
    lcoef = (math.log(nu * params.mu_x ** 2 / 4.0) if params.mu_x != 0.0
             else _NEG_INF)
    lsx, lsy = math.log(params.sigma_x), math.log(params.sigma_y)
    log_pref = ((1.0 - nu) / 2.0 * math.log(2.0) - (nu + 1.0) / 2.0 * math.log(s)
                - 0.5 * math.log(math.pi) - nu * m1 * m1 / 2.0)
    acc = _LogAcc()
    below = 0
    terms = 0
    log_term = _NEG_INF
    log_term_prev = _NEG_INF
    ladder = _bessel_k_log_ladder(w, (nu - 1.0) / 2.0) if x != 0.0 else None
    for k in range(o.max_k + 1):
        base = 0.0 if k == 0 else (k * lcoef - math.lgamma(k + 1.0)
                                   - 3.0 * k * lsx - k * lsy)
        if k > 0 and lcoef == _NEG_INF:
            base = _NEG_INF
        mu_k = (nu - 1.0) / 2.0 + k
        if x != 0.0:
            log_k = next(ladder) - w  # log K_mu_k(w)
            lt = base + mu_k * math.log(abs(x)) - math.lgamma(nu / 2.0 + k) + log_k
        else:
            # |x|^mu K_mu(|x|/s) -> Gamma(mu) (2 s)^mu / 2 with mu = mu_k > 0
            lt = (base - math.lgamma(nu / 2.0 + k) + math.lgamma(mu_k)
                  + mu_k * math.log(2.0 * s) - math.log(2.0))
        log_term_prev = log_term
        log_term = lt
        acc.add(lt)
        terms = k + 1
        if lt <= acc.log_abs + math.log(o.rel_tol):
            below += 1
            if below >= 2 and k >= 2:
                break
        else:
            below = 0
    else:
        raise ConvergenceError("Bessel-K series not converged within max_k")
    log_sum = acc.log_abs
    rel = math.exp(max(log_term, log_term_prev) - log_sum) if log_sum != _NEG_INF else 0.0
    return _finish(log_pref + log_sum, terms, rel, "bessel_series")


def _bessel_k_log_ladder(w: float, mu0: float):
    """Yields log( e^w K_(mu0 + k)(w) ) for k = 0, 1, 2, ...

    Quadrature for orders <= 1, then the upward recurrence
    K_(mu+1) = K_(mu-1) + (2 mu / w) K_mu with periodic renormalization
    (stable: K grows with the order).
    """
    logs = []
    mu = mu0
    while mu <= 1.0 or len(logs) < 2:
        logs.append(sf.log_bessel_k_scaled(mu, w))
        yield logs[-1]
        mu += 1.0
    offset = 0.0
    vp = math.exp(logs[-2] - logs[-1])
    vc = 1.0
    offset = logs[-1]
    while True:
        vn = vp + (2.0 * (mu - 1.0) / w) * vc
        vp, vc = vc, vn
        if vc > 1e250:
            vp /= 1e250
            vc /= 1e250
            offset += _LOG_RENORM
        yield offset + math.log(vc)
        mu += 1.0


def pdf_product_cui(params: BivariateParams, x: float,
                    opts: EvalOptions | None = None) -> EvalResult:
    """Density of the single product Z = XY by the Bessel-K double series.

    Exists as an independent oracle for the order-1 hypergeometric series;
    the summands are not sign-definite, so cancellation is monitored and
    reflected in the error estimate.  Single-series fast paths are used
    when mu_y = rho = 0 or when mu_x/sigma_x = rho mu_y/sigma_y (and the
    X <-> Y mirrored conditions).
    """
    o = opts or _DEFAULT_OPTS
    if x == 0.0:
        return EvalResult(math.inf, math.inf, 0, "cui_series")
    p = params
    tol = EQUAL_RATIO_RTOL
    if p.rho == 0.0 and p.mu_y == 0.0:
        return _cui_simple(p, x, o)
    if p.rho == 0.0 and p.mu_x == 0.0:
        return _cui_simple(_swap_xy(p), x, o)
    if abs(p.m1 - p.rho * p.m2) <= tol * max(1.0, abs(p.m1)):
        return _cui_red1(p, x, o)
    if abs(p.m2 - p.rho * p.m1) <= tol * max(1.0, abs(p.m2)):
        return _cui_red1(_swap_xy(p), x, o)
    return _cui_general(p, x, o)


def _swap_xy(p: BivariateParams) -> BivariateParams:
    return BivariateParams(p.mu_y, p.mu_x, p.sigma_y, p.sigma_x, p.rho)


def _cui_general(p: BivariateParams, x: float, o: EvalOptions) -> EvalResult:
    s = p.scale
    r2 = 1.0 - p.rho ** 2
    w = abs(x) / (s * r2)
    c1 = p.mu_x / p.sigma_x ** 2 - p.rho * p.mu_y / s
    c2 = p.mu_y / p.sigma_y ** 2 - p.rho * p.mu_x / s
    lc1 = math.log(abs(c1)) if c1 != 0.0 else _NEG_INF
    lc2 = math.log(abs(c2)) if c2 != 0.0 else _NEG_INF
    q = (1.0 if x > 0 else -1.0) * math.copysign(1.0, c1 if c1 else 1.0) \
        * math.copysign(1.0, c2 if c2 else 1.0)
    log_pref = (-math.log(math.pi)
                - (p.m1 ** 2 + p.m2 ** 2
                   - 2.0 * p.rho * (x + p.mu_x * p.mu_y) / s) / (2.0 * r2))
    lsx, lsy = math.log(p.sigma_x), math.log(p.sigma_y)
    lx = math.log(abs(x))
    # ladder of log(e^w K_i(w)) for integer orders i = 0, 1, 2, ...
    kladder: list[float] = []
    gen = _bessel_k_log_ladder(w, 0.0)
    acc = _LogAcc()
    below = 0
    terms = 0
    for k in range(o.max_k + 1):
        while len(kladder) <= k:
            kladder.append(next(gen))
        j = np.arange(2 * k + 1)
        with np.errstate(invalid="ignore"):
            lmag = (k * lx + (j - k - 1.0) * lsx - (j - k + 1.0) * lsy
                    - _gammaln(2.0 * k + 1.0) - (2.0 * k + 0.5) * math.log(r2)
                    + _lchoose_vec(2 * k, j)
                    + np.where(j > 0, j * lc1, 0.0)
                    + np.where(2 * k - j > 0, (2.0 * k - j) * lc2, 0.0)
                    + np.array([kladder[abs(int(i) - k)] for i in j]) - w)
        signs = np.where(j % 2 == 0, 1.0, q)
        keep = ~np.isnan(lmag)
        row = _LogAcc()
        for lm_, sg_ in zip(lmag[keep], signs[keep]):
            row.add(float(lm_), float(sg_))
            acc.add(float(lm_), float(sg_))
        terms = k + 1
        if row.log_abs_unsigned <= acc.log_abs + math.log(o.rel_tol):
            below += 1
            if below >= 2 and k >= 2:
                break
        else:
            below = 0
    else:
        raise ConvergenceError("product series not converged within max_k")
    if acc.sign < 0:
        # cancellation produced a tiny negative: report zero, inflate error
        return EvalResult(0.0, math.exp(log_pref + acc.log_abs_unsigned) * 1e-14,
                          terms, "cui_series")
    log_val = log_pref + acc.log_abs
    value = math.exp(log_val) if log_val <= 709.0 else math.inf
    # mixed-sign summands: include a roundoff floor at the largest-term scale
    err = value * 2e-13 + math.exp(log_pref + acc.m) * 1e-15
    if acc.log_abs - acc.log_abs_unsigned < math.log(1e-10):
        err = max(err, math.exp(log_pref + acc.log_abs_unsigned) * 1e-10)
    return EvalResult(value, err, terms, "cui_series")


def _cui_simple(p: BivariateParams, x: float, o: EvalOptions) -> EvalResult:
    """mu_y = rho = 0 single series with K_j(|x|/s)."""
    s = p.scale
    w = abs(x) / s
    m1 = p.m1
    log_pref = -math.log(math.pi * s) - m1 * m1 / 2.0
    lgeom = (math.log(p.mu_x ** 2) if p.mu_x != 0.0 else _NEG_INF)
    lx_s = math.log(abs(x)) - 3.0 * math.log(p.sigma_x) - math.log(p.sigma_y)
    gen = _bessel_k_log_ladder(w, 0.0)
    acc = _LogAcc()
    below = 0
    terms = 0
    for jj in range(o.max_k + 1):
        log_k = next(gen) - w
        base = 0.0 if jj == 0 else jj * (lgeom + lx_s) - math.lgamma(2.0 * jj + 1.0)
        if jj > 0 and lgeom == _NEG_INF:
            base = _NEG_INF
        lt = base + log_k
        acc.add(lt)
        terms = jj + 1
        if lt <= acc.log_abs + math.log(o.rel_tol):
            below += 1
            if below >= 2 and jj >= 2:
                break
        else:
            below = 0
    else:
        raise ConvergenceError("single product series not converged")
    return _finish(log_pref + acc.log_abs, terms, 1e-14, "cui_series")


def _cui_red1(p: BivariateParams, x: float, o: EvalOptions) -> EvalResult:
    """mu_x/sigma_x = rho mu_y/sigma_y single series."""
    s = p.scale
    r2 = 1.0 - p.rho ** 2
    w = abs(x) / (s * r2)
    log_pref = (-math.log(math.pi * s) - 0.5 * math.log(r2)
                - p.m2 ** 2 / 2.0 + p.rho * x / (s * r2))
    lgeom = math.log(p.m2 ** 2) if p.mu_y != 0.0 else _NEG_INF
    lx_s = math.log(abs(x) / s)
    gen = _bessel_k_log_ladder(w, 0.0)
    acc = _LogAcc()
    below = 0
    terms = 0
    for jj in range(o.max_k + 1):
        log_k = next(gen) - w
        base = 0.0 if jj == 0 else jj * (lgeom + lx_s) - math.lgamma(2.0 * jj + 1.0)
        if jj > 0 and lgeom == _NEG_INF:
            base = _NEG_INF
        lt = base + log_k
        acc.add(lt)
        terms = jj + 1
        if lt <= acc.log_abs + math.log(o.rel_tol):
            below += 1
            if below >= 2 and jj >= 2:
                break
        else:
            below = 0
    else:
        raise ConvergenceError("single product series not converged")
    return _finish(log_pref + acc.log_abs, terms, 1e-14, "cui_series")


def series_terms(params: BivariateParams, order: OrderSpec, x: float,
                 k_max: int) -> np.ndarray:
    """Raw (k, j) summands of the double series on linear scale.

    Diagnostic helper (small k_max, moderate parameters): entry [k, j] is
    the full summand including the exponential prefactor; NaN above the
    triangle.
    """
    p = params
    nu = order.nu
    if x < 0:
        p = p.reflected()
        x = -x
    m1, m2, rho, s = p.m1, p.m2, p.rho, p.scale
    r2 = 1.0 - rho * rho
    z = 2.0 * x / (s * r2)
    msq = m1 * m1 + m2 * m2 - 2.0 * rho * m1 * m2
    pref = (r2 ** (nu / 2.0 - 1.0) / (2.0 ** (nu - 1.0) * s)
            * math.exp(-nu * msq / (2.0 * r2) - x / (s * (1.0 + rho))))
    out = np.full((k_max + 1, k_max + 1), math.nan)
    rr = (1.0 + rho) / (1.0 - rho)
    for k in range(k_max + 1):
        for j in range(k + 1):
            a_jk = k - j
            u = sf.tricomi_u(1.0 - nu / 2.0 - a_jk, 2.0 - nu - k, z)
            term = ((nu / 8.0) ** k / math.factorial(k)
                    / math.gamma(nu / 2.0 + a_jk) * math.comb(k, j)
                    * rr ** j * (m1 - m2) ** (2 * j)
                    * rr ** (j - k) * (m1 + m2) ** (2 * (k - j)) * u)
            out[k, j] = pref * term
    return out
