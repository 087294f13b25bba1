"""Real-parameter special-function kernel.

Everything here is self-contained scalar numerics built on three tools:

* log-space power series (no cancellation when all terms share a sign),
* trapezoidal quadrature over the real line after a log substitution
  ``t = e^u`` (geometrically convergent for our analytic integrands),
* stable forward recurrences where a function family is needed along a
  parameter ladder (handled by the callers in the density modules).

The modified Bessel function of the second kind is *defined* through the
Laplace-type integral

    K_nu(x) = 1/2 (x/2)^nu \int_0^inf exp(-t - x^2/(4t)) t^(-nu-1) dt,

and the Tricomi function U(a, b, x) through its Laplace transform
representation for a > 0, with Kummer's transformation
U(a,b,x) = x^(1-b) U(a-b+1, 2-b, x) used to move other parameter ranges
onto that path.  All functions are pure; safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DomainError,
    OverflowRangeError,
    PoleError,
)

__all__ = [
    "SpecFunOptions",
    "gamma",
    "gammaln",
    "gammaln_sign",
    "pochhammer",
    "bessel_i",
    "bessel_i_half_elem",
    "bessel_k",
    "log_bessel_k_scaled",
    "log_bessel_i_scaled",
    "tricomi_u",
    "log_tricomi_u",
    "hyp_0f1",
    "log_hyp_0f1",
    "hyp_2f1_poly",
    "whittaker_w",
]

_LOG_MAX = 709.0          # log of largest double
_TAIL_CUT = 48.0          # integrand discarded this many nats below its peak


@dataclass(frozen=True)
class SpecFunOptions:
    """Tolerances and budgets for series and quadrature evaluation."""

    rel_tol: float = 1e-14
    abs_tol: float = 0.0
    max_terms: int = 1000
    quad_points: int = 20000

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if self.abs_tol < 0:
            raise DomainError("abs_tol must be non-negative")
        if self.max_terms < 1:
            raise DomainError("max_terms must be >= 1")
        if self.quad_points < 8:
            raise DomainError("quad_points must be >= 8")


_DEFAULT = SpecFunOptions()


# ---------------------------------------------------------------------------
# gamma family
# ---------------------------------------------------------------------------

def gamma(x: float) -> float:
    """Euler gamma function; raises :class:`PoleError` at 0, -1, -2, ..."""
    if x <= 0 and float(x).is_integer():
        raise PoleError(f"gamma pole at x={x}")
    try:
        return math.gamma(x)
    except OverflowError as exc:
        raise OverflowRangeError(f"gamma({x}) overflows; use gammaln") from exc


def gammaln(x: float) -> float:
    """log |Gamma(x)|; companion for arguments where gamma overflows."""
    if x <= 0 and float(x).is_integer():
        raise PoleError(f"gamma pole at x={x}")
    return math.lgamma(x)


def gammaln_sign(x: float) -> tuple[float, int]:
    """(log |Gamma(x)|, sign of Gamma(x))."""
    if x > 0:
        return math.lgamma(x), 1
    if float(x).is_integer():
        raise PoleError(f"gamma pole at x={x}")
    # Gamma alternates sign on successive negative unit intervals.
    sign = 1 if math.floor(x) % 2 == 0 else -1
    return math.lgamma(x), sign


def pochhammer(u: float, j: int) -> float:
    """Ascending factorial (u)_j = u (u+1) ... (u+j-1); (u)_0 = 1."""
    if j < 0:
        raise DomainError("pochhammer needs j >= 0")
    out = 1.0
    for i in range(j):
        out *= u + i
    return out


def _lchoose(k: int, j: int) -> float:
    return math.lgamma(k + 1) - math.lgamma(j + 1) - math.lgamma(k - j + 1)


# ---------------------------------------------------------------------------
# trapezoid over the real line (log-space integrand)
# ---------------------------------------------------------------------------

def _logsumexp(values: np.ndarray) -> float:
    m = float(np.max(values)) if values.size else -math.inf
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.sum(np.exp(values - m))))


def _expand_grid(logf, u0: float, h: float, budget: int):
    """Nodes u0 + k*h on both sides of u0 until logf falls _TAIL_CUT under
    its running maximum.  Returns (u nodes, logf values)."""
    block = 64
    us = [np.array([u0])]
    vs = [np.asarray(logf(np.array([u0])), dtype=float)]
    peak = float(vs[0][0])
    for direction in (1.0, -1.0):
        k = 1
        while True:
            u = u0 + direction * h * np.arange(k, k + block)
            v = np.asarray(logf(u), dtype=float)
            us.append(u)
            vs.append(v)
            peak = max(peak, float(np.max(v)))
            if float(np.max(v)) < peak - _TAIL_CUT:
                break
            k += block
            if k > budget:
                raise ConvergenceError("integrand tail does not decay within budget")
    u_all = np.concatenate(us)
    v_all = np.concatenate(vs)
    keep = v_all > peak - 2 * _TAIL_CUT
    return u_all[keep], v_all[keep]


def _log_trap_real_line(logf, u0: float, h0: float, *, rel_tol: float,
                        budget: int) -> tuple[float, float]:
    """log of integral over the real line of exp(logf(u)).

    Trapezoid with successive mesh halving; returns (log value, rel err
    estimate from the last refinement).
    """
    u, v = _expand_grid(logf, u0, h0, budget)
    h = h0
    log_i = _logsumexp(v) + math.log(h)
    used = u.size
    err = math.inf
    lo, hi = float(np.min(u)), float(np.max(u))
    while used < budget:
        mid = np.arange(lo - h / 2, hi + h, h)
        vm = np.asarray(logf(mid), dtype=float)
        used += mid.size
        h /= 2
        # I_new = (I_old + h_old * sum_mid) / 2, done in log space
        log_new = _logsumexp(np.array([log_i, _logsumexp(vm) + math.log(2 * h)])) - math.log(2)
        err = abs(math.expm1(log_i - log_new)) if math.isfinite(log_new) else math.inf
        log_i = log_new
        lo -= h  # new nodes extend half a coarse step on each side
        hi += h
        if err <= rel_tol:
            return log_i, err
    if err > 1e3 * rel_tol and math.isfinite(err):
        raise ConvergenceError("real-line trapezoid did not reach tolerance")
    return log_i, err


# ---------------------------------------------------------------------------
# modified Bessel functions
# ---------------------------------------------------------------------------

def log_bessel_k_scaled(nu: float, x: float, opts: SpecFunOptions | None = None) -> float:
    """log( e^x K_nu(x) ) for x > 0, any real nu.

    Substituting t = (x/2) e^u in the defining Laplace-type integral gives
    e^x K_nu(x) = 1/2 \int exp(-x(cosh u - 1) - nu u) du over the real
    line, which the trapezoid rule integrates to spectral accuracy.
    """
    if x <= 0:
        raise DomainError("bessel_k needs x > 0")
    o = opts or _DEFAULT
    nu = abs(nu)  # K_{-nu} = K_nu

    def logf(u: np.ndarray) -> np.ndarray:
        return -x * (np.cosh(u) - 1.0) - nu * u

    u_peak = -math.asinh(nu / x)
    width = 1.0 / math.sqrt(x * math.cosh(u_peak) + 1e-30)
    h0 = min(0.4, width)
    log_half = math.log(0.5)
    val, _ = _log_trap_real_line(logf, u_peak, h0, rel_tol=o.rel_tol,
                                 budget=o.quad_points)
    return val + log_half


def bessel_k(nu: float, x: float, *, scaled: bool = False,
             opts: SpecFunOptions | None = None) -> float:
    """Modified Bessel function of the second kind K_nu(x), x > 0.

    ``scaled=True`` returns e^x K_nu(x), which stays representable for
    large x.
    """
    lv = log_bessel_k_scaled(nu, x, opts)
    le = lv if scaled else lv - x
    if le > _LOG_MAX:
        raise OverflowRangeError(
            f"K_{nu}({x}) exceeds double range; use scaled or log form")
    return math.exp(le)


def log_bessel_i_scaled(nu: float, x: float,
                        opts: SpecFunOptions | None = None) -> tuple[float, int]:
    """(log |e^{-x} I_nu(x)|, sign) for x >= 0.

    Power-series evaluation in log space for moderate x; the standard
    large-argument asymptotic expansion beyond.  All series terms share a
    sign once nu > -1, so the log-space sum has no cancellation.
    """
    o = opts or _DEFAULT
    if x < 0:
        raise DomainError("bessel_i needs x >= 0")
    if nu < 0 and float(nu).is_integer():
        nu = -nu  # I_{-n} = I_n
    if x == 0.0:
        if nu == 0:
            return 0.0, 1
        if nu > 0:
            return -math.inf, 1
        raise DomainError("bessel_i with negative non-integer order needs x > 0")

    if x <= 25.0:
        lhalf = math.log(x / 2.0)
        n_terms = o.max_terms
        k = np.arange(n_terms)
        with np.errstate(divide="ignore"):
            arg = k + nu + 1.0
            logs = (2 * k + nu) * lhalf - _lgamma_vec(k + 1.0)
            lg, sg = _lgamma_sign_vec(arg)
            logs = logs - lg
        m = float(np.max(logs))
        total = float(np.sum(sg * np.exp(logs - m)))
        if total == 0.0:
            return -math.inf, 1
        sign = 1 if total > 0 else -1
        return m + math.log(abs(total)) - x, sign

    # asymptotic: I_nu(x) ~ e^x/sqrt(2 pi x) * sum_m (-1)^m a_m(nu)/x^m
    s = 1.0
    term = 1.0
    prev = math.inf
    for m in range(1, 60):
        term *= (4 * nu * nu - (2 * m - 1) ** 2) / (8 * m * x)
        term = -term
        if abs(term) >= prev:  # divergence onset of the asymptotic series
            break
        s += term
        prev = abs(term)
        if abs(term) < 1e-18 * abs(s):
            break
    return math.log(abs(s)) - 0.5 * math.log(2 * math.pi * x), (1 if s > 0 else -1)


def _lgamma_vec(a: np.ndarray) -> np.ndarray:
    return np.vectorize(math.lgamma, otypes=[float])(a)


def _lgamma_sign_vec(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    out_l = np.empty_like(a, dtype=float)
    out_s = np.ones_like(a, dtype=float)
    pos = a > 0
    out_l[pos] = _lgamma_vec(a[pos])
    if np.any(~pos):
        neg = a[~pos]
        pole = neg == np.floor(neg)
        lg = np.where(pole, math.inf, 0.0)  # lgamma -> +inf at poles: 1/Gamma -> 0
        sg = np.ones_like(neg)
        ok = ~pole
        if np.any(ok):
            lg = lg.copy()
            lg[ok] = _lgamma_vec(neg[ok])
            sg[ok] = np.where(np.floor(neg[ok]) % 2 == 0, 1.0, -1.0)
        out_l[~pos] = lg
        out_s[~pos] = sg
    return out_l, out_s


def bessel_i(nu: float, x: float, *, scaled: bool = False,
             opts: SpecFunOptions | None = None) -> float:
    """Modified Bessel function of the first kind I_nu(x), x >= 0.

    ``scaled=True`` returns e^{-x} I_nu(x).
    """
    lv, sign = log_bessel_i_scaled(nu, x, opts)
    le = lv if scaled else lv + x
    if le > _LOG_MAX:
        raise OverflowRangeError(
            f"I_{nu}({x}) exceeds double range; use scaled form")
    return sign * math.exp(le)


def bessel_i_half_elem(m: int, x: float) -> float:
    """Elementary closed form of I_{m+1/2}(x) for integer m >= -1, x > 0.

    m = -1 gives sqrt(2/(pi x)) cosh(x); m >= 0 the finite exponential sums.
    """
    if x <= 0:
        raise DomainError("elementary Bessel form needs x > 0")
    if m == -1:
        return math.sqrt(2.0 / (math.pi * x)) * math.cosh(x)
    if m < -1:
        raise DomainError("order must be >= -1/2")
    s_plus = 0.0
    s_minus = 0.0
    for j in range(m + 1):
        c = math.factorial(m + j) / (math.factorial(j) * math.factorial(m - j))
        c /= (2 * x) ** j
        s_plus += (-1) ** j * c
        s_minus += c
    val = math.exp(x) * s_plus + (-1) ** (m + 1) * math.exp(-x) * s_minus
    return val / math.sqrt(2 * math.pi * x)


# ---------------------------------------------------------------------------
# Tricomi confluent hypergeometric function U(a, b, x)
# ---------------------------------------------------------------------------

def _u_polynomial(n: int, b: float, x: float) -> float:
    """U(-n, b, x): the exact terminating form, a degree-n polynomial.

    U(-n,b,x) = x^n sum_{i<=n} [(-n)_i (-n-b+1)_i / i!] (-x)^{-i}.
    """
    total = 0.0
    coeff = 1.0
    for i in range(n + 1):
        total += coeff * x ** (n - i)
        coeff *= -(-n + i) * (-n - b + 1 + i) / (i + 1.0)
    return total


def _log_laplace_u(a: float, b: float, x: float,
                   opts: SpecFunOptions) -> float:
    """log U(a,b,x) for a > 0, x > 0 via the Laplace transform integral
    with t = e^u. Positive integrand, so the value is a clean log."""
    c = b - a - 1.0

    def logf(u: np.ndarray) -> np.ndarray:
        eu = np.exp(np.minimum(u, 700.0))
        return -x * eu + a * u + c * np.logaddexp(0.0, u)

    u0, h0 = _laplace_peak(a, c, x)
    val, _ = _log_trap_real_line(logf, u0, h0, rel_tol=opts.rel_tol,
                                 budget=opts.quad_points)
    return val - math.lgamma(a)


def _laplace_peak(a: float, c: float, x: float) -> tuple[float, float]:
    """Peak location and starting mesh for the log-substituted Laplace
    integrand exp(-x e^u + a u + c log(1+e^u))."""
    lo = math.log(min(a, 1.0) / x) - 60.0
    hi = math.log((a + max(c, 0.0) + 5.0) / x) + 5.0

    def slope(u: float) -> float:
        eu = math.exp(min(u, 700.0))
        return a - x * eu + c * eu / (1.0 + eu)

    if slope(hi) > 0:
        u0 = hi
    else:
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if slope(mid) > 0:
                lo = mid
            else:
                hi = mid
        u0 = 0.5 * (lo + hi)
    eu = math.exp(min(u0, 700.0))
    sig = eu / (1.0 + eu)
    curv = x * eu - c * sig * (1 - sig)
    width = 1.0 / math.sqrt(max(curv, 1e-2))
    return u0, min(0.4, width)


_ITOL = 1e-13  # near-integer detection for exact polynomial/limit routing


def _is_nonpos_int(v: float) -> bool:
    return v <= 0.5 and abs(v - round(v)) < _ITOL and round(v) <= 0


def tricomi_u(a: float, b: float, x: float,
              opts: SpecFunOptions | None = None) -> float:
    """Tricomi (second-kind) confluent hypergeometric function U(a, b, x).

    Dispatch: terminating polynomial for non-positive integer a; Laplace
    integral for a > 0; Kummer's transformation to reach one of those
    otherwise; the definitional series (with a nearby-b limit when b is an
    integer) as the generic fallback.
    """
    o = opts or _DEFAULT
    if x <= 0:
        raise DomainError("tricomi_u needs x > 0")
    if a == 0.0:
        return 1.0
    if _is_nonpos_int(a):
        return _u_polynomial(int(-round(a)), b, x)
    if a > 0:
        return math.exp(_log_laplace_u(a, b, x, o))
    ap = a - b + 1.0
    if _is_nonpos_int(ap) and ap != 0.0:
        return x ** (1.0 - b) * _u_polynomial(int(-round(ap)), 2.0 - b, x)
    if ap == 0.0 or abs(ap) < _ITOL:
        return x ** (1.0 - b)
    if ap > 0:
        return x ** (1.0 - b) * math.exp(_log_laplace_u(ap, 2.0 - b, x, o))
    return _u_definitional(a, b, x, o)


def log_tricomi_u(a: float, b: float, x: float,
                  opts: SpecFunOptions | None = None) -> float:
    """log U(a,b,x) on the positive branches (a > 0, or Kummer image > 0)."""
    o = opts or _DEFAULT
    if x <= 0:
        raise DomainError("tricomi_u needs x > 0")
    if a == 0.0:
        return 0.0
    if a > 0:
        return _log_laplace_u(a, b, x, o)
    ap = a - b + 1.0
    if ap > 0:
        return (1.0 - b) * math.log(x) + _log_laplace_u(ap, 2.0 - b, x, o)
    val = tricomi_u(a, b, x, o)
    if val <= 0:
        raise DomainError("U is not positive here; no log form")
    return math.log(val)


def _hyp1f1_series(a: float, b: float, x: float, opts: SpecFunOptions) -> float:
    total = 1.0
    term = 1.0
    for k in range(opts.max_terms):
        term *= (a + k) * x / ((b + k) * (k + 1.0))
        total += term
        if abs(term) <= opts.rel_tol * abs(total) + opts.abs_tol:
            return total
    raise ConvergenceError("1F1 series did not converge")


def _u_definitional(a: float, b: float, x: float, opts: SpecFunOptions) -> float:
    """Definitional two-series form; integer b via the nearby-beta limit."""
    if abs(b - round(b)) < 1e-8:
        vals = []
        for eps in (1e-5, 5e-6):
            up = _u_definitional(a, round(b) + eps, x, opts)
            dn = _u_definitional(a, round(b) - eps, x, opts)
            vals.append(0.5 * (up + dn))
        if abs(vals[0] - vals[1]) > 1e-7 * max(1.0, abs(vals[1])):
            raise ConvergenceError("nearby-beta limit for integer b did not stabilize")
        return vals[1]
    lg1, s1 = gammaln_sign(b - 1.0)
    lg2, s2 = gammaln_sign(a)
    lg3, s3 = gammaln_sign(1.0 - b)
    lg4, s4 = gammaln_sign(a - b + 1.0)
    t1 = s1 * s2 * math.exp(lg1 - lg2 + (1.0 - b) * math.log(x))
    t1 *= _hyp1f1_series(a - b + 1.0, 2.0 - b, x, opts)
    t2 = s3 * s4 * math.exp(lg3 - lg4)
    t2 *= _hyp1f1_series(a, b, x, opts)
    return t1 + t2


# ---------------------------------------------------------------------------
# hypergeometric helpers
# ---------------------------------------------------------------------------

def hyp_0f1(b: float, x: float, opts: SpecFunOptions | None = None) -> float:
    """Generalized hypergeometric 0F1(-; b; x) by ratio-truncated series."""
    o = opts or _DEFAULT
    if b <= 0 and float(b).is_integer():
        raise PoleError(f"hyp_0f1 pole at b={b}")
    total = 1.0
    term = 1.0
    small = 0
    for j in range(o.max_terms):
        term *= x / ((b + j) * (j + 1.0))
        total += term
        if abs(term) <= o.rel_tol * abs(total) + o.abs_tol:
            small += 1
            if small >= 2:
                return total
        else:
            small = 0
    raise ConvergenceError("0F1 series did not converge within max_terms")


def log_hyp_0f1(b: float, x: float, opts: SpecFunOptions | None = None) -> float:
    """log 0F1(-; b; x) for x >= 0, b > 0 (value is positive there)."""
    o = opts or _DEFAULT
    if x < 0 or b <= 0:
        raise DomainError("log form needs x >= 0 and b > 0")
    if x == 0.0:
        return 0.0
    if x <= 400.0:
        return math.log(hyp_0f1(b, x, o))
    # 0F1(-;b;x) = Gamma(b) x^((1-b)/2) I_{b-1}(2 sqrt(x))
    w = 2.0 * math.sqrt(x)
    li, _ = log_bessel_i_scaled(b - 1.0, w, o)
    return math.lgamma(b) + 0.5 * (1.0 - b) * math.log(x) + w + li


def hyp_2f1_poly(u: float, k: int, w: float) -> float:
    """The finite Gauss sum sum_{j=0}^k C(k,j) w^j / ((u)_{k-j} (u)_j).

    Equals 2F1(-u-k+1, -k; u; w) / (u)_k; the left-hand finite sum is the
    implementation.
    """
    if k < 0:
        raise DomainError("k must be >= 0")
    if u <= 0:
        raise DomainError("u must be positive")
    total = 0.0
    for j in range(k + 1):
        total += math.comb(k, j) * w ** j / (pochhammer(u, k - j) * pochhammer(u, j))
    return total


def whittaker_w(kappa: float, mu: float, x: float,
                opts: SpecFunOptions | None = None) -> float:
    """Whittaker function W_{kappa,mu}(x) = e^{-x/2} x^{mu+1/2} U(...)."""
    if x <= 0:
        raise DomainError("whittaker_w needs x > 0")
    u = tricomi_u(0.5 + mu - kappa, 1.0 + 2.0 * mu, x, opts)
    return math.exp(-x / 2.0 + (mu + 0.5) * math.log(x)) * u
