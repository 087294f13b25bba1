"""Independent oracles: Monte Carlo, CF inversion, CDF and integral checks.

Monte Carlo reproducibility contract: samples are addressed by a Philox
counter keyed on the seed.  Sample i of S_n consumes exactly 2n uniforms
at stream offset 2n*i, each mapped to a standard normal through the
inverse CDF, so the stream is a pure function of (params, n, seed) and
independent of batch size or thread scheduling.

The Fourier-type integrals (density inversion and the two definite
integral identities) are integrated over [0, T] on oscillation-aware
Gauss-Legendre panels, with the tail beyond T collapsed analytically by
two integration-by-parts terms; T doubles until self-consistency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import ndtri

from . import specfun as sf
from .charfun import BivariateParams, OrderSpec, cf_order_derivative, cf_order_grid
from .errors import ConvergenceError, DomainError, PreconditionError
from .integral import QuadOptions, tanh_sinh_finite
from .series import EvalOptions, EvalResult, pdf_sum_series

__all__ = [
    "McConfig",
    "GridSpec",
    "sample_sum",
    "ks_check",
    "pdf_cf_inversion",
    "cdf_numeric",
    "check_int1",
    "check_int11",
    "Int1Result",
    "Int11Result",
]


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo controls: sample count, seed, internal batch size."""

    n_samples: int
    seed: int = 0
    batch: int = 1 << 16

    def __post_init__(self) -> None:
        if self.n_samples < 0:
            raise DomainError("n_samples must be >= 0")
        if self.batch < 1:
            raise DomainError("batch must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must fit in 64 bits")


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid lo, ..., hi with the given number of points."""

    lo: float
    hi: float
    points: int

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise DomainError("need lo < hi")
        if self.points < 2:
            raise DomainError("need at least 2 points")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.points - 1)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def _normals_at(seed: int, word_offset: int, count: int) -> np.ndarray:
    """`count` standard normals from stream position `word_offset`.

    Philox advances in blocks of four 64-bit words; sub-block positioning
    discards the remainder words.  One uniform double consumes one word.
    """
    bg = np.random.Philox(key=seed)
    bg.advance(word_offset // 4)
    if word_offset % 4:
        bg.random_raw(word_offset % 4)
    u = np.random.Generator(bg).random(count)
    u = np.clip(u, 5e-324, 1.0 - 1e-16)
    return ndtri(u)


def sample_sum(params: BivariateParams, n: int, mc: McConfig) -> np.ndarray:
    """Reproducible samples of S_n = sum of n independent copies of XY."""
    if n < 1 or int(n) != n:
        raise DomainError("n must be an integer >= 1")
    p = params
    c = math.sqrt(1.0 - p.rho ** 2)
    out = np.empty(mc.n_samples)
    pos = 0
    while pos < mc.n_samples:
        m = min(mc.batch, mc.n_samples - pos)
        g = _normals_at(mc.seed, 2 * n * pos, 2 * n * m).reshape(m, n, 2)
        xv = p.mu_x + p.sigma_x * g[:, :, 0]
        yv = p.mu_y + p.sigma_y * (p.rho * g[:, :, 0] + c * g[:, :, 1])
        out[pos:pos + m] = np.sum(xv * yv, axis=1)
        pos += m
    return out


# ---------------------------------------------------------------------------
# numerical CDF
# ---------------------------------------------------------------------------

def _density_callable(params: BivariateParams, order: OrderSpec,
                      opts: EvalOptions | None = None):
    def f(xs: np.ndarray) -> np.ndarray:
        return np.array([
            pdf_sum_series(params, order, float(t), opts).value for t in xs])
    return f


def _support_halfwidth(params: BivariateParams, order: OrderSpec) -> float:
    """Conservative halfwidth beyond which tail mass is negligible."""
    p = params
    mean = order.nu * (p.mu_x * p.mu_y + p.rho * p.scale)
    # tail decay rates are 1/(s(1 +- rho)); 60 e-foldings plus mean offset
    rate = p.scale * (1.0 + abs(p.rho))
    spread = order.nu * (1.0 + p.m1 ** 2 + p.m2 ** 2) * p.scale
    return abs(mean) + 60.0 * rate + 4.0 * spread


def cdf_numeric(params: BivariateParams, order: OrderSpec, x: float,
                q: QuadOptions | None = None,
                opts: EvalOptions | None = None) -> float:
    """P(S <= x) by panel quadrature of the series density.

    Panels double in width going left from x, always splitting at the
    origin where the density has its kink or integrable singularity.
    """
    qq = q or QuadOptions(target_rel_err=1e-11)
    f = _density_callable(params, order, opts)
    lo = -_support_halfwidth(params, order)
    if x <= lo:
        return 0.0
    # breakpoints from x going left: geometric, with 0 forced in
    pts = [x]
    w = max(params.scale, abs(x) / 8.0, 1e-3)
    t = x
    while t > lo:
        t -= w
        w *= 2.0
        pts.append(max(t, lo))
    brk = np.array(sorted(set(pts) | ({0.0} if lo < 0.0 < x else set())))
    total = 0.0
    for a, b in zip(brk[:-1], brk[1:]):
        seg, _ = tanh_sinh_finite(f, float(a), float(b), qq)
        total += seg
    return min(max(total, 0.0), 1.0)


# ---------------------------------------------------------------------------
# KS check
# ---------------------------------------------------------------------------

def ks_check(params: BivariateParams, n: int, mc: McConfig,
             grid: GridSpec, opts: EvalOptions | None = None) -> float:
    """Kolmogorov-Smirnov distance between MC samples and the grid CDF.

    The reference CDF accumulates per-cell quadrature of the series
    density over the grid (cells touching 0 are subdivided); samples are
    positioned by monotone interpolation.  A non-monotone table signals a
    density bug and raises.
    """
    order = OrderSpec(float(n))
    xs = grid.values()
    f = _density_callable(params, order, opts)
    qq = QuadOptions(target_rel_err=1e-9, max_refinements=8, levels=4)
    masses = np.empty(grid.points - 1)
    for i, (a, b) in enumerate(zip(xs[:-1], xs[1:])):
        if a < 0.0 < b:
            m1_, _ = tanh_sinh_finite(f, float(a), 0.0, qq)
            m2_, _ = tanh_sinh_finite(f, 0.0, float(b), qq)
            masses[i] = m1_ + m2_
        else:
            masses[i] = tanh_sinh_finite(f, float(a), float(b), qq)[0]
    if np.any(masses < -1e-12):
        raise ConvergenceError("negative cell mass: density evaluation bug")
    left_tail = cdf_numeric(params, order, float(xs[0]))
    cdf = left_tail + np.concatenate([[0.0], np.cumsum(masses)])
    if np.any(np.diff(cdf) < -1e-12):
        raise ConvergenceError("non-monotone CDF table")
    cdf = np.clip(cdf, 0.0, 1.0)
    samples = np.sort(sample_sum(params, n, mc))
    fs = np.interp(samples, xs, cdf, left=0.0, right=1.0)
    nviv = samples.size
    i = np.arange(1, nviv + 1)
    d_plus = np.max(i / nviv - fs)
    d_minus = np.max(fs - (i - 1) / nviv)
    return float(max(d_plus, d_minus))


# ---------------------------------------------------------------------------
# oscillatory semi-infinite Fourier integrals
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _panel_integral(g: Callable[[np.ndarray], np.ndarray], x: float,
                    t0: float, t1: float, max_panel: float) -> complex:
    """integral of e^{i x t} g(t) over [t0, t1] on Gauss-Legendre panels."""
    span = t1 - t0
    n_panels = max(1, int(math.ceil(span / max_panel)))
    edges = np.linspace(t0, t1, n_panels + 1)
    a = edges[:-1, None]
    b = edges[1:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * _GL_NODES[None, :]
    w = 0.5 * (b - a) * _GL_WEIGHTS[None, :]
    flat = nodes.ravel()
    vals = np.asarray(g(flat)).reshape(nodes.shape)
    osc = np.exp(1j * x * nodes)
    return complex(np.sum(w * vals * osc))


def _fourier_semiinfinite(g, gprime, x: float, *, t_start: float,
                          tol: float, max_doublings: int = 18) -> tuple[complex, float]:
    """J = int_0^inf e^{i x t} g(t) dt for smooth g with algebraic decay.

    Beyond T the tail is collapsed by integration by parts:
    int_T^inf = -e^{ixT} g(T)/(ix) - e^{ixT} g'(T)/(ix)^2 + O(g''/x^2),
    and T doubles until consecutive totals agree within tol.
    """
    if x == 0.0:
        raise DomainError("oscillatory path needs x != 0")
    max_panel = min(math.pi / (2.0 * abs(x)), max(t_start / 8.0, 0.25))
    total = _panel_integral(g, x, 0.0, t_start, max_panel)
    t_cur = t_start
    prev = None
    for _ in range(max_doublings):
        gt = complex(np.asarray(g(np.array([t_cur])))[0])
        gpt = complex(np.asarray(gprime(np.array([t_cur])))[0])
        ix = 1j * x
        tail = -np.exp(1j * x * t_cur) * (gt / ix + gpt / ix ** 2)
        est = total + tail
        if prev is not None:
            err = abs(est - prev)
            if err <= tol * max(abs(est), 1e-300):
                return est, err
        prev = est
        total += _panel_integral(g, x, t_cur, 2.0 * t_cur, max_panel)
        t_cur *= 2.0
    raise ConvergenceError("oscillatory integral did not stabilize")


# ---------------------------------------------------------------------------
# density by characteristic-function inversion
# ---------------------------------------------------------------------------

def pdf_cf_inversion(params: BivariateParams, order: OrderSpec, x: float,
                     q: QuadOptions | None = None) -> EvalResult:
    """Density via f(x) = (1/pi) Re int_0^inf e^{-i x t} phi(t) dt.

    Requires nu >= 2: the CF modulus decays like t^(-nu/2), so the
    inversion integral is well behaved only from two copies upward; below
    that the representation converges only conditionally and is refused.
    """
    qq = q or QuadOptions()
    if order.nu < 2.0:
        raise DomainError("cf inversion requires nu >= 2")
    if not math.isfinite(x):
        raise DomainError("x must be finite")

    def g(ts: np.ndarray) -> np.ndarray:
        return cf_order_grid(params, order, ts)

    def gp(ts: np.ndarray) -> np.ndarray:
        return cf_order_derivative(params, order, ts)

    t_start = max(32.0 / params.scale, 8.0 * abs(x), 32.0)
    xeff = -x if x != 0.0 else None
    if xeff is None:
        # even integrand at x=0: plain decreasing panels, tiny tail bound
        val = _panel_integral(g, 0.0, 0.0, t_start * 64.0, 0.5)
        value = max(val.real / math.pi, 0.0)
        return EvalResult(value, abs(val.imag) / math.pi + 1e-9, 0, "cf_inversion")
    j, err = _fourier_semiinfinite(g, gp, xeff, t_start=t_start,
                                   tol=qq.target_rel_err * 1e3)
    value = j.real / math.pi
    err_est = err / math.pi + abs(value) * 1e-10
    if value < 0:
        value, err_est = 0.0, err_est + abs(value)
    return EvalResult(value, err_est, 0, "cf_inversion")


# ---------------------------------------------------------------------------
# definite-integral identity checks
# ---------------------------------------------------------------------------

class Int1Result(NamedTuple):
    lhs: complex
    rhs: complex
    quad_err: float


class Int11Result(NamedTuple):
    lhs: float
    rhs_whittaker: float
    rhs_bessel: float
    quad_err: float


def check_int1(rho_exp: float, sigma_exp: float, y: float, z: float,
               x: float) -> Int1Result:
    """Both sides of

    int e^{ixt} (z+it)^(-rho) (y-it)^(-sigma) dt
        = 2 pi / Gamma(delta) (y+z)^(1-rho-sigma) e^(-|x| theta)
          U(1-delta, 2-rho-sigma, |x| (y+z))

    with (delta, theta) = (rho, z) for x >= 0 and (sigma, y) for x < 0.
    Valid for rho+sigma > 1 and in the boundary case rho = sigma = 1/2.
    """
    r, s_ = rho_exp, sigma_exp
    if y <= 0 or z <= 0:
        raise DomainError("y and z must be positive")
    boundary = abs(r - 0.5) < 1e-14 and abs(s_ - 0.5) < 1e-14
    if r + s_ <= 1.0 and not boundary:
        raise PreconditionError("need rho + sigma > 1 (or rho = sigma = 1/2)")
    if x == 0.0 and boundary:
        raise DomainError("x must be nonzero in the rho = sigma = 1/2 case")

    def g(ts: np.ndarray) -> np.ndarray:
        return (z + 1j * ts) ** -r * (y - 1j * ts) ** -s_

    def gp(ts: np.ndarray) -> np.ndarray:
        return g(ts) * (-1j * r / (z + 1j * ts) + 1j * s_ / (y - 1j * ts))

    # lhs = 2 Re int_0^inf e^{ixt} g(t) dt by conjugate symmetry
    if x == 0.0:
        # absolutely convergent; integrate with algebraic tail bound
        t_top = (10.0 / (r + s_ - 1.0)) ** (1.0 / (r + s_ - 1.0)) * 1e3 + 1e4
        val = _panel_integral(g, 0.0, 0.0, t_top, 0.5)
        tail = 2.0 * t_top ** (1.0 - r - s_) / (r + s_ - 1.0)
        lhs = complex(2.0 * val.real, 0.0)
        qerr = tail
    else:
        j, qerr = _fourier_semiinfinite(g, gp, x, t_start=20.0 / min(y, z, 1.0),
                                        tol=1e-9)
        lhs = complex(2.0 * j.real, 0.0)
    delta, theta = (r, z) if x >= 0 else (s_, y)
    u = sf.tricomi_u(1.0 - delta, 2.0 - r - s_, abs(x) * (y + z)) if x != 0.0 \
        else sf.tricomi_u(1.0 - delta, 2.0 - r - s_, 1e-300)
    if x == 0.0:
        # U(a, b, 0+) limit with b = 2-r-s < 1: Gamma(1-b)/Gamma(a-b+1)
        u = math.gamma(r + s_ - 1.0) / math.gamma(r + s_ - delta)
    rhs = (2.0 * math.pi / math.gamma(delta) * (y + z) ** (1.0 - r - s_)
           * math.exp(-abs(x) * theta) * u)
    return Int1Result(lhs, complex(rhs, 0.0), qerr)


def check_int11(rho_exp: float, x: float) -> Int11Result:
    """Three forms of  int e^{ixt} (1+t^2)^(-rho) dt  for rho > 1/2:

    the direct quadrature, 2^(1-rho) pi / Gamma(rho) |x|^(rho-1)
    W_{0, 1/2-rho}(2|x|), and the equivalent Bessel form
    2^(3/2-rho) sqrt(pi) / Gamma(rho) |x|^(rho-1/2) K_(rho-1/2)(|x|).
    """
    r = rho_exp
    if r <= 0.5:
        raise DomainError("need rho > 1/2")
    if x == 0.0:
        raise DomainError("x must be nonzero")

    def g(ts: np.ndarray) -> np.ndarray:
        return (1.0 + ts * ts) ** -r + 0j

    def gp(ts: np.ndarray) -> np.ndarray:
        return -2.0 * r * ts * (1.0 + ts * ts) ** (-r - 1.0) + 0j

    j, qerr = _fourier_semiinfinite(g, gp, abs(x), t_start=64.0, tol=1e-12)
    lhs = 2.0 * j.real
    ax = abs(x)
    rhs_w = (2.0 ** (1.0 - r) * math.pi / math.gamma(r) * ax ** (r - 1.0)
             * sf.whittaker_w(0.0, 0.5 - r, 2.0 * ax))
    rhs_k = (2.0 ** (1.5 - r) * math.sqrt(math.pi) / math.gamma(r)
             * ax ** (r - 0.5) * sf.bessel_k(r - 0.5, ax))
    return Int11Result(lhs, rhs_w, rhs_k, qerr)
