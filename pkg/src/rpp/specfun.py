"""Special functions, radial quadrature and the closed-form integral identities.

Everything here is a pure function of its arguments.  Integrals over R^d are
always reduced to radial ones; the only genuinely d-dimensional routine is
:func:`riesz_box_integral`, which integrates ``|y - x|^{-p}`` over an
axis-aligned box and is used for the singular cells of lattice quadratures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError

# Below this argument psi/Psi switch to their Taylor series.
SERIES_SWITCH = 1e-4


@dataclass(frozen=True)
class QuadratureSpec:
    rtol: float = 1e-11
    atol: float = 1e-13
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise DomainError("quadrature tolerances must be strictly positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


def _check_nonneg(lam):
    arr = np.asarray(lam, dtype=float)
    if np.any(arr < 0):
        raise DomainError("argument must be nonnegative")
    return arr


def psi(lam):
    """``exp(-lam) - 1 + lam`` for ``lam >= 0``; scalar or array."""
    x = _check_nonneg(lam)
    small = x < SERIES_SWITCH
    with np.errstate(over="ignore"):
        direct = np.expm1(-x) + x
    xs = np.where(small, x, 0.0)
    series = xs * xs * (0.5 - xs * (1.0 / 6 - xs * (1.0 / 24 - xs / 120.0)))
    out = np.where(small, series, direct)
    return float(out) if np.ndim(out) == 0 else out


def Psi(lam):
    """``exp(lam) - 1 - lam`` for ``lam >= 0``; overflows to ``inf``."""
    x = _check_nonneg(lam)
    small = x < SERIES_SWITCH
    with np.errstate(over="ignore"):
        direct = np.expm1(x) - x
    xs = np.where(small, x, 0.0)
    series = xs * xs * (0.5 + xs * (1.0 / 6 + xs * (1.0 / 24 + xs / 120.0)))
    out = np.where(small, series, direct)
    return float(out) if np.ndim(out) == 0 else out


def unit_ball_volume(d: int) -> float:
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d!r}")
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def sphere_area(d: int) -> float:
    """Surface area ``d * omega_d`` of the unit sphere in R^d."""
    return d * unit_ball_volume(d)


def gamma_fn(x: float) -> float:
    if not x > 0:
        raise DomainError(f"gamma_fn is only defined here for x > 0, got {x!r}")
    return math.gamma(x)


def _check_riesz_range(d, p):
    if not (d / 2 < p < d):
        raise DomainError(f"need d/2 < p < d, got d={d}, p={p}")


_LOG_RHO_CLAMP = 100.0


def _scaled(f, log_rho, e):
    """``f(rho) * rho^e`` at ``rho = exp(log_rho)``, frozen outside double range."""
    log_rho = min(max(log_rho, -_LOG_RHO_CLAMP), _LOG_RHO_CLAMP)
    return f(math.exp(log_rho)) * math.exp(e * log_rho)


def radial_integral(
    f: Callable[[float], float],
    d: int,
    r_lo: float,
    r_hi: float,
    q: QuadratureSpec = DEFAULT_QUAD,
    *,
    points: Iterable[float] = (),
    tail: Optional[Tuple[float, float]] = None,
    head: Optional[Tuple[float, float]] = None,
) -> float:
    """``d * omega_d * int_{r_lo}^{r_hi} f(rho) rho^(d-1) drho``.

    ``points`` are radii where ``f`` has kinks or cutoffs.  ``tail=(c, e)``
    declares ``|f(rho)| ~ c rho^-e`` (``e > d``) at large radii and ``head=(c,
    e)`` (``e < d``) the same near the origin; the end pieces are then mapped
    by ``rho = R v^(-1/(e-d))`` resp. ``rho = r v^(1/(d-e))``, which turns the
    power law into a bounded integrand on ``(0, 1]``.  Without a declared
    exponent the end is handed to QUADPACK as is.  The middle part runs in
    ``u = log(rho)`` so radii spanning many decades cost the same as one.
    """
    if not r_lo >= 0:
        raise DomainError("r_lo must be nonnegative")
    if not r_lo < r_hi:
        raise DomainError("need r_lo < r_hi")
    area = sphere_area(d)
    pts = sorted(x for x in points if r_lo < x < r_hi and math.isfinite(x))

    def run(fun, a, b, brk=None):
        kw = dict(epsabs=q.atol, epsrel=q.rtol, limit=q.max_subdivisions, full_output=1)
        if brk:
            kw["points"] = brk
        res = integrate.quad(fun, a, b, **kw)
        val, err = res[0], res[1]
        if len(res) > 3 and err > max(q.atol, q.rtol * abs(val)) * 100:
            raise ConvergenceError(
                f"radial quadrature did not converge on [{a}, {b}] (err={err:.3g})",
                bracket=(a, b),
            )
        return val

    pieces = []
    lo, hi = r_lo, r_hi
    if lo == 0.0:
        lo = 0.5 * min(pts + [1.0, r_hi if math.isfinite(r_hi) else 1.0])
        if head is not None:
            k = d - head[1]
            if not k > 0:
                raise DomainError("head exponent must be < d for integrability")
            e, logr = head[1], math.log(lo)
            pieces.append(run(lambda v: _scaled(f, logr + math.log(v) / k, e) * lo**k / k
                              if v > 0 else 0.0, 0.0, 1.0))
        else:
            pieces.append(run(lambda rr: f(rr) * rr ** (d - 1), 0.0, lo))
    if math.isinf(hi):
        hi = 2.0 * max(pts + [1.0, lo])
        if tail is not None:
            k = tail[1] - d
            if not k > 0:
                raise DomainError("tail exponent must exceed d for integrability")
            e, logR = tail[1], math.log(hi)
            pieces.append(run(lambda v: _scaled(f, logR - math.log(v) / k, e) * hi ** (-k) / k
                              if v > 0 else 0.0, 0.0, 1.0))
        else:
            pieces.append(run(lambda rr: f(rr) * rr ** (d - 1), hi, math.inf))
    ulo, uhi = math.log(lo), math.log(hi)
    brk = {math.log(x) for x in pts if lo < x < hi}
    brk |= {float(g) for g in np.arange(math.ceil(ulo), math.floor(uhi) + 1, 2.0) if ulo < g < uhi}
    brk = sorted(brk)

    def g(u):
        rr = math.exp(u)
        return f(rr) * rr**d

    if len(brk) > 40:
        edges = [ulo] + brk + [uhi]
        pieces.extend(run(g, a, b) for a, b in zip(edges[:-1], edges[1:]))
    else:
        pieces.append(run(g, ulo, uhi, brk or None))
    return area * math.fsum(pieces)


def psi_riesz_integral(d: int, p: float) -> float:
    """Closed form of ``int_{R^d} psi(|x|^-p) dx = omega_d p/(d-p) Gamma((2p-d)/p)``."""
    _check_riesz_range(d, p)
    return unit_ball_volume(d) * p / (d - p) * gamma_fn((2 * p - d) / p)


def psi_riesz_quadrature(d: int, p: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """The same integral by radial quadrature (independent of the Gamma route)."""
    _check_riesz_range(d, p)
    return radial_integral(
        lambda r: psi(r ** (-p)),
        d,
        0.0,
        math.inf,
        q,
        points=(1.0,),
        tail=(0.5, 2 * p),
        head=(1.0, p),
    )


@dataclass(frozen=True)
class IdentityCheck:
    passed: bool
    lhs: float
    rhs: float
    residual: float


def gamma_step_identity_check(d: int, p: float, q: QuadratureSpec = DEFAULT_QUAD,
                              rtol: float = 1e-7) -> IdentityCheck:
    """Check ``int_0^inf psi(g) g^{-(d+p)/p} dg = p^2/(d(d-p)) Gamma((2p-d)/p)``."""
    _check_riesz_range(d, p)
    k = (d + p) / p

    def integrand(g):
        return psi(g) * g ** (-k) if g > 0 else 0.0

    kw = dict(epsabs=q.atol, epsrel=q.rtol, limit=q.max_subdivisions)
    a, ea = integrate.quad(integrand, 0.0, 1.0, **kw)
    b, eb = integrate.quad(integrand, 1.0, math.inf, **kw)
    lhs = a + b
    rhs = p * p / (d * (d - p)) * gamma_fn((2 * p - d) / p)
    residual = abs(lhs - rhs) / abs(rhs)
    return IdentityCheck(residual < rtol, lhs, rhs, residual)


# ---------------------------------------------------------------------------
# singular box integrals of |y - x|^{-p}

_GL_ORDER = 8


@lru_cache(maxsize=None)
def _gl_nodes(n: int):
    return np.polynomial.legendre.leggauss(n)


def graded_gauss_legendre(a: float, b: float, n: int = 16, q: float = 4.0):
    """Nodes and weights on ``[a, b]`` clustered at both ends.

    Each half is mapped by ``y = end + L u^q``, which absorbs power-type
    endpoint singularities of order above ``1/q - 1``.
    """
    t, w = _gl_nodes(n)
    u = 0.5 * (t + 1.0)
    wu = 0.5 * w
    half = 0.5 * (b - a)
    s = half * u**q
    ws = half * q * u ** (q - 1) * wu
    return np.concatenate([a + s, b - s]), np.concatenate([ws, ws])


def _gl_box(lo, hi, x, p, n=_GL_ORDER):
    t, w = _gl_nodes(n)
    d = len(lo)
    axes = []
    weights = []
    for k in range(d):
        half = 0.5 * (hi[k] - lo[k])
        axes.append(lo[k] + half * (t + 1.0) - x[k])
        weights.append(half * w)
    mesh = np.meshgrid(*axes, indexing="ij")
    r2 = sum(m * m for m in mesh)
    wt = weights[0]
    for k in range(1, d):
        wt = np.multiply.outer(wt, weights[k])
    return float(np.sum(wt * r2 ** (-0.5 * p)))


@lru_cache(maxsize=None)
def cube_corner_constant(d: int, p: float) -> float:
    """``int_{[0,1]^d} |y|^{-p} dy`` for ``p < d``.

    Uses self-similarity: the unit cube is its half-size corner cube plus an
    L-shaped shell, so ``C = J / (1 - 2^{p-d})`` with ``J`` the shell integral.
    """
    if not p < d:
        raise DomainError("cube corner integral diverges for p >= d")
    if d == 1:
        return 1.0 / (1.0 - p)
    origin = np.zeros(d)
    shell = 0.0
    for corner in np.ndindex(*(2,) * d):
        if not any(corner):
            continue
        lo = 0.5 * np.array(corner, dtype=float)
        shell += _box_regular(lo, lo + 0.5, origin, p)
    return shell / (1.0 - 2.0 ** (p - d))


def _box_regular(lo, hi, x, p, depth=0):
    """Integral over a box whose closure does not contain ``x``."""
    diam = float(np.linalg.norm(hi - lo))
    gap = np.maximum(np.maximum(lo - x, x - hi), 0.0)
    dist = float(np.linalg.norm(gap))
    if dist >= diam or depth > 40:
        return _gl_box(lo, hi, x, p)
    mid = 0.5 * (lo + hi)
    total = 0.0
    d = len(lo)
    for corner in np.ndindex(*(2,) * d):
        c = np.array(corner, dtype=bool)
        a = np.where(c, mid, lo)
        b = np.where(c, hi, mid)
        total += _box_regular(a, b, x, p, depth + 1)
    return total


def _interval_power(a: float, b: float, p: float) -> float:
    """``int_a^b |u|^{-p} du`` in closed form (``p < 1``)."""

    def prim(u):
        return math.copysign(abs(u) ** (1.0 - p) / (1.0 - p), u)

    return prim(b) - prim(a)


def riesz_box_integral(lo: Sequence[float], hi: Sequence[float], x: Sequence[float],
                       p: float) -> float:
    """``int_{box} |y - x|^{-p} dy`` for an axis-aligned box, ``p < d``.

    ``x`` may lie anywhere, including inside the box or on its boundary.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    x = np.asarray(x, dtype=float)
    d = lo.size
    if not p < d:
        raise DomainError("Riesz kernel is not locally integrable for p >= d")
    if d == 1:
        return _interval_power(lo[0] - x[0], hi[0] - x[0], p)
    inside = np.all(lo <= x) and np.all(x <= hi)
    if not inside:
        return _box_regular(lo, hi, x, p)
    # split at x so that x becomes a corner of every piece
    total = 0.0
    for corner in np.ndindex(*(2,) * d):
        c = np.array(corner, dtype=bool)
        a = np.where(c, x, lo)
        b = np.where(c, hi, x)
        if np.any(b - a <= 0):
            continue
        total += _corner_box(a, b, x, p)
    return total


def _corner_box(a, b, x, p):
    """Box with ``x`` at one of its corners; reduced to ``[0, s]`` with pole at 0."""
    sides = b - a
    d = len(sides)
    m = float(sides.min())
    origin = np.zeros(d)
    total = cube_corner_constant(d, p) * m ** (d - p)
    for corner in np.ndindex(*(2,) * d):
        c = np.array(corner, dtype=bool)
        if not c.any():
            continue
        lo = np.where(c, m, 0.0)
        hi = np.where(c, sides, m)
        if np.any(hi - lo <= 0):
            continue
        total += _box_regular(lo, hi, origin, p)
    return total


def cell_average_riesz(d: int, p: float, h: float) -> float:
    """Average of ``|x|^{-p}`` over the centred cube of side ``h``."""
    return 2**d * cube_corner_constant(d, p) * (h / 2) ** (d - p) / h**d
