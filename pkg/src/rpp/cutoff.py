"""Smooth truncation profile and the truncated Riesz kernels.

The profile is the cubic smoothstep

    alpha(l) = 1                    for l <= 1
    alpha(l) = 3 s^2 - 2 s^3        for 1 < l < 3,  s = (3 - l) / 2
    alpha(l) = 0                    for l >= 3

which is C^1 with ``-3/4 <= alpha' <= 0``.  A kernel is ``|x|^{-p}`` times
``alpha(scale |x|)`` (near part), ``1 - alpha(scale |x|)`` (far part) or 1
(full), optionally cut off at a window radius.  Every such radial profile is
``r^{-p}`` times a piecewise polynomial in ``r``, so its integrals have
closed forms; :meth:`KernelSpec.pieces` exposes that representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError, SingularityError
from .specfun import DEFAULT_QUAD, QuadratureSpec, radial_integral, sphere_area

PLATEAU = 1.0
SUPPORT = 3.0

# alpha on (1, 3) as a polynomial in l, ascending coefficients
_S = np.array([1.5, -0.5])  # s = (3 - l)/2
_ALPHA_MID = P.polysub(3 * P.polypow(_S, 2), 2 * P.polypow(_S, 3))


def alpha(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise DomainError("alpha is defined on [0, inf)")
    s = np.clip((SUPPORT - lam) / 2.0, 0.0, 1.0)
    out = s * s * (3.0 - 2.0 * s)
    return float(out) if out.ndim == 0 else out


def alpha_prime(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise DomainError("alpha is defined on [0, inf)")
    inside = (lam > PLATEAU) & (lam < SUPPORT)
    s = (SUPPORT - lam) / 2.0
    out = np.where(inside, -3.0 * s * (1.0 - s), 0.0)
    return float(out) if out.ndim == 0 else out


VARIANTS = ("full", "near", "far")


@dataclass(frozen=True)
class KernelSpec:
    """``|x|^{-p}`` with an optional smooth split at the cutoff scale.

    ``variant`` is ``"full"``, ``"near"`` (the K kernels) or ``"far"`` (the L
    kernels).  For near/far, ``i = 0`` uses the polynomial scale
    ``a^{-1} eps^{(2+d-p)/(d(d-p))}`` and ``i = 1`` the logarithmic scale
    ``a^{-1} log(1/eps)^{-1/p}``.  ``radius`` cuts every variant off at a
    window radius (``inf`` means no cutoff).
    """

    d: int
    p: float
    variant: str = "full"
    a: float = 1.0
    eps: float = 0.5
    i: int = 0
    radius: float = math.inf

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError("d must be a positive integer")
        if not (self.d / 2 < self.p < self.d):
            raise DomainError(f"need d/2 < p < d, got d={self.d}, p={self.p}")
        if self.variant not in VARIANTS:
            raise DomainError(f"variant must be one of {VARIANTS}")
        if self.variant != "full":
            if not self.a > 0:
                raise DomainError("cutoff parameter a must be positive")
            if not 0 < self.eps < 1:
                raise DomainError("eps must lie in (0, 1)")
            if self.i not in (0, 1):
                raise DomainError("i must be 0 or 1")
        if not self.radius > 0:
            raise DomainError("radius must be positive")

    @property
    def scale(self) -> float:
        """Multiplier turning ``|x|`` into the argument of ``alpha``."""
        if self.variant == "full":
            return 0.0
        d, p = self.d, self.p
        if self.i == 0:
            return self.eps ** ((2 + d - p) / (d * (d - p))) / self.a
        return math.log(1.0 / self.eps) ** (-1.0 / p) / self.a

    @property
    def singular(self) -> bool:
        return self.variant in ("full", "near")

    def with_radius(self, radius: float) -> "KernelSpec":
        return KernelSpec(self.d, self.p, self.variant, self.a, self.eps, self.i, radius)

    def with_variant(self, variant: str) -> "KernelSpec":
        return KernelSpec(self.d, self.p, variant, self.a, self.eps, self.i, self.radius)

    def profile(self, r):
        """Radial profile ``k(r)``; ``r = 0`` gives ``inf`` for singular variants."""
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            base = r ** (-self.p)
            if self.variant == "near":
                base = base * alpha(self.scale * r)
            elif self.variant == "far":
                base = np.where(r > 0, base * (1.0 - alpha(self.scale * r)), 0.0)
        base = np.where(r <= self.radius, base, 0.0)
        return float(base) if base.ndim == 0 else base

    def breakpoints(self) -> List[float]:
        pts = []
        if self.variant != "full":
            pts = [PLATEAU / self.scale, SUPPORT / self.scale]
        if math.isfinite(self.radius):
            pts.append(self.radius)
        return sorted(x for x in pts if x <= self.radius)

    def pieces(self) -> List[Tuple[float, float, np.ndarray]]:
        """``[(r0, r1, c)]`` with ``k(r) = r^{-p} sum_j c[j] r^j`` on ``[r0, r1)``."""
        one, zero = np.array([1.0]), np.array([0.0])
        if self.variant == "full":
            segs = [(0.0, math.inf, one)]
        else:
            s = self.scale
            # alpha(s r) as a polynomial in r
            mid_poly = np.array([c * s**j for j, c in enumerate(_ALPHA_MID)])
            r1, r3 = PLATEAU / s, SUPPORT / s
            if self.variant == "near":
                segs = [(0.0, r1, one), (r1, r3, mid_poly), (r3, math.inf, zero)]
            else:
                segs = [(0.0, r1, zero), (r1, r3, P.polysub(one, mid_poly)), (r3, math.inf, one)]
        out = []
        for r0, r1, c in segs:
            r1 = min(r1, self.radius)
            if r1 > r0 and np.any(c != 0):
                out.append((r0, r1, np.asarray(c, dtype=float)))
        return out


def kernel_eval(spec: KernelSpec, x) -> float:
    """Kernel value at a point (or at each row of an array of points)."""
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.sum(x * x, axis=-1))
    if spec.singular and np.any(r == 0):
        raise SingularityError("singular kernel evaluated at the origin")
    return spec.profile(r)


def _power_antiderivative(j_minus_p: float, r: float) -> float:
    e = j_minus_p + 1.0
    if r == math.inf:
        if e < 0:
            return 0.0
        raise DomainError("kernel mass diverges at infinity")
    return r**e / e


def kernel_mass_exact(spec: KernelSpec) -> float:
    """``int_{R^d} k(x) dx`` from the piecewise power-law form."""
    d, p = spec.d, spec.p
    total = []
    for r0, r1, c in spec.pieces():
        for j, cj in enumerate(c):
            if cj == 0:
                continue
            e = j + d - 1 - p
            total.append(cj * (_power_antiderivative(e, r1) - _power_antiderivative(e, r0)))
    return sphere_area(d) * math.fsum(total)


def interval_integral_exact(spec: KernelSpec, a: float, b: float, center: float = 0.0) -> float:
    """``int_a^b k(|y - center|) dy`` in one dimension, in closed form."""
    if spec.d != 1:
        raise DomainError("interval integrals are one-dimensional")
    lo, hi = a - center, b - center
    if hi <= lo:
        return 0.0

    def radial(u0, u1):
        # int_{u0}^{u1} k(r) dr for 0 <= u0 <= u1
        acc = []
        for r0, r1, c in spec.pieces():
            x0, x1 = max(r0, u0), min(r1, u1)
            if x1 <= x0:
                continue
            for j, cj in enumerate(c):
                if cj:
                    e = j - spec.p + 1.0
                    acc.append(cj * (x1**e - x0**e) / e)
        return math.fsum(acc)

    if lo >= 0:
        return radial(lo, hi)
    if hi <= 0:
        return radial(-hi, -lo)
    return radial(0.0, -lo) + radial(0.0, hi)


def near_kernel_mass(spec: KernelSpec, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``int_{R^d} K(x) dx`` for a near kernel, by radial quadrature."""
    if spec.variant != "near":
        raise DomainError("only near kernels are integrable over R^d")
    return radial_integral(
        spec.profile, spec.d, 0.0, min(spec.radius, SUPPORT / spec.scale), q,
        points=spec.breakpoints(), head=(1.0, spec.p),
    )


def kernel_mass(spec: KernelSpec, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``int k`` over its (finite) support by radial quadrature, any variant."""
    if spec.variant != "near" and not math.isfinite(spec.radius):
        raise DomainError("full and far kernels need a finite radius to be integrable")
    top = spec.radius if spec.variant != "near" else min(spec.radius, SUPPORT / spec.scale)
    return radial_integral(spec.profile, spec.d, 0.0, top, q,
                           points=spec.breakpoints(), head=(1.0, spec.p))


def mass_scaling_exponent(d: int, p: float, a: float = 1.0, eps_values=(1e-1, 1e-2, 1e-3)) -> float:
    """Fitted log-log slope of the near-kernel mass against ``eps`` (i = 0).

    The exact value is ``-(2 + d - p)/d``: the mass scales like the cutoff
    radius to the power ``d - p``.
    """
    logs = [(math.log(e), math.log(near_kernel_mass(KernelSpec(d, p, "near", a, e, 0))))
            for e in eps_values]
    x = np.array([u for u, _ in logs])
    y = np.array([v for _, v in logs])
    return float(np.polyfit(x, y, 1)[0])
