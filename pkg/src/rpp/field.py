"""Poisson fields, compensated integrals and exact Poisson moment formulas.

The central exact fact used throughout is Campbell's formula for a
homogeneous Poisson field ``omega`` of density ``rho``:

    E exp{-theta int f d(omega - rho dx)} = exp{rho int psi(theta f) dx}
    E exp{+theta int f d(omega - rho dx)} = exp{rho int Psi(theta f) dx}

for nonnegative ``f``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from . import rng as _rng
from .cutoff import KernelSpec, SUPPORT, kernel_mass
from .errors import DomainError, GeometryError
from .specfun import DEFAULT_QUAD, Psi, QuadratureSpec, psi, radial_integral, unit_ball_volume


@dataclass(frozen=True)
class Window:
    """Axis-aligned box (``lo``, ``hi``) or ball (``center``, ``radius``)."""

    kind: str
    lo: Tuple[float, ...] = ()
    hi: Tuple[float, ...] = ()
    center: Tuple[float, ...] = ()
    radius: float = 0.0

    def __post_init__(self):
        if self.kind == "box":
            if len(self.lo) != len(self.hi) or not self.lo:
                raise DomainError("box bounds must have equal nonzero length")
            if any(not (b > a) for a, b in zip(self.lo, self.hi)):
                raise DomainError("box needs lo < hi on every axis")
        elif self.kind == "ball":
            if not self.center or not self.radius > 0:
                raise DomainError("ball needs a center and a positive radius")
        else:
            raise DomainError("window kind must be 'box' or 'ball'")

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "Window":
        return cls("box", lo=tuple(map(float, lo)), hi=tuple(map(float, hi)))

    @classmethod
    def cube(cls, d: int, half: float, center: Optional[Sequence[float]] = None) -> "Window":
        c = np.zeros(d) if center is None else np.asarray(center, float)
        return cls.box(c - half, c + half)

    @classmethod
    def ball(cls, center: Sequence[float], radius: float) -> "Window":
        return cls("ball", center=tuple(map(float, center)), radius=float(radius))

    @property
    def d(self) -> int:
        return len(self.lo) if self.kind == "box" else len(self.center)

    @property
    def volume(self) -> float:
        if self.kind == "box":
            return float(np.prod(np.subtract(self.hi, self.lo)))
        return unit_ball_volume(self.d) * self.radius**self.d

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, float))
        if self.kind == "box":
            return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)
        return np.linalg.norm(pts - self.center, axis=1) <= self.radius

    def inner_distance(self, x) -> float:
        """Distance from ``x`` to the complement of the window (0 if outside)."""
        x = np.asarray(x, float)
        if self.kind == "box":
            gap = np.minimum(x - self.lo, np.subtract(self.hi, x))
            return float(max(0.0, gap.min()))
        return float(max(0.0, self.radius - np.linalg.norm(x - self.center)))

    def require_ball(self, x, r: float) -> None:
        if self.inner_distance(x) < r:
            raise GeometryError(
                f"a ball of radius {r:.6g} around {np.asarray(x).tolist()} leaves the sample window")

    def uniform(self, gen: np.random.Generator, n: int) -> np.ndarray:
        d = self.d
        if self.kind == "box":
            lo, hi = np.array(self.lo), np.array(self.hi)
            return lo + (hi - lo) * gen.random((n, d))
        z = gen.standard_normal((n, d))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        r = self.radius * gen.random(n) ** (1.0 / d)
        return np.asarray(self.center) + z * r[:, None]

    def to_dict(self) -> dict:
        if self.kind == "box":
            return {"kind": "box", "lo": list(self.lo), "hi": list(self.hi)}
        return {"kind": "ball", "center": list(self.center), "radius": self.radius}

    @classmethod
    def from_dict(cls, m: dict) -> "Window":
        if m["kind"] == "box":
            return cls.box(m["lo"], m["hi"])
        return cls.ball(m["center"], m["radius"])


@dataclass(frozen=True)
class PoissonSample:
    points: np.ndarray
    intensity: float
    window: Window
    seed: int

    @property
    def d(self) -> int:
        return self.window.d

    def __len__(self):
        return len(self.points)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# d={self.d} intensity={self.intensity!r} seed={self.seed} "
                  f"window={self.window.to_dict()!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(self.d)])
        for row in self.points:
            w.writerow(["%.17g" % v for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PoissonSample":
        import ast

        lines = text.splitlines()
        head = lines[0][2:]
        meta = {}
        for key in ("d", "intensity", "seed"):
            start = head.index(key + "=") + len(key) + 1
            meta[key] = head[start:].split(" ", 1)[0]
        window = Window.from_dict(ast.literal_eval(head[head.index("window=") + 7:]))
        rows = list(csv.reader(lines[2:]))
        d = int(meta["d"])
        pts = np.array([[float(v) for v in r] for r in rows]).reshape(-1, d)
        return cls(pts, float(meta["intensity"]), window, int(meta["seed"]))


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error."""

    value: float
    std_error: float
    n: int
    seed: int = 0
    extra: dict = dc_field(default_factory=dict, compare=False)

    @classmethod
    def from_samples(cls, x, seed: int = 0, **extra) -> "Estimate":
        x = np.asarray(x, float)
        if x.size < 2:
            raise DomainError("an estimate needs at least two samples")
        return cls(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), int(x.size), seed, extra)

    def z_against(self, target: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.value == target else math.copysign(math.inf, self.value - target)
        return (self.value - target) / self.std_error


def sample_field(window: Window, intensity: float, seed: int, stream_index: int = 0) -> PoissonSample:
    """Homogeneous Poisson field of the given intensity on the window."""
    if not intensity >= 0:
        raise DomainError("intensity must be nonnegative")
    gen = _rng.stream(seed, stream_index)
    n = int(gen.poisson(intensity * window.volume)) if intensity > 0 else 0
    return PoissonSample(window.uniform(gen, n), float(intensity), window, int(seed))


def scaled_sample(window: Window, eps: float, seed: int, stream_index: int = 0) -> PoissonSample:
    """Realization of ``omega(eps dx)``: intensity ``eps`` in analysis coordinates."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    return sample_field(window, eps, seed, stream_index)


def compensated_integral(sample: PoissonSample, f: Callable[[np.ndarray], np.ndarray],
                         compensator_density: float, f_integral: float) -> float:
    """``sum_i f(x_i) - density * int_window f``; ``f`` maps an (n, d) array to n values."""
    total = math.fsum(np.asarray(f(sample.points), float)) if len(sample) else 0.0
    return total - compensator_density * f_integral


def batch_compensated(window: Window, intensity: float, f: Callable[[np.ndarray], np.ndarray],
                      f_integral: float, n_fields: int, seed: int, *, chunk: int = 4096,
                      threads: int = 1) -> np.ndarray:
    """Compensated integrals of ``f`` over ``n_fields`` independent fields.

    Fields are generated in fixed chunks, chunk ``j`` drawing from stream
    ``(seed, j)``, so the result does not depend on ``threads``.
    """
    comp = intensity * f_integral
    vol = window.volume

    def work(j, m):
        gen = _rng.stream(seed, j)
        counts = gen.poisson(intensity * vol, size=m)
        pts = window.uniform(gen, int(counts.sum()))
        vals = np.asarray(f(pts), float) if len(pts) else np.zeros(0)
        owner = np.repeat(np.arange(m), counts)
        return np.bincount(owner, weights=vals, minlength=m) - comp

    return _rng.ordered_concat(_rng.map_chunks(work, n_fields, chunk, threads))


# ---------------------------------------------------------------------------
# Campbell functional


@dataclass(frozen=True)
class RadialFunction:
    """Nonnegative radial function ``f(|x|)`` on ``R^d`` supported in ``|x| <= r_max``.

    ``head`` is the small-radius power exponent (``f ~ r^-head``) if the
    function is singular at 0; ``points`` are kinks.
    """

    d: int
    profile: Callable
    r_max: float = math.inf
    points: Tuple[float, ...] = ()
    head: Optional[float] = None

    @classmethod
    def from_kernel(cls, spec: KernelSpec) -> "RadialFunction":
        top = spec.radius
        if spec.variant == "near":
            top = min(top, SUPPORT / spec.scale)
        return cls(spec.d, spec.profile, top, tuple(spec.breakpoints()),
                   spec.p if spec.singular else None)


@dataclass(frozen=True)
class Indicator:
    """``level`` times the indicator of a set of the given volume."""

    volume: float
    level: float = 1.0


def _kernel_tail(fn: RadialFunction, spec_p: Optional[float]):
    if math.isinf(fn.r_max):
        if spec_p is None:
            raise DomainError("infinite support needs a power-law tail exponent")
        return (1.0, 2 * spec_p)
    return None


def campbell_log_mgf(f: Union[KernelSpec, RadialFunction, Indicator], density: float,
                     sign: int, theta: float, q: QuadratureSpec = DEFAULT_QUAD,
                     tail_exponent: Optional[float] = None) -> float:
    """``log E exp{sign theta int f d(omega - density dx)}``, exactly.

    Equals ``density * int psi(theta f)`` for ``sign = -1`` and ``density *
    int Psi(theta f)`` for ``sign = +1``.
    """
    if sign not in (-1, 1):
        raise DomainError("sign must be +1 or -1")
    if not theta >= 0:
        raise DomainError("theta must be nonnegative")
    if not density >= 0:
        raise DomainError("density must be nonnegative")
    if theta == 0 or density == 0:
        return 0.0
    phi = psi if sign < 0 else Psi
    if isinstance(f, Indicator):
        return density * f.volume * phi(theta * f.level)
    p = None
    if isinstance(f, KernelSpec):
        p = f.p
        if sign > 0 and f.singular:
            raise DomainError("the upper exponential moment of a singular kernel is infinite")
        f = RadialFunction.from_kernel(f)
    elif sign > 0 and f.head is not None:
        raise DomainError("the upper exponential moment of a singular function is infinite")
    if tail_exponent is not None:
        p = tail_exponent / 2
    prof = f.profile
    val = radial_integral(
        lambda r: phi(theta * prof(r)), f.d, 0.0, f.r_max, q,
        points=f.points, head=(1.0, f.head) if f.head is not None else None,
        tail=_kernel_tail(f, p),
    )
    return density * val


def campbell_mgf_exact(f, density: float, sign: int, theta: float,
                       q: QuadratureSpec = DEFAULT_QUAD, **kw) -> float:
    return math.exp(campbell_log_mgf(f, density, sign, theta, q, **kw))


def kernel_integral(spec: KernelSpec, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Compensator integral ``int k`` of a kernel (finite radius unless near)."""
    return kernel_mass(spec, q)


# ---------------------------------------------------------------------------
# Poisson count tails


def poisson_log_tail(mu: float, k: int) -> float:
    """``log P{Z >= k}`` for ``Z ~ Poisson(mu)``, stable for any ``k``."""
    if not mu > 0:
        raise DomainError("mu must be positive")
    if k < 0 or int(k) != k:
        raise DomainError("k must be a nonnegative integer")
    k = int(k)
    if k == 0:
        return 0.0
    if k <= mu + 1:
        return math.log1p(-float(special.gammaincc(k, mu)))
    # log pmf(k) + log sum_m mu^m k!/(k+m)!, terms decay at least like mu/(k+1)
    log_pmf = -mu + k * math.log(mu) - math.lgamma(k + 1)
    term, acc, m = 1.0, 1.0, 0
    while term > 1e-17 * acc:
        m += 1
        term *= mu / (k + m)
        acc += term
        if m > 100000:
            break
    return log_pmf + math.log(acc)


def poisson_tail_exact(mu: float, k: int) -> float:
    """``P{Z >= k} = 1 - sum_{j<k} e^-mu mu^j / j!``."""
    return math.exp(poisson_log_tail(mu, k))


def stirling_log_tail(mu: float, k: int) -> float:
    """Leading large-``k`` approximation ``k log(e mu / k)`` of the log tail."""
    return k * math.log(math.e * mu / k)


def max_count_log_tail(n: float, mu: float, k: int) -> float:
    """``log P{max of n iid Poisson(mu) >= k} = log(1 - (1 - P{Z>=k})^n)``."""
    if not n >= 1:
        raise DomainError("n must be at least 1")
    if k == 0:
        return 0.0
    lt = poisson_log_tail(mu, k)
    if lt < -700.0:
        # q underflows; 1 - (1-q)^n = n q (1 + O(n q))
        return math.log(n) + lt
    return math.log(-math.expm1(n * math.log1p(-math.exp(lt))))


def max_count_tail(n: float, mu: float, k: int) -> float:
    return math.exp(max_count_log_tail(n, mu, k))


def max_count_median(n: float, mu: float) -> int:
    """Median of the maximum of ``n`` iid Poisson(mu) counts.

    The smallest ``k`` with ``P{max <= k} >= 1/2``; ``n`` may be a float far
    beyond any sample size that could be simulated.
    """
    k = 0
    while max_count_tail(n, mu, k + 1) > 0.5:
        k += 1
    return k
