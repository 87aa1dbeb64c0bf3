"""Renormalized Riesz potentials and the grid functionals built on them.

A grid function ``g`` is stored by its values on the nodes of a uniform
lattice; ``g^2`` is taken piecewise constant on the cube of side ``h``
centred at each node.  All integrals against ``g^2`` are therefore sums of
kernel integrals over cells:

* ``d = 1``: exact, from the closed-form antiderivative of the kernel;
* ``d >= 2``: the cell containing ``x`` exactly (box integral of
  ``|y-x|^{-p}``), its neighbours by tensor Gauss-Legendre, all other cells
  by the midpoint rule.  Near/far kernels use near = full - far with the far
  part (which is smooth) always by midpoint, so the split is exact.

Kernels are cut off at a window radius ``R`` centred at the evaluation
point, and compensators use the same cutoff, so every compensated quantity
has mean exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .cutoff import KernelSpec, kernel_mass_exact
from .errors import DomainError, GeometryError, SingularityError
from .field import PoissonSample, Window
from .specfun import _gl_nodes, riesz_box_integral, sphere_area, unit_ball_volume

COLLISION = 1e-12
FLOOR_FRACTION = 1e-6


# ---------------------------------------------------------------------------
# grid functions


@dataclass(frozen=True)
class GridFunction:
    """Node values on ``lo + h * j``, ``j in {0..n}^d``."""

    lo: Tuple[float, ...]
    h: float
    values: np.ndarray
    zero_boundary: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, float)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "lo", tuple(float(a) for a in self.lo))
        if v.ndim != len(self.lo):
            raise DomainError("values must have one axis per dimension")
        if not self.h > 0:
            raise DomainError("mesh width must be positive")
        if not np.all(np.isfinite(v)):
            raise DomainError("grid values must be finite")
        if self.zero_boundary and v.size and np.any(_boundary(v) != 0):
            raise DomainError("boundary layer must vanish for a zero-boundary grid function")

    @classmethod
    def from_function(cls, fn, lo: Sequence[float], hi: Sequence[float], h: float,
                      zero_boundary: bool = True) -> "GridFunction":
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        n = np.rint((hi - lo) / h).astype(int)
        if np.any(np.abs(lo + n * h - hi) > 1e-9 * max(1.0, float(np.max(np.abs(hi))))):
            raise DomainError("box sides must be integer multiples of h")
        axes = [lo[k] + h * np.arange(n[k] + 1) for k in range(lo.size)]
        mesh = np.meshgrid(*axes, indexing="ij")
        vals = np.asarray(fn(np.stack(mesh, axis=-1)), float)
        if zero_boundary:
            vals = vals.copy()
            _zero_boundary(vals)
        return cls(tuple(lo), float(h), vals, zero_boundary)

    @property
    def d(self) -> int:
        return self.values.ndim

    @property
    def hi(self) -> Tuple[float, ...]:
        return tuple(a + self.h * (n - 1) for a, n in zip(self.lo, self.values.shape))

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``values.shape + (d,)``."""
        axes = [a + self.h * np.arange(n) for a, n in zip(self.lo, self.values.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def norm2(self) -> float:
        return float(self.h**self.d * np.sum(self.values**2))

    def grad_norm2(self) -> float:
        """Forward-difference Dirichlet energy ``sum |D g|^2 h^d``."""
        v = self.values
        if not self.zero_boundary:
            tot = sum(np.sum(np.diff(v, axis=k) ** 2) for k in range(self.d))
        else:
            tot = 0.0
            for k in range(self.d):
                pad = [(0, 0)] * self.d
                pad[k] = (1, 1)
                tot += np.sum(np.diff(np.pad(v, pad), axis=k) ** 2)
        return float(tot * self.h ** (self.d - 2))

    def sobolev_norm2(self) -> float:
        """``||g||^2 + 1/2 ||grad g||^2``, the normalization of the ``G_d`` class."""
        return self.norm2() + 0.5 * self.grad_norm2()

    def scaled(self, c: float) -> "GridFunction":
        return GridFunction(self.lo, self.h, c * self.values, self.zero_boundary)

    def normalized_sobolev(self) -> "GridFunction":
        n = self.sobolev_norm2()
        if n == 0:
            raise DomainError("cannot normalize the zero function")
        return self.scaled(1.0 / math.sqrt(n))

    def rescaled(self, c: float) -> "GridFunction":
        """``x -> c^{-d/2} g(x / c)``: stretch the domain by ``c``, keep the L2 norm."""
        return GridFunction(tuple(c * a for a in self.lo), c * self.h,
                            c ** (-self.d / 2) * self.values, self.zero_boundary)

    def support_box(self) -> Tuple[np.ndarray, np.ndarray]:
        """Smallest box containing every cell with a nonzero value."""
        idx = np.argwhere(self.values != 0)
        if idx.size == 0:
            c = np.asarray(self.lo)
            return c, c
        lo = np.asarray(self.lo) + self.h * (idx.min(axis=0) - 0.5)
        hi = np.asarray(self.lo) + self.h * (idx.max(axis=0) + 0.5)
        return lo, hi


def _boundary(v: np.ndarray) -> np.ndarray:
    parts = []
    for k in range(v.ndim):
        parts.append(np.take(v, [0, -1], axis=k).ravel())
    return np.concatenate(parts)


def _zero_boundary(v: np.ndarray) -> None:
    for k in range(v.ndim):
        sl = [slice(None)] * v.ndim
        sl[k] = 0
        v[tuple(sl)] = 0.0
        sl[k] = -1
        v[tuple(sl)] = 0.0


# ---------------------------------------------------------------------------
# cell integrals of kernels


def kernel_antiderivative_1d(spec: KernelSpec, u) -> np.ndarray:
    """Odd function ``S(u) = sign(u) int_0^{|u|} k(r) dr`` for a 1-d kernel."""
    if spec.d != 1:
        raise DomainError("one-dimensional kernels only")
    u = np.asarray(u, float)
    a = np.abs(u)
    out = np.zeros_like(a)
    for r0, r1, c in spec.pieces():
        x1 = np.clip(a, r0, r1)
        for j, cj in enumerate(c):
            if cj:
                e = j - spec.p + 1.0
                out += cj * (x1**e - r0**e) / e
    return np.sign(u) * out


def cell_weights_1d(spec: KernelSpec, centers: np.ndarray, h: float, x) -> np.ndarray:
    """Exact ``int_{cell_j} k(|y - x|) dy`` for every (x, cell) pair, shape (len(x), n)."""
    x = np.atleast_1d(np.asarray(x, float)).reshape(-1, 1)
    c = np.asarray(centers, float).reshape(1, -1)
    return (kernel_antiderivative_1d(spec, c + 0.5 * h - x)
            - kernel_antiderivative_1d(spec, c - 0.5 * h - x))


def _gl_box_many(lo: np.ndarray, h: float, x: np.ndarray, p: float, n: int = 8) -> np.ndarray:
    """Tensor Gauss-Legendre integrals of ``|y-x|^{-p}`` over cubes ``[lo_i, lo_i + h]``."""
    t, w = _gl_nodes(n)
    d = lo.shape[1]
    pts = 0.5 * h * (t + 1.0)
    grids = np.stack(np.meshgrid(*([pts] * d), indexing="ij"), axis=-1).reshape(-1, d)
    wts = np.ones(1)
    for _ in range(d):
        wts = np.multiply.outer(wts, 0.5 * h * w).ravel()
    y = lo[:, None, :] + grids[None, :, :] - x
    r2 = np.sum(y * y, axis=-1)
    return np.sum(wts * r2 ** (-0.5 * p), axis=1)


def cell_weights(spec: KernelSpec, g: GridFunction, x, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """``int_{cell_j} k(y - x) dy`` for every cell of ``g`` (flattened, restricted to ``mask``)."""
    x = np.asarray(x, float)
    h, d = g.h, g.d
    nodes = g.nodes().reshape(-1, d)
    if mask is not None:
        nodes = nodes[mask.ravel()]
    if d == 1:
        return cell_weights_1d(spec, nodes[:, 0], h, x[0] if x.ndim else x)[0]
    diff = nodes - x
    r = np.sqrt(np.sum(diff * diff, axis=1))
    full = spec.with_variant("full")
    with np.errstate(divide="ignore"):
        w_full = h**d * full.profile(r)
    # cells close to x: exact for the cell holding x, Gauss-Legendre for neighbours
    cheb = np.max(np.abs(diff), axis=1) / h
    near = cheb < 1.5
    if np.any(near):
        idx = np.flatnonzero(near)
        holds = cheb[idx] <= 0.5
        lo = nodes[idx] - 0.5 * h
        vals = np.empty(idx.size)
        if np.any(~holds):
            vals[~holds] = _gl_box_many(lo[~holds], h, x, spec.p)
        for k in np.flatnonzero(holds):
            vals[k] = riesz_box_integral(lo[k], lo[k] + h, x, spec.p)
        w_full[idx] = vals
    if math.isfinite(spec.radius):
        w_full = np.where(r <= spec.radius, w_full, 0.0)
    if spec.variant == "full":
        return w_full
    w_far = h**d * spec.with_variant("far").profile(r)
    return w_full - w_far if spec.variant == "near" else w_far


def inner_riesz(g: GridFunction, x, p: Optional[float] = None,
                kernel: Optional[KernelSpec] = None) -> float:
    """``int g^2(y) k(y - x) dy`` with ``k = |.|^{-p}`` unless a kernel is given."""
    if kernel is None:
        if p is None:
            raise DomainError("give either p or a kernel")
        kernel = KernelSpec(g.d, p)
    sq = g.values.ravel() ** 2
    nz = sq != 0
    if not np.any(nz):
        return 0.0
    w = cell_weights(kernel, g, np.atleast_1d(np.asarray(x, float)), mask=nz.reshape(g.values.shape))
    return float(np.dot(w, sq[nz]))


# ---------------------------------------------------------------------------
# potentials at points


def full_tail_std(d: int, p: float, R: float, density: float = 1.0) -> float:
    """Standard deviation of the part of the renormalized sum beyond radius ``R``."""
    return math.sqrt(density * sphere_area(d) * R ** (d - 2 * p) / (2 * p - d))


EVAL_PAIRS = 2_000_000


def _ball_fraction(win: Window, R: float) -> float:
    return unit_ball_volume(win.d) * R**win.d / win.volume


@dataclass(frozen=True)
class PotentialEvaluator:
    """Compensated kernel sums ``sum_i k(y_i - x) - density int k`` for one sample.

    The kernel carries the window radius ``R``.  Distances below ``r_min =
    1e-6 R`` are floored at ``r_min``; distances below ``1e-12`` raise.
    """

    sample: PoissonSample
    kernel: KernelSpec
    density: float
    tail_tolerance: Optional[float] = None

    def __post_init__(self):
        if self.kernel.d != self.sample.d:
            raise DomainError("kernel and sample dimensions differ")
        if self.kernel.variant != "near" and not math.isfinite(self.kernel.radius):
            raise DomainError("full and far kernels need a finite window radius")
        if self.tail_tolerance is not None and self.tail_std > self.tail_tolerance:
            raise DomainError(
                f"window radius too small: tail std {self.tail_std:.3g} exceeds {self.tail_tolerance:.3g}")
        object.__setattr__(self, "_tree", cKDTree(self.sample.points) if len(self.sample) else None)

    @property
    def reach(self) -> float:
        """Radius beyond which the kernel is zero."""
        k = self.kernel
        if k.variant == "near":
            return min(k.radius, 3.0 / k.scale)
        return k.radius

    @property
    def r_min(self) -> float:
        return FLOOR_FRACTION * self.reach

    @property
    def compensator(self) -> float:
        return self.density * kernel_mass_exact(self.kernel.with_radius(self.reach))

    @property
    def tail_std(self) -> float:
        """Std of the omitted part ``|y - x| > R`` (zero for near kernels)."""
        k = self.kernel
        if k.variant == "near" and 3.0 / k.scale <= k.radius:
            return 0.0
        return full_tail_std(k.d, k.p, k.radius, self.density)

    def evaluate(self, xs) -> Tuple[np.ndarray, int]:
        """Values at each row of ``xs`` and the number of floored contributions."""
        xs = np.atleast_2d(np.asarray(xs, float))
        if xs.shape[1] != self.kernel.d:
            raise DomainError("evaluation points have the wrong dimension")
        R = self.reach
        win = self.sample.window
        for x in (xs.min(axis=0), xs.max(axis=0)) if win.kind == "box" else xs:
            win.require_ball(x, R)
        out = np.full(xs.shape[0], -self.compensator)
        if self._tree is None:
            return out, 0
        # sparse_distance_matrix drops exact zeros, so re-check collisions directly
        dd, _ = self._tree.query(xs, k=1)
        if np.any(dd < COLLISION):
            raise SingularityError("a sample point coincides with an evaluation point")
        # block the queries so the pair list stays near EVAL_PAIRS entries
        per_point = max(1.0, len(self.sample) * min(1.0, _ball_fraction(win, R)))
        block = max(1, int(EVAL_PAIRS / per_point))
        floored = 0
        for s in range(0, xs.shape[0], block):
            xb = xs[s:s + block]
            pairs = cKDTree(xb).sparse_distance_matrix(self._tree, R, output_type="ndarray")
            r = pairs["v"]
            vals = self.kernel.profile(np.maximum(r, self.r_min))
            out[s:s + block] += np.bincount(pairs["i"], weights=vals, minlength=xb.shape[0])
            floored += int(np.count_nonzero(r < self.r_min)) if self.kernel.singular else 0
        return out, floored

    def __call__(self, x) -> float:
        return float(self.evaluate(np.atleast_2d(x))[0][0])


def renormalized_potential(ev: PotentialEvaluator, x) -> Tuple[float, float]:
    """``V(x)`` truncated at ``R`` and the std of the truncated tail."""
    return ev(x), ev.tail_std


def far_potential(sample_scaled: PoissonSample, x, p: float, a: float, eps: float, i: int,
                  R: float) -> Tuple[float, float]:
    """Far-kernel compensated integral against ``omega(eps dy) - eps dy``."""
    return renormalized_potential(far_evaluator(sample_scaled, p, a, eps, i, R), x)


def far_evaluator(sample_scaled: PoissonSample, p: float, a: float, eps: float, i: int,
                  R: float) -> PotentialEvaluator:
    spec = KernelSpec(sample_scaled.d, p, "far", a, eps, i, R)
    return PotentialEvaluator(sample_scaled, spec, eps)


# ---------------------------------------------------------------------------
# grid functionals


def _points_in_reach(g: GridFunction, sample: PoissonSample, reach: float) -> np.ndarray:
    lo, hi = g.support_box()
    win = sample.window
    if win.kind == "box":
        if np.any(lo - reach < np.asarray(win.lo)) or np.any(hi + reach > np.asarray(win.hi)):
            raise GeometryError("sample window does not cover the support of g plus the kernel reach")
    else:
        corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(g.d, -1).T
        for c in corners:
            win.require_ball(c, reach)
    pts = sample.points
    if not len(pts):
        return pts
    gap = np.maximum(np.maximum(lo - pts, pts - hi), 0.0)
    return pts[np.sqrt(np.sum(gap * gap, axis=1)) <= reach]


def compensated_functional(g: GridFunction, sample: PoissonSample, density: float,
                           kernel: KernelSpec) -> float:
    """``int g^2(y) int k(y - x) [omega(dx) - density dx] dy`` (Fubini form for the compensator)."""
    reach = kernel.radius
    if kernel.variant == "near":
        reach = min(reach, 3.0 / kernel.scale)
    if not math.isfinite(reach):
        raise DomainError("the kernel needs a finite window radius")
    pts = _points_in_reach(g, sample, reach)
    sq = g.values.ravel() ** 2
    nz = sq != 0
    comp = density * g.norm2() * kernel_mass_exact(kernel.with_radius(reach))
    if not len(pts) or not np.any(nz):
        return -comp
    if g.d == 1:
        centers = g.nodes().reshape(-1)[nz]
        w = cell_weights_1d(kernel, centers, g.h, pts[:, 0])
        acc = w @ sq[nz]
    else:
        m = nz.reshape(g.values.shape)
        acc = np.array([cell_weights(kernel, g, y, mask=m) @ sq[nz] for y in pts])
    return math.fsum(acc) - comp


def zeta_epsilon(g: GridFunction, sample_scaled: PoissonSample, eps: float, p: float,
                 R: float) -> float:
    """Full-kernel functional against ``omega(eps dx) - eps dx``, kernel cut at ``R``."""
    return compensated_functional(g, sample_scaled, eps, KernelSpec(g.d, p, "full", radius=R))


def split_functionals(g: GridFunction, sample_scaled: PoissonSample, eps: float, p: float,
                      a: float, i: int, R: float) -> Tuple[float, float]:
    """Near and far parts ``(G, F)`` of ``zeta_epsilon``."""
    near = KernelSpec(g.d, p, "near", a, eps, i, R)
    return (compensated_functional(g, sample_scaled, eps, near),
            compensated_functional(g, sample_scaled, eps, near.with_variant("far")))
