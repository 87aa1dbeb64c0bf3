"""Discretized variational problems and the limit constants built from them.

Lattice operators are ``1/2 Delta_h + diag(xi)`` on the interior nodes of a
box with Dirichlet boundary.  The Sobolev-type constant ``rho(d, p)`` is
computed from radial profiles with P1 finite elements; it fixes ``sigma``
and ``M`` through exact algebraic relations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, optimize, sparse, special
from scipy.sparse import linalg as splinalg

from .errors import ConvergenceError, DomainError
from .specfun import _gl_nodes, cell_average_riesz, gamma_fn, sphere_area, unit_ball_volume


def _check_sub2(d, p):
    # the Sobolev-type constants only need 0 < p < min(2, d); p > d/2 is a
    # condition on the potential, not on the variational problem
    if not (0 < p < min(2.0, d)):
        raise DomainError(f"need 0 < p < min(2, d), got d={d}, p={p}")


def _check_range(d, p):
    if not (d / 2 < p < d):
        raise DomainError(f"need d/2 < p < d, got d={d}, p={p}")


# ---------------------------------------------------------------------------
# lattice operators


@dataclass(frozen=True)
class LatticeOperatorSpec:
    """``1/2 Delta_h + xi`` on the interior nodes of ``[lo, hi]``.

    ``xi`` has shape ``(n_1 - 1, ..., n_d - 1)`` with ``n_k = (hi_k - lo_k)/h``.
    ``mask`` (same shape) keeps only some interior nodes, all others being
    treated as boundary (Dirichlet).
    """

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]
    h: float
    xi: np.ndarray
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError("mesh width must be positive")
        xi = np.asarray(self.xi, float)
        object.__setattr__(self, "xi", xi)
        if xi.shape != self.shape:
            raise DomainError(f"xi has shape {xi.shape}, lattice needs {self.shape}")
        if not np.all(np.isfinite(xi)):
            raise DomainError("xi must be finite on interior nodes")

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> Tuple[int, ...]:
        n = [int(round((b - a) / self.h)) for a, b in zip(self.lo, self.hi)]
        if any(k < 2 for k in n):
            raise DomainError("box must hold at least one interior node per axis")
        return tuple(k - 1 for k in n)

    def nodes(self) -> np.ndarray:
        axes = [a + self.h * np.arange(1, m + 1) for a, m in zip(self.lo, self.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @classmethod
    def box(cls, lo, hi, h, xi_fn: Optional[Callable] = None, mask_fn=None) -> "LatticeOperatorSpec":
        lo = tuple(float(a) for a in lo)
        hi = tuple(float(b) for b in hi)
        proto = cls(lo, hi, h, np.zeros(tuple(int(round((b - a) / h)) - 1 for a, b in zip(lo, hi))))
        X = proto.nodes()
        xi = np.zeros(proto.shape) if xi_fn is None else np.asarray(xi_fn(X), float)
        mask = None if mask_fn is None else np.asarray(mask_fn(X), bool)
        return cls(lo, hi, h, xi, mask)

    def with_xi(self, xi) -> "LatticeOperatorSpec":
        return LatticeOperatorSpec(self.lo, self.hi, self.h, xi, self.mask)


def neg_laplacian(shape: Sequence[int], h: float) -> sparse.csr_matrix:
    """``-Delta_h`` with Dirichlet boundary on a tensor lattice of interior nodes."""
    mats = []
    for m in shape:
        mats.append(sparse.diags([-np.ones(m - 1), 2 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1]))
    out = sparse.csr_matrix((int(np.prod(shape)),) * 2)
    for k, m in enumerate(mats):
        left = sparse.identity(int(np.prod(shape[:k])))
        right = sparse.identity(int(np.prod(shape[k + 1:])))
        out = out + sparse.kron(sparse.kron(left, m), right)
    return (out / h**2).tocsr()


def _operator(spec: LatticeOperatorSpec):
    A = -0.5 * neg_laplacian(spec.shape, spec.h) + sparse.diags(spec.xi.ravel())
    if spec.mask is not None:
        keep = np.flatnonzero(spec.mask.ravel())
        A = A[keep][:, keep]
        return A.tocsr(), spec.xi.ravel()[keep]
    return A.tocsr(), spec.xi.ravel()


def power_iteration(A, shift: float, tol: float = 1e-10, max_iter: int = 500000) -> Tuple[float, np.ndarray]:
    """Largest eigenpair of symmetric ``A`` via power iteration on ``A + shift I``."""
    n = A.shape[0]
    v = np.ones(n) / math.sqrt(n)
    prev = None
    for it in range(max_iter):
        w = A @ v + shift * v
        lam = float(v @ w) - shift
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return lam, v
        v = w / nrm
        if prev is not None and abs(lam - prev) < tol * max(1.0, abs(lam)):
            return lam, v
        prev = lam
    raise ConvergenceError("power iteration did not converge", bracket=(prev, lam))


def principal_eigenpair(spec: LatticeOperatorSpec, method: str = "auto",
                        tol: float = 1e-10) -> Tuple[float, np.ndarray]:
    """Largest eigenvalue of ``1/2 Delta_h + xi`` and its eigenvector (interior nodes)."""
    A, xi = _operator(spec)
    n = A.shape[0]
    if method == "auto":
        method = "tridiagonal" if (spec.d == 1 and spec.mask is None) else "sparse"
    if method not in ("tridiagonal", "dense", "sparse", "power"):
        raise DomainError(f"unknown eigen method {method!r}")
    if method == "tridiagonal":
        diag = A.diagonal()
        off = A.diagonal(1)
        w, v = linalg.eigh_tridiagonal(diag, off, select="i", select_range=(n - 1, n - 1))
        return float(w[0]), v[:, 0]
    if method == "dense" or n < 16:
        w, v = linalg.eigh(A.toarray(), subset_by_index=[n - 1, n - 1])
        return float(w[0]), v[:, 0]
    if method == "sparse":
        sigma = float(xi.max()) + 1.0
        w, v = splinalg.eigsh(A.tocsc(), k=1, sigma=sigma, which="LM", v0=np.ones(n), tol=0.0)
        return float(w[0]), v[:, 0]
    shift = 2.0 * spec.d / spec.h**2 - float(xi.min())
    return power_iteration(A, shift, tol)


def principal_eigenvalue(spec: LatticeOperatorSpec, method: str = "auto", tol: float = 1e-10) -> float:
    return principal_eigenpair(spec, method, tol)[0]


@lru_cache(maxsize=None)
def dirichlet_lambda_d(d: int) -> float:
    """Principal eigenvalue of ``-1/2 Delta`` on the unit ball: ``j_{d/2-1,1}^2 / 2``."""
    if d not in (1, 2, 3):
        raise DomainError("only d in {1, 2, 3} is supported")
    nu = d / 2 - 1
    j = optimize.brentq(lambda x: special.jv(nu, x), 1.0, 4.0, xtol=1e-15)
    return 0.5 * j * j


def box_ground_energy(lo: Sequence[float], hi: Sequence[float], h: Optional[float] = None) -> float:
    """Ground energy of ``-1/2 Delta`` on a box; lattice value if ``h`` is given."""
    sides = np.subtract(hi, lo)
    if h is None:
        return float(0.5 * np.sum((math.pi / sides) ** 2))
    # the discrete Laplacian separates, its ground energy is a sum of 1-d ones
    n = np.rint(sides / h)
    return float(np.sum((2.0 / h**2) * np.sin(math.pi / (2 * n)) ** 2))


def sup_L2_on_Gd(lo: Sequence[float], hi: Sequence[float], h: Optional[float] = None) -> float:
    """``sup ||g||_2`` over ``||g||^2 + 1/2 ||grad g||^2 = 1``, ``g = 0`` off the box."""
    return (1.0 + box_ground_energy(lo, hi, h)) ** -0.5


def rate_I_D(gamma: float, d: int, p: float, lo: Sequence[float], hi: Sequence[float],
             h: Optional[float] = None) -> float:
    """Large-deviation rate of the infimum of the compensated functional over ``G_d(D)``."""
    _check_range(d, p)
    if not gamma >= 0:
        raise DomainError("gamma must be nonnegative")
    if gamma == 0:
        return 0.0
    s = sup_L2_on_Gd(lo, hi, h)
    g = gamma_fn((2 * p - d) / p)
    return ((gamma * (d - p) / d) ** (d / (d - p))
            * (unit_ball_volume(d) * g) ** (-p / (d - p))
            * s ** (-2 * d / (d - p)))


# ---------------------------------------------------------------------------
# Riesz potentials on lattices


def riesz_lattice_potential(spec_lo, spec_hi, h: float, p: float, theta: float = 1.0,
                            center: Optional[Sequence[float]] = None) -> np.ndarray:
    """``theta |x - center|^{-p}`` on interior nodes, as averages over dual cells.

    In one dimension every node carries the exact average over its cell
    ``[x - h/2, x + h/2]``.  In higher dimensions nodes carry point values,
    except a node at the pole, which gets the exact cell average.
    """
    proto = LatticeOperatorSpec.box(spec_lo, spec_hi, h)
    X = proto.nodes()
    d = proto.d
    c = np.zeros(d) if center is None else np.asarray(center, float)
    if d == 1:
        u = X[..., 0] - c[0]
        prim = lambda t: np.sign(t) * np.abs(t) ** (1 - p) / (1 - p)  # noqa: E731
        return theta * (prim(u + 0.5 * h) - prim(u - 0.5 * h)) / h
    r = np.sqrt(np.sum((X - c) ** 2, axis=-1))
    pole = r < 1e-9 * h
    with np.errstate(divide="ignore"):
        v = np.where(pole, 0.0, r ** (-p))
    v[pole] = cell_average_riesz(d, p, h)
    return theta * v


def eigen_scaling_check(theta: float, d: int, p: float, R: float, a: float, h: float) -> float:
    """Relative residual of ``lambda(theta|x|^-p, Q_R) = a^2 lambda(theta a^{p-2}|x|^-p, Q_{aR})``."""
    lo, hi = (-R,) * d, (R,) * d
    left = principal_eigenvalue(LatticeOperatorSpec(lo, hi, h, riesz_lattice_potential(lo, hi, h, p, theta)))
    if a == 1:
        return 0.0
    lo2, hi2 = (-a * R,) * d, (a * R,) * d
    pot = riesz_lattice_potential(lo2, hi2, h, p, theta * a ** (p - 2))
    right = a * a * principal_eigenvalue(LatticeOperatorSpec(lo2, hi2, h, pot))
    return abs(left - right) / abs(left)


# ---------------------------------------------------------------------------
# the constant rho(d, p) from radial profiles


def _radial_mesh(R: float, n: int, grading: float) -> np.ndarray:
    return R * (np.arange(n + 1) / n) ** grading


def radial_fem_matrices(nodes: np.ndarray, d: int, p: float):
    """P1 matrices on ``[0, R]``: weighted masses for ``rho^{d-1-p}``, ``rho^{d-1}`` and stiffness.

    All carry the sphere-area factor, so ``v^T N v = int g^2 |x|^{-p} dx`` etc.
    The last node (``rho = R``) is removed (Dirichlet).
    """
    t, w = _gl_nodes(10)
    a, b = nodes[:-1], nodes[1:]
    L = b - a
    n = nodes.size
    # element integrals of phi_i phi_j rho^e: [aa, ab, bb]
    def weighted(e):
        x = 0.5 * (a + b)[:, None] + 0.5 * L[:, None] * t[None, :]
        wt = 0.5 * L[:, None] * w[None, :] * x**e
        pa = (b[:, None] - x) / L[:, None]
        pb = (x - a[:, None]) / L[:, None]
        out = np.stack([np.sum(wt * pa * pa, 1), np.sum(wt * pa * pb, 1), np.sum(wt * pb * pb, 1)], 1)
        # the first element touches the origin where rho^e may be singular: exact moments
        if a[0] == 0.0:
            h0 = L[0]
            m = lambda k: h0 ** (e + k + 1) / (e + k + 1)  # noqa: E731
            # phi_a = 1 - r/h0, phi_b = r/h0
            out[0] = [m(0) - 2 * m(1) / h0 + m(2) / h0**2, m(1) / h0 - m(2) / h0**2, m(2) / h0**2]
        return out

    def assemble(el):
        main = np.zeros(n)
        main[:-1] += el[:, 0]
        main[1:] += el[:, 2]
        off = el[:, 1]
        return sparse.diags([off, main, off], [-1, 0, 1], format="csr")

    area = sphere_area(d)
    Nw = assemble(weighted(d - 1 - p)) * area
    Mw = assemble(weighted(d - 1)) * area
    # stiffness: (1/L^2) int rho^{d-1}, with signs (+, -, +)
    x = 0.5 * (a + b)[:, None] + 0.5 * L[:, None] * t[None, :]
    k = np.sum(0.5 * L[:, None] * w[None, :] * x ** (d - 1), 1) / L**2
    Kw = assemble(np.stack([k, -k, k], 1)) * area
    keep = slice(0, n - 1)
    return Nw[keep, keep].tocsc(), Mw[keep, keep].tocsc(), Kw[keep, keep].tocsc()


def _largest_generalized(N, B) -> Tuple[float, np.ndarray]:
    """Largest ``mu`` in ``N v = mu B v`` with ``N``, ``B`` symmetric positive definite."""
    n = N.shape[0]
    if n < 16:
        w, v = linalg.eigh(N.toarray(), B.toarray(), subset_by_index=[n - 1, n - 1])
        return float(w[0]), v[:, 0]
    # smallest 1/mu of B v = (1/mu) N v, by shift-invert at 0
    w, v = splinalg.eigsh(B, k=1, M=N, sigma=0.0, which="LM", v0=np.ones(n), tol=0.0)
    return 1.0 / float(w[0]), v[:, 0]


def rho_radial(d: int, p: float, R: float, n: int, grading: float = 2.0,
               cut: Optional[float] = None) -> Tuple[float, np.ndarray, np.ndarray]:
    """Discrete ``sup int g^2 |x|^{-p}`` over radial P1 functions on the ball of radius ``R``.

    With ``cut``, the mesh is the part of the radius-``R`` mesh inside
    ``cut``, so the spaces for increasing ``cut`` are nested.
    """
    nodes = _radial_mesh(R, n, grading)
    if cut is not None:
        nodes = nodes[nodes <= cut * (1 + 1e-12)]
        if nodes.size < 3:
            raise DomainError("cut radius leaves fewer than two elements")
    N, M, K = radial_fem_matrices(nodes, d, p)
    mu, v = _largest_generalized(N, M + 0.5 * K)
    return mu, nodes[:-1], v


def richardson(values: Sequence[float]) -> Tuple[float, Optional[float]]:
    """Extrapolate a sequence on meshes ``h, h/2, h/4``; returns (value, fitted order)."""
    v1, v2, v3 = values[-3:]
    d1, d2 = v2 - v1, v3 - v2
    if d1 == 0 or d2 == 0 or d1 * d2 < 0 or abs(d2) >= abs(d1):
        return v3, None
    ratio = d1 / d2
    order = math.log2(ratio)
    return v3 + d2 / (ratio - 1.0), order


@dataclass
class RhoResult:
    d: int
    p: float
    value: float
    order: Optional[float]
    meshes: List[int]
    per_mesh: List[float]
    radius: float
    trend: List[Tuple[float, float]] = field(default_factory=list)


def rho_dp(d: int, p: float, R: float = 30.0, n0: int = 1000, grading: float = 2.0,
           trend_radii: Sequence[float] = (1.0, 2.0, 4.0, 8.0, 16.0)) -> RhoResult:
    """``rho(d, p)`` by radial FEM on meshes ``n0, 2 n0, 4 n0`` with Richardson extrapolation."""
    _check_sub2(d, p)
    meshes = [n0, 2 * n0, 4 * n0]
    vals = [rho_radial(d, p, R, n, grading)[0] for n in meshes]
    value, order = richardson(vals)
    trend = [(r, rho_radial(d, p, R, meshes[-1], grading, cut=r)[0]) for r in trend_radii]
    return RhoResult(d, p, value, order, meshes, vals, R, trend)


def rho_lattice_1d(p: float, L: float, h: float, x0: float = 0.0) -> float:
    """``sup int g^2 |x - x0|^{-p}`` over lattice functions on ``(-L, L)``, ``d = 1``.

    ``g^2`` is piecewise constant on dual cells and the kernel is integrated
    exactly over each cell, so the pole may sit anywhere.
    """
    if not (0.5 < p < 1.0):
        raise DomainError("d = 1 needs 1/2 < p < 1")
    spec = LatticeOperatorSpec.box((-L,), (L,), h)
    x = spec.nodes()[:, 0]
    prim = lambda u: np.sign(u) * np.abs(u) ** (1 - p) / (1 - p)  # noqa: E731
    weights = prim(x + 0.5 * h - x0) - prim(x - 0.5 * h - x0)
    N = sparse.diags(weights).tocsc()
    B = (h * sparse.identity(x.size) + 0.5 * h * neg_laplacian(spec.shape, h)).tocsc()
    return _largest_generalized(N, B)[0]


# ---------------------------------------------------------------------------
# closed-form relations


def sigma_from_rho(rho: float, p: float) -> float:
    return rho * ((2 - p) / 2) ** (-(2 - p) / 2) * p ** (-p / 2)


def rho_from_sigma(sigma: float, p: float) -> float:
    return ((2 - p) / 2) ** ((2 - p) / 2) * p ** (p / 2) * sigma


def M_from_sigma(lam: float, sigma: float, p: float) -> float:
    if not lam > 0:
        raise DomainError("lambda must be positive")
    return (2 - p) / 2 * p ** (p / (2 - p)) * (lam * sigma) ** (2 / (2 - p))


@lru_cache(maxsize=None)
def sigma_dp(d: int, p: float) -> float:
    """Best constant of ``int f^2|x|^-p <= C ||f||^{2-p} ||grad f||^p``, via ``rho``."""
    return sigma_from_rho(rho_dp(d, p, trend_radii=()).value, p)


def M_lambda(lam: float, d: int, p: float, sigma: Optional[float] = None) -> float:
    _check_sub2(d, p)
    return M_from_sigma(lam, sigma_dp(d, p) if sigma is None else sigma, p)


def Lambda0(theta: float, d: int, p: float) -> float:
    """Quenched lower-tail constant ``theta d^2/(d-p) (omega_d Gamma((2p-d)/p)/d)^{p/d}``."""
    _check_range(d, p)
    if not theta > 0:
        raise DomainError("theta must be positive")
    return theta * d * d / (d - p) * (unit_ball_volume(d) * gamma_fn((2 * p - d) / p) / d) ** (p / d)


def Lambda1(theta: float, d: int, p: float, kappa: float = 0.5, sigma: Optional[float] = None) -> float:
    """Quenched upper-tail constant for diffusion coefficient ``kappa``."""
    _check_sub2(d, p)
    if not (theta > 0 and kappa > 0):
        raise DomainError("theta and kappa must be positive")
    s = sigma_dp(d, p) if sigma is None else sigma
    return (0.5 * (p / (2 * kappa)) ** (p / (2 - p)) * (2 - p) ** ((4 - p) / (2 - p))
            * (d * theta * s / (2 + d - p)) ** (2 / (2 - p)))


PRINTED_D3P2_CONSTANT = 3.0 * 12.0 ** (1.0 / 3.0) * math.pi


def printed_constant_comparison(theta: float = 1.0) -> Dict[str, object]:
    """Lower-tail constant at ``d=3, p=2`` from the general formula vs the printed value."""
    general = Lambda0(theta, 3, 2.0)
    printed = PRINTED_D3P2_CONSTANT * theta
    rel = abs(general - printed) / printed
    return {
        "theta": theta,
        "general_formula": general,
        "general_closed_form": 144.0 ** (1.0 / 3.0) * math.pi * theta,
        "printed_value": printed,
        "ratio_printed_over_general": printed / general,
        "ratio_cube": (printed / general) ** 3,
        "flag": "DISCREPANCY" if rel > 1e-12 else "CONSISTENT",
    }


@dataclass
class ConstantsReport:
    d: int
    p: float
    sigma: float
    rho: float
    M1: float
    meshes: List[int]
    per_mesh: List[float]
    order: Optional[float]
    trend: List[Tuple[float, float]]
    residuals: Dict[str, float]

    def to_dict(self) -> dict:
        return {
            "d": self.d, "p": self.p, "sigma": self.sigma, "rho": self.rho, "M1": self.M1,
            "meshes": self.meshes, "per_mesh_rho": self.per_mesh, "richardson_order": self.order,
            "domain_trend": [{"radius": r, "rho": v} for r, v in self.trend],
            "residuals": self.residuals,
        }


def constant_identity_residuals(rho: float, p: float) -> Dict[str, float]:
    sigma = sigma_from_rho(rho, p)
    M1 = M_from_sigma(1.0, sigma, p)
    res = {
        "M_scaling": max(abs(M_from_sigma(lam, sigma, p) / (lam ** (2 / (2 - p)) * M1) - 1)
                         for lam in (0.5, 2.0, 3.7)),
        "M_closed_form_at_1": abs(M1 - (2 - p) / 2 * p ** (p / (2 - p)) * sigma ** (2 / (2 - p))) / M1,
        "rho_sigma": abs(rho_from_sigma(sigma, p) - rho) / rho,
        "M_at_inverse_rho": abs(M_from_sigma(1.0 / rho, sigma, p) - 1.0),
    }
    return res


def constants_report(d: int, p: float, **kw) -> ConstantsReport:
    r = rho_dp(d, p, **kw)
    sigma = sigma_from_rho(r.value, p)
    return ConstantsReport(d, p, sigma, r.value, M_from_sigma(1.0, sigma, p), r.meshes,
                           r.per_mesh, r.order, r.trend, constant_identity_residuals(r.value, p))


def sigma_ratio_radial(d: int, p: float, nodes: np.ndarray, v: np.ndarray, sigma: float) -> float:
    """``int g^2|x|^-p / (sigma ||g||^{2-p} ||grad g||^p)`` for a radial P1 profile."""
    full = np.append(nodes, nodes[-1] + (nodes[-1] - nodes[-2]))
    N, M, K = radial_fem_matrices(full, d, p)
    a2, b2 = float(v @ (M @ v)), float(v @ (K @ v))
    return float(v @ (N @ v)) / (sigma * a2 ** ((2 - p) / 2) * b2 ** (p / 2))


def m_lattice_1d(lam: float, p: float, L: float, h: float) -> float:
    """``sup {lam int g^2|x|^-p - 1/2||g'||^2 : ||g|| = 1}`` on a lattice over ``(-L, L)``."""
    spec = LatticeOperatorSpec.box((-L,), (L,), h)
    return principal_eigenvalue(spec.with_xi(riesz_lattice_potential((-L,), (L,), h, p, lam)))


# ---------------------------------------------------------------------------
# sup of a homogeneous functional over the two normalizations


@dataclass
class QuadraticFunctional:
    """``Z(g^2) = v^T A v`` for lattice values ``v``; homogeneous of degree one in ``g^2``."""

    A: np.ndarray

    def __call__(self, v):
        Av = self.A @ v
        return float(v @ Av), 2.0 * Av


def potential_functional(V: np.ndarray, h: float, d: int = 1) -> QuadraticFunctional:
    """``Z(g^2) = int V g^2`` on the lattice."""
    return QuadraticFunctional(np.diag(h**d * np.asarray(V, float).ravel()))


@dataclass
class ThresholdEquivalence:
    sup_F: float
    sup_G: float
    pred_F: bool
    pred_G: bool
    agree: bool
    tie: bool
    converged: bool


def _ratio_sup(num: Callable, den: np.ndarray, n: int, starts: np.ndarray) -> Tuple[float, bool]:
    """``max num(v)/(v^T den v)`` by L-BFGS from several starts."""
    best, ok = -math.inf, True

    def f(v):
        a, ga = num(v)
        dv = den @ v
        b = float(v @ dv)
        r = a / b
        return -r, -(ga - 2.0 * r * dv) / b

    for v0 in starts:
        res = optimize.minimize(f, v0, jac=True, method="L-BFGS-B",
                                options={"maxiter": 5000, "gtol": 1e-12, "ftol": 1e-15})
        ok = ok and (res.success or "ABNORMAL" in str(res.message))
        best = max(best, -res.fun)
    return best, ok


def threshold_equivalence_check(Z: Callable, lo: Sequence[float], hi: Sequence[float], h: float,
                                seed: int = 0, n_random: int = 8, tie_tol: float = 1e-9) -> ThresholdEquivalence:
    """Compare ``sup_F {Z - 1/2||grad g||^2} > 1`` with ``sup_G Z > 1`` on a lattice.

    ``Z(v)`` returns ``(value, gradient)`` for interior-node values ``v``.
    """
    spec = LatticeOperatorSpec.box(lo, hi, h)
    d = spec.d
    n = int(np.prod(spec.shape))
    M = h**d * np.eye(n)
    K = h**d * neg_laplacian(spec.shape, h).toarray()
    gen = np.random.default_rng(seed)
    X = spec.nodes().reshape(n, d)
    c = 0.5 * (np.asarray(lo) + np.asarray(hi))
    gauss = np.exp(-np.sum((X - c) ** 2, axis=1) / (0.25 * np.min(np.subtract(hi, lo)) ** 2))
    starts = np.vstack([gen.standard_normal((n_random, n)), gauss[None, :]])

    def zf(v):
        a, ga = Z(v)
        kv = K @ v
        return a - 0.5 * float(v @ kv), ga - kv

    sup_F, okF = _ratio_sup(zf, M, n, starts)
    sup_G, okG = _ratio_sup(Z, M + 0.5 * K, n, starts)
    pF, pG = sup_F > 1.0, sup_G > 1.0
    tie = abs(sup_F - 1.0) < tie_tol or abs(sup_G - 1.0) < tie_tol
    return ThresholdEquivalence(sup_F, sup_G, pF, pG, pF == pG, tie, okF and okG)


def threshold_equivalence_exact(A: np.ndarray, lo, hi, h) -> Tuple[float, float]:
    """Both suprema for a quadratic ``Z`` as generalized eigenvalues (cross-check)."""
    spec = LatticeOperatorSpec.box(lo, hi, h)
    d = spec.d
    n = int(np.prod(spec.shape))
    M = h**d * np.eye(n)
    K = h**d * neg_laplacian(spec.shape, h).toarray()
    sF = linalg.eigh(A - 0.5 * K, M, eigvals_only=True)[-1]
    sG = linalg.eigh(A, M + 0.5 * K, eigvals_only=True)[-1]
    return float(sF), float(sG)
