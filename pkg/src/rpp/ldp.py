"""Large-deviation ingredients at desk scale.

Exact moment-generating identities for the far-kernel potential, exact
Poisson count tail rates, Chebyshev bounds for the compensated functional
``zeta_eps`` against Monte Carlo frequencies, and the law of the maximal
cell count.
"""

from __future__ import annotations

import io
import csv
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from . import rng as _rng
from .cutoff import KernelSpec, alpha, kernel_mass_exact
from .errors import DomainError
from .field import (RadialFunction, Window, campbell_log_mgf, max_count_log_tail, max_count_median,
                    poisson_log_tail, sample_field)
from .potential import GridFunction, cell_weights_1d
from .specfun import graded_gauss_legendre, psi, unit_ball_volume
from .varcalc import rate_I_D

DEFAULT_EPS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


@dataclass(frozen=True)
class ScalingSchedule:
    eps: Tuple[float, ...] = DEFAULT_EPS

    def __post_init__(self):
        e = tuple(float(x) for x in self.eps)
        object.__setattr__(self, "eps", e)
        if not e or any(not 0 < x < 1 for x in e):
            raise DomainError("every eps must lie in (0, 1)")
        if any(b >= a for a, b in zip(e[:-1], e[1:])):
            raise DomainError("eps must be strictly decreasing")

    @staticmethod
    def deviation_scale(eps: float, d: int, p: float) -> float:
        """``eps^{-(2-p)/d}``."""
        return eps ** (-(2 - p) / d)

    @staticmethod
    def l(eps: float, d: int, p: float) -> float:
        """``eps^{-(2-p)/d} log(1/eps)``."""
        return eps ** (-(2 - p) / d) * math.log(1 / eps)

    @staticmethod
    def mgf_exponent(eps: float, d: int, p: float) -> float:
        """``eps^{-p(2+d-p)/(d(d-p))}``."""
        return eps ** (-p * (2 + d - p) / (d * (d - p)))

    @staticmethod
    def ldp_speed(eps: float, d: int, p: float) -> float:
        """``eps^{-2/(d-p)}``."""
        return eps ** (-2 / (d - p))


@dataclass
class TailReport:
    name: str
    eps: List[float]
    scale: List[float]
    values: List[float]
    target: float
    gaps: List[float]
    extra: Dict[str, object] = field(default_factory=dict)

    def rows(self):
        return [dict(eps=e, scale=s, normalized=v, target=self.target, gap=g)
                for e, s, v, g in zip(self.eps, self.scale, self.values, self.gaps)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "scale", "normalized", "target", "gap"])
        for r in self.rows():
            w.writerow([_fmt(r[k]) for k in ("eps", "scale", "normalized", "target", "gap")])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return dict(name=self.name, eps=self.eps, scale=self.scale, values=self.values,
                    target=self.target, gaps=self.gaps, extra=self.extra)


def _fmt(x) -> str:
    return "%.17g" % x if isinstance(x, float) else str(x)


def _rel_gap(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1.0)


# ---------------------------------------------------------------------------
# far-kernel MGF identity


def far_limit_integral(theta: float, a: float, d: int, p: float, sign: int = -1) -> float:
    """``int psi(theta (1 - alpha(|x|/a)) |x|^-p) dx`` (``Psi`` for ``sign = +1``)."""
    f = RadialFunction(d, lambda r: (1.0 - alpha(r / a)) * r ** (-p) if r > 0 else 0.0,
                       math.inf, (a, 3 * a), None)
    return campbell_log_mgf(f, 1.0, sign, theta, tail_exponent=2 * p)


def far_log_mgf(theta: float, a: float, d: int, p: float, eps: float, sign: int = -1) -> float:
    """``eps^{2/(d-p)} log E exp{sign theta eps^{-kappa} V^(0)(0)}``, computed in the original variables."""
    spec = KernelSpec(d, p, "far", a, eps, 0)
    lam = theta * ScalingSchedule.mgf_exponent(eps, d, p)
    return campbell_log_mgf(spec, eps, sign, lam) / ScalingSchedule.ldp_speed(eps, d, p)


def mgf_limit_check(theta: float, a: float, d: int, p: float,
                    schedule: ScalingSchedule = ScalingSchedule(), sign: int = -1) -> TailReport:
    if not (d / 2 < p < d):
        raise DomainError(f"need d/2 < p < d, got d={d}, p={p}")
    rhs = far_limit_integral(theta, a, d, p, sign)
    vals = [far_log_mgf(theta, a, d, p, e, sign) for e in schedule.eps]
    return TailReport("mgf-limit" if sign < 0 else "mgf-limit-upper", list(schedule.eps),
                      [ScalingSchedule.mgf_exponent(e, d, p) for e in schedule.eps], vals, rhs,
                      [_rel_gap(v, rhs) for v in vals],
                      {"theta": theta, "a": a, "d": d, "p": p, "sign": sign})


# ---------------------------------------------------------------------------
# Poisson count rate


def count_rate_check(gamma: float, d: int, p: float, schedule: ScalingSchedule = ScalingSchedule(),
                     delta: Optional[float] = None) -> TailReport:
    """``log P{Z >= ceil(gamma eps^{-(2-p)/d})} / l(eps)`` with ``Z ~ Poisson(omega_d eps delta^d)``.

    ``delta`` defaults to the radius with ``omega_d delta^d = 1/e``: with
    ``mu = c eps`` the normalized log-tail is
    ``target + (1 - log(1/c)) / log(1/eps) + O(log k / (k log(1/eps)))``, and
    ``c = 1/e`` removes the first correction.  The limit does not depend on ``c``.
    """
    if not 0 < p < min(2, d):
        raise DomainError(f"need 0 < p < min(2, d), got d={d}, p={p}")
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    wd = unit_ball_volume(d)
    if delta is None:
        delta = (math.exp(-1.0) / wd) ** (1 / d)
    target = -(2 + d - p) * gamma / d
    vals, ks, scales = [], [], []
    for e in schedule.eps:
        s = ScalingSchedule.deviation_scale(e, d, p)
        k = math.ceil(gamma * s * (1 - 1e-12))  # guard integer thresholds against rounding
        ks.append(k)
        scales.append(s)
        vals.append(poisson_log_tail(wd * e * delta**d, k) / ScalingSchedule.l(e, d, p))
    gaps = [abs(v - target) / abs(target) for v in vals]
    return TailReport("count-rate", list(schedule.eps), scales, vals, target, gaps,
                      {"gamma": gamma, "d": d, "p": p, "delta": delta, "k": ks})


def gaps_monotone(gaps: Sequence[float], allowed_breaks: int = 1) -> bool:
    return sum(b > a for a, b in zip(gaps[:-1], gaps[1:])) <= allowed_breaks


# ---------------------------------------------------------------------------
# zeta tails (d = 1)


def default_dictionary(h: float = 1 / 32, n: int = 32, seed: int = 0) -> List[GridFunction]:
    """Hermite-type bumps and Gaussians on ``(-1, 1)``, normalized in the Sobolev norm."""
    from numpy.polynomial.hermite_e import hermeval

    gen = _rng.stream(seed, _rng.name_key("dictionary"))
    out = []
    n_herm = n // 2
    for j in range(n_herm):
        order, width = j % 8, (0.3, 0.5)[j // 8 % 2]

        def fn(x, order=order, width=width):
            u = x[..., 0] / width
            c = np.zeros(order + 1)
            c[-1] = 1.0
            return hermeval(u, c) * np.exp(-u * u / 2) * (1 - x[..., 0] ** 2)

        out.append(fn)
    for _ in range(n - n_herm):
        c, w = gen.uniform(-0.6, 0.6), gen.uniform(0.15, 0.5)
        out.append(lambda x, c=c, w=w: np.exp(-((x[..., 0] - c) ** 2) / (2 * w * w)) * (1 - x[..., 0] ** 2))
    return [GridFunction.from_function(f, (-1.0,), (1.0,), h).normalized_sobolev() for f in out]


class ZetaFunctional:
    """``zeta_eps(g)`` for a family of 1-d grid functions sharing one grid."""

    def __init__(self, funcs: Sequence[GridFunction], p: float, R: float):
        if not funcs:
            raise DomainError("empty dictionary")
        g0 = funcs[0]
        if g0.d != 1 or any(g.d != 1 or g.lo != g0.lo or g.h != g0.h or g.values.shape != g0.values.shape
                            for g in funcs):
            raise DomainError("dictionary functions must share one 1-d grid")
        for g in funcs:
            if abs(g.sobolev_norm2() - 1) > 1e-9:
                raise DomainError("dictionary functions must be normalized in the Sobolev norm")
        self.kernel = KernelSpec(1, p, "full", radius=R)
        self.h = g0.h
        self.centers = g0.nodes().reshape(-1)
        self.sq = np.stack([g.values.ravel() ** 2 for g in funcs], axis=1)
        self.norm2 = self.h * self.sq.sum(axis=0)
        self.mass = kernel_mass_exact(self.kernel)
        self.lo = self.centers[0] - self.h / 2 - R
        self.hi = self.centers[-1] + self.h / 2 + R

    def F(self, y) -> np.ndarray:
        """``int g^2(x) k_R(y - x) dx`` for every function, shape ``(len(y), n_funcs)``."""
        return cell_weights_1d(self.kernel, self.centers, self.h, np.asarray(y, float)) @ self.sq

    def values(self, points: np.ndarray, eps: float) -> np.ndarray:
        pts = np.asarray(points, float).reshape(-1)
        pts = pts[(pts > self.lo) & (pts < self.hi)]
        acc = self.F(pts).sum(axis=0) if pts.size else np.zeros(self.sq.shape[1])
        return acc - eps * self.norm2 * self.mass

    def _nodes(self):
        e = self.centers[0] - self.h / 2 + self.h * np.arange(self.centers.size + 1)
        R = self.kernel.radius
        brk = np.unique(np.concatenate([e, e - R, e + R]))
        brk = brk[(brk >= self.lo) & (brk <= self.hi)]
        ys, ws = zip(*(graded_gauss_legendre(a, b, 16, 3.0) for a, b in zip(brk[:-1], brk[1:])))
        return np.concatenate(ys), np.concatenate(ws)

    def log_mgf_lower(self, lam: float, eps: float) -> np.ndarray:
        """``log E exp{-lam zeta_eps(g)} = eps int psi(lam F)`` for every function."""
        y, w = self._nodes()
        return eps * (w @ psi(lam * self.F(y)))

    def chebyshev(self, level: float, eps: float) -> np.ndarray:
        """``min_lam [-lam level + log E exp{-lam zeta}]`` bounding ``log P{zeta <= -level}``."""
        y, w = self._nodes()
        Fy = self.F(y)
        out = np.empty(Fy.shape[1])
        for j in range(Fy.shape[1]):
            f = Fy[:, j]
            cap = eps * float(w @ f)  # largest possible value of -zeta
            if level >= cap:
                out[j] = -math.inf
                continue

            def deriv(lam):
                return -level + eps * float(w @ (f * -np.expm1(-lam * f)))

            hi = 1.0
            while deriv(hi) < 0:
                hi *= 2
            lam = brentq(deriv, 0.0, hi, xtol=1e-12)
            out[j] = -lam * level + eps * float(w @ psi(lam * f))
        return out


def zeta_tail_experiment(gamma: float, p: float, funcs: Sequence[GridFunction], n_fields: int,
                         schedule: ScalingSchedule, seed: int, R: float = 20.0, margin: float = 4.0,
                         threads: int = 1, chunk: int = 500) -> TailReport:
    """Empirical ``P{min_g zeta_eps(g) <= -gamma eps^{-(2-p)}}`` in ``d = 1`` with Chebyshev bounds."""
    if not 0.5 < p < 1:
        raise DomainError("the zeta experiment is implemented for d = 1, 1/2 < p < 1")
    zf = ZetaFunctional(funcs, p, R)
    win = Window.box([zf.lo], [zf.hi])
    target = -rate_I_D(gamma, 1, p, (-1.0,), (1.0,))
    vals, scales, gaps, per_eps = [], [], [], []
    violations, inconclusive = 0, False
    for ie, e in enumerate(schedule.eps):
        s = ScalingSchedule.deviation_scale(e, 1, p)
        level = gamma * s

        def work(j, m, e=e, ie=ie):
            hits = np.zeros((m, len(funcs)), bool)
            for i in range(m):
                smp = sample_field(win, e, seed, stream_index=ie * 10_000_000 + j * chunk + i)
                hits[i] = zf.values(smp.points, e) <= -level
            return hits

        hits = np.concatenate(_rng.map_chunks(work, n_fields, chunk, threads), axis=0)
        freq_g = hits.mean(axis=0)
        freq_inf = float(hits.any(axis=1).mean())
        cheb = zf.chebyshev(level, e)
        bound = np.exp(cheb)
        se = np.sqrt(np.maximum(bound * (1 - bound), 1.0 / n_fields) / n_fields)
        viol = int(np.sum(freq_g - bound > margin * se))
        violations += viol
        speed = ScalingSchedule.ldp_speed(e, 1, p)
        norm = math.log(freq_inf) / speed if freq_inf > 0 else -math.inf
        if freq_inf == 0:
            inconclusive = True
        vals.append(norm)
        scales.append(s)
        gaps.append(abs(norm - target) / abs(target) if math.isfinite(norm) else math.inf)
        per_eps.append({"eps": e, "events": int(hits.any(axis=1).sum()), "freq_inf": freq_inf,
                        "freq_max_g": float(freq_g.max()), "chebyshev_log": [float(c) for c in cheb],
                        "violations": viol})
    return TailReport("zeta-tail", list(schedule.eps), scales, vals, target, gaps,
                      {"gamma": gamma, "p": p, "R": R, "n_fields": n_fields, "violations": violations,
                       "inconclusive": inconclusive, "per_eps": per_eps})


# ---------------------------------------------------------------------------
# maximal cell counts


def max_count_mean(n: float, mu: float, k_max: int = 10_000) -> float:
    """``E max`` of ``n`` independent ``Poisson(mu)`` counts, ``sum_k P{max >= k}``."""
    tot = 0.0
    for k in range(1, k_max):
        term = math.exp(max_count_log_tail(n, mu, k))
        tot += term
        if term < 1e-17 * max(tot, 1.0):
            break
    return tot


@dataclass
class MaxCountRow:
    t: float
    n_cells: float
    median: int
    normalized: float


def max_count_law_table(t_values: Sequence[float], delta: float, d: int, mc_t: float = 1e3,
                        mc_cells: int = 1_000_000, mc_reps: int = 100, seed: int = 0) -> Dict[str, object]:
    """Exact medians of the maximal count over ``t^d`` cells, normalized by ``log log t / log t``."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    mu = unit_ball_volume(d) * delta**d
    rows = []
    for t in t_values:
        if not t > math.e:
            raise DomainError("need t > e so that log log t > 0")
        n = float(t) ** d
        med = max_count_median(n, mu)
        rows.append(MaxCountRow(float(t), n, med, math.log(math.log(t)) / math.log(t) * med))
    # spot check at a reduced cell count: exact mean of the max vs Monte Carlo
    gen = _rng.stream(seed, _rng.name_key("maxcount"))
    maxima = np.array([gen.poisson(mu, mc_cells).max() for _ in range(mc_reps)], float)
    exact = max_count_mean(mc_cells, mu)
    se = maxima.std(ddof=1) / math.sqrt(mc_reps)
    z = (maxima.mean() - exact) / se if se > 0 else (0.0 if maxima.mean() == exact else math.inf)
    return {"mu": mu, "d": d, "delta": delta, "rows": [r.__dict__ for r in rows],
            "spot_check": {"t": mc_t, "cells_full": mc_t**d, "cells_used": mc_cells,
                           "exact_mean": exact, "mc_mean": float(maxima.mean()), "mc_se": float(se),
                           "z": float(z)}}
