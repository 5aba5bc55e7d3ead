"""Pointwise bounds at individual grid points.

Checks the value-by-derivatives estimates underlying the interpolation
machinery: the Riesz-plus-average bound on R^l |D^l u(x)|, its
difference-kernel (fractional) counterpart, and the maximal-function
interpolation bound with its exponent bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Domain, GridFunction, ball_spans, derivative_field
from .seminorms import (INF, RadiusGrid, campanato_seminorm, localized_maximal,
                        gagliardo_pointwise, riesz_potential,
                        riesz_difference_potential)
from . import _kernels

__all__ = [
    "PointwiseCase",
    "PointwiseReport",
    "beta_exponent",
    "beta_range",
    "beta_in_range",
    "lemma_ratio",
    "fractional_lemma_ratio",
    "interpolation_local_ratio",
    "lemma_sweep",
    "sweep_points",
]


@dataclass(frozen=True)
class PointwiseCase:
    x: tuple
    R: float
    k: int
    l: int
    sigma: float | None = None
    p: float | None = None

    def __post_init__(self):
        if not 0 <= self.l < self.k:
            raise ValueError("need 0 <= l < k")


@dataclass
class PointwiseReport:
    lhs: float
    rhs_terms: dict
    ratio: float
    x: tuple
    R: float | None = None
    beta: float | None = None
    flags: list = field(default_factory=list)

    @property
    def rhs(self) -> float:
        return float(sum(self.rhs_terms.values()))

    def to_record(self, lemma: str, params: dict) -> dict:
        return {"lemma": lemma, "params": params, "x": list(self.x),
                "R": self.R, "lhs": self.lhs, "rhs_terms": self.rhs_terms,
                "ratio": self.ratio, "beta": self.beta, "flags": self.flags}


def _ratio(lhs: float, rhs: float, flags: list) -> float:
    if lhs == 0.0:
        return 0.0
    if rhs == 0.0:
        flags.append("rhs-zero-with-positive-lhs")
        return math.inf
    return lhs / rhs


def _ball_mean_abs(u: GridFunction, x, R: float) -> float:
    """Plain ball average of |u| at one point (kernel-consistent order)."""
    dom = u.domain
    g = np.abs(u.values).reshape(dom.shape)
    spans = ball_spans(dom.dim, R / dom.spacing)
    K = _kernels.impl
    if dom.dim == 1:
        s, m = K.ball_sum_point_1d(g, spans, int(x[0]))
    else:
        s, m = K.ball_sum_point_2d(g, spans, int(x[0]), int(x[1]))
    return float(s / m)


def _point_index(u: GridFunction, x) -> tuple:
    idx = tuple(int(i) for i in np.atleast_1d(x))
    n = u.domain.points_per_axis
    if len(idx) != u.domain.dim or any(not 0 <= i < n for i in idx):
        raise ValueError(f"bad grid point {x}")
    return idx


def _flat(u: GridFunction, idx: tuple) -> int:
    if u.domain.dim == 1:
        return idx[0]
    return idx[0] * u.domain.points_per_axis + idx[1]


def lemma_ratio(u: GridFunction, k: int, l: int, x, R: float,
                fields: dict | None = None) -> PointwiseReport:
    """Pointwise bound R^l |D^l u(x)| <= C (Riesz term + ball average).

    The Riesz integral runs over B_R(x) around the evaluation point (the
    ball that the underlying Taylor argument actually integrates over).
    """
    if not 0 <= l < k:
        raise ValueError("need 0 <= l < k")
    idx = _point_index(u, x)
    fields = fields if fields is not None else {}
    fk = fields.get(k) or derivative_field(u, k)
    fl = fields.get(l) or derivative_field(u, l)
    lhs = (R ** l) * float(fl.magnitudes[_flat(u, idx)])
    riesz = riesz_potential(fk, idx, R)
    avg = _ball_mean_abs(u, idx, R)
    flags: list = []
    ratio = _ratio(lhs, riesz + avg, flags)
    return PointwiseReport(lhs, {"riesz": riesz, "average": avg}, ratio,
                           idx, R, flags=flags)


def fractional_lemma_ratio(u: GridFunction, k: int, l: int, x, R: float,
                           fields: dict | None = None) -> PointwiseReport:
    """Difference-kernel bound |D^l u(x)| <= C (difference Riesz + average)."""
    if not 0 <= l < k:
        raise ValueError("need 0 <= l < k")
    idx = _point_index(u, x)
    fields = fields if fields is not None else {}
    fk = fields.get(k) or derivative_field(u, k)
    fl = fields.get(l) or derivative_field(u, l)
    lhs = float(fl.magnitudes[_flat(u, idx)])
    riesz = riesz_difference_potential(fk, idx, R)
    avg = _ball_mean_abs(u, idx, R)
    flags: list = []
    ratio = _ratio(lhs, riesz + avg, flags)
    return PointwiseReport(lhs, {"riesz_diff": riesz, "average": avg}, ratio,
                           idx, R, flags=flags)


# ---------------------------------------------------------------------------
# maximal-function interpolation bound

def beta_exponent(p: float, q: float, k: int, l: int, lam: float,
                  sigma: float | None = None) -> float:
    """beta = p (k [+ sigma] + lam) / q - lam - l."""
    s = sigma if sigma is not None else 0.0
    return p * (k + s + lam) / q - lam - l


def beta_range(k: int, l: int, lam: float, sigma: float | None = None) -> tuple:
    s = sigma if sigma is not None else 0.0
    return (-lam - l, k + s - l)


def beta_in_range(p, q, k, l, lam, sigma=None) -> bool:
    beta = beta_exponent(p, q, k, l, lam, sigma)
    lo, hi = beta_range(k, l, lam, sigma)
    return lo <= beta <= hi


def interpolation_local_ratio(u: GridFunction, case, x,
                              fields: dict | None = None,
                              campanato_value: float | None = None,
                              center_grid=None) -> PointwiseReport:
    """Pointwise interpolation bound with the maximal (or fractional) term.

    lhs = rho^l |D^l u(x)|;
    rhs = (rho^k M(|D^k u|)(x) + lhs)^e1 * (rho^-lam * campanato)^e2 with
    e1 = (lam+l+beta)/(lam+k), e2 = (k-l-beta)/(lam+k).  When case.sigma
    is set, the maximal term becomes rho^(k+sigma) D_(sigma,p)(D^k u)(x)
    and all exponents use lam+k+sigma.
    """
    k, l, p, q, lam = case.k, case.l, case.p, case.q, case.lam
    sigma = case.sigma
    rho = case.rho
    if not math.isfinite(rho):
        raise ValueError("interpolation_local_ratio needs finite rho")
    beta = beta_exponent(p, q, k, l, lam, sigma)
    lo, hi = beta_range(k, l, lam, sigma)
    if not lo - 1e-12 <= beta <= hi + 1e-12:
        raise ValueError(
            f"beta={beta:g} outside [{lo:g}, {hi:g}] "
            f"(violated bound: {'lower -lam-l' if beta < lo else 'upper k-l'})")
    idx = _point_index(u, x)
    fields = fields if fields is not None else {}
    fk = fields.get(k) or derivative_field(u, k)
    fl = fields.get(l) or derivative_field(u, l)
    lhs = (rho ** l) * float(fl.magnitudes[_flat(u, idx)])
    if sigma is None:
        strength = (rho ** k) * localized_maximal(fk, INF, idx)
        denom = lam + k
        key = "maximal"
    else:
        strength = (rho ** (k + sigma)) * gagliardo_pointwise(fk, sigma, p, idx)
        denom = lam + k + sigma
        key = "fractional_pointwise"
    camp = campanato_value
    if camp is None:
        camp = campanato_seminorm(u, 1, lam, l, rho, center_grid=center_grid)
    e1 = (lam + l + beta) / denom
    e2 = (denom - lam - l - beta) / denom
    base1 = strength + lhs
    base2 = (rho ** (-lam)) * camp
    rhs = (base1 ** e1) * (base2 ** e2)
    flags: list = []
    if lhs > 0.0 and rhs == 0.0:
        flags.append("rhs-zero-with-positive-lhs")
        ratio = math.inf
    else:
        ratio = 0.0 if lhs == 0.0 else lhs / rhs
    return PointwiseReport(
        lhs,
        {key: strength, "campanato_factor": base2, "rhs": rhs},
        ratio, idx, rho, beta=beta, flags=flags)


# ---------------------------------------------------------------------------
# seeded sweeps

def sweep_points(domain: Domain, n_points: int, seed: int) -> list:
    """n_points grid indices, sampled in physical support-box coordinates.

    Sampling in physical coordinates keeps the point set comparable across
    resolutions of the same box.
    """
    rng = np.random.default_rng(seed)
    bound = domain.support_bound
    pts = rng.uniform(-bound, bound, size=(n_points, domain.dim))
    return [domain.index_of(p) for p in pts]


def lemma_sweep(u: GridFunction, k: int, l: int, seed: int,
                n_points: int = 50, radius_grid: RadiusGrid | None = None,
                fractional: bool = False) -> dict:
    """Max lemma ratio over seeded points x radius grid; returns summary."""
    rgrid = radius_grid or RadiusGrid.build(u.domain, INF)
    fields = {k: derivative_field(u, k), l: derivative_field(u, l)}
    fn = fractional_lemma_ratio if fractional else lemma_ratio
    best = 0.0
    arg = None
    flagged = 0
    for idx in sweep_points(u.domain, n_points, seed):
        for R in rgrid.radii:
            rep = fn(u, k, l, idx, R, fields)
            if rep.flags:
                flagged += 1
            if rep.ratio > best:
                best = rep.ratio
                arg = (idx, R)
    return {"max_ratio": best, "argmax": arg, "n_points": n_points,
            "radii": rgrid.count, "flagged": flagged}
