"""Best polynomial approximation on a discrete ball.

The inner infimum of the Campanato-type seminorms: minimize the discrete
L^q error of a polynomial of degree <= d over the members of a ball, in a
locally centered-and-scaled monomial basis.  q=2 is an exact least-squares
solve; q=1 uses iteratively reweighted least squares and returns an upper
bound on the true L^1 infimum within solver tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .grid import Ball, GridFunction, GridError, ball_average

__all__ = [
    "PolyBasis",
    "FitResult",
    "best_polynomial",
    "residual_monotonicity_check",
    "MONOTONICITY_SLACK",
]

log = logging.getLogger(__name__)

MAX_DEGREE = 3
MONOTONICITY_SLACK = 1e-7   # relative, covers IRLS solver tolerance


class PolyFitError(ValueError):
    pass


@lru_cache(maxsize=None)
def _graded_exponents(dim: int, degree: int) -> np.ndarray:
    """Monomial exponents of degree <= degree, graded-lexicographic.

    degree -1 encodes the trivial space {0}: an empty basis.
    """
    if degree < 0:
        return np.zeros((0, dim), dtype=np.int64)
    rows = []
    if dim == 1:
        rows = [(d,) for d in range(degree + 1)]
    else:
        for total in range(degree + 1):
            for j in range(total + 1):
                rows.append((total - j, j))
    return np.array(rows, dtype=np.int64)


@dataclass(frozen=True)
class PolyBasis:
    """Polynomials of degree <= degree_bound on R^dim; -1 means {0}."""

    dim: int
    degree_bound: int

    def __post_init__(self):
        if self.degree_bound < -1 or self.degree_bound > MAX_DEGREE:
            raise PolyFitError(
                f"degree_bound must be in -1..{MAX_DEGREE}, got {self.degree_bound}")
        if self.dim not in (1, 2):
            raise PolyFitError("dim must be 1 or 2")

    @property
    def exponents(self) -> np.ndarray:
        return _graded_exponents(self.dim, self.degree_bound)

    @property
    def size(self) -> int:
        return self.exponents.shape[0]


@dataclass(frozen=True)
class FitResult:
    """Outcome of one per-ball fit."""

    coefficients: np.ndarray
    residual: float            # (mean |u - P|^q over the ball)^(1/q)
    iterations: int
    converged: bool
    rank_deficient: bool = False


def best_polynomial(u, ball: Ball, degree_bound: int, q,
                    *, basis_scale: float | None = None) -> FitResult:
    """Best degree <= d polynomial fit of u on a ball in discrete L^q.

    u may be a GridFunction or a flat/array of values over the ball's
    domain.  q must be 1 or 2.  basis_scale overrides the coordinate
    scaling (default: the ball radius); it changes coefficients but not
    the residual.
    """
    if q not in (1, 2):
        raise PolyFitError(f"q must be 1 or 2, got {q}")
    dom = ball.domain
    basis = PolyBasis(dom.dim, degree_bound)
    vals_grid = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    if degree_bound == -1:
        resid = ball_average(vals_grid, ball, q)
        return FitResult(np.zeros(0), resid, 0, True)
    m = ball.count
    if m < basis.size:
        raise PolyFitError(
            f"ball with {m} members cannot support a basis of size {basis.size}")
    flat = vals_grid.ravel()
    vals = flat[ball.member_flat()]
    scale = float(basis_scale) if basis_scale is not None else ball.radius
    center = np.asarray(ball.center_index, dtype=float)
    coords = (ball.member_indices - center) * (dom.spacing / scale)
    coef, residual, iters, conv, rank = _kernels.impl.poly_fit_members(
        coords, vals, basis.exponents, q)
    if rank:
        log.warning("rank-deficient fit at center %s r=%g d=%d: minimum-norm "
                    "solution used", ball.center_index, ball.radius, degree_bound)
    return FitResult(np.asarray(coef), float(residual), iters, conv, rank)


def residual_monotonicity_check(u, ball: Ball, d1: int, d2: int, q) -> bool:
    """Check residual(d2) <= residual(d1) + slack for d1 <= d2.

    Violations (possible only within IRLS solver tolerance) are logged
    with the ball identity.
    """
    if d1 > d2:
        raise PolyFitError("need d1 <= d2")
    r1 = best_polynomial(u, ball, d1, q).residual
    r2 = best_polynomial(u, ball, d2, q).residual
    scale = max(r1, r2, 1e-300)
    ok = r2 <= r1 + MONOTONICITY_SLACK * scale
    if not ok:
        log.warning("residual monotonicity violated at center %s r=%g: "
                    "d=%d -> %.17g, d=%d -> %.17g",
                    ball.center_index, ball.radius, d1, r1, d2, r2)
    return ok
