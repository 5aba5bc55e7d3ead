"""Scale-weighted seminorms and singular-kernel functionals on grid functions.

Every sup over (center x, radius r) is discretized by a CenterGrid (strided
lattice of grid points) and a RadiusGrid (geometric radii from 2h up to the
cutoff), approximating the continuum sup from below.  All evaluators share
one ball-membership convention, so cross-functional identities (degree-0
reduction, maximal domination, sandwich bounds) hold exactly in floating
point, not just approximately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels
from .grid import (Ball, DerivativeField, Domain, GridFunction, GridError,
                   ball_spans, derivative_field, lp_norm)

__all__ = [
    "RadiusGrid",
    "CenterGrid",
    "SupResult",
    "morrey_norm",
    "morrey_norm_detail",
    "campanato_seminorm",
    "campanato_seminorm_detail",
    "bmo_seminorm",
    "bmo_seminorm_detail",
    "maximal_function",
    "localized_maximal",
    "riesz_potential",
    "riesz_potential_radial",
    "sobolev_energy",
    "gagliardo_energy",
    "gagliardo_pointwise",
    "sup_volume_integral",
    "sup_single_radius_mean",
]

INF = math.inf

# strict sup over r < rho: the top grid radius is shaved by this factor
RHO_SHAVE = 1.0 - 1e-9
RADIUS_RATIO_STEP = math.sqrt(2.0)
MIN_RADIUS_COUNT = 8


@dataclass(frozen=True)
class RadiusGrid:
    """Geometric radii r_min = 2h .. r_max = min(rho, box diameter)."""

    radii: tuple
    rho: float

    def __post_init__(self):
        r = np.asarray(self.radii)
        if r.size == 0:
            raise GridError("empty radius grid")
        if np.any(np.diff(r) <= 0):
            raise GridError("radii must be strictly increasing")

    @property
    def count(self) -> int:
        return len(self.radii)

    @property
    def r_min(self) -> float:
        return self.radii[0]

    @property
    def r_max(self) -> float:
        return self.radii[-1]

    @staticmethod
    def build(domain: Domain, rho: float, count: int | None = None) -> "RadiusGrid":
        h = domain.spacing
        r_min = 2.0 * h
        r_max = domain.diameter
        if math.isfinite(rho):
            if rho < r_min:
                raise GridError(f"cutoff rho={rho:g} below smallest ball 2h={r_min:g}")
            r_max = min(rho * RHO_SHAVE, r_max)
        if r_max <= r_min:
            return RadiusGrid((r_min,), rho)
        if count is None:
            steps = math.ceil(math.log(r_max / r_min) / math.log(RADIUS_RATIO_STEP))
            count = max(MIN_RADIUS_COUNT, steps + 1)
        radii = np.geomspace(r_min, r_max, count)
        radii[0] = r_min
        radii[-1] = r_max
        return RadiusGrid(tuple(float(r) for r in radii), rho)


@dataclass(frozen=True)
class CenterGrid:
    """Ball centers: every stride-th grid point along each axis."""

    stride: int = 1

    def __post_init__(self):
        if self.stride < 1:
            raise GridError("stride must be >= 1")


@dataclass(frozen=True)
class SupResult:
    value: float
    argmax_center: tuple | None
    argmax_radius: float | None
    skipped: int = 0
    rank_deficient: int = 0
    stride: int = 1

    def to_record(self, functional: str, params: dict, domain: Domain) -> dict:
        return {
            "functional": functional,
            "params": params,
            "value": self.value,
            "argmax_center": list(self.argmax_center) if self.argmax_center else None,
            "argmax_radius": self.argmax_radius,
            "grid": {"N": domain.dim, "n": domain.points_per_axis,
                     "L": domain.half_width},
            "stride": self.stride,
            "skipped": self.skipped,
        }


@lru_cache(maxsize=512)
def _span_table(dim: int, cells: tuple):
    """(spans, ptr) covering all radii of a grid; 1-D ptr indexes rows."""
    tables = [ball_spans(dim, c) for c in cells]
    if dim == 1:
        spans = np.vstack(tables)
        ptr = np.arange(len(cells) + 1, dtype=np.int64)
        return spans, ptr
    ptr = np.zeros(len(cells) + 1, dtype=np.int64)
    for j, t in enumerate(tables):
        ptr[j + 1] = ptr[j] + t.shape[0]
    spans = np.vstack(tables)
    return spans, ptr


def _grid_tables(domain: Domain, rgrid: RadiusGrid):
    h = domain.spacing
    cells = tuple(r / h for r in rgrid.radii)
    spans, ptr = _span_table(domain.dim, cells)
    if domain.dim == 1:
        mmax = int(np.max(spans[:, 1] - spans[:, 0] + 1))
    else:
        lens = spans[:, 2] - spans[:, 1] + 1
        mmax = int(max(np.add.reduceat(lens, ptr[:-1])))
    mmax = min(mmax, domain.size)
    return spans, ptr, mmax


def _resolve(u: GridFunction, rho, radius_grid, center_grid):
    rgrid = radius_grid or RadiusGrid.build(u.domain, rho)
    cgrid = center_grid or CenterGrid()
    if math.isfinite(rho) and rgrid.r_max > rho:
        raise GridError("radius grid exceeds cutoff rho")
    return rgrid, cgrid


def _finish_sup(vals, argr, rgrid, stride, skipped=0, rank=0) -> SupResult:
    flat = np.asarray(vals).ravel()
    k = int(np.argmax(flat))
    if vals.ndim == 1:
        center = (k * stride,)
        aj = int(np.asarray(argr).ravel()[k])
    else:
        a, b = divmod(k, vals.shape[1])
        center = (a * stride, b * stride)
        aj = int(np.asarray(argr)[a, b])
    value = float(flat[k])
    radius = float(rgrid.radii[aj]) if aj >= 0 else None
    return SupResult(value, center, radius, skipped, rank, stride)


# ---------------------------------------------------------------------------
# Morrey

def morrey_norm_detail(u: GridFunction, q: float, lam: float, rho: float = INF,
                       radius_grid: RadiusGrid | None = None,
                       center_grid: CenterGrid | None = None) -> SupResult:
    """sup over centers and radii r < rho of r^lam * (L^q ball average)."""
    if q < 1:
        raise GridError("q must be >= 1")
    rgrid, cgrid = _resolve(u, rho, radius_grid, center_grid)
    dom = u.domain
    g = np.abs(u.values) if q == 1.0 else np.abs(u.values) ** q
    g = g.reshape(dom.shape)
    weights = np.array([r ** lam for r in rgrid.radii])
    spans, ptr, _ = _grid_tables(dom, rgrid)
    K = _kernels.impl
    if dom.dim == 1:
        vals, argr = K.sup_mean_pow_1d(g, spans, weights, 1.0 / q, cgrid.stride)
    else:
        vals, argr = K.sup_mean_pow_2d(g, spans, ptr, weights, 1.0 / q, cgrid.stride)
    return _finish_sup(vals, argr, rgrid, cgrid.stride)


def morrey_norm(u, q, lam, rho=INF, radius_grid=None, center_grid=None) -> float:
    return morrey_norm_detail(u, q, lam, rho, radius_grid, center_grid).value


# ---------------------------------------------------------------------------
# Campanato

def campanato_seminorm_detail(u: GridFunction, q: int, lam: float, degree: int,
                              rho: float = INF,
                              radius_grid: RadiusGrid | None = None,
                              center_grid: CenterGrid | None = None) -> SupResult:
    """sup of r^lam * (best P_{degree-1} fit residual in L^q) over balls.

    ``degree`` is the k of the scale: fits use polynomials of degree
    <= k - 1, and degree 0 reduces to the Morrey norm exactly (the fit
    space is {0}).  q must be 1 or 2; infeasible (ball, radius) pairs
    (fewer members than basis functions) are skipped and counted.
    """
    if q not in (1, 2):
        raise GridError("Campanato fits require q in {1, 2}")
    if degree < 0:
        raise GridError("degree must be >= 0")
    if degree == 0:
        return morrey_norm_detail(u, q, lam, rho, radius_grid, center_grid)
    from .polyfit import PolyBasis
    basis = PolyBasis(u.domain.dim, degree - 1)
    rgrid, cgrid = _resolve(u, rho, radius_grid, center_grid)
    dom = u.domain
    arr = u.values.reshape(dom.shape)
    weights = np.array([r ** lam for r in rgrid.radii])
    radii = np.asarray(rgrid.radii, dtype=float)
    spans, ptr, mmax = _grid_tables(dom, rgrid)
    K = _kernels.impl
    exps = basis.exponents
    if dom.dim == 1:
        vals, argr, skipped, rank = K.campanato_sup_1d(
            arr, dom.spacing, spans, radii, weights, cgrid.stride, exps,
            np.int64(q), np.int64(K.IRLS_MAX_ITER), np.int64(mmax))
    else:
        vals, argr, skipped, rank = K.campanato_sup_2d(
            arr, dom.spacing, spans, ptr, radii, weights, cgrid.stride, exps,
            np.int64(q), np.int64(K.IRLS_MAX_ITER), np.int64(mmax))
    return _finish_sup(vals, argr, rgrid, cgrid.stride, int(skipped), int(rank))


def campanato_seminorm(u, q, lam, degree, rho=INF, radius_grid=None,
                       center_grid=None) -> float:
    return campanato_seminorm_detail(u, q, lam, degree, rho, radius_grid,
                                     center_grid).value


# ---------------------------------------------------------------------------
# BMO

def bmo_seminorm_detail(u: GridFunction, rho: float = INF,
                        radius_grid: RadiusGrid | None = None,
                        center_grid: CenterGrid | None = None) -> SupResult:
    """sup over balls of the double average of |u(y) - u(z)|."""
    rgrid, cgrid = _resolve(u, rho, radius_grid, center_grid)
    dom = u.domain
    arr = u.values.reshape(dom.shape)
    spans, ptr, mmax = _grid_tables(dom, rgrid)
    K = _kernels.impl
    if dom.dim == 1:
        vals, argr = K.bmo_sup_1d(arr, spans, cgrid.stride, np.int64(mmax))
    else:
        vals, argr = K.bmo_sup_2d(arr, spans, ptr, cgrid.stride, np.int64(mmax))
    return _finish_sup(vals, argr, rgrid, cgrid.stride)


def bmo_seminorm(u, rho=INF, radius_grid=None, center_grid=None) -> float:
    return bmo_seminorm_detail(u, rho, radius_grid, center_grid).value


# ---------------------------------------------------------------------------
# maximal function

def _values_and_domain(f, domain):
    if isinstance(f, GridFunction):
        return f.values, f.domain
    if isinstance(f, DerivativeField):
        return f.magnitudes, f.domain
    if domain is None:
        raise GridError("domain required for raw arrays")
    return np.asarray(f, dtype=float).ravel(), domain


def maximal_function(f, domain: Domain | None = None,
                     radius_grid: RadiusGrid | None = None) -> np.ndarray:
    """M f at every grid point: max over radii of ball averages of |f|."""
    vals, dom = _values_and_domain(f, domain)
    rgrid = radius_grid or RadiusGrid.build(dom, INF)
    g = np.abs(vals).reshape(dom.shape)
    spans, ptr, _ = _grid_tables(dom, rgrid)
    K = _kernels.impl
    if dom.dim == 1:
        out = K.maximal_field_1d(g, spans)
    else:
        out = K.maximal_field_2d(g, spans, ptr)
    return np.asarray(out).ravel()


def localized_maximal(f, rho: float, x, domain: Domain | None = None,
                      radius_grid: RadiusGrid | None = None) -> float:
    """sup over r in [2h, rho) of ball averages of |f| at one point."""
    vals, dom = _values_and_domain(f, domain)
    rgrid = radius_grid or RadiusGrid.build(dom, rho)
    g = np.abs(vals).reshape(dom.shape)
    spans, ptr, _ = _grid_tables(dom, rgrid)
    idx = tuple(int(i) for i in np.atleast_1d(x))
    K = _kernels.impl
    if dom.dim == 1:
        return float(K.max_mean_point_1d(g, spans, idx[0]))
    return float(K.max_mean_point_2d(g, spans, ptr, idx[0], idx[1]))


# ---------------------------------------------------------------------------
# Riesz potential

@lru_cache(maxsize=512)
def _sorted_offsets(dim: int, radius_cells: float):
    """Nonzero ball offsets sorted by distance (then row-major).

    Sorting by distance makes the gathered sum exactly monotone under
    radius growth: a smaller radius' term sequence is a prefix of a
    larger one's.
    """
    spans = ball_spans(dim, radius_cells)
    if dim == 1:
        lo, hi = spans[0]
        offs = np.arange(lo, hi + 1, dtype=np.int64)[:, None]
    else:
        rows = []
        for dy, lo, hi in spans:
            for dx in range(lo, hi + 1):
                rows.append((dy, dx))
        offs = np.array(rows, dtype=np.int64)
    d2 = np.sum(offs.astype(float) ** 2, axis=1)
    keep = d2 > 0
    offs = offs[keep]
    d2 = d2[keep]
    order = np.lexsort(tuple(offs[:, c] for c in range(dim - 1, -1, -1)) + (d2,))
    return np.ascontiguousarray(offs[order]), np.ascontiguousarray(d2[order])


def riesz_potential(fld, x, R: float, k: int | None = None,
                    domain: Domain | None = None) -> float:
    """h^N sum over B_R(x)\\{x} of |D^k u|(y) / |x-y|^(N-k).

    ``fld`` is a DerivativeField of order k (or a raw magnitude array with
    domain and k given).  The diagonal cell is excluded; for k >= N the
    kernel |x-y|^(k-N) is bounded and the same formula applies.
    """
    if isinstance(fld, DerivativeField):
        k = fld.order if k is None else k
    if k is None or k < 1:
        raise GridError("riesz_potential requires derivative order k >= 1")
    vals, dom = _values_and_domain(fld, domain)
    h = dom.spacing
    if R < 2.0 * h:
        raise GridError("R must be at least 2h")
    offs, d2 = _sorted_offsets(dom.dim, R / h)
    w = (h * np.sqrt(d2)) ** float(k - dom.dim)
    g = vals.reshape(dom.shape)
    idx = tuple(int(i) for i in np.atleast_1d(x))
    K = _kernels.impl
    if dom.dim == 1:
        s = K.riesz_gather_1d(g, offs, w, idx[0])
    else:
        s = K.riesz_gather_2d(g, offs, w, idx[0], idx[1])
    return float(h ** dom.dim * s)


def riesz_difference_potential(fld: DerivativeField, x, R: float) -> float:
    """h^N sum over B_R(x)\\{x} of |D^k u(y) - D^k u(x)| / |x-y|^(N-k),

    with the tensor distance in the multinomial-weighted l2 norm."""
    dom = fld.domain
    h = dom.spacing
    if R < 2.0 * h:
        raise GridError("R must be at least 2h")
    offs, d2 = _sorted_offsets(dom.dim, R / h)
    w = (h * np.sqrt(d2)) ** float(fld.order - dom.dim)
    comps = fld.components_reshaped()
    wts = np.asarray(fld.weights, dtype=float)
    idx = tuple(int(i) for i in np.atleast_1d(x))
    K = _kernels.impl
    if dom.dim == 1:
        s = K.riesz_diff_gather_1d(comps, wts, offs, w, idx[0])
    else:
        s = K.riesz_diff_gather_2d(comps, wts, offs, w, idx[0], idx[1])
    return float(h ** dom.dim * s)


def riesz_potential_radial(fld, x, R: float, k: int | None = None,
                           domain: Domain | None = None,
                           bins: int | None = None) -> float:
    """Independent radial-binning evaluation of the Riesz potential.

    Uses the layer-cake identity: with mu(r) = integral of |D^k u| over
    B_r(x), the potential equals
        (N-k) * int_0^R mu(r) r^(k-1-N) dr  +  R^(k-N) mu(R).
    Member masses are binned radially (bin width ~ h/2) and the integral
    uses the exact antiderivative on each bin, so this path shares no
    code with the direct kernel sum.
    """
    if isinstance(fld, DerivativeField):
        k = fld.order if k is None else k
    vals, dom = _values_and_domain(fld, domain)
    h = dom.spacing
    N = dom.dim
    g = vals.reshape(dom.shape)
    idx = tuple(int(i) for i in np.atleast_1d(x))
    n = dom.points_per_axis
    if N == 1:
        ys = np.arange(n)
        d = np.abs(ys - idx[0]) * h
        mags = np.abs(g)
    else:
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        d = np.hypot(ii - idx[0], jj - idx[1]) * h
        mags = np.abs(g)
    inside = (d <= R) & (d > 0)
    dists = d[inside]
    masses = (h ** N) * mags[inside]
    if bins is None:
        bins = max(16, int(math.ceil(R / (0.5 * h))))
    edges = np.linspace(0.0, R, bins + 1)
    idxs = np.clip(np.searchsorted(edges, dists, side="left"), 1, bins)
    binned = np.zeros(bins + 1)
    np.add.at(binned, idxs, masses)
    mu = np.cumsum(binned)          # mu[b] ~ mu(edges[b])
    total = mu[-1]
    dmin = float(dists.min()) if dists.size else R
    a = float(k - N)                # integrand r^(k-1-N) = r^(a-1)
    integral = 0.0
    for b in range(bins):
        lo, hi = edges[b], edges[b + 1]
        mu_mid = 0.5 * (mu[b] + mu[b + 1])   # trapezoid in the step mass
        if mu_mid == 0.0:
            continue
        lo = max(lo, dmin)           # mu vanishes below the nearest member
        if hi <= lo:
            continue
        piece = math.log(hi / lo) if a == 0.0 else (hi ** a - lo ** a) / a
        integral += mu_mid * piece
    return float((N - k) * integral + R ** a * total)


# ---------------------------------------------------------------------------
# energies

def sobolev_energy(u: GridFunction, k: int, l: int, p: float, rho: float,
                   fields: dict | None = None) -> float:
    """h^N sum of rho^(kp) |D^k u|^p + rho^(lp) |D^l u|^p."""
    if not (1 <= p < INF):
        raise GridError("p must be in [1, inf)")
    if not math.isfinite(rho):
        raise GridError("sobolev_energy needs finite rho")
    dom = u.domain
    fk = fields[k] if fields else derivative_field(u, k)
    fl = fields[l] if fields else derivative_field(u, l)
    hN = dom.spacing ** dom.dim
    term = (rho ** (k * p)) * np.abs(fk.magnitudes) ** p \
        + (rho ** (l * p)) * np.abs(fl.magnitudes) ** p
    return float(hN * np.sum(term))


def _kernel_table(n: int, dim: int, h: float, exponent: float) -> np.ndarray:
    """table[d2] = (h sqrt(d2))^(-exponent) for squared cell distances."""
    maxd2 = dim * (n - 1) ** 2
    d2 = np.arange(maxd2 + 1, dtype=float)
    with np.errstate(divide="ignore"):
        tab = (h * np.sqrt(d2)) ** (-exponent)
    tab[0] = 0.0
    return tab


def gagliardo_energy(fld: DerivativeField, sigma: float, p: float) -> float:
    """Full fractional energy: h^(2N) sum over ordered pairs x != y of
    |D^k u(x) - D^k u(y)|^p / |x-y|^(N + sigma p)."""
    if not 0.0 < sigma < 1.0:
        raise GridError("sigma must be in (0, 1)")
    dom = fld.domain
    h = dom.spacing
    N = dom.dim
    comps = fld.components_reshaped()
    wts = np.asarray(fld.weights, dtype=float)
    tab = _kernel_table(dom.points_per_axis, N, h, N + sigma * p)
    act = np.ascontiguousarray((np.abs(comps) > 0.0).any(axis=0).astype(np.uint8))
    K = _kernels.impl
    if N == 1:
        raw = K.gagliardo_energy_1d(comps, wts, float(p), tab, act)
    else:
        raw = K.gagliardo_energy_2d(comps, wts, float(p), tab, act)
    return float(h ** (2 * N) * raw)


def gagliardo_pointwise(fld: DerivativeField, sigma: float, p: float, x) -> float:
    """(h^N sum over y != x of |T(x)-T(y)|^p / |x-y|^(N+sigma p))^(1/p)."""
    if not 0.0 < sigma < 1.0:
        raise GridError("sigma must be in (0, 1)")
    dom = fld.domain
    h = dom.spacing
    N = dom.dim
    comps = fld.components_reshaped()
    wts = np.asarray(fld.weights, dtype=float)
    tab = _kernel_table(dom.points_per_axis, N, h, N + sigma * p)
    idx = tuple(int(i) for i in np.atleast_1d(x))
    K = _kernels.impl
    if N == 1:
        raw = K.gagliardo_point_1d(comps, wts, idx[0], float(p), tab)
    else:
        raw = K.gagliardo_point_2d(comps, wts, idx[0], idx[1], float(p), tab)
    return float((h ** N * raw) ** (1.0 / p))


# ---------------------------------------------------------------------------
# volume-integral sups used by several named inequalities

def sup_volume_integral(u: GridFunction, q: float, alpha: float,
                        rho: float = INF,
                        radius_grid: RadiusGrid | None = None,
                        center_grid: CenterGrid | None = None) -> SupResult:
    """sup over centers and radii of r^alpha * h^N sum_{B_r(x)} |u|^q."""
    rgrid, cgrid = _resolve(u, rho, radius_grid, center_grid)
    dom = u.domain
    g = (np.abs(u.values) ** q).reshape(dom.shape)
    hN = dom.spacing ** dom.dim
    weights = np.array([hN * r ** alpha for r in rgrid.radii])
    spans, ptr, _ = _grid_tables(dom, rgrid)
    K = _kernels.impl
    if dom.dim == 1:
        vals, argr = K.sup_vol_sum_1d(g, spans, weights, cgrid.stride)
    else:
        vals, argr = K.sup_vol_sum_2d(g, spans, ptr, weights, cgrid.stride)
    return _finish_sup(vals, argr, rgrid, cgrid.stride)


def sup_single_radius_mean(u: GridFunction, t: float, radius: float,
                           center_grid: CenterGrid | None = None) -> SupResult:
    """sup over centers of the plain ball mean of |u|^t at one radius."""
    dom = u.domain
    if radius < 2.0 * dom.spacing:
        raise GridError("radius below floor 2h")
    rgrid = RadiusGrid((float(radius),), radius * (1 + 1e-12))
    cgrid = center_grid or CenterGrid()
    g = (np.abs(u.values) ** t).reshape(dom.shape)
    weights = np.array([1.0])
    spans, ptr, _ = _grid_tables(dom, rgrid)
    K = _kernels.impl
    if dom.dim == 1:
        vals, argr = K.sup_mean_pow_1d(g, spans, weights, 1.0, cgrid.stride)
    else:
        vals, argr = K.sup_mean_pow_2d(g, spans, ptr, weights, 1.0, cgrid.stride)
    return _finish_sup(vals, argr, rgrid, cgrid.stride)
