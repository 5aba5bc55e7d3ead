"""Uniform cell-centered grids on a box [-L, L]^N, N in {1, 2}.

Grid points are cell centers x_i = -L + (i + 1/2) h with h = 2L/n, stored
row-major in a flat array.  Functions are compactly supported with a
margin band of zeros near the boundary, so finite-difference stencils with
zero extension are exact and ball averages never see truncation effects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .families import Family, FamilyError, FREQUENCY_FRACTION

__all__ = [
    "GridError",
    "Domain",
    "GridFunction",
    "DerivativeField",
    "Ball",
    "sample",
    "derivative_field",
    "ball_spans",
    "ball_members",
    "ball_average",
    "lp_norm",
    "write_grid",
    "read_grid",
    "derivative_multi_indices",
    "multinomial_weight",
]

MAX_DERIVATIVE_ORDER = 4
RADIUS_FLOOR_CELLS = 2.0  # balls of radius < 2h are rejected


class GridError(ValueError):
    """Invalid grid geometry or grid data."""


@dataclass(frozen=True)
class Domain:
    """Box [-L, L]^dim sampled with n cells per axis.

    Invariants: dim in {1, 2}; n even, >= 16; 0 < margin < L with
    margin >= 4h so stencils never touch nonzero values at the boundary.
    """

    dim: int
    points_per_axis: int
    half_width: float
    support_margin: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise GridError(f"dim must be 1 or 2, got {self.dim}")
        n = self.points_per_axis
        if n < 16 or n % 2 != 0:
            raise GridError(f"points_per_axis must be even and >= 16, got {n}")
        if not 0 < self.support_margin < self.half_width:
            raise GridError("support_margin must satisfy 0 < m < L")
        if self.support_margin < 4.0 * self.spacing:
            raise GridError(
                f"support_margin {self.support_margin} < 4h = {4.0 * self.spacing}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dim

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dim

    @property
    def diameter(self) -> float:
        """Diagonal of the box."""
        return 2.0 * self.half_width * math.sqrt(self.dim)

    @property
    def support_bound(self) -> float:
        """Functions must vanish for |x|_inf > this."""
        return self.half_width - self.support_margin

    def axis_coords(self) -> np.ndarray:
        n, L, h = self.points_per_axis, self.half_width, self.spacing
        return -L + (np.arange(n) + 0.5) * h

    def points(self) -> np.ndarray:
        """All cell centers, shape (n^dim, dim), row-major."""
        ax = self.axis_coords()
        if self.dim == 1:
            return ax[:, None]
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    def refined(self, factor: int = 2) -> "Domain":
        return Domain(self.dim, self.points_per_axis * factor,
                      self.half_width, self.support_margin)

    def index_of(self, x) -> tuple:
        """Grid multi-index of the cell whose center is nearest to x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n, L, h = self.points_per_axis, self.half_width, self.spacing
        idx = np.clip(np.rint((x + L) / h - 0.5).astype(int), 0, n - 1)
        return tuple(int(i) for i in idx)

    def coord_of(self, index) -> np.ndarray:
        idx = np.atleast_1d(np.asarray(index, dtype=int))
        L, h = self.half_width, self.spacing
        return -L + (idx + 0.5) * h


@dataclass(frozen=True)
class GridFunction:
    """Sampled function: flat row-major values over a Domain."""

    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.domain.size,):
            raise GridError(f"values shape {v.shape} != ({self.domain.size},)")
        if not np.all(np.isfinite(v)):
            raise GridError("values must be finite")
        object.__setattr__(self, "values", v)

    def reshaped(self) -> np.ndarray:
        return self.values.reshape(self.domain.shape)

    def margin_max(self) -> float:
        """Largest |value| on the margin band |x|_inf > L - m."""
        ax = np.abs(self.domain.axis_coords())
        band = ax > self.domain.support_bound
        if self.domain.dim == 1:
            mask = band
        else:
            mask = band[:, None] | band[None, :]
        vals = np.abs(self.reshaped()[mask])
        return float(vals.max()) if vals.size else 0.0

    def check_margin(self):
        worst = self.margin_max()
        if worst != 0.0:
            raise GridError(f"margin band not identically zero (max |u| = {worst:g})")

    def shifted(self, cells) -> "GridFunction":
        """Translate by an integer number of cells, zero-filling."""
        cells = np.atleast_1d(np.asarray(cells, dtype=int))
        arr = self.reshaped()
        out = np.zeros_like(arr)
        n = self.domain.points_per_axis
        src = []
        dst = []
        for s in cells:
            s = int(s)
            if abs(s) >= n:
                raise GridError("shift exceeds grid")
            if s >= 0:
                src.append(slice(0, n - s))
                dst.append(slice(s, n))
            else:
                src.append(slice(-s, n))
                dst.append(slice(0, n + s))
        out[tuple(dst)] = arr[tuple(src)]
        return GridFunction(self.domain, out.ravel())


def sample(domain: Domain, family: Family, *, validate: bool = True) -> GridFunction:
    """Sample a family at cell centers; rejects margin/frequency violations."""
    if family.dim != domain.dim:
        raise FamilyError(f"family dim {family.dim} != domain dim {domain.dim}")
    if validate:
        extent = family.support_extent()
        if extent > domain.support_bound + 1e-12:
            raise FamilyError(
                f"family support |x|_inf <= {extent:g} exceeds the margin band "
                f"bound {domain.support_bound:g} (L={domain.half_width}, "
                f"m={domain.support_margin})")
        fmax = family.max_frequency()
        limit = domain.points_per_axis / FREQUENCY_FRACTION / (2.0 * domain.half_width)
        if fmax > limit + 1e-12:
            raise FamilyError(
                f"family frequency {fmax:g} exceeds grid limit n/16 ~ {limit:g} "
                f"cycles per unit length")
    vals = np.asarray(family.evaluate(domain.points()), dtype=float)
    u = GridFunction(domain, vals)
    if validate:
        u.check_margin()
    return u


# ---------------------------------------------------------------------------
# derivatives

def _central_diff(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Second-order central difference with zero extension outside the box."""
    fwd = np.zeros_like(arr)
    bwd = np.zeros_like(arr)
    n = arr.shape[axis]
    sl_all = [slice(None)] * arr.ndim

    def sl(a, b):
        s = list(sl_all)
        s[axis] = slice(a, b)
        return tuple(s)

    fwd[sl(0, n - 1)] = arr[sl(1, n)]
    bwd[sl(1, n)] = arr[sl(0, n - 1)]
    return (fwd - bwd) / (2.0 * h)


@lru_cache(maxsize=None)
def derivative_multi_indices(dim: int, order: int) -> tuple:
    """Multi-indices |alpha| = order in graded-lexicographic order."""
    if dim == 1:
        return ((order,),)
    return tuple((order - j, j) for j in range(order + 1))


def multinomial_weight(alpha) -> float:
    """order! / prod(alpha_i!) -- the tensor-norm weight of d^alpha."""
    order = sum(alpha)
    w = math.factorial(order)
    for a in alpha:
        w //= math.factorial(a)
    return float(w)


@dataclass(frozen=True)
class DerivativeField:
    """|D^l u| magnitudes plus the individual components d^alpha u."""

    domain: Domain
    order: int
    magnitudes: np.ndarray            # flat, >= 0
    components: tuple                 # flat array per multi-index
    multi_indices: tuple
    weights: np.ndarray               # multinomial weight per component

    def components_reshaped(self) -> np.ndarray:
        """Stack of components with grid shape: (C, n[, n])."""
        return np.stack([c.reshape(self.domain.shape) for c in self.components])


def derivative_field(u: GridFunction, order: int) -> DerivativeField:
    """All partials of a given total order by repeated central differences.

    The magnitude is the multinomial-weighted l2 norm of the component
    tensor, sqrt(sum_alpha (l!/alpha!) (d^alpha u)^2); for order 0 it is
    |u| exactly.
    """
    if order < 0 or order > MAX_DERIVATIVE_ORDER:
        raise GridError(f"derivative order must be in 0..{MAX_DERIVATIVE_ORDER}")
    dom = u.domain
    h = dom.spacing
    alphas = derivative_multi_indices(dom.dim, order)
    weights = np.array([multinomial_weight(a) for a in alphas])
    comps = []
    for alpha in alphas:
        arr = u.reshaped()
        for axis, reps in enumerate(alpha):
            for _ in range(reps):
                arr = _central_diff(arr, axis, h)
        comps.append(arr.ravel())
    if order == 0:
        mags = np.abs(u.values)
    else:
        sq = np.zeros(dom.size)
        for w, c in zip(weights, comps):
            sq += w * c * c
        mags = np.sqrt(sq)
    return DerivativeField(dom, order, mags, tuple(comps), alphas, weights)


# ---------------------------------------------------------------------------
# balls

def _floor_sqrt(v: float) -> int:
    """Largest integer H with H*H <= v (exact integer comparison)."""
    if v < 0.0:
        return -1
    H = int(math.floor(math.sqrt(v)))
    while (H + 1) * (H + 1) <= v:
        H += 1
    while H * H > v:
        H -= 1
    return H


def ball_spans(dim: int, radius_cells: float) -> np.ndarray:
    """Integer offset spans of the discrete ball of radius r/h cells.

    1-D: one row [lo, hi].  2-D: rows [dy, lo, hi] for each dy, listed in
    increasing dy, so concatenated members come out row-major.  Membership
    is the exact Euclidean test |delta| <= radius_cells on cell centers.
    """
    c2 = radius_cells * radius_cells
    if dim == 1:
        H = _floor_sqrt(c2)
        return np.array([[-H, H]], dtype=np.int64)
    D = _floor_sqrt(c2)
    rows = []
    for dy in range(-D, D + 1):
        Hy = _floor_sqrt(c2 - dy * dy)
        rows.append((dy, -Hy, Hy))
    return np.array(rows, dtype=np.int64)


@dataclass(frozen=True)
class Ball:
    """Discrete ball: grid points y with |y - x| <= r, clipped to the box."""

    domain: Domain
    center_index: tuple
    radius: float
    member_indices: np.ndarray   # (m, dim) int array, row-major order

    @property
    def count(self) -> int:
        return self.member_indices.shape[0]

    def member_flat(self) -> np.ndarray:
        if self.domain.dim == 1:
            return self.member_indices[:, 0]
        n = self.domain.points_per_axis
        return self.member_indices[:, 0] * n + self.member_indices[:, 1]


def ball_members(domain: Domain, center, r: float) -> Ball:
    """Materialize a Ball; rejects r < 2h (degenerate averages)."""
    h = domain.spacing
    if r < RADIUS_FLOOR_CELLS * h:
        raise GridError(f"ball radius {r:g} below floor 2h = {2 * h:g}")
    center = tuple(int(c) for c in np.atleast_1d(center))
    if len(center) != domain.dim:
        raise GridError("center index has wrong dimension")
    n = domain.points_per_axis
    for c in center:
        if not 0 <= c < n:
            raise GridError(f"center index {center} outside grid")
    spans = ball_spans(domain.dim, r / h)
    rows = []
    if domain.dim == 1:
        ci = center[0]
        lo = max(spans[0, 0] + ci, 0)
        hi = min(spans[0, 1] + ci, n - 1)
        rows = [(i,) for i in range(lo, hi + 1)]
    else:
        ci, cj = center
        for dy, lo, hi in spans:
            i = ci + dy
            if i < 0 or i >= n:
                continue
            a = max(lo + cj, 0)
            b = min(hi + cj, n - 1)
            rows.extend((i, j) for j in range(a, b + 1))
    members = np.array(rows, dtype=np.int64).reshape(len(rows), domain.dim)
    return Ball(domain, center, float(r), members)


def ball_average(values, ball: Ball, q: float) -> float:
    """Equal-weight discrete L^q average ((1/m) sum |u|^q)^(1/q).

    Routed through the active kernel backend with row-major member order —
    the same code path every sup-type evaluator uses — so identical balls
    produce bitwise-identical values.
    """
    from . import _kernels
    if q < 1:
        raise GridError("q must be >= 1")
    v = values.values if isinstance(values, GridFunction) else np.asarray(values, dtype=float)
    dom = ball.domain
    g = np.abs(v).reshape(dom.shape) if q == 1.0 else (np.abs(v) ** q).reshape(dom.shape)
    spans = ball_spans(dom.dim, ball.radius / dom.spacing)
    K = _kernels.impl
    if dom.dim == 1:
        s, m = K.ball_sum_point_1d(g, spans, ball.center_index[0])
    else:
        s, m = K.ball_sum_point_2d(g, spans, ball.center_index[0],
                                   ball.center_index[1])
    if m != ball.count:
        raise GridError("ball member count mismatch")
    if q == 1.0:
        return float(s / m)
    return float((s / m) ** (1.0 / q))


def lp_norm(field, p: float, domain: Domain) -> float:
    """(h^N sum |f_i|^p)^(1/p)."""
    if not np.isfinite(p) or p < 1:
        raise GridError("p must be finite and >= 1")
    v = field.values if isinstance(field, GridFunction) else np.asarray(field, dtype=float)
    hN = domain.spacing ** domain.dim
    return float((hN * np.sum(np.abs(v) ** p)) ** (1.0 / p))


# ---------------------------------------------------------------------------
# grid dumps:  header "N n L m", then n^N decimal values, one per line

def write_grid(path, u: GridFunction):
    dom = u.domain
    with open(path, "w") as f:
        f.write(f"{dom.dim} {dom.points_per_axis} {dom.half_width!r} "
                f"{dom.support_margin!r}\n")
        for v in u.values:
            f.write(f"{float(v)!r}\n")


def read_grid(path, *, validate_margin: bool = True) -> GridFunction:
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 4:
            raise GridError(f"{path}: malformed header")
        try:
            dim, n = int(header[0]), int(header[1])
            L, m = float(header[2]), float(header[3])
        except ValueError as exc:
            raise GridError(f"{path}: malformed header: {exc}") from exc
        dom = Domain(dim, n, L, m)
        try:
            vals = np.array([float(line) for line in f], dtype=float)
        except ValueError as exc:
            raise GridError(f"{path}: bad value line: {exc}") from exc
    if vals.size != dom.size:
        raise GridError(f"{path}: expected {dom.size} values, found {vals.size}")
    u = GridFunction(dom, vals)
    if validate_margin:
        u.check_margin()
    return u
