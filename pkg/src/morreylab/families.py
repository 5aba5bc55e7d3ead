"""Closed-form test function families.

Every family is a smooth, compactly supported function on R^N given in
closed form, so it can be sampled exactly at any resolution and dilated
exactly (``u_s(x) = u(x/s)`` is again a family member).  Families are
serializable to plain JSON dicts (kind + numeric parameters + seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Family",
    "FamilyError",
    "bump_cutoff",
    "smooth_step_down",
    "GaussianBump",
    "SmoothPlateau",
    "ModulatedBump",
    "MultiBump",
    "Concentration",
    "RandomFourier",
    "family_from_dict",
]

# Frequencies above n/16 cycles per half-width are rejected at sampling time.
FREQUENCY_FRACTION = 16


class FamilyError(ValueError):
    """Family parameters violate an invariant (support, frequency, ...)."""


def bump_cutoff(t):
    """C-infinity cutoff: 1 at t=0, identically 0 for |t| >= 1.

    cutoff(t) = exp(1 - 1/(1 - t^2)).  This is the closed form all
    truncated bumps use; tests evaluate it directly.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti * ti))
    return out if out.ndim else float(out)


def smooth_step_down(s):
    """C-infinity transition from 1 (s <= 0) to 0 (s >= 1)."""
    s = np.asarray(s, dtype=float)

    def _g(v):
        out = np.zeros_like(v)
        pos = v > 0
        out[pos] = np.exp(-1.0 / v[pos])
        return out

    num = _g(1.0 - s)
    den = num + _g(s)
    # den vanishes nowhere on (-inf, inf): one of g(s), g(1-s) is positive
    out = np.where(s <= 0.0, 1.0, np.where(s >= 1.0, 0.0, num / np.maximum(den, 1e-300)))
    return out if out.ndim else float(out)


def _as_center(center, dim):
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.shape != (dim,):
        raise FamilyError(f"center {center!r} does not match dim {dim}")
    return c


@dataclass(frozen=True)
class Family:
    """Base class; concrete families implement evaluate/support_radius."""

    dim: int

    kind = "abstract"

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at points of shape (M, dim); returns shape (M,)."""
        raise NotImplementedError

    def support_center(self) -> np.ndarray:
        return np.zeros(self.dim)

    def support_radius(self) -> float:
        """Euclidean radius around support_center outside which f == 0."""
        raise NotImplementedError

    def support_extent(self) -> float:
        """max-norm bound: f(x) == 0 whenever |x|_inf exceeds this."""
        c = self.support_center()
        return float(np.max(np.abs(c)) + self.support_radius())

    def max_frequency(self) -> float:
        """Oscillation frequency in cycles per unit length (0 if none)."""
        return 0.0

    def dilated(self, s: float) -> "Family":
        """Return the family for x -> f(x/s)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def label(self) -> str:
        return self.kind


@dataclass(frozen=True)
class GaussianBump(Family):
    """Gaussian of width w, smoothly truncated at radius 3w."""

    center: tuple = (0.0,)
    width: float = 0.25
    amp: float = 1.0

    kind = "gaussian_bump"

    def evaluate(self, points):
        c = _as_center(self.center, self.dim)
        r = np.linalg.norm(np.asarray(points, dtype=float) - c, axis=-1)
        w = self.width
        return self.amp * np.exp(-(r * r) / (2.0 * w * w)) * bump_cutoff(r / (3.0 * w))

    def support_center(self):
        return _as_center(self.center, self.dim)

    def support_radius(self):
        return 3.0 * self.width

    def dilated(self, s):
        c = _as_center(self.center, self.dim)
        return GaussianBump(self.dim, tuple(s * c), s * self.width, self.amp)

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "center": list(self.center),
                "width": self.width, "amp": self.amp}


@dataclass(frozen=True)
class SmoothPlateau(Family):
    """Constant amp inside radius a, smooth decay to 0 over [a, a+t]."""

    center: tuple = (0.0,)
    plateau_radius: float = 0.3
    transition: float = 0.2
    amp: float = 1.0

    kind = "smooth_plateau"

    def evaluate(self, points):
        c = _as_center(self.center, self.dim)
        r = np.linalg.norm(np.asarray(points, dtype=float) - c, axis=-1)
        return self.amp * smooth_step_down((r - self.plateau_radius) / self.transition)

    def support_center(self):
        return _as_center(self.center, self.dim)

    def support_radius(self):
        return self.plateau_radius + self.transition

    def dilated(self, s):
        c = _as_center(self.center, self.dim)
        return SmoothPlateau(self.dim, tuple(s * c), s * self.plateau_radius,
                             s * self.transition, self.amp)

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "center": list(self.center),
                "plateau_radius": self.plateau_radius, "transition": self.transition,
                "amp": self.amp}


@dataclass(frozen=True)
class ModulatedBump(Family):
    """Sine carrier times a truncated Gaussian envelope."""

    center: tuple = (0.0,)
    width: float = 0.25
    amp: float = 1.0
    freq: float = 3.0          # cycles per unit length along `direction`
    phase: float = 0.0
    direction: tuple = (1.0,)  # unit-ish vector; normalized on evaluation

    kind = "modulated_bump"

    def evaluate(self, points):
        pts = np.asarray(points, dtype=float)
        c = _as_center(self.center, self.dim)
        e = _as_center(self.direction, self.dim)
        e = e / max(np.linalg.norm(e), 1e-300)
        r = np.linalg.norm(pts - c, axis=-1)
        w = self.width
        carrier = np.sin(2.0 * math.pi * self.freq * ((pts - c) @ e) + self.phase)
        return self.amp * carrier * np.exp(-(r * r) / (2.0 * w * w)) * bump_cutoff(r / (3.0 * w))

    def support_center(self):
        return _as_center(self.center, self.dim)

    def support_radius(self):
        return 3.0 * self.width

    def max_frequency(self):
        return float(self.freq)

    def dilated(self, s):
        c = _as_center(self.center, self.dim)
        return ModulatedBump(self.dim, tuple(s * c), s * self.width, self.amp,
                             self.freq / s, self.phase, self.direction)

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "center": list(self.center),
                "width": self.width, "amp": self.amp, "freq": self.freq,
                "phase": self.phase, "direction": list(self.direction)}


@dataclass(frozen=True)
class MultiBump(Family):
    """Two to five translated Gaussian bumps, drawn deterministically from a seed."""

    seed: int = 0
    count: int = 3
    center_box: float = 0.5    # bump centers drawn from [-box, box]^dim
    width_range: tuple = (0.1, 0.2)
    amp_range: tuple = (0.5, 1.0)

    kind = "multi_bump"

    def __post_init__(self):
        if not 2 <= self.count <= 5:
            raise FamilyError("multi_bump count must be in 2..5")

    def _bumps(self):
        rng = np.random.default_rng(self.seed)
        bumps = []
        for _ in range(self.count):
            c = rng.uniform(-self.center_box, self.center_box, size=self.dim)
            w = rng.uniform(*self.width_range)
            a = rng.uniform(*self.amp_range)
            bumps.append(GaussianBump(self.dim, tuple(c), float(w), float(a)))
        return bumps

    def evaluate(self, points):
        out = np.zeros(np.asarray(points).shape[0])
        for b in self._bumps():
            out += b.evaluate(points)
        return out

    def support_radius(self):
        # around the origin
        return max(float(np.linalg.norm(b.support_center())) + b.support_radius()
                   for b in self._bumps())

    def dilated(self, s):
        # dilation of a seeded family is not itself seeded; expand explicitly
        raise FamilyError("dilate the individual bumps of a multi_bump instead")

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "seed": self.seed,
                "count": self.count, "center_box": self.center_box,
                "width_range": list(self.width_range), "amp_range": list(self.amp_range)}


@dataclass(frozen=True)
class Concentration(Family):
    """Concentration probe: fixed-peak bump whose width shrinks."""

    center: tuple = (0.0,)
    width: float = 0.25
    amp: float = 1.0

    kind = "concentration"

    def evaluate(self, points):
        return GaussianBump(self.dim, self.center, self.width, self.amp).evaluate(points)

    def support_center(self):
        return _as_center(self.center, self.dim)

    def support_radius(self):
        return 3.0 * self.width

    def dilated(self, s):
        c = _as_center(self.center, self.dim)
        return Concentration(self.dim, tuple(s * c), s * self.width, self.amp)

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "center": list(self.center),
                "width": self.width, "amp": self.amp}

    @staticmethod
    def sequence(dim, widths=(0.5, 0.25, 0.125), amp=1.0, center=None):
        center = tuple(0.0 for _ in range(dim)) if center is None else tuple(center)
        return [Concentration(dim, center, float(w), amp) for w in widths]


@dataclass(frozen=True)
class RandomFourier(Family):
    """Seeded low-frequency trigonometric sum times a plateau cutoff.

    Modes are integer wave vectors |k|_inf <= max_mode, with k interpreted
    as cycles per unit length; the margin factor is a SmoothPlateau.
    """

    seed: int = 0
    n_modes: int = 5
    max_mode: int = 4
    amp: float = 1.0
    cutoff_radius: float = 0.4
    cutoff_transition: float = 0.2
    freq_scale: float = 1.0    # divides all frequencies; used by dilated()

    kind = "random_fourier"

    def _modes(self):
        rng = np.random.default_rng(self.seed)
        ks = rng.integers(-self.max_mode, self.max_mode + 1, size=(self.n_modes, self.dim))
        ks[np.all(ks == 0, axis=1), 0] = 1
        coeffs = rng.uniform(-1.0, 1.0, size=self.n_modes)
        phases = rng.uniform(0.0, 2.0 * math.pi, size=self.n_modes)
        return ks.astype(float), coeffs, phases

    def evaluate(self, points):
        pts = np.asarray(points, dtype=float)
        ks, coeffs, phases = self._modes()
        out = np.zeros(pts.shape[0])
        for k, a, ph in zip(ks, coeffs, phases):
            out += a * np.cos(2.0 * math.pi * (pts @ k) / self.freq_scale + ph)
        env = SmoothPlateau(self.dim, tuple(0.0 for _ in range(self.dim)),
                            self.cutoff_radius, self.cutoff_transition, 1.0)
        return self.amp * out * env.evaluate(pts)

    def support_radius(self):
        return self.cutoff_radius + self.cutoff_transition

    def max_frequency(self):
        ks, _, _ = self._modes()
        return float(np.max(np.abs(ks))) * math.sqrt(self.dim) / self.freq_scale

    def dilated(self, s):
        return RandomFourier(self.dim, self.seed, self.n_modes, self.max_mode,
                             self.amp, s * self.cutoff_radius, s * self.cutoff_transition,
                             self.freq_scale * s)

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "seed": self.seed,
                "n_modes": self.n_modes, "max_mode": self.max_mode, "amp": self.amp,
                "cutoff_radius": self.cutoff_radius,
                "cutoff_transition": self.cutoff_transition,
                "freq_scale": self.freq_scale}


_KINDS = {
    cls.kind: cls
    for cls in (GaussianBump, SmoothPlateau, ModulatedBump, MultiBump,
                Concentration, RandomFourier)
}


def family_from_dict(d: dict) -> Family:
    """Inverse of Family.to_dict."""
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _KINDS:
        raise FamilyError(f"unknown family kind {kind!r}")
    cls = _KINDS[kind]
    for key in ("center", "direction"):
        if key in d:
            d[key] = tuple(d[key])
    for key in ("width_range", "amp_range"):
        if key in d:
            d[key] = tuple(d[key])
    try:
        return cls(**d)
    except TypeError as exc:
        raise FamilyError(f"bad parameters for family {kind!r}: {exc}") from exc
