"""Inequality catalog, corpus generation, and ratio/scaling/refinement studies.

Every inequality is an ``InequalityCase`` naming a catalog entry together
with its full parameter tuple.  Evaluating a case on a corpus function
produces a ``RatioReport`` whose ratio = LHS/RHS is an empirical lower
bound on the unspecified admissible constant of that inequality (sup
discretization and corpus finiteness both bias the ratio downward).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .families import Family, FamilyError, family_from_dict
from .grid import Domain, GridFunction, GridError, derivative_field, sample
from .seminorms import (INF, CenterGrid, RadiusGrid, bmo_seminorm_detail,
                        campanato_seminorm_detail, gagliardo_energy,
                        morrey_norm_detail, sobolev_energy,
                        sup_single_radius_mean, sup_volume_integral)
from . import pointwise as pw

__all__ = [
    "CaseValidationError",
    "InequalityCase",
    "RatioReport",
    "CorpusFunction",
    "EvalCache",
    "validate_case",
    "evaluate_case",
    "evaluate_theorem1",
    "evaluate_theorem2",
    "evaluate_named",
    "lam_endpoint",
    "default_matrix",
    "default_named_cases",
    "default_corpus_specs",
    "default_domain",
    "generate_corpus",
    "scaling_study",
    "refinement_study",
    "pointwise_study",
    "translation_check",
    "run_suite",
    "SuiteResult",
    "CATALOG",
]

_TOL = 1e-9


class CaseValidationError(ValueError):
    """Parameter tuple outside the hypotheses of the named inequality."""


@dataclass(frozen=True)
class InequalityCase:
    name: str
    dim: int
    k: int = 1
    l: int = 0
    p: float = 2.0
    q: float = 4.0
    lam: float = 0.0
    sigma: float | None = None
    rho: float = INF

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rho"] = "inf" if not math.isfinite(self.rho) else self.rho
        return d

    @staticmethod
    def from_dict(d: dict) -> "InequalityCase":
        d = dict(d)
        if d.get("rho") in ("inf", "INF", None):
            d["rho"] = INF
        return InequalityCase(**d)

    def label(self) -> str:
        bits = [self.name, f"N{self.dim}", f"k{self.k}", f"l{self.l}",
                f"p{self.p:g}", f"q{self.q:g}", f"lam{self.lam:g}"]
        if self.sigma is not None:
            bits.append(f"sig{self.sigma:g}")
        bits.append("rhoinf" if not math.isfinite(self.rho) else f"rho{self.rho:g}")
        return "_".join(bits)


def lam_endpoint(k: int, l: int, p: float, q: float,
                 sigma: float | None = None) -> float:
    s = sigma if sigma is not None else 0.0
    return ((k + s) * p - l * q) / (q - p)


# ---------------------------------------------------------------------------
# validation

def _base_checks(c: InequalityCase, *, min_p_exclusive: bool):
    if c.dim not in (1, 2):
        raise CaseValidationError(f"dim {c.dim} unsupported")
    if not (0 <= c.l < c.k):
        raise CaseValidationError(f"need 0 <= l < k, got l={c.l}, k={c.k}")
    if min_p_exclusive and not c.p > 1:
        raise CaseValidationError(f"p must exceed 1 (got p={c.p})")
    if not c.p >= 1:
        raise CaseValidationError(f"p must be >= 1 (got p={c.p})")
    if not (c.p < c.q < INF):
        raise CaseValidationError(f"need p < q < inf, got p={c.p}, q={c.q}")
    if not c.rho > 0:
        raise CaseValidationError("rho must be positive")


def _lam_window(c: InequalityCase, sigma):
    end = lam_endpoint(c.k, c.l, c.p, c.q, sigma)
    if c.lam < -c.l - _TOL or c.lam > end + _TOL:
        raise CaseValidationError(
            f"lam={c.lam:g} outside [-l, endpoint] = [{-c.l:g}, {end:g}]")
    if not math.isfinite(c.rho) and abs(c.lam - end) > _TOL:
        raise CaseValidationError(
            f"rho=inf (homogeneous) requires endpoint lam={end:g}, got {c.lam:g}")


def _check_theorem1(c: InequalityCase):
    _base_checks(c, min_p_exclusive=True)
    _lam_window(c, None)


def _check_theorem2(c: InequalityCase):
    _base_checks(c, min_p_exclusive=False)
    if c.sigma is None or not 0.0 < c.sigma < 1.0:
        raise CaseValidationError(f"sigma must be in (0,1), got {c.sigma}")
    _lam_window(c, c.sigma)


def _check_sobolev(c: InequalityCase):
    _base_checks(c, min_p_exclusive=False)
    if 1.0 / c.q <= 1.0 / c.p - 1.0 / c.dim:
        raise CaseValidationError(
            f"subcritical range violated: 1/q must exceed 1/p - 1/N")


def _require_q(c: InequalityCase, expected: float, what: str):
    if abs(c.q - expected) > 1e-9:
        raise CaseValidationError(f"{what} requires q = {expected:g}, got {c.q:g}")


def _check_sobolev_critical(c: InequalityCase):
    if not 1.0 < c.p < c.dim:
        raise CaseValidationError(
            f"critical exponent needs p in (1, N); N={c.dim}, p={c.p:g} infeasible")
    _require_q(c, c.dim * c.p / (c.dim - c.p), "critical case")


def _check_lions(c: InequalityCase):
    _check_sobolev(c)


def _check_lions_dilation(c: InequalityCase):
    _check_sobolev_critical(c)


def _check_morrey_critical(c: InequalityCase):
    _base_checks(c, min_p_exclusive=True)
    if not c.k * c.p < c.dim:
        raise CaseValidationError(f"needs k p < N; k={c.k}, p={c.p:g}, N={c.dim}")
    _require_q(c, c.dim * c.p / (c.dim - (c.k - c.l) * c.p), "Morrey-critical case")


def _check_particular(c: InequalityCase):
    _base_checks(c, min_p_exclusive=True)
    if not math.isfinite(c.rho):
        raise CaseValidationError("particular interpolation needs finite rho")
    top = c.p / (c.q - c.p)
    if not 0.0 <= c.lam < top - 1e-15:
        raise CaseValidationError(f"lam must lie in [0, p/(q-p)) = [0, {top:g})")


def _check_localized_sobolev(c: InequalityCase):
    _base_checks(c, min_p_exclusive=True)
    if not math.isfinite(c.rho):
        raise CaseValidationError("needs finite rho")
    if not c.l * c.q < c.k * c.p:
        raise CaseValidationError("needs l q < k p")
    if not c.lam > 0:
        raise CaseValidationError("needs lam > 0 (t = N/lam)")
    t = c.dim / c.lam
    tmin = max(c.dim * (c.q - c.p) / (c.k * c.p - c.l * c.q), 1.0)
    if t < tmin - _TOL:
        raise CaseValidationError(f"t = N/lam = {t:g} below minimum {tmin:g}")


def _check_lions_higher(c: InequalityCase):
    _base_checks(c, min_p_exclusive=False)
    if not math.isfinite(c.rho):
        raise CaseValidationError("needs finite rho")
    if 1.0 / c.q < 1.0 / c.p - c.k / c.dim - _TOL:
        raise CaseValidationError("needs 1/q >= 1/p - k/N")


def _check_linf_interp(c: InequalityCase):
    _base_checks(c, min_p_exclusive=True)
    if not math.isfinite(c.rho):
        raise CaseValidationError("needs finite rho")
    if not c.l * c.q <= c.k * c.p + _TOL:
        raise CaseValidationError("needs l q <= k p")


def _check_bmo_gn_local(c: InequalityCase):
    _check_linf_interp(c)
    if c.l < 1:
        raise CaseValidationError("BMO improvement needs l >= 1")


def _check_morrey_hom(c: InequalityCase):
    _base_checks(c, min_p_exclusive=True)
    if math.isfinite(c.rho):
        raise CaseValidationError("homogeneous case is rho = inf")
    end = lam_endpoint(c.k, c.l, c.p, c.q)
    if abs(c.lam - end) > _TOL:
        raise CaseValidationError(f"needs endpoint lam = {end:g}")


def _check_bmo_gn_hom(c: InequalityCase):
    _base_checks(c, min_p_exclusive=True)
    if c.l < 1:
        raise CaseValidationError("needs l >= 1")
    _require_q(c, c.k * c.p / c.l, "homogeneous BMO case")


def _check_frac_hom(c: InequalityCase):
    _check_theorem2(c)
    if math.isfinite(c.rho):
        raise CaseValidationError("homogeneous case is rho = inf")


def _check_frac_critical(c: InequalityCase):
    _base_checks(c, min_p_exclusive=False)
    if c.sigma is None or not 0.0 < c.sigma < 1.0:
        raise CaseValidationError("sigma must be in (0,1)")
    if c.l != 0:
        raise CaseValidationError("critical fractional case states l = 0")
    if not c.p * (c.k + c.sigma) < c.dim:
        raise CaseValidationError(
            f"needs p (k + sigma) < N; p={c.p:g}, k={c.k}, sigma={c.sigma:g}, N={c.dim}")
    _require_q(c, c.dim * c.p / (c.dim - (c.k + c.sigma) * c.p), "critical fractional")


def _check_frac_bmo(c: InequalityCase):
    _base_checks(c, min_p_exclusive=False)
    if c.sigma is None or not 0.0 < c.sigma < 1.0:
        raise CaseValidationError("sigma must be in (0,1)")
    if c.l < 1:
        raise CaseValidationError("needs l >= 1")
    _require_q(c, c.p * (c.k + c.sigma) / c.l, "fractional BMO case")


def _check_gn_subscale(c: InequalityCase):
    _check_localized_sobolev(c)


CATALOG = {
    "theorem1": _check_theorem1,
    "theorem2": _check_theorem2,
    "sobolev": _check_sobolev,
    "sobolev_critical": _check_sobolev_critical,
    "lions": _check_lions,
    "lions_dilation": _check_lions_dilation,
    "morrey_critical": _check_morrey_critical,
    "particular": _check_particular,
    "localized_sobolev": _check_localized_sobolev,
    "lions_higher": _check_lions_higher,
    "linf_interp": _check_linf_interp,
    "bmo_gn_local": _check_bmo_gn_local,
    "morrey_hom": _check_morrey_hom,
    "bmo_gn_hom": _check_bmo_gn_hom,
    "frac_hom": _check_frac_hom,
    "frac_critical": _check_frac_critical,
    "frac_bmo": _check_frac_bmo,
    "gn_subscale": _check_gn_subscale,
}


def validate_case(case: InequalityCase):
    checker = CATALOG.get(case.name)
    if checker is None:
        raise CaseValidationError(f"unknown case name {case.name!r}")
    checker(case)


# ---------------------------------------------------------------------------
# corpus

@dataclass
class CorpusFunction:
    fid: str
    grid: GridFunction
    family: Family | None = None


def default_domain(dim: int, n: int | None = None) -> Domain:
    if dim == 1:
        return Domain(1, n or 256, 2.0, 0.25)
    return Domain(2, n or 128, 1.0, 0.25)


def default_corpus_specs(dim: int) -> list:
    """Family dicts for the default corpus.  2-D placements stay near the
    box center so clipped corner balls never dominate any sup."""
    if dim == 1:
        specs = [
            {"kind": "gaussian_bump", "dim": 1, "center": [0.0], "width": 0.25, "amp": 1.0},
            {"kind": "gaussian_bump", "dim": 1, "center": [0.4], "width": 0.18, "amp": 0.8},
            {"kind": "gaussian_bump", "dim": 1, "center": [-0.55], "width": 0.3, "amp": 1.2},
            {"kind": "smooth_plateau", "dim": 1, "center": [0.0],
             "plateau_radius": 0.35, "transition": 0.25, "amp": 1.0},
            {"kind": "modulated_bump", "dim": 1, "center": [0.0], "width": 0.3,
             "amp": 1.0, "freq": 2.0, "phase": 0.3, "direction": [1.0]},
            {"kind": "modulated_bump", "dim": 1, "center": [0.3], "width": 0.22,
             "amp": 0.7, "freq": 3.0, "phase": 0.0, "direction": [1.0]},
            {"kind": "multi_bump", "dim": 1, "seed": None, "count": 3,
             "center_box": 0.8, "width_range": [0.12, 0.25], "amp_range": [0.5, 1.0]},
            {"kind": "multi_bump", "dim": 1, "seed": None, "count": 2,
             "center_box": 0.6, "width_range": [0.15, 0.3], "amp_range": [0.5, 1.0]},
            {"kind": "concentration", "dim": 1, "center": [0.0], "width": 0.5, "amp": 1.0},
            {"kind": "concentration", "dim": 1, "center": [0.0], "width": 0.25, "amp": 1.0},
            {"kind": "concentration", "dim": 1, "center": [0.0], "width": 0.125, "amp": 1.0},
            {"kind": "random_fourier", "dim": 1, "seed": None, "n_modes": 5,
             "max_mode": 3, "amp": 0.5, "cutoff_radius": 0.9, "cutoff_transition": 0.4},
        ]
    else:
        specs = [
            {"kind": "gaussian_bump", "dim": 2, "center": [0.0, 0.0], "width": 0.12, "amp": 1.0},
            {"kind": "gaussian_bump", "dim": 2, "center": [0.2, -0.15], "width": 0.1, "amp": 0.8},
            {"kind": "modulated_bump", "dim": 2, "center": [0.0, 0.0], "width": 0.15,
             "amp": 1.0, "freq": 2.0, "phase": 0.0, "direction": [1.0, 0.5]},
            {"kind": "multi_bump", "dim": 2, "seed": None, "count": 3,
             "center_box": 0.25, "width_range": [0.08, 0.12], "amp_range": [0.5, 1.0]},
        ]
    return specs


def generate_corpus(specs, domain: Domain, seed: int):
    """Sample a list of family specs; deterministic for a fixed seed.

    Spec entries with ``"seed": None`` receive seeds derived from the
    master seed and their position.  Returns (functions, manifest).
    """
    functions = []
    entries = []
    for i, spec in enumerate(specs):
        if isinstance(spec, Family):
            fam = spec
        else:
            spec = dict(spec)
            if spec.get("seed", "x") is None:
                spec["seed"] = int(seed + 7919 * (i + 1))
            fam = family_from_dict(spec)
        u = sample(domain, fam)
        fid = f"{domain.dim}d{i:02d}-{fam.kind}"
        functions.append(CorpusFunction(fid, u, fam))
        entries.append({
            "id": fid,
            "family": fam.to_dict(),
            "sha256": hashlib.sha256(u.values.tobytes()).hexdigest(),
        })
    manifest = {
        "seed": int(seed),
        "domain": {"dim": domain.dim, "n": domain.points_per_axis,
                   "half_width": domain.half_width,
                   "margin": domain.support_margin},
        "functions": entries,
    }
    return functions, manifest


# ---------------------------------------------------------------------------
# evaluation cache

class EvalCache:
    """Memoizes the expensive ingredients shared across cases.

    Keyed by corpus-function id, so reuse a cache only within one corpus
    at one resolution.
    """

    def __init__(self, stride: int = 1, radius_count: int | None = None):
        self.stride = int(stride)
        self.radius_count = radius_count
        self._fields = {}
        self._powints = {}
        self._campanato = {}
        self._bmo = {}
        self._gagliardo = {}
        self._sups = {}

    def center_grid(self) -> CenterGrid:
        return CenterGrid(self.stride)

    def radius_grid(self, domain: Domain, rho: float) -> RadiusGrid:
        return RadiusGrid.build(domain, rho, self.radius_count)

    def fields(self, cf: CorpusFunction, *orders) -> dict:
        out = {}
        for o in orders:
            key = (cf.fid, o)
            if key not in self._fields:
                self._fields[key] = derivative_field(cf.grid, o)
            out[o] = self._fields[key]
        return out

    def power_integral(self, cf: CorpusFunction, order: int, power: float) -> float:
        """h^N sum |D^order u|^power."""
        key = (cf.fid, order, power)
        if key not in self._powints:
            fld = self.fields(cf, order)[order]
            hN = cf.grid.domain.spacing ** cf.grid.domain.dim
            self._powints[key] = float(hN * np.sum(fld.magnitudes ** power))
        return self._powints[key]

    def campanato(self, cf: CorpusFunction, q: int, lam: float, degree: int,
                  rho: float) -> float:
        key = (cf.fid, q, lam, degree, rho)
        if key not in self._campanato:
            dom = cf.grid.domain
            det = campanato_seminorm_detail(
                cf.grid, q, lam, degree, rho,
                radius_grid=self.radius_grid(dom, rho),
                center_grid=self.center_grid())
            self._campanato[key] = det.value
        return self._campanato[key]

    def morrey(self, cf, q, lam, rho) -> float:
        return self.campanato(cf, q if q in (1, 2) else 1, lam, 0, rho)

    def bmo(self, cf: CorpusFunction, rho: float) -> float:
        key = (cf.fid, rho)
        if key not in self._bmo:
            dom = cf.grid.domain
            det = bmo_seminorm_detail(cf.grid, rho,
                                      radius_grid=self.radius_grid(dom, rho),
                                      center_grid=self.center_grid())
            self._bmo[key] = det.value
        return self._bmo[key]

    def gagliardo(self, cf: CorpusFunction, k: int, sigma: float, p: float) -> float:
        key = (cf.fid, k, sigma, p)
        if key not in self._gagliardo:
            fld = self.fields(cf, k)[k]
            self._gagliardo[key] = gagliardo_energy(fld, sigma, p)
        return self._gagliardo[key]

    def volume_sup(self, cf: CorpusFunction, q: float, alpha: float,
                   rho: float) -> float:
        key = ("vol", cf.fid, q, alpha, rho)
        if key not in self._sups:
            dom = cf.grid.domain
            self._sups[key] = sup_volume_integral(
                cf.grid, q, alpha, rho,
                radius_grid=self.radius_grid(dom, rho),
                center_grid=self.center_grid()).value
        return self._sups[key]

    def volume_sup_single(self, cf: CorpusFunction, q: float, radius: float) -> float:
        key = ("vol1", cf.fid, q, radius)
        if key not in self._sups:
            dom = cf.grid.domain
            hN = dom.spacing ** dom.dim
            rgrid = RadiusGrid((float(radius),), radius * (1 + 1e-12))
            self._sups[key] = sup_volume_integral(
                cf.grid, q, 0.0, radius * (1 + 1e-12), radius_grid=rgrid,
                center_grid=self.center_grid()).value
        return self._sups[key]

    def mean_sup_single(self, cf: CorpusFunction, t: float, radius: float) -> float:
        key = ("mean1", cf.fid, t, radius)
        if key not in self._sups:
            self._sups[key] = sup_single_radius_mean(
                cf.grid, t, radius, center_grid=self.center_grid()).value
        return self._sups[key]


# ---------------------------------------------------------------------------
# reports

@dataclass
class RatioReport:
    case: InequalityCase
    function_id: str
    lhs: float
    rhs_factors: dict
    ratio: float
    resolution: int
    notes: str = "ratio is an empirical lower bound on the admissible constant"
    flags: list = field(default_factory=list)

    def to_record(self) -> dict:
        return {"case": self.case.to_dict(), "function": self.function_id,
                "lhs": self.lhs, "rhs_factors": self.rhs_factors,
                "ratio": self.ratio, "resolution": self.resolution,
                "notes": self.notes, "flags": self.flags}


def _mk_report(case, cf, lhs, factors, rhs) -> RatioReport:
    flags = []
    if lhs == 0.0:
        ratio = 0.0
    elif rhs == 0.0:
        flags.append("rhs-zero-with-positive-lhs")
        ratio = math.inf
    else:
        ratio = lhs / rhs
    return RatioReport(case, cf.fid, float(lhs), factors, float(ratio),
                       cf.grid.domain.points_per_axis, flags=flags)


# ---------------------------------------------------------------------------
# evaluators

def _energy(cache, cf, case):
    fields = cache.fields(cf, case.k, case.l)
    return sobolev_energy(cf.grid, case.k, case.l, case.p, case.rho, fields)


def evaluate_theorem1(case: InequalityCase, cf: CorpusFunction,
                      cache: EvalCache) -> RatioReport:
    validate_case(case)
    q, p, lam, rho, k, l = case.q, case.p, case.lam, case.rho, case.k, case.l
    Ilq = cache.power_integral(cf, l, q)
    camp = cache.campanato(cf, 1, lam, l, rho)
    if not math.isfinite(rho):
        energy = cache.power_integral(cf, k, p)
        lhs = Ilq
        rhs = camp ** (q - p) * energy
        factors = {"campanato": camp, "energy": energy}
    else:
        energy = _energy(cache, cf, case)
        lhs = rho ** (l * q) * Ilq
        factors = {"campanato": camp, "campanato_scaled": rho ** (-lam) * camp,
                   "energy": energy}
        rhs = factors["campanato_scaled"] ** (q - p) * energy
    return _mk_report(case, cf, lhs, factors, rhs)


def evaluate_theorem2(case: InequalityCase, cf: CorpusFunction,
                      cache: EvalCache) -> RatioReport:
    validate_case(case)
    q, p, lam, rho, k, l, sig = (case.q, case.p, case.lam, case.rho, case.k,
                                 case.l, case.sigma)
    Ilq = cache.power_integral(cf, l, q)
    camp = cache.campanato(cf, 1, lam, l, rho)
    G = cache.gagliardo(cf, k, sig, p)
    if not math.isfinite(rho):
        lhs = Ilq
        rhs = camp ** (q - p) * G
        factors = {"campanato": camp, "gagliardo": G}
    else:
        lhs = rho ** (l * q) * Ilq
        Ilp = cache.power_integral(cf, l, p)
        energy = rho ** ((k + sig) * p) * G + rho ** (l * p) * Ilp
        factors = {"campanato": camp, "campanato_scaled": rho ** (-lam) * camp,
                   "gagliardo": G, "energy": energy}
        rhs = factors["campanato_scaled"] ** (q - p) * energy
    return _mk_report(case, cf, lhs, factors, rhs)


def _eval_sobolev(case, cf, cache):
    p, q = case.p, case.q
    lhs = cache.power_integral(cf, 0, q) ** (p / q)
    grad = cache.power_integral(cf, 1, p)
    mass = cache.power_integral(cf, 0, p)
    factors = {"grad": grad, "mass": mass}
    return _mk_report(case, cf, lhs, factors, grad + mass)


def _eval_sobolev_critical(case, cf, cache):
    p = case.p
    lhs = cache.power_integral(cf, 0, case.q) ** (1.0 - p / case.dim)
    grad = cache.power_integral(cf, 1, p)
    return _mk_report(case, cf, lhs, {"grad": grad}, grad)


def _eval_lions(case, cf, cache):
    p, q = case.p, case.q
    lhs = cache.power_integral(cf, 0, q)
    local = cache.volume_sup_single(cf, q, 1.0)
    grad = cache.power_integral(cf, 1, p)
    mass = cache.power_integral(cf, 0, p)
    factors = {"local_mass_sup": local, "grad": grad, "mass": mass}
    rhs = local ** (1.0 - p / q) * (grad + mass)
    return _mk_report(case, cf, lhs, factors, rhs)


def _eval_lions_dilation(case, cf, cache):
    p, N = case.p, case.dim
    lhs = cache.power_integral(cf, 0, case.q)
    S = cache.volume_sup(cf, p, -p, INF)
    grad = cache.power_integral(cf, 1, p)
    factors = {"scaled_mass_sup": S, "grad": grad}
    rhs = S ** (p / (N - p)) * grad
    return _mk_report(case, cf, lhs, factors, rhs)


def _eval_morrey_critical(case, cf, cache):
    p, q, N, k, l = case.p, case.q, case.dim, case.k, case.l
    lhs = cache.power_integral(cf, l, q)
    M = cache.morrey(cf, 1, N / p - k, INF)
    grad = cache.power_integral(cf, k, p)
    factors = {"morrey": M, "grad": grad}
    rhs = M ** (q - p) * grad
    return _mk_report(case, cf, lhs, factors, rhs)


def _eval_particular(case, cf, cache):
    p, q, lam, rho = case.p, case.q, case.lam, case.rho
    lhs = cache.power_integral(cf, 0, q)
    M = cache.morrey(cf, 1, lam, rho)
    grad = cache.power_integral(cf, 1, p)
    mass = cache.power_integral(cf, 0, p)
    energy = rho ** p * grad + mass
    factors = {"morrey_scaled": rho ** (-lam) * M, "energy": energy}
    rhs = factors["morrey_scaled"] ** (q - p) * energy
    return _mk_report(case, cf, lhs, factors, rhs)


def _eval_localized_sobolev(case, cf, cache):
    p, q, lam, rho, k, l, N = (case.p, case.q, case.lam, case.rho, case.k,
                               case.l, case.dim)
    t = N / lam
    lhs = rho ** (l * q) * cache.power_integral(cf, l, q)
    S = cache.mean_sup_single(cf, t, rho)
    energy = _energy(cache, cf, case)
    factors = {"local_mean_sup": S, "energy": energy}
    rhs = S ** ((q - p) * lam / N) * energy
    return _mk_report(case, cf, lhs, factors, rhs)


def _eval_lions_higher(case, cf, cache):
    p, q, rho, k, l = case.p, case.q, case.rho, case.k, case.l
    lhs = rho ** (l * q) * cache.power_integral(cf, 0, q)
    S = cache.mean_sup_single(cf, q, rho)
    Ik = cache.power_integral(cf, k, p)
    I0 = cache.power_integral(cf, 0, p)
    energy = rho ** (k * p) * Ik + rho ** (l * p) * I0
    factors = {"local_mean_sup": S, "energy": energy}
    rhs = S ** (1.0 - p / q) * energy
    return _mk_report(case, cf, lhs, factors, rhs)


def _eval_linf_interp(case, cf, cache):
    p, q, rho, l = case.p, case.q, case.rho, case.l
    lhs = rho ** (l * q) * cache.power_integral(cf, l, q)
    linf = float(np.max(np.abs(cf.grid.values)))
    energy = _energy(cache, cf, case)
    factors = {"linf": linf, "energy": energy}
    rhs = linf ** (q - p) * energy
    return _mk_report(case, cf, lhs, factors, rhs)


def _eval_bmo_gn_local(case, cf, cache):
    p, q, rho, l = case.p, case.q, case.rho, case.l
    lhs = rho ** (l * q) * cache.power_integral(cf, l, q)
    B = cache.bmo(cf, rho)
    energy = _energy(cache, cf, case)
    factors = {"bmo": B, "energy": energy}
    rhs = B ** (q - p) * energy
    return _mk_report(case, cf, lhs, factors, rhs)


def _eval_bmo_gn_hom(case, cf, cache):
    p, q, k, l = case.p, case.q, case.k, case.l
    lhs = cache.power_integral(cf, l, q)
    B = cache.bmo(cf, INF)
    grad = cache.power_integral(cf, k, p)
    factors = {"bmo": B, "grad": grad}
    rhs = B ** ((k / l - 1.0) * p) * grad
    return _mk_report(case, cf, lhs, factors, rhs)


def _eval_frac_critical(case, cf, cache):
    p, q, N, k, sig = case.p, case.q, case.dim, case.k, case.sigma
    lhs = cache.power_integral(cf, 0, q)
    M = cache.morrey(cf, 1, N / p - (k + sig), INF)
    G = cache.gagliardo(cf, k, sig, p)
    factors = {"morrey": M, "gagliardo": G}
    rhs = M ** (q - p) * G
    return _mk_report(case, cf, lhs, factors, rhs)


def _eval_frac_bmo(case, cf, cache):
    p, q, k, l, sig = case.p, case.q, case.k, case.l, case.sigma
    lhs = cache.power_integral(cf, l, q)
    B = cache.bmo(cf, INF)
    G = cache.gagliardo(cf, k, sig, p)
    factors = {"bmo": B, "gagliardo": G}
    rhs = B ** (((k + sig) / l - 1.0) * p) * G
    return _mk_report(case, cf, lhs, factors, rhs)


def _eval_gn_subscale(case, cf, cache):
    p, q, lam, rho, l, N = case.p, case.q, case.lam, case.rho, case.l, case.dim
    t = N / lam
    lhs = rho ** (l * q) * cache.power_integral(cf, l, q)
    mass_t = cache.power_integral(cf, 0, t)
    energy = _energy(cache, cf, case)
    factors = {"mass_t_scaled": rho ** (-N) * mass_t, "energy": energy}
    rhs = factors["mass_t_scaled"] ** ((q - p) / t) * energy
    return _mk_report(case, cf, lhs, factors, rhs)


_EVALUATORS = {
    "theorem1": evaluate_theorem1,
    "theorem2": evaluate_theorem2,
    "sobolev": _eval_sobolev,
    "sobolev_critical": _eval_sobolev_critical,
    "lions": _eval_lions,
    "lions_dilation": _eval_lions_dilation,
    "morrey_critical": _eval_morrey_critical,
    "particular": _eval_particular,
    "localized_sobolev": _eval_localized_sobolev,
    "lions_higher": _eval_lions_higher,
    "linf_interp": _eval_linf_interp,
    "bmo_gn_local": _eval_bmo_gn_local,
    "morrey_hom": evaluate_theorem1,
    "bmo_gn_hom": _eval_bmo_gn_hom,
    "frac_hom": evaluate_theorem2,
    "frac_critical": _eval_frac_critical,
    "frac_bmo": _eval_frac_bmo,
    "gn_subscale": _eval_gn_subscale,
}


def evaluate_named(name: str, case: InequalityCase, cf: CorpusFunction,
                   cache: EvalCache) -> RatioReport:
    if name not in _EVALUATORS:
        raise CaseValidationError(f"unknown case name {name!r}")
    validate_case(case)
    return _EVALUATORS[name](case, cf, cache)


def evaluate_case(case: InequalityCase, cf: CorpusFunction,
                  cache: EvalCache) -> RatioReport:
    return evaluate_named(case.name, case, cf, cache)


# ---------------------------------------------------------------------------
# default matrix

def default_matrix(dim: int):
    """Desk-scale case matrix covering both theorem hypothesis boundaries.

    Returns (cases, skipped) where skipped pairs infeasible tuples with
    the validation reason.
    """
    cases = []
    skipped = []

    def _try(case):
        try:
            validate_case(case)
            cases.append(case)
        except CaseValidationError as exc:
            skipped.append((case, str(exc)))

    for name, sigma in (("theorem1", None), ("theorem2", 0.5)):
        for (k, l) in ((1, 0), (2, 0), (2, 1)):
            for p in (1.5, 2.0):
                for q in (3.0, 4.0):
                    end = lam_endpoint(k, l, p, q, sigma)
                    lams = []
                    for lam in (-float(l), 0.0, end):
                        lam = lam + 0.0  # normalize -0.0
                        if lam not in lams:
                            lams.append(lam)
                    for lam in lams:
                        rhos = [0.5, 1.0]
                        if lam == end:
                            rhos.append(INF)
                        for rho in rhos:
                            _try(InequalityCase(name, dim, k, l, p, q, lam,
                                                sigma, rho))
    return cases, skipped


def default_named_cases(dim: int):
    """Representative parameter points for every catalog inequality."""
    N = dim
    raw = [
        InequalityCase("sobolev", N, 1, 0, 1.5, 3.0),
        InequalityCase("sobolev", N, 1, 0, 2.0, 4.0),
        InequalityCase("sobolev_critical", N, 1, 0, 1.5,
                       N * 1.5 / (N - 1.5) if N > 1.5 else 6.0),
        InequalityCase("lions", N, 1, 0, 1.5, 3.0, rho=1.0),
        InequalityCase("lions", N, 1, 0, 2.0, 4.0, rho=1.0),
        InequalityCase("lions_dilation", N, 1, 0, 1.5,
                       N * 1.5 / (N - 1.5) if N > 1.5 else 6.0),
        InequalityCase("morrey_critical", N, 1, 0, 1.5,
                       N * 1.5 / (N - 1.5) if N > 1.5 else 6.0),
        InequalityCase("particular", N, 1, 0, 1.5, 3.0, lam=0.5, rho=1.0),
        InequalityCase("particular", N, 1, 0, 1.5, 3.0, lam=0.0, rho=0.5),
        InequalityCase("localized_sobolev", N, 1, 0, 1.5, 3.0,
                       lam=N / 2.0, rho=1.0),
        InequalityCase("lions_higher", N, 1, 0, 1.5, 3.0, rho=1.0),
        InequalityCase("lions_higher", N, 2, 0, 2.0, 4.0, rho=0.5),
        InequalityCase("linf_interp", N, 2, 0, 2.0, 4.0, rho=1.0),
        InequalityCase("bmo_gn_local", N, 2, 1, 2.0, 3.0, rho=1.0),
        InequalityCase("bmo_gn_local", N, 2, 1, 2.0, 3.0, rho=0.5),
        InequalityCase("morrey_hom", N, 1, 0, 1.5, 3.0,
                       lam=lam_endpoint(1, 0, 1.5, 3.0)),
        InequalityCase("morrey_hom", N, 2, 1, 2.0, 3.0,
                       lam=lam_endpoint(2, 1, 2.0, 3.0)),
        InequalityCase("bmo_gn_hom", N, 2, 1, 1.5, 3.0),
        InequalityCase("frac_hom", N, 1, 0, 1.5, 3.0, sigma=0.5,
                       lam=lam_endpoint(1, 0, 1.5, 3.0, 0.5)),
        InequalityCase("frac_critical", N, 1, 0, 1.0,
                       N * 1.0 / (N - 1.5) if N > 1.5 else 4.0,
                       lam=N / 1.0 - 1.5, sigma=0.5),
        InequalityCase("frac_bmo", N, 2, 1, 2.0, 5.0, sigma=0.5),
        InequalityCase("gn_subscale", N, 1, 0, 1.5, 3.0, lam=N / 2.0, rho=1.0),
    ]
    cases = []
    skipped = []
    for c in raw:
        try:
            validate_case(c)
            cases.append(c)
        except CaseValidationError as exc:
            skipped.append((c, str(exc)))
    return cases, skipped


# ---------------------------------------------------------------------------
# studies

def scaling_study(case: InequalityCase, family: Family, domain: Domain,
                  scales=(0.5, 1.0, 2.0), stride: int = 1,
                  radius_count: int | None = None) -> dict:
    """Ratio of a (homogeneous) case under exact dilations u_s(x) = u(x/s)."""
    rows = []
    for s in scales:
        fam_s = family.dilated(s) if s != 1.0 else family
        u = sample(domain, fam_s)  # margin violation -> FamilyError
        cf = CorpusFunction(f"scale{s:g}", u, fam_s)
        cache = EvalCache(stride, radius_count)
        rep = evaluate_case(case, cf, cache)
        rows.append({"scale": s, "ratio": rep.ratio, "lhs": rep.lhs})
    ratios = [r["ratio"] for r in rows if r["ratio"] > 0]
    flatness = (max(ratios) / min(ratios)) if ratios else math.nan
    return {"case": case.to_dict(), "rows": rows, "flatness": flatness}


def refinement_study(case: InequalityCase, family: Family, domain: Domain,
                     factor: int = 2, stride: int = 1,
                     radius_count: int | None = None) -> dict:
    """Ratio at resolution n and factor*n with physically matched centers."""
    rows = []
    for mult in (1, factor):
        dom = domain if mult == 1 else domain.refined(mult)
        u = sample(dom, family)
        cf = CorpusFunction(f"n{dom.points_per_axis}", u, family)
        cache = EvalCache(stride * mult, radius_count)
        rep = evaluate_case(case, cf, cache)
        rows.append({"n": dom.points_per_axis, "ratio": rep.ratio})
    r1, r2 = rows[0]["ratio"], rows[1]["ratio"]
    drift = abs(r2 - r1) / max(abs(r1), 1e-300)
    return {"case": case.to_dict(), "rows": rows, "drift": drift}


def pointwise_study(corpus, k: int, l: int, seed: int, n_points: int = 50,
                    fractional: bool = False) -> dict:
    """Lemma-ratio sweeps over the corpus; reports the overall max ratio."""
    per_function = []
    best = 0.0
    for cf in corpus:
        summary = pw.lemma_sweep(cf.grid, k, l, seed, n_points,
                                 fractional=fractional)
        per_function.append({"function": cf.fid, **{
            kk: (list(v) if isinstance(v, tuple) else v)
            for kk, v in summary.items() if kk != "argmax"}})
        best = max(best, summary["max_ratio"])
    return {"k": k, "l": l, "fractional": fractional, "seed": seed,
            "max_ratio": best, "per_function": per_function}


def translation_check(case: InequalityCase, cf: CorpusFunction,
                      cache: EvalCache, shift_cells) -> dict:
    """Relative ratio change under an integer-cell translation.

    The shift must be a multiple of the center stride (so the strided sup
    lattice maps onto itself) and keep the support inside the margin band.
    """
    shift = np.atleast_1d(np.asarray(shift_cells, dtype=int))
    if np.any(shift % cache.stride != 0):
        raise GridError("shift must be a multiple of the center stride")
    moved = cf.grid.shifted(shift)
    moved.check_margin()
    cf2 = CorpusFunction(cf.fid + "+shift", moved, None)
    cache2 = EvalCache(cache.stride, cache.radius_count)
    r0 = evaluate_case(case, cf, cache)
    r1 = evaluate_case(case, cf2, cache2)
    denom = max(abs(r0.ratio), 1e-300)
    return {"ratio": r0.ratio, "shifted_ratio": r1.ratio,
            "rel_diff": abs(r1.ratio - r0.ratio) / denom}


# ---------------------------------------------------------------------------
# suite runner

@dataclass
class SuiteResult:
    reports: list
    skipped: list              # (case dict, reason)
    failures: list             # invariant failure strings
    summary_rows: list         # per-case CSV rows

    @property
    def ok(self) -> bool:
        return not self.failures


def run_suite(corpora: dict, matrix_cases: dict, named_cases: dict,
              stride: dict | int = 1, radius_count: int | None = None,
              ratio_bound: float | None = None,
              check_translation: bool = True) -> SuiteResult:
    """Evaluate all cases over all corpus functions, in deterministic order.

    corpora / matrix_cases / named_cases are keyed by dim.  Invariants
    checked here: every ratio finite and flag-free; optional ratio_bound;
    a translation-equivariance spot check per dim.
    """
    reports = []
    skipped = []
    failures = []
    caches = {}
    for dim in sorted(corpora):
        st = stride[dim] if isinstance(stride, dict) else stride
        caches[dim] = EvalCache(st, radius_count)

    for dim in sorted(corpora):
        corpus = corpora[dim]
        cache = caches[dim]
        cases = list(matrix_cases.get(dim, [])) + list(named_cases.get(dim, []))
        for case in cases:
            try:
                validate_case(case)
            except CaseValidationError as exc:
                skipped.append((case.to_dict(), str(exc)))
                continue
            for cf in corpus:
                rep = evaluate_case(case, cf, cache)
                reports.append(rep)
                if rep.flags:
                    failures.append(
                        f"{case.label()} on {cf.fid}: flags {rep.flags}")
                elif not math.isfinite(rep.ratio):
                    failures.append(
                        f"{case.label()} on {cf.fid}: non-finite ratio")
                elif ratio_bound is not None and rep.ratio > ratio_bound:
                    failures.append(
                        f"{case.label()} on {cf.fid}: ratio {rep.ratio:g} "
                        f"exceeds bound {ratio_bound:g}")

        if check_translation and corpus:
            cf = corpus[0]
            case = next((c for c in matrix_cases.get(dim, [])
                         if c.name == "theorem1" and math.isfinite(c.rho)), None)
            if case is not None and cf.family is not None:
                shift = [cache.stride] * dim
                try:
                    res = translation_check(case, cf, cache, shift)
                    if res["rel_diff"] > 1e-10:
                        failures.append(
                            f"translation equivariance violated for "
                            f"{case.label()} on {cf.fid}: rel diff "
                            f"{res['rel_diff']:.3e}")
                except GridError as exc:
                    skipped.append((case.to_dict(), f"translation check: {exc}"))

    summary = _summarize(reports)
    return SuiteResult(reports, skipped, failures, summary)


def _summarize(reports) -> list:
    by_case = {}
    for rep in reports:
        key = rep.case.label()
        cur = by_case.get(key)
        if cur is None or rep.ratio > cur["max_ratio"]:
            by_case[key] = {"case": key, "max_ratio": rep.ratio,
                            "argmax_function": rep.function_id,
                            "flatness": "", "drift": ""}
    return [by_case[k] for k in sorted(by_case)]


def write_jsonl(path, records):
    with open(path, "w") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")


def write_csv(path, rows, columns):
    import csv
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=columns)
        w.writeheader()
        for row in rows:
            w.writerow(row)
