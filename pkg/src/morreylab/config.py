"""Run configuration: a strict JSON document driving the CLI.

Unknown keys anywhere in the document are rejected, and every referenced
module invariant (grid geometry, family support, case hypotheses) is
re-validated at load time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .grid import Domain, GridError
from .harness import InequalityCase

__all__ = ["ConfigError", "RunConfig", "load_config", "default_config_dict"]


class ConfigError(ValueError):
    pass


_TOP_KEYS = {
    "grids", "corpus", "center_stride", "radius_count", "seed", "out_dir",
    "parallelism", "matrix", "named_cases", "corpus_dir", "validate_margin",
    "ratio_bound", "check_translation", "scales", "study_points",
}
_GRID_KEYS = {"dim", "n", "half_width", "margin"}


@dataclass
class RunConfig:
    grids: list                    # Domain per requested dim
    corpus: object                 # "default" or list of family dicts
    center_stride: dict            # dim -> stride
    radius_count: int | None
    seed: int
    out_dir: str
    parallelism: int
    matrix: object                 # "default" or list of case dicts
    named_cases: object            # "default" or list of case dicts
    corpus_dir: str | None
    validate_margin: bool
    ratio_bound: float | None
    check_translation: bool
    scales: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    study_points: int = 50

    def domains(self) -> dict:
        return {d.dim: d for d in self.grids}

    def stride_for(self, dim: int) -> int:
        return int(self.center_stride.get(dim, 1))

    def with_resolution(self, n: int) -> "RunConfig":
        """Override points_per_axis on every grid (CLI --resolution)."""
        import copy
        out = copy.deepcopy(self)
        out.grids = [Domain(d.dim, n, d.half_width, d.support_margin)
                     for d in self.grids]
        return out


def default_config_dict() -> dict:
    return {
        "grids": [
            {"dim": 1, "n": 256, "half_width": 2.0, "margin": 0.25},
            {"dim": 2, "n": 128, "half_width": 1.0, "margin": 0.25},
        ],
        "corpus": "default",
        "center_stride": {"1": 2, "2": 8},
        "radius_count": None,
        "seed": 1234,
        "out_dir": "out",
        "parallelism": 2,
        "matrix": "default",
        "named_cases": "default",
        "corpus_dir": None,
        "validate_margin": True,
        "ratio_bound": None,
        "check_translation": True,
    }


def _reject_unknown(d: dict, allowed: set, where: str):
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "config")
    merged = default_config_dict()
    merged.update(doc)

    grids = []
    for g in merged["grids"]:
        _reject_unknown(g, _GRID_KEYS, "grids entry")
        try:
            grids.append(Domain(int(g["dim"]), int(g["n"]),
                                float(g["half_width"]), float(g["margin"])))
        except (KeyError, GridError, ValueError) as exc:
            raise ConfigError(f"invalid grid entry {g}: {exc}") from exc
    if len({d.dim for d in grids}) != len(grids):
        raise ConfigError("duplicate dim in grids")

    stride = {}
    cs = merged["center_stride"]
    if isinstance(cs, int):
        stride = {d.dim: cs for d in grids}
    else:
        for key, val in cs.items():
            stride[int(key)] = int(val)
    for v in stride.values():
        if v < 1:
            raise ConfigError("center_stride must be >= 1")

    matrix = merged["matrix"]
    if matrix != "default":
        matrix = [InequalityCase.from_dict(c) for c in matrix]
    named = merged["named_cases"]
    if named != "default":
        named = [InequalityCase.from_dict(c) for c in named]

    rb = merged["ratio_bound"]
    rc = merged["radius_count"]
    return RunConfig(
        grids=grids,
        corpus=merged["corpus"],
        center_stride=stride,
        radius_count=int(rc) if rc is not None else None,
        seed=int(merged["seed"]),
        out_dir=str(merged["out_dir"]),
        parallelism=int(merged["parallelism"]),
        matrix=matrix,
        named_cases=named,
        corpus_dir=merged["corpus_dir"],
        validate_margin=bool(merged["validate_margin"]),
        ratio_bound=float(rb) if rb is not None else None,
        check_translation=bool(merged["check_translation"]),
        scales=[float(s) for s in merged.get("scales", [0.5, 1.0, 2.0])],
        study_points=int(merged.get("study_points", 50)),
    )


def load_config(path) -> RunConfig:
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)
