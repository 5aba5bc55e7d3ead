"""Command-line driver: corpus generation, seminorm tables, the inequality
suite, and the scaling/refinement/pointwise studies.

Exit codes: 0 success, 1 asserted invariant failed, 2 usage/validation/IO
error.  Reports stream as JSON-lines (no timestamps inside records, so
identical config + seed reproduces byte-identical outputs); run metadata
including a timestamp goes to a separate meta file.
"""

from __future__ import annotations

import json
import math
import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .families import FamilyError
from .grid import Domain, GridError, read_grid, write_grid
from .harness import (CorpusFunction, EvalCache, default_corpus_specs,
                      default_matrix, default_named_cases, generate_corpus,
                      pointwise_study, refinement_study, run_suite,
                      scaling_study, write_csv, write_jsonl)
from .seminorms import (INF, CenterGrid, RadiusGrid, bmo_seminorm,
                        campanato_seminorm, gagliardo_energy, morrey_norm)
from .grid import derivative_field, lp_norm

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_USAGE = 2


class CliError(click.ClickException):
    exit_code = EXIT_USAGE


def _load(config_path, out, seed, parallelism, resolution) -> RunConfig:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        raise CliError(str(exc))
    if out is not None:
        cfg.out_dir = str(out)
    if seed is not None:
        cfg.seed = int(seed)
    if parallelism is not None:
        cfg.parallelism = int(parallelism)
    if resolution is not None:
        try:
            cfg = cfg.with_resolution(int(resolution))
        except GridError as exc:
            raise CliError(f"bad --resolution: {exc}")
    _apply_parallelism(cfg.parallelism)
    return cfg


def _apply_parallelism(n: int):
    try:
        import numba
        numba.set_num_threads(max(1, n))
    except ImportError:
        pass


def _corpus_specs(cfg: RunConfig, dim: int):
    if cfg.corpus == "default":
        return default_corpus_specs(dim)
    return [s for s in cfg.corpus if int(s.get("dim", 0)) == dim]


def _build_corpora(cfg: RunConfig):
    """Corpus per dim, either loaded from dumps or generated from specs."""
    corpora = {}
    manifests = {}
    if cfg.corpus_dir:
        mpath = Path(cfg.corpus_dir) / "manifest.json"
        try:
            manifest = json.loads(mpath.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read corpus manifest {mpath}: {exc}")
        by_dim = {}
        for entry in manifest["functions"]:
            path = Path(cfg.corpus_dir) / f"{entry['id']}.grid"
            try:
                u = read_grid(path, validate_margin=cfg.validate_margin)
            except (OSError, GridError) as exc:
                raise CliError(f"corrupted grid dump {path}: {exc}")
            by_dim.setdefault(u.domain.dim, []).append(
                CorpusFunction(entry["id"], u, None))
        corpora = by_dim
        manifests = {d: manifest for d in by_dim}
        return corpora, manifests
    for dom in cfg.grids:
        specs = _corpus_specs(cfg, dom.dim)
        if not specs:
            continue
        try:
            funcs, manifest = generate_corpus(specs, dom, cfg.seed)
        except (FamilyError, GridError) as exc:
            raise CliError(f"corpus generation failed: {exc}")
        corpora[dom.dim] = funcs
        manifests[dom.dim] = manifest
    return corpora, manifests


def _cases(cfg: RunConfig):
    matrix = {}
    named = {}
    skipped = []
    for dom in cfg.grids:
        d = dom.dim
        if cfg.matrix == "default":
            matrix[d], sk = default_matrix(d)
            skipped.extend(sk)
        else:
            matrix[d] = [c for c in cfg.matrix if c.dim == d]
        if cfg.named_cases == "default":
            named[d], sk = default_named_cases(d)
            skipped.extend(sk)
        else:
            named[d] = [c for c in cfg.named_cases if c.dim == d]
    return matrix, named, [(c.to_dict(), r) for c, r in skipped]


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_meta(out: Path, cfg: RunConfig, extra=None):
    meta = {"version": __version__, "seed": cfg.seed,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S")}
    if extra:
        meta.update(extra)
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n")


@click.group()
@click.version_option(__version__)
def main():
    """Numerical laboratory for scale-weighted seminorms and the Sobolev
    interpolation inequalities built from them."""


_common = [
    click.option("--config", "config_path", required=True,
                 type=click.Path(exists=True, dir_okay=False),
                 help="JSON run configuration."),
    click.option("--out", type=click.Path(file_okay=False), default=None,
                 help="Output directory (overrides config)."),
    click.option("--seed", type=int, default=None, help="Seed override."),
    click.option("--parallelism", type=int, default=None,
                 help="Kernel thread count override."),
    click.option("--resolution", type=int, default=None,
                 help="Override points-per-axis on every grid."),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@main.command()
@common_options
def corpus(config_path, out, seed, parallelism, resolution):
    """Generate the corpus: grid dumps plus a manifest."""
    cfg = _load(config_path, out, seed, parallelism, resolution)
    outdir = _outdir(cfg)
    corpora, manifests = _build_corpora(cfg)
    if not corpora:
        raise CliError("no corpus functions configured")
    merged = {"seed": cfg.seed, "functions": [], "domains": []}
    total = 0
    for dim in sorted(corpora):
        for cf in corpora[dim]:
            write_grid(outdir / f"{cf.fid}.grid", cf.grid)
            total += 1
        merged["functions"].extend(manifests[dim]["functions"])
        merged["domains"].append(manifests[dim]["domain"])
    (outdir / "manifest.json").write_text(
        json.dumps(merged, indent=2, sort_keys=True) + "\n")
    _write_meta(outdir, cfg)
    click.echo(f"wrote {total} grid dumps + manifest to {outdir}")


@main.command()
@common_options
@click.option("--function", "function_id", required=True,
              help="Corpus function id (see manifest).")
def norms(config_path, out, seed, parallelism, resolution, function_id):
    """Table of every seminorm of one function over a parameter grid."""
    cfg = _load(config_path, out, seed, parallelism, resolution)
    corpora, _ = _build_corpora(cfg)
    target = None
    for funcs in corpora.values():
        for cf in funcs:
            if cf.fid == function_id:
                target = cf
    if target is None:
        raise CliError(f"function {function_id!r} not found in corpus")
    u = target.grid
    dom = u.domain
    n = dom.points_per_axis
    cgrid = CenterGrid(cfg.stride_for(dom.dim))
    lams = (0.0, 0.5, 1.0)
    rhos = (0.5, 1.0, INF)
    rows = []

    def rg(rho):
        return RadiusGrid.build(dom, rho, cfg.radius_count)

    for q in (1, 2):
        for lam in lams:
            for rho in rhos:
                rows.append({"functional": "morrey", "q": q, "lam": lam,
                             "degree": "", "rho": rho, "p": "", "sigma": "",
                             "value": morrey_norm(u, q, lam, rho, rg(rho), cgrid),
                             "n": n})
    for q in (1, 2):
        for degree in (0, 1, 2):
            for lam in lams:
                for rho in rhos:
                    rows.append({"functional": "campanato", "q": q, "lam": lam,
                                 "degree": degree, "rho": rho, "p": "", "sigma": "",
                                 "value": campanato_seminorm(
                                     u, q, lam, degree, rho, rg(rho), cgrid),
                                 "n": n})
    for rho in rhos:
        rows.append({"functional": "bmo", "q": "", "lam": "", "degree": "",
                     "rho": rho, "p": "", "sigma": "",
                     "value": bmo_seminorm(u, rho, rg(rho), cgrid), "n": n})
    for p in (1.5, 2.0, 3.0, 4.0):
        rows.append({"functional": "lp_norm", "q": "", "lam": "", "degree": "",
                     "rho": "", "p": p, "sigma": "",
                     "value": lp_norm(u, p, dom), "n": n})
    for p in (1.5, 2.0):
        fld = derivative_field(u, 1)
        rows.append({"functional": "gagliardo_energy", "q": "", "lam": "",
                     "degree": 1, "rho": "", "p": p, "sigma": 0.5,
                     "value": gagliardo_energy(fld, 0.5, p), "n": n})
    for row in rows:
        row["rho"] = "inf" if row["rho"] == INF else row["rho"]
    outdir = _outdir(cfg)
    path = outdir / f"norms_{function_id}.csv"
    write_csv(path, rows, ["functional", "q", "lam", "degree", "rho", "p",
                           "sigma", "value", "n"])
    for row in rows:
        click.echo(" ".join(f"{k}={row[k]}" for k in
                            ("functional", "q", "lam", "degree", "rho", "value")))
    click.echo(f"wrote {path}")


@main.command()
@common_options
def check(config_path, out, seed, parallelism, resolution):
    """Run the full inequality suite; exit 0 iff every invariant passed."""
    cfg = _load(config_path, out, seed, parallelism, resolution)
    outdir = _outdir(cfg)
    corpora, _ = _build_corpora(cfg)
    if not corpora:
        raise CliError("no corpus functions configured")
    matrix, named, pre_skipped = _cases(cfg)
    result = run_suite(corpora, matrix, named,
                       stride=cfg.center_stride,
                       radius_count=cfg.radius_count,
                       ratio_bound=cfg.ratio_bound,
                       check_translation=cfg.check_translation)
    records = [rep.to_record() for rep in result.reports]
    write_jsonl(outdir / "reports.jsonl", records)
    write_jsonl(outdir / "skipped.jsonl",
                [{"case": c, "reason": r} for c, r in
                 pre_skipped + result.skipped])
    write_csv(outdir / "summary.csv", result.summary_rows,
              ["case", "max_ratio", "argmax_function", "flatness", "drift"])
    _write_meta(outdir, cfg, {"n_reports": len(records),
                              "n_skipped": len(pre_skipped) + len(result.skipped),
                              "n_failures": len(result.failures)})
    click.echo(f"{len(records)} reports, "
               f"{len(pre_skipped) + len(result.skipped)} skipped cases")
    if result.failures:
        (outdir / "failures.txt").write_text("\n".join(result.failures) + "\n")
        for line in result.failures[:20]:
            click.echo(f"FAIL {line}", err=True)
        sys.exit(EXIT_INVARIANT)
    click.echo("all asserted invariants passed")


@main.command()
@common_options
@click.option("--kind", type=click.Choice(["scaling", "refinement", "pointwise"]),
              required=True)
def study(config_path, out, seed, parallelism, resolution, kind):
    """Scaling, refinement, or pointwise studies; writes CSV tables."""
    cfg = _load(config_path, out, seed, parallelism, resolution)
    outdir = _outdir(cfg)
    matrix, named, _ = _cases(cfg)
    rows = []
    if kind == "scaling":
        for dom in cfg.grids:
            d = dom.dim
            base = _scaling_family(cfg, d)
            hom = [c for c in matrix.get(d, []) + named.get(d, [])
                   if not math.isfinite(c.rho)]
            for case in hom:
                try:
                    res = scaling_study(case, base, dom, cfg.scales,
                                        cfg.stride_for(d), cfg.radius_count)
                except (FamilyError, GridError) as exc:
                    rows.append({"case": case.label(), "scale": "",
                                 "ratio": "", "flatness": f"skipped: {exc}"})
                    continue
                for r in res["rows"]:
                    rows.append({"case": case.label(), "scale": r["scale"],
                                 "ratio": r["ratio"],
                                 "flatness": res["flatness"]})
        cols = ["case", "scale", "ratio", "flatness"]
    elif kind == "refinement":
        for dom in cfg.grids:
            d = dom.dim
            base = _scaling_family(cfg, d)
            for case in matrix.get(d, [])[:8]:
                res = refinement_study(case, base, dom, 2,
                                       cfg.stride_for(d), cfg.radius_count)
                for r in res["rows"]:
                    rows.append({"case": case.label(), "n": r["n"],
                                 "ratio": r["ratio"], "drift": res["drift"]})
        cols = ["case", "n", "ratio", "drift"]
    else:
        corpora, _ = _build_corpora(cfg)
        for dim in sorted(corpora):
            for (k, l) in ((1, 0), (2, 0), (2, 1)):
                for frac in (False, True):
                    res = pointwise_study(corpora[dim], k, l, cfg.seed,
                                          cfg.study_points, frac)
                    for pf in res["per_function"]:
                        rows.append({"dim": dim, "k": k, "l": l,
                                     "fractional": frac,
                                     "function": pf["function"],
                                     "max_ratio": pf["max_ratio"],
                                     "points": cfg.study_points})
        cols = ["dim", "k", "l", "fractional", "function", "max_ratio", "points"]
    path = outdir / f"study_{kind}.csv"
    write_csv(path, rows, cols)
    _write_meta(outdir, cfg, {"study": kind, "rows": len(rows)})
    click.echo(f"wrote {path} ({len(rows)} rows)")


def _scaling_family(cfg: RunConfig, dim: int):
    from .families import family_from_dict
    specs = _corpus_specs(cfg, dim)
    for s in specs:
        if s.get("kind") == "gaussian_bump":
            return family_from_dict(s)
    if specs:
        return family_from_dict(specs[0])
    raise CliError(f"no corpus family for dim {dim}")


if __name__ == "__main__":
    main()
