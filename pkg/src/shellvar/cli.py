"""Command line front end: ``shellvar validate|vary|flow|export --config cfg.json``.

Exit codes: 0 pass, 1 residual or tolerance failure, 2 configuration or I/O
error, 3 flow not converged.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import io
from .calculus import (BoundarySpec, DisplacementField, TrigPolynomial, random_displacement,
                       rotation_field, translation_field)
from .errors import ConfigError, DomainError, SelfIntersection, ShellVarError
from .flow import PRESETS, FlowConfig, ProfileCurve, best_fit_circle, resample, run_flow
from .grid import CENTRAL2, ParamDomain
from .strain import infinitesimal_strains
from .surface import FAMILIES, SurfaceFamily, curvature_line_check, evaluate_frame_field, family_from_dict
from .validation import ANALYTIC, compare_variations, convergence_study, identity_residuals
from .variation import FunctionalCoefficients

log = logging.getLogger("shellvar")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NOT_CONVERGED = 0, 1, 2, 3

_NUM = {"type": "number"}
_VEC3 = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}
_RANGE = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 1}, "minItems": 1}
_POINTS = {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
           "minItems": 4}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


SCHEMA = _obj({
    "surface": _obj({
        "family": {"enum": sorted(FAMILIES)},
        "radius": _NUM, "major_radius": _NUM, "minor_radius": _NUM, "height": _NUM,
        "neck_radius": _NUM, "center": _VEC3, "samples": _POINTS, "closed": {"type": "boolean"},
        "axis_endpoints": {"type": "boolean"}, "degree": {"enum": [3, 5]},
    }, ["family"]),
    "domain": _obj({
        "n_alpha": {"type": "integer", "minimum": 4},
        "n_beta": {"type": "integer", "minimum": 4},
        "alpha_range": _RANGE, "beta_range": _RANGE,
    }),
    "displacement": _obj({
        "kind": {"enum": ["random", "normal", "translation", "rotation", "basis", "grid", "zero"]},
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "degree": {"type": "integer", "minimum": 0, "maximum": 16},
        "taper": {"type": "integer", "minimum": 0},
        "value": _NUM, "vector": _VEC3,
        "v1": _MATRIX, "v2": _MATRIX, "vn": _MATRIX,
        "path": {"type": "string"},
    }, ["kind"]),
    "coefficients": _obj({"a": _NUM, "b": _NUM, "c": _NUM}),
    "oracle": _obj({"ladder": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                               "minItems": 2}}),
    "thresholds": _obj({
        "identity": {"type": "number", "exclusiveMinimum": 0},
        "relative": {"type": "number", "exclusiveMinimum": 0},
        "min_order": _NUM,
        "ratio_range": _RANGE,
    }),
    "validate": _obj({
        "derivatives": {"enum": ["analytic", "central"]},
        "convergence": {"type": "boolean"},
        "levels": {"type": "integer", "minimum": 2, "maximum": 5},
        "pole_margin": {"type": "number", "minimum": 0},
        "negative_control": {"type": "boolean"},
    }),
    "flow": _obj({
        "profile": _obj({
            "preset": {"enum": sorted(PRESETS)},
            "n_samples": {"type": "integer", "minimum": 8},
            "mode": {"type": "integer", "minimum": 0},
            "amplitude": _NUM, "radius": _NUM, "height": _NUM,
            "center": _RANGE,
            "seed": {"type": ["integer", "null"]},
            "samples": _POINTS, "closed": {"type": "boolean"},
            "boundary_condition": {"enum": ["free", "clamped_endpoints", "axis_endpoints"]},
            "resample": {"type": "boolean"},
        }),
        "step_size": {"type": "number", "exclusiveMinimum": 0},
        "max_steps": {"type": "integer", "minimum": 0},
        "residual_tolerance": {"type": "number", "exclusiveMinimum": 0},
        "resample_every": {"type": "integer", "minimum": 1},
        "step_control": {"enum": ["fixed", "backtracking"]},
        "snapshot_every": {"type": "integer", "minimum": 0},
    }),
    "export": _obj({"displacement": {"type": "boolean"}, "strains": {"type": "boolean"}}),
    "output": _obj({"figures": {"type": "boolean"}, "figure_format": {"enum": ["svg", "png"]}}),
}, ["surface"])

DEFAULTS = {
    "domain": {"n_alpha": 64, "n_beta": 64},
    "displacement": {"kind": "random", "seeds": [1], "degree": 4},
    "coefficients": {"a": 1.0, "b": 0.5, "c": -0.25},
    "oracle": {"ladder": [1e-2, 1e-3, 1e-4]},
    "thresholds": {"identity": 1e-6, "relative": 1e-6, "min_order": 1.9, "ratio_range": [3.6, 4.4]},
    "validate": {"derivatives": "analytic", "convergence": True, "levels": 2, "pole_margin": 0.3,
                 "negative_control": False},
    "flow": {"profile": {"preset": "perturbed_sphere"}, "step_size": 5e-3, "max_steps": 5000,
             "residual_tolerance": 1e-3, "resample_every": 10, "step_control": "backtracking",
             "snapshot_every": 500},
    "export": {"displacement": True, "strains": True},
    "output": {"figures": True, "figure_format": "svg"},
}


# ---------------------------------------------------------------------------
# configuration


def _path_of(error: jsonschema.ValidationError) -> str:
    return "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in error.absolute_path)


def load_config(path) -> dict:
    """Parse, schema-validate and fill defaults.  Raises ConfigError."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON at $ (line {exc.lineno}, column {exc.colno}): "
                          f"{exc.msg}") from exc
    return resolve_config(raw)


def resolve_config(raw) -> dict:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    error = jsonschema.exceptions.best_match(validator.iter_errors(raw))
    if error is not None:
        raise ConfigError(f"config error at {_path_of(error)}: {error.message}")
    cfg = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        if isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(copy.deepcopy(value))
        else:
            cfg[key] = copy.deepcopy(value)
    return cfg


def build_family(cfg: dict) -> SurfaceFamily:
    try:
        return family_from_dict(cfg["surface"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config error at $.surface: {exc}") from exc


def build_domain(family: SurfaceFamily, cfg: dict) -> ParamDomain:
    spec = cfg["domain"]
    natural = family.natural_domain(spec["n_alpha"], spec["n_beta"])
    kwargs = {}
    for axis, key in ((0, "alpha_range"), (1, "beta_range")):
        if key not in spec:
            continue
        lo, hi = map(float, spec[key])
        nlo, nhi = natural.interval(axis)
        kwargs[key] = (lo, hi)
        kwargs["periodic_alpha" if axis == 0 else "periodic_beta"] = False
        if axis == 0:
            kwargs["pole_alpha_start"] = natural.pole_alpha_start and lo == nlo
            kwargs["pole_alpha_end"] = natural.pole_alpha_end and hi == nhi
    try:
        return replace(natural, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"config error at $.domain: {exc}") from exc


def build_displacements(field, cfg: dict) -> list[tuple[str, DisplacementField]]:
    spec = cfg["displacement"]
    d = field.domain
    kind = spec["kind"]
    if kind == "random":
        return [(f"seed{s}", random_displacement(d, s, spec.get("degree", 4), spec.get("taper")))
                for s in spec.get("seeds", [1])]
    if kind == "zero":
        return [("zero", DisplacementField.zero(d))]
    if kind == "normal":
        return [("normal", DisplacementField.from_components(0.0, 0.0, spec.get("value", 1.0), d))]
    if kind in ("translation", "rotation"):
        if "vector" not in spec:
            raise ConfigError(f"config error at $.displacement: {kind} needs 'vector'")
        make = translation_field if kind == "translation" else rotation_field
        return [(kind, make(field, spec["vector"]))]
    if kind == "basis":
        try:
            comps = [TrigPolynomial(d, np.asarray(spec[k], dtype=float)).field()
                     for k in ("v1", "v2", "vn")]
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"config error at $.displacement: {exc}") from exc
        return [("basis", DisplacementField.from_components(*comps))]
    if "path" not in spec:
        raise ConfigError("config error at $.displacement: grid needs 'path'")
    return [("grid", io.load_displacement_csv(spec["path"], d))]


def _coeffs(cfg) -> FunctionalCoefficients:
    c = cfg["coefficients"]
    return FunctionalCoefficients(c["a"], c["b"], c["c"])


def _outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(cfg: dict, out: Path, threads: int = 1) -> int:
    family = build_family(cfg)
    domain = build_domain(family, cfg)
    vcfg, thr = cfg["validate"], cfg["thresholds"]
    stencil = ANALYTIC if vcfg["derivatives"] == "analytic" else CENTRAL2
    field = evaluate_frame_field(family, domain)
    if vcfg["negative_control"]:
        # flipping the sign of one second fundamental form coefficient breaks Gauss-Codazzi
        field = field.replace(Hc=-1.0 * field.Hc)
    disp = build_displacements(field, cfg)[0][1]
    residuals = identity_residuals(field, disp, stencil)
    cl = curvature_line_check(family, domain)
    failures = [k for k, v in residuals.items() if not v < thr["identity"]]
    if not cl.passed():
        failures.append("curvature_line")
    report = {"command": "validate", "config": cfg, "domain": domain.to_dict(),
              "derivatives": vcfg["derivatives"], "residuals": residuals,
              "curvature_line": {"max_F": cl.max_F, "max_M": cl.max_M},
              "threshold": thr["identity"]}
    rows = [[k, v, v < thr["identity"]] for k, v in residuals.items()]
    if vcfg["convergence"]:
        lo, hi = thr["ratio_range"]
        margin = vcfg["pole_margin"] if domain.pole_rows() else 0.0
        seed = cfg["displacement"].get("seeds", [1])[0]
        conv = convergence_study(family, domain, seed, vcfg["levels"], CENTRAL2, margin)
        report["convergence"] = {"pole_margin": margin, "rows": [r.to_dict() for r in conv]}
        for r in conv:
            ok = r.passed(lo, hi)
            if not ok:
                failures.append(f"convergence:{r.name}")
            rows.append([f"ratio:{r.name}", "exact" if r.exact else min(r.ratios), ok])
    report["failures"] = failures
    report["passed"] = not failures
    io.write_json(out / "validate.json", report)
    io.write_csv(out / "validate.csv", ("check", "value", "passed"), rows)
    for k, v, ok in rows:
        log.info("%-18s %s %s", k, v if isinstance(v, str) else io.fmt(v), "ok" if ok else "FAIL")
    return EXIT_OK if not failures else EXIT_FAIL


def cmd_vary(cfg: dict, out: Path, threads: int = 1) -> int:
    family = build_family(cfg)
    domain = build_domain(family, cfg)
    thr = cfg["thresholds"]
    field = evaluate_frame_field(family, domain)
    boundary = BoundarySpec.of(domain)
    coeffs = _coeffs(cfg)
    ladder = cfg["oracle"]["ladder"]
    cases = build_displacements(field, cfg)

    def run(case):
        return compare_variations(field, case[1], boundary, coeffs, ladder)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(run, cases))
    table, failures = [], []
    for (label, _), rows in zip(cases, results):
        for r in rows:
            order_ok = r.order is None or r.order >= thr["min_order"]
            ok = r.rel_error <= thr["relative"] and order_ok
            if not ok:
                failures.append(f"{label}:{r.functional}")
            table.append({"case": label, **r.to_dict(), "passed": ok})
    header = ("case", "functional", "interior", "boundary", "total", "oracle", "abs_error",
              "rel_error", "order", "passed")
    io.write_csv(out / "variations.csv", header,
                 ([row[h] if row[h] is not None else "" for h in header] for row in table))
    report = {"command": "vary", "config": cfg, "domain": domain.to_dict(),
              "boundary": list(boundary.edges), "rows": table, "failures": failures,
              "passed": not failures}
    io.write_json(out / "vary.json", report)
    if cfg["output"]["figures"]:
        from .plotting import plot_variation_errors
        plot_variation_errors(out / f"vary_errors.{cfg['output']['figure_format']}",
                              [f"{r['case']}:{r['functional']}" for r in table],
                              [r["rel_error"] for r in table], thr["relative"])
    for row in table:
        log.info("%-8s %-14s formula %s oracle %s rel %.2e", row["case"], row["functional"],
                 io.fmt(row["total"]), io.fmt(row["oracle"]), row["rel_error"])
    return EXIT_OK if not failures else EXIT_FAIL


def build_profile(spec: dict) -> ProfileCurve:
    spec = dict(spec)
    try:
        if "samples" in spec:
            prof = ProfileCurve(np.asarray(spec["samples"], dtype=float), spec.get("closed", False),
                                spec.get("boundary_condition", "free"))
            return resample(prof) if spec.get("resample", False) else prof
        name = spec.pop("preset", "perturbed_sphere")
        spec.pop("resample", None)
        return PRESETS[name](**spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config error at $.flow.profile: {exc}") from exc


def cmd_flow(cfg: dict, out: Path, threads: int = 1) -> int:
    fcfg = cfg["flow"]
    profile = build_profile(fcfg["profile"])
    config = FlowConfig(_coeffs(cfg), fcfg["step_size"], fcfg["max_steps"],
                        fcfg["residual_tolerance"], fcfg["resample_every"], fcfg["step_control"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SelfIntersection)
        trace, final = run_flow(profile, config, snapshot_every=fcfg["snapshot_every"] or 0)
    for w in caught:
        log.warning("%s", w.message)
    header = ("step", "energy", "residual_sup", "residual_l2", "max_displacement", "step_size")
    io.write_csv(out / "trace.csv", header, ([getattr(r, h) for h in header] for r in trace.records))
    io.write_csv(out / "snapshots.csv", ("step", "index", "f", "g"),
                 ([step, i, float(p[0]), float(p[1])] for step, pts in trace.snapshots
                  for i, p in enumerate(pts)))
    io.write_csv(out / "profile_final.csv", ("f", "g"), ([float(p[0]), float(p[1])] for p in final.samples))
    energies = trace.energies
    _, radius, deviation = best_fit_circle(final.samples)
    report = {"command": "flow", "config": cfg, "converged": trace.converged,
              "steps": trace.final.step, "flags": trace.flags,
              "final": trace.final.to_dict(),
              "energy_monotone": bool(np.all(np.diff(energies) <= 0)),
              "best_fit_circle": {"radius": radius, "max_deviation": deviation}}
    io.write_json(out / "flow.json", report)
    if cfg["output"]["figures"] and trace.snapshots:
        from .plotting import plot_profiles, plot_trace
        ext = cfg["output"]["figure_format"]
        plot_profiles(out / f"profiles.{ext}", trace.snapshots)
        plot_trace(out / f"trace.{ext}", [r.step for r in trace.records], energies,
                   [r.residual_sup for r in trace.records])
    log.info("flow: %d steps, residual %s, converged %s", trace.final.step,
             io.fmt(trace.final.residual_sup), trace.converged)
    return EXIT_OK if trace.converged else EXIT_NOT_CONVERGED


def cmd_export(cfg: dict, out: Path, threads: int = 1) -> int:
    family = build_family(cfg)
    domain = build_domain(family, cfg)
    field = evaluate_frame_field(family, domain)
    files = [io.write_obj(out / "mesh.obj", field), io.write_frame_csv(out / "frame.csv", field)]
    if "displacement" in cfg and cfg["export"]["displacement"]:
        label, disp = build_displacements(field, cfg)[0]
        files.append(io.write_displacement_csv(out / "displacement.csv", disp))
        if cfg["export"]["strains"]:
            files.append(io.write_strain_csv(out / "strains.csv", infinitesimal_strains(field, disp)))
    report = {"command": "export", "config": cfg, "domain": domain.to_dict(),
              "files": [p.name for p in files]}
    io.write_json(out / "export.json", report)
    for p in files:
        log.info("wrote %s", p)
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "vary": cmd_vary, "flow": cmd_flow, "export": cmd_export}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shellvar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or name).strip().splitlines()[0] if fn.__doc__ else name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default="shellvar-out", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads for independent cases")
        p.add_argument("-q", "--quiet", action="store_true")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
        # the raw "displacement" key decides whether export writes one
        if args.command == "export":
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
            if "displacement" not in raw:
                cfg.pop("displacement", None)
        out = _outdir(args.out)
        code = COMMANDS[args.command](cfg, out, args.threads)
    except (ConfigError, DomainError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_CONFIG
    except ShellVarError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FAIL
    log.info("%s finished in %.2fs with exit code %d", args.command,
             time.perf_counter() - t0, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
