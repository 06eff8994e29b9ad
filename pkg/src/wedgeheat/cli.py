"""Batch front door: ``wedgeheat <command> --config <path> [--out DIR] [--threads N] [--seed S]``.

Every successful run writes its reports plus ``manifest.json`` into the output
directory. On any error nothing is left behind and a one-line JSON error record
goes to stderr. Exit codes: 0 ok, 2 config error, 3 numerical refusal,
4 invariant violation or internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .config import COMMANDS, RunConfig, load_config
from .errors import (ConfigError, CutoffError, DegenerateMetricError, FitRefusedError,
                     InvariantOrderError, ResolutionError, SpectrumUnavailableError,
                     VerificationError)
from .expansion_engine import (c_dim5, heat_coefficients, heat_log_coefficient_c,
                               interior_heat_terms, sal_expansion_report,
                               spherical_space_form_test)
from .heat_invariants import SigmaParams, invariant, sigma_j, wedge_inputs
from .spectral_sim import (ExtractProtocol, cone_spectrum, extract_c, heat_trace,
                           wedge_volume, weyl_constant)
from .wedge_geometry import random_point, verify_transformation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REFUSED = 3
EXIT_INVARIANT = 4

REFUSALS = (FitRefusedError, CutoffError, ResolutionError, DegenerateMetricError,
            SpectrumUnavailableError, InvariantOrderError)

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_MODEL = {"type": "object", "required": ["m", "sigma_length", "fiber"]}

# documented layout of every file a run can produce
REPORT_SCHEMAS = {
    "curvature.json": {
        "type": "object",
        "required": ["model", "tol", "mixed_tol", "passed", "max_rel", "max_mixed_abs", "points"],
        "properties": {
            "model": _MODEL, "passed": {"type": "boolean"}, "max_rel": _NUM,
            "max_mixed_abs": _NUM,
            "points": {"type": "array", "items": {
                "type": "object",
                "required": ["r", "theta", "x", "passed", "deviations", "mixed_max_abs"]}},
        },
    },
    "invariants.json": {
        "type": "object",
        "required": ["model", "d", "J", "convention", "points", "sigma"],
        "properties": {
            "points": {"type": "array", "items": {
                "type": "object", "required": ["r", "theta", "x", "u"],
                "properties": {"u": {"type": "array", "items": _NUM}}}},
            "sigma": {"type": "array", "items": {
                "type": "object", "required": ["r", "j", "sigma"],
                "properties": {"r": _NUM, "j": {"type": "integer"}, "sigma": _NUM}}},
        },
    },
    "coefficient.json": {
        "type": "object",
        "required": ["model", "c", "c_dim5", "residual", "verdict", "convention"],
        "properties": {"c": _NUM, "c_dim5": _NUM_OR_NULL, "residual": _NUM_OR_NULL,
                       "verdict": {"type": ["string", "null"]}},
    },
    "expansion.json": {
        "type": "object",
        "required": ["model", "d", "J", "resolvent_terms", "heat_terms", "c"],
        "properties": {
            "resolvent_terms": {"type": "array", "items": {
                "type": "object",
                "required": ["power", "log", "coefficient", "origin", "available"]}},
            "heat_terms": {"type": "array"}, "c": _NUM,
        },
    },
    "spectrum.json": {
        "type": "object",
        "required": ["model", "lambda_max", "rows", "modes", "lambda_min", "majorant",
                     "weyl_constant", "csv"],
        "properties": {"rows": {"type": "integer"}, "modes": {"type": "integer"}},
    },
    "trace.json": {
        "type": "object",
        "required": ["model", "lambda_max", "t", "trace", "tail_bound", "flagged",
                     "weyl_leading", "csv"],
    },
    "extract_c.json": {
        "type": "object",
        "required": ["model", "c_measured", "c_predicted", "abs_deviation", "rel_deviation",
                     "leading_fitted", "leading_predicted", "lambda_max", "modes",
                     "spectrum_rows", "tail_flagged", "protocol"],
        "properties": {"c_measured": _NUM, "c_predicted": _NUM,
                       "rel_deviation": _NUM_OR_NULL, "tail_flagged": {"type": "boolean"}},
    },
    "fit.json": {
        "type": "object",
        "required": ["basis", "coefficients", "residual_norm", "condition", "refused",
                     "n_samples"],
    },
    "manifest.json": {
        "type": "object",
        "required": ["command", "config", "versions", "timing", "outputs", "seed", "threads"],
        "properties": {"timing": {"type": "object", "required": ["wall_seconds"]},
                       "outputs": {"type": "array", "items": {"type": "string"}}},
    },
}

CSV_COLUMNS = {
    "invariants.csv": ["r", "j", "sigma"],
    "spectrum.csv": ["nu", "n", "k", "lambda", "multiplicity"],
    "trace.csv": ["t", "trace", "tail_bound"],
}


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False, default=_jsonable) + "\n"


class _Outputs:
    """Tracks written files so a failed run can remove them."""

    def __init__(self, directory):
        self.dir = directory
        self.created_dir = not os.path.isdir(directory)
        self.files = []

    def path(self, name):
        os.makedirs(self.dir, exist_ok=True)
        p = os.path.join(self.dir, name)
        self.files.append(name)
        return p

    def json(self, name, obj):
        with open(self.path(name), "w") as fh:
            fh.write(dumps(obj))

    def cleanup(self):
        for name in self.files:
            try:
                os.remove(os.path.join(self.dir, name))
            except FileNotFoundError:
                pass
        if self.created_dir and os.path.isdir(self.dir) and not os.listdir(self.dir):
            os.rmdir(self.dir)


def _default_d(m):
    return m // 2 + 1


def _t_grid(params):
    if "t" in params:
        return np.asarray(params["t"], dtype=float)
    return np.geomspace(params["t_min"], params["t_max"], params["n_t"])


def run_curvature(cfg: RunConfig, out: _Outputs):
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    rows, worst_rel, worst_mixed, failures = [], 0.0, 0.0, []
    for i in range(p["n_points"]):
        pt = random_point(cfg.model, rng)
        rep = verify_transformation(cfg.model, pt, p["tol"], p["mixed_tol"])
        worst_rel = max([worst_rel] + [d.max_rel for d in rep.deviations])
        worst_mixed = max(worst_mixed, rep.mixed_max_abs)
        ok = rep.passed and rep.mixed_max_abs <= p["mixed_tol"]
        if not ok:
            failures.append(f"point {i}: " + "; ".join(rep.failures or [rep.mixed_worst_path]))
        row = rep.as_dict()
        row.update(r=pt.r, theta=pt.theta, x=pt.x.tolist(), passed=ok)
        rows.append(row)
    out.json("curvature.json", {
        "model": cfg.model.describe(), "tol": p["tol"], "mixed_tol": p["mixed_tol"],
        "passed": not failures, "max_rel": worst_rel, "max_mixed_abs": worst_mixed,
        "points": rows})
    if failures:
        raise VerificationError("closed-form curvature disagrees with the jet computation: "
                                + failures[0], path=failures[0])


def run_invariants(cfg: RunConfig, out: _Outputs):
    p, model = cfg.params, cfg.model
    d = p.get("d", _default_d(model.m))
    J, conv = p["J"], p["convention"]
    rng = np.random.default_rng(cfg.seed)
    points = []
    for _ in range(p["n_points"]):
        pt = random_point(model, rng)
        inputs = wedge_inputs(model, pt)
        points.append({"r": pt.r, "theta": pt.theta, "x": pt.x.tolist(),
                       "u": [invariant(j, inputs, conv) for j in range(J + 1)]})
    sig = [{"r": r, "j": j, "sigma": sigma_j(r, SigmaParams(d, model.m, j), model, conv)}
           for r in p["r"] for j in range(J + 1)]
    out.json("invariants.json", {"model": model.describe(), "d": d, "J": J,
                                 "convention": conv, "points": points, "sigma": sig})
    with open(out.path("invariants.csv"), "w") as fh:
        fh.write("r,j,sigma\n")
        for row in sig:
            fh.write("%r,%d,%r\n" % (row["r"], row["j"], row["sigma"]))


def run_coefficient(cfg: RunConfig, out: _Outputs):
    model, conv = cfg.model, cfg.params["convention"]
    c = heat_log_coefficient_c(model, conv)
    rep = {"model": model.describe(), "convention": conv, "c": c + 0.0,
           "c_dim5": None, "residual": None, "verdict": None}
    if model.m == 5:
        verdict, residual = spherical_space_form_test(model, cfg.params["tol"])
        rep.update(c_dim5=c_dim5(model), residual=residual,
                   verdict=f"spherical space form: {str(verdict).lower()}")
    out.json("coefficient.json", rep)


def run_expansion(cfg: RunConfig, out: _Outputs):
    p, model = cfg.params, cfg.model
    d = p.get("d", _default_d(model.m))
    terms = sal_expansion_report(model, d, p["J"], p["convention"])
    heat = interior_heat_terms(model, p["J"], p["convention"])
    coeffs = heat_coefficients(model, p["J"], convention=p["convention"])
    out.json("expansion.json", {
        "model": model.describe(), "d": d, "J": p["J"], "convention": p["convention"],
        "resolvent_terms": [t.as_dict() for t in terms],
        "heat_terms": [t.as_dict() for t in heat],
        "a_tilde": coeffs.as_dict()["a_tilde"], "c": coeffs.c})


def _spectrum(cfg):
    p = cfg.params
    return cone_spectrum(cfg.model, p["lambda_max"], p.get("fiber_cutoff"))


def run_spectrum(cfg: RunConfig, out: _Outputs):
    spec = _spectrum(cfg)
    spec.to_csv(out.path("spectrum.csv"))
    out.json("spectrum.json", {
        "model": cfg.model.describe(), "lambda_max": spec.lambda_max, "rows": spec.size,
        "modes": spec.mode_count, "lambda_min": float(spec.lam[0]),
        "majorant": spec.majorant,
        "weyl_constant": weyl_constant(wedge_volume(cfg.model), cfg.model.m),
        "csv": "spectrum.csv"})


def run_trace(cfg: RunConfig, out: _Outputs):
    spec = _spectrum(cfg)
    ts = _t_grid(cfg.params)
    tr = heat_trace(spec, ts, tol=cfg.params.get("tol"), threads=cfg.threads)
    tr.to_csv(out.path("trace.csv"))
    m = cfg.model.m
    out.json("trace.json", {
        "model": cfg.model.describe(), "lambda_max": spec.lambda_max, "modes": spec.mode_count,
        "t": tr.t, "trace": tr.value, "tail_bound": tr.tail_bound,
        "flagged": tr.flagged.tolist(),
        "weyl_leading": (wedge_volume(cfg.model) / (4.0 * math.pi) ** (m / 2)
                         * ts ** (-m / 2)).tolist(),
        "csv": "trace.csv"})


def protocol_from_params(params: dict, threads: int = 1) -> ExtractProtocol:
    kw = {k: params[k] for k in ("t_min", "t_max", "n_t", "tail_rtol", "cond_threshold")
          if k in params}
    if "t" in params:
        ts = sorted(params["t"])
        kw.update(t_min=ts[0], t_max=ts[-1], n_t=len(ts))
    return ExtractProtocol(lambda_max=params.get("lambda_max"),
                           basis_top=Fraction(params.get("basis_top", "3/2")),
                           threads=threads, **kw)


def run_extract_c(cfg: RunConfig, out: _Outputs):
    proto = protocol_from_params(cfg.params, cfg.threads)
    res = extract_c(cfg.model, proto)
    rep = res.as_dict()
    fit = rep.pop("fit")
    rep.update(model=cfg.model.describe(),
               protocol={"t_min": proto.t_min, "t_max": proto.t_max, "n_t": proto.n_t,
                         "lambda_max": res.lambda_max, "tail_rtol": proto.tail_rtol,
                         "cond_threshold": proto.cond_threshold,
                         "basis_top": str(proto.basis_top)})
    out.json("extract_c.json", rep)
    out.json("fit.json", fit)
    res.trace.to_csv(out.path("trace.csv"))


RUNNERS = {
    "curvature": run_curvature,
    "invariants": run_invariants,
    "coefficient": run_coefficient,
    "expansion": run_expansion,
    "spectrum": run_spectrum,
    "trace": run_trace,
    "extract-c": run_extract_c,
}


def versions() -> dict:
    import scipy
    return {"wedgeheat": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, REFUSALS):
        return EXIT_REFUSED
    return EXIT_INVARIANT


def _error_record(exc, code):
    rec = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("key_path", "path", "required"):
        val = getattr(exc, attr, None)
        if val is not None:
            rec[attr] = val
    fit = getattr(exc, "fit", None)
    if fit is not None:
        rec["condition"] = fit.condition
    return {"error": rec}


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the exit status."""
    out = _Outputs(cfg.out_dir)
    start = time.perf_counter()
    try:
        RUNNERS[cfg.command](cfg, out)
        outputs = sorted(out.files)
        out.json("manifest.json", {
            "command": cfg.command, "config": cfg.echo(), "versions": versions(),
            "seed": cfg.seed, "threads": cfg.threads, "outputs": outputs,
            "timing": {"wall_seconds": time.perf_counter() - start}})
    except Exception as exc:
        out.cleanup()
        code = exit_code_for(exc)
        sys.stderr.write(json.dumps(_error_record(exc, code), sort_keys=True,
                                    default=_jsonable) + "\n")
        return code
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="wedgeheat",
                                 description="Heat-trace coefficients of wedge singularities.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="TOML config file")
    ap.add_argument("--out", help="output directory (overrides WEDGEHEAT_OUT and the config)")
    ap.add_argument("--threads", type=int, help="worker threads for trace summation")
    ap.add_argument("--seed", type=int, help="seed for random test points")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, out=args.out, threads=args.threads,
                          seed=args.seed)
    except ConfigError as exc:
        sys.stderr.write(json.dumps(_error_record(exc, EXIT_CONFIG), sort_keys=True) + "\n")
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
