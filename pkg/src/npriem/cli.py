"""Command-line front end.

    npriem catalog list
    npriem catalog show s3_round
    npriem analyze --manifold s3_round --field hopf --point 0.7,0.3,0.2
    npriem verify --manifold h2xr --field vertical --samples 100
    npriem flow --manifold euclidean --field radial_in --point 0,0,1 --length 0.9 --format csv
    npriem principal --manifold h3 --field radial

Exit codes: 0 pass, 1 check failed, 2 usage or hypothesis error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from typing import Optional

import numpy as np

from . import __version__
from . import catalog as cat
from . import flow as fl
from . import geometry as geo
from . import triad as tr
from . import verify as vf
from .errors import (BadParameter, FrameSeedDegenerate, HypothesesViolated, LeftChartDomain,
                     MetricNotPositiveDefinite, NotGeodesicField, NPError, ZeroField)
from .metricfile import load_metric_file

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (MetricNotPositiveDefinite, LeftChartDomain, ZeroField, FrameSeedDegenerate, FloatingPointError)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, geo.ChartPoint):
        return [float(v) for v in obj.u]
    return obj


def dumps(obj, indent: int = 2) -> str:
    """JSON with floats at 17 significant digits and complex values as {re, im}."""
    def enc(o, depth):
        pad, inner = " " * (indent * depth), " " * (indent * (depth + 1))
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{inner}{json.dumps(k)}: {enc(v, depth + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in o):
                return "[" + ", ".join(_float(v) if isinstance(v, float) else str(v) for v in o) + "]"
            return "[\n" + ",\n".join(inner + enc(v, depth + 1) for v in o) + "\n" + pad + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, float):
            return _float(o)
        if isinstance(o, int):
            return str(o)
        return json.dumps(o)
    return enc(_plain(obj), 0) + "\n"


def _flatten(obj, prefix=""):
    obj = _plain(obj)
    if isinstance(obj, dict) and set(obj) == {"re", "im"}:
        yield prefix, f"{obj['re']:.10g}{obj['im']:+.10g}i"
    elif isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else k)
    elif isinstance(obj, list) and obj and all(isinstance(v, (int, float)) for v in obj):
        yield prefix, "(" + ", ".join(f"{v:.10g}" for v in obj) + ")"
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj if not isinstance(obj, float) else f"{obj:.10g}"


def table(doc: dict) -> str:
    rows = list(_flatten({"results": doc["results"], "summary": doc["summary"]}))
    width = max((len(k) for k, _ in rows), default=0)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _point(text: str):
    try:
        u = tuple(float(s) for s in text.split(","))
    except ValueError:
        raise UsageError(f"malformed point {text!r}; expected 'u1,u2,u3'") from None
    if len(u) != 3 or not all(math.isfinite(x) for x in u):
        raise UsageError(f"malformed point {text!r}; expected three finite numbers 'u1,u2,u3'")
    return u


def _params(items):
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"malformed --param {item!r}; expected name=value")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"malformed --param {item!r}; value must be a number") from None
    return out


def _positive(name, v):
    if v is not None and not (v > 0 and math.isfinite(v)):
        raise UsageError(f"{name} must be positive, got {v}")


def config_from(args) -> dict:
    cfg = {
        "command": args.command,
        "manifold": args.manifold,
        "metric_file": args.metric_file,
        "field": args.field,
        "params": _params(args.param),
        "point": _point(args.point) if args.point is not None else None,
        "samples": args.samples,
        "seed": args.seed,
        "tol": args.tol,
        "fd_step": args.fd_step,
        "length": args.length,
        "step": args.step,
        "format": args.format,
    }
    for name in ("tol", "fd_step", "step"):
        _positive(name, cfg[name])
    if cfg["length"] is not None and not cfg["length"] >= 0:
        raise UsageError("length must be non-negative")
    if cfg["samples"] is not None and cfg["samples"] < 1:
        raise UsageError("samples must be at least 1")
    if (cfg["manifold"] is None) == (cfg["metric_file"] is None):
        raise UsageError("give exactly one of --manifold or --metric-file")
    if cfg["field"] is None:
        raise UsageError("--field is required")
    return cfg


def entry_from(cfg) -> cat.CatalogEntry:
    if cfg["metric_file"] is not None:
        if cfg["params"]:
            raise UsageError("--param applies to catalog manifolds only")
        return load_metric_file(cfg["metric_file"], cfg["fd_step"] or geo.DEFAULT_FD_STEP)
    entry = cat.load(cfg["manifold"], **cfg["params"])
    if cfg["fd_step"] is not None:
        # explicit step: use finite-difference metric partials at that step
        chart = dataclasses.replace(entry.chart, dg=None, fd_step=cfg["fd_step"])
        entry = dataclasses.replace(entry, chart=chart)
    return entry


def sample_points(entry, cfg, reach: float) -> np.ndarray:
    if cfg["point"] is not None:
        return np.array([cfg["point"]])
    return entry.sample(cfg["samples"], seed=cfg["seed"], reach=reach)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _spin_dict(sc: tr.SpinCoefficients, i: Optional[int] = None) -> dict:
    d = sc.as_dict()
    return {k: (v[i] if i is not None and np.ndim(v) else v) for k, v in d.items()}


def cmd_catalog(args) -> tuple:
    if args.action == "list":
        results = []
        for mid in cat.MANIFOLD_IDS:
            e = cat.load(mid)
            results.append({"manifold": mid, "parameters": list(cat.parameter_names(mid)),
                            "fields": sorted(e.fields), "description": e.description})
        return {"manifolds": results}, {"count": len(results)}, EXIT_PASS
    if args.id is None:
        raise UsageError("catalog show needs a manifold id")
    e = cat.load(args.id)
    fields = [{"field": f, "description": e.fields[f].description} for f in sorted(e.fields)]
    expected = [{"field": k[0], "quantity": k[1], "value": v.value if not callable(v.value) else "closed form",
                 "tol": v.tol, "oracle": v.oracle} for k, v in sorted(e.expected.items())]
    flows = {f: {"p0": list(s.p0), "length": s.length, "step": s.step} for f, s in sorted(e.flows.items())}
    results = {
        "manifold": e.manifold_id,
        "parameters": list(cat.parameter_names(args.id)),
        "params": e.params,
        "description": e.description,
        "domain": [list(ab) for ab in e.chart.domain],
        "periods": list(e.chart.periods),
        "sample_box": [list(ab) for ab in e.sample_box],
        "fields": fields,
        "expected": expected,
        "flows": flows,
    }
    return results, {"fields": len(fields)}, EXIT_PASS


def cmd_analyze(cfg) -> tuple:
    entry = entry_from(cfg)
    K = entry.field(cfg["field"])
    chart = entry.chart
    U = entry.sample(1, seed=cfg["seed"], reach=vf.stencil_reach(chart)) if cfg["point"] is None \
        else np.array([cfg["point"]])
    p = chart.point(U[0])
    t = tr.build_frame(chart, K, p)
    sc = tr.spin_coefficients(chart, K, p)
    tc = vf.triad_curvature_batch(chart, K, geo.as_coords(chart, p), np.array([t.seed]))
    tol = cfg["tol"] if cfg["tol"] is not None else tr.default_tol(chart)
    flags = tr.flags_from(sc, tol)
    results = {
        "point": list(U[0]),
        "triad": {"k": t.k, "x": t.x, "y": t.y, "m": t.m, "seed": t.seed},
        "spin_coefficients": _spin_dict(sc),
        "triad_curvature": {
            "ric_kk": tc.ric_kk[0], "ric_mm": tc.ric_mm[0], "ric_km": tc.ric_km[0],
            "ric_mmbar": tc.ric_mmbar[0], "S": tc.S[0],
            "riem_frame": {k: v[0] for k, v in tc.riem_frame.items()},
        },
        "classification": flags,
        "killing_residual": tr.killing_residual(chart, K, p),
    }
    return results, {"tol": tol, **flags}, EXIT_PASS


def cmd_verify(cfg) -> tuple:
    entry = entry_from(cfg)
    K = entry.field(cfg["field"])
    chart = entry.chart
    U = sample_points(entry, cfg, vf.stencil_reach(chart))
    reports = vf.verify_all(chart, K, U, cfg["tol"])
    results = [reports[eq].as_dict() for eq in vf.EQUATION_IDS]
    failed = [r["equation_id"] for r in results if not r["pass"]]
    summary = {
        "points": int(len(U)),
        "tol": results[0]["tol"],
        "max_residual": max(r["max_residual"] for r in results),
        "failed": failed,
        "all_pass": not failed,
    }
    return results, summary, EXIT_PASS if not failed else EXIT_FAIL


def _flow_setup(entry, cfg):
    spec = entry.flows.get(cfg["field"])
    p0 = cfg["point"] if cfg["point"] is not None else (spec.p0 if spec else None)
    length = cfg["length"] if cfg["length"] is not None else (spec.length if spec else None)
    step = cfg["step"] if cfg["step"] is not None else (spec.step if spec else 1e-3)
    if p0 is None or length is None:
        raise UsageError(f"no default flow for field {cfg['field']!r}; give --point and --length")
    return p0, length, step


def cmd_flow(cfg) -> tuple:
    entry = entry_from(cfg)
    K = entry.field(cfg["field"])
    chart = entry.chart
    p0, length, step = _flow_setup(entry, cfg)
    trace = fl.transport_kinematics(chart, K, p0, length, step)
    tol = cfg["tol"] if cfg["tol"] is not None else 1e-6
    rigidity = fl.omega_rigidity(chart, K, p0, length, step, tol=tol)
    try:
        focusing = fl.focusing_check(chart, K, p0, length, step, tol=tol)
    except HypothesesViolated as exc:
        focusing = {"applicable": False, "reasons": exc.reasons}
    except NPError as exc:
        focusing = {"applicable": False, "reasons": [str(exc)]}
    else:
        focusing = {"applicable": True, **focusing}
    dev = trace.max_deviation()
    results = {
        "p0": list(p0),
        "columns": list(fl.CSV_COLUMNS),
        "rows": trace.rows(),
        "omega_rigidity": rigidity,
        "focusing": focusing,
    }
    summary = {
        "samples": int(len(trace.t)),
        "max_div_deviation": dev["div"],
        "max_omega_deviation": dev["omega"],
        "sign_changes": rigidity["sign_changes"],
        "omega_verdict": rigidity["verdict"],
        "predicted_blowup_t": focusing.get("predicted_blowup_t"),
        "crossing_t": focusing.get("crossing_t"),
    }
    code = EXIT_PASS if rigidity["dichotomy_consistent"] else EXIT_FAIL
    return results, summary, code, trace


def cmd_principal(cfg) -> tuple:
    entry = entry_from(cfg)
    K = entry.field(cfg["field"])
    chart = entry.chart
    U = sample_points(entry, cfg, vf.stencil_reach(chart))
    tol = cfg["tol"] if cfg["tol"] is not None else 1e-6
    reps = fl.principal_batch(chart, K, U, tol)
    per_point = [{"point": list(u), **r.as_dict()} for u, r in zip(U, reps)]
    summary = {"points": int(len(U)), "tol": tol}
    if all(not r.non_flat for r in reps):
        summary.update(hypotheses=False, reasons=["manifold is flat at every sample"])
        return per_point, summary, EXIT_USAGE
    try:
        gs = fl.goldberg_sachs_check(chart, K, U, tol)
    except HypothesesViolated as exc:
        summary.update(hypotheses=False, reasons=exc.reasons)
        return per_point, summary, EXIT_USAGE
    summary.update(
        hypotheses=True,
        S=gs["S_mean"],
        all_two_principal=gs["all_two_principal"],
        all_killing=gs["all_killing"],
        biconditional_holds=gs["biconditional_holds"],
    )
    return per_point, summary, EXIT_PASS if gs["biconditional_holds"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifold", help="catalog manifold id")
    common.add_argument("--metric-file", help="JSON metric file instead of a catalog manifold")
    common.add_argument("--field", help="vector field id")
    common.add_argument("--param", action="append", metavar="NAME=VALUE", help="manifold parameter (r, lambda)")
    common.add_argument("--point", help="chart point 'u1,u2,u3'")
    common.add_argument("--samples", type=int, default=None, help="number of seeded sample points")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--fd-step", type=float, default=None,
                        help="finite-difference step for metric partials (forces finite differences)")
    common.add_argument("--length", type=float, default=None, help="flow length")
    common.add_argument("--step", type=float, default=None, help="flow step")
    common.add_argument("--format", choices=("json", "csv", "table"), default="json")
    common.add_argument("--out", help="output path (default stdout)")

    p = argparse.ArgumentParser(prog="npriem", description="Newman-Penrose analysis of Riemannian 3-manifolds")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("catalog", help="list or show catalog manifolds")
    c.add_argument("action", choices=("list", "show"))
    c.add_argument("id", nargs="?")
    c.add_argument("--format", choices=("json", "table"), default="json")
    c.add_argument("--out")
    sub.add_parser("analyze", parents=[common], help="spin coefficients and curvature at one point")
    sub.add_parser("verify", parents=[common], help="check the frame identities at sample points")
    sub.add_parser("flow", parents=[common], help="trace kinematics along a geodesic integral curve")
    sub.add_parser("principal", parents=[common], help="2-principal and Killing checks")
    return p


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _render(doc: dict, fmt: str) -> str:
    if fmt == "table":
        return table(doc)
    return dumps(doc)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    cfg = None
    try:
        if args.command == "catalog":
            cfg = {"command": "catalog", "action": args.action, "id": args.id}
            results, summary, code = cmd_catalog(args)
            _emit(_render({"config": cfg, "results": results, "summary": summary, "version": __version__},
                          args.format), args.out)
            return code
        cfg = config_from(args)
        trace = None
        if args.command == "flow":
            results, summary, code, trace = cmd_flow(cfg)
        else:
            results, summary, code = {"analyze": cmd_analyze, "verify": cmd_verify,
                                      "principal": cmd_principal}[args.command](cfg)
        doc = {"config": cfg, "results": results, "summary": summary, "version": __version__}
        if args.format == "csv":
            if trace is None:
                raise UsageError("csv output is available for the flow command only")
            _emit(trace.to_csv(), args.out)
            sys.stderr.write(dumps({"config": cfg, "summary": summary, "version": __version__}))
        else:
            _emit(_render(doc, args.format), args.out)
        return code
    except (UsageError, BadParameter, NotGeodesicField, HypothesesViolated) as exc:
        _error(exc, cfg, EXIT_USAGE)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        _error(exc, cfg, EXIT_NUMERIC)
        return EXIT_NUMERIC
    except NPError as exc:
        # unknown ids, points outside the chart and stencils crossing the boundary
        _error(exc, cfg, EXIT_USAGE)
        return EXIT_USAGE


def _error(exc, cfg, code):
    kind = "numeric failure" if code == EXIT_NUMERIC else "error"
    sys.stderr.write(f"npriem: {kind}: {type(exc).__name__}: {exc}\n")


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
