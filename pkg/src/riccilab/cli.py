"""Command line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import repro
from .errors import (
    BadDimension,
    BadIndex,
    BadInput,
    BadSubspaceDim,
    HypothesisNotViolated,
    HypothesisViolated,
    RiccilabError,
    WrongCase,
)
from .io import dumps, load_metric, load_model_spec, write_atomic
from .model import SCHEMA_VERSION, build_model, killing_frame, model_metric_field

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
USAGE_ERRORS = (BadInput, BadIndex, BadDimension, BadSubspaceDim, WrongCase)

ALIASES = {
    "model-build": ["model", "build"],
    "verify-ric-k": ["verify", "ric-k"],
    "bound-check": ["bound", "check"],
    "sew-run": ["sew", "run"],
    "sew-taylor": ["sew", "taylor"],
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    metric: Optional[str] = None
    model: Optional[str] = None
    n: Optional[int] = None
    k: Optional[int] = None
    a: float = 1.0
    theta: Optional[float] = None
    delta: Optional[float] = None
    budget: int = 10_000
    seed: int = 0
    output: Optional[str] = None
    format: str = "json"
    extra: dict = field(default_factory=dict)


def default_seed():
    raw = os.environ.get("RICCILAB_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"RICCILAB_SEED must be an integer, got {raw!r}")


def _parse_point(text, n):
    if text is None or text == "origin":
        return np.zeros(n)
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"cannot parse point {text!r}")
    if len(vals) != n:
        raise UsageError(f"point has {len(vals)} coordinates, metric dimension is {n}")
    return np.array(vals)


def _round6(obj):
    if isinstance(obj, float):
        return float(f"{obj:.6g}")
    if isinstance(obj, dict):
        return {k: _round6(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round6(v) for v in obj]
    return obj


def _has_dict(obj):
    if isinstance(obj, dict):
        return True
    return isinstance(obj, list) and any(_has_dict(v) for v in obj)


def _text(obj, indent=0):
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for key in sorted(obj):
            val = obj[key]
            if isinstance(val, dict) or (isinstance(val, list) and any(_has_dict(v) for v in val)):
                lines.append(f"{pad}{key}:")
                lines.append(_text(val, indent + 1))
            else:
                lines.append(f"{pad}{key}: {_round6(val)}")
    elif isinstance(obj, list):
        for i, val in enumerate(obj):
            lines.append(f"{pad}- [{i}]")
            lines.append(_text(val, indent + 1))
    else:
        lines.append(f"{pad}{_round6(obj)}")
    return "\n".join(lines)


def _emit(cfg: RunConfig, report):
    if cfg.format == "text":
        text = _text(report) + "\n"
    elif cfg.format == "csv":
        text = _csv(report)
    else:
        text = dumps(report)
    if cfg.output:
        write_atomic(cfg.output, text)
    else:
        sys.stdout.write(text)


def _csv(report):
    rows = report.get("_csv") if isinstance(report, dict) else None
    if rows is None:
        raise UsageError("this command has no CSV output; use --format json or text")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _strip_private(report):
    if isinstance(report, dict):
        return {k: v for k, v in report.items() if not k.startswith("_")}
    return report


def _versioned(kind, body):
    out = {"schema_version": SCHEMA_VERSION, "kind": kind}
    out.update(body)
    return out


# --- commands ---


def cmd_model_build(cfg: RunConfig):
    spec = build_model(cfg.n, cfg.k, a=cfg.a, theta=cfg.theta, b=cfg.extra.get("b"))
    _emit(cfg, spec.to_dict())
    return EXIT_OK


def _metric_and_frame(path):
    spec = load_model_spec(path)
    g = model_metric_field(spec) if spec is not None else load_metric(path)
    return g, spec


def _parse_slice(text, g, spec):
    if text in (None, "all"):
        return list(range(g.dim))
    if text == "y-block":
        if spec is None:
            raise UsageError("the y-block slice needs a model spec metric")
        return list(range(spec.flat_dim, spec.n))
    try:
        idx = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"cannot parse slice {text!r}")
    return idx


def cmd_verify_ric_k(cfg: RunConfig):
    from .verify import check_compsimp, min_ric_k

    g, spec = _metric_and_frame(cfg.metric)
    p = _parse_point(cfg.extra.get("point"), g.dim)
    if spec is not None and cfg.extra.get("killing") is None:
        K = killing_frame(spec)
    else:
        K = np.eye(g.dim)[_parse_slice(cfg.extra.get("killing"), g, spec)]
    keep = cfg.extra.get("samples_csv") is not None
    res = min_ric_k(g, p, K, cfg.k, budget=cfg.budget, seed=cfg.seed, jobs=cfg.extra.get("jobs", 1),
                    keep_samples=keep)
    comp = check_compsimp(g, p, K, cfg.k, budget=min(cfg.budget, 1000), seed=cfg.seed)
    positive = res.value > 0
    report = _versioned("ric_k_report", {
        "metric": cfg.metric,
        "point": p.tolist(),
        "k": cfg.k,
        "min_ric_k": res.to_dict(),
        "compsimp": comp.to_dict(),
        "verdict": "strictly positive" if positive else "not strictly positive",
    })
    if keep:
        n = g.dim
        rows = [[f"u{i}" for i in range(n)] + [f"e{j}_{i}" for j in range(cfg.k) for i in range(n)] + ["value"]]
        for u, E, val in res.sample_log:
            rows.append(list(map(float, u)) + list(map(float, np.ravel(E))) + [val])
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        write_atomic(cfg.extra["samples_csv"], buf.getvalue())
    _emit(cfg, report)
    return EXIT_OK if positive else EXIT_FAIL


def cmd_bound_check(cfg: RunConfig):
    from .killing import find_nonpositive_pair

    g, spec = _metric_and_frame(cfg.metric)
    p = _parse_point(cfg.extra.get("point"), g.dim)
    idx = _parse_slice(cfg.extra.get("slice"), g, spec)
    try:
        pair = find_nonpositive_pair(g, p, idx, cfg.k, seed=cfg.seed)
        body = pair.to_dict()
    except HypothesisNotViolated as exc:
        body = {"verdict": "hypothesis_not_violated", "reason": str(exc)}
    report = _versioned("bound_check", {"metric": cfg.metric, "slice": idx, "k": cfg.k, "point": p.tolist(),
                                        **body})
    _emit(cfg, report)
    return EXIT_OK


def _base_and_model(cfg):
    from .metric import euclidean
    from .sewing import pullback_metric, pullback_model

    g = load_metric(cfg.metric)
    p = _parse_point(cfg.extra.get("point"), g.dim)
    if cfg.model:
        spec = load_model_spec(cfg.model)
        if spec is None:
            raise UsageError(f"{cfg.model} is not a model spec")
        if spec.n != g.dim:
            raise UsageError("model and base metric dimensions differ")
        gstar = pullback_model(g, p, spec)
    else:
        gstar = pullback_metric(g, p, euclidean(g.dim))
    return g, p, gstar


def cmd_sew_run(cfg: RunConfig):
    from .sewing import sew_sweep

    if cfg.delta is None or not cfg.delta > 0:
        raise UsageError("--delta must be positive")
    g, p, gstar = _base_and_model(cfg)
    levels = cfg.extra.get("sweep", 1)
    try:
        reports = sew_sweep(g, gstar, p, cfg.delta, levels)
    except HypothesisViolated as exc:
        _emit(cfg, _versioned("sew_reports", {"verdict": "hypothesis_violated", "reason": str(exc)}))
        return EXIT_FAIL
    body = {"metric": cfg.metric, "model": cfg.model, "point": p.tolist(), "reports": [r.to_dict() for r in reports]}
    ok = all(r.passed for r in reports)
    body["verdict"] = "pass" if ok else "fail"
    _emit(cfg, _versioned("sew_reports", body))
    return EXIT_OK if ok else EXIT_FAIL


def _parse_pair(text):
    if text is None:
        return ((0, 1), (0, 1))
    try:
        parts = [tuple(int(s) for s in half.split(",")) for half in text.split(";")]
    except ValueError:
        raise UsageError(f"cannot parse pair {text!r}; expected 'i,j;k,l'")
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2 or any(len(x) != 2 for x in parts):
        raise UsageError("pair must look like 'i,j;k,l'")
    return tuple(parts)


def cmd_sew_taylor(cfg: RunConfig):
    from .sewing import jacobi_taylor_check

    g, p, gstar = _base_and_model(cfg)
    rep = jacobi_taylor_check(g, gstar, p, pair=_parse_pair(cfg.extra.get("pair")), t0=cfg.extra.get("t0", 0.1),
                              levels=cfg.extra.get("levels", 4))
    body = rep.to_dict()
    body["_csv"] = [["t", "gap", "normalized_gap"]] + [list(r) for r in zip(rep.ts, rep.gaps, rep.normalized_gaps)]
    if cfg.extra.get("csv"):
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(body["_csv"])
        write_atomic(cfg.extra["csv"], buf.getvalue())
    if cfg.format != "csv":
        body = _strip_private(body)
        body = _versioned("taylor_report", body)
    _emit(cfg, body)
    return EXIT_OK


def cmd_full_repro(cfg: RunConfig):
    def progress(msg):
        print(msg, file=sys.stderr)

    manifest = repro.full_repro(nmax=cfg.extra.get("nmax", 8), budget=cfg.budget, seed=cfg.seed,
                                jobs=cfg.extra.get("jobs", 1), sewing=not cfg.extra.get("no_sew", False),
                                progress=progress)
    _emit(cfg, _versioned("repro_manifest", manifest))
    return EXIT_OK if manifest["verdict"] == "pass" else EXIT_FAIL


# --- argument parsing ---


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p, seed_default):
    p.add_argument("-o", "--output", help="write the report here (atomic); default stdout")
    p.add_argument("--format", choices=["json", "csv", "text"], default="json")
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--jobs", type=int, default=1, help="worker cap for parallel sampling")


def build_parser(seed_default=0):
    root = _Parser(prog="riccilab", description=__doc__.splitlines()[0])
    sub = root.add_subparsers(dest="group", required=True, parser_class=_Parser)

    model = sub.add_parser("model").add_subparsers(dest="action", required=True, parser_class=_Parser)
    mb = model.add_parser("build", help="parameters of a k-maximal model metric")
    mb.add_argument("--n", type=int, required=True)
    mb.add_argument("--k", type=int, required=True)
    mb.add_argument("--a", type=float, default=1.0)
    mb.add_argument("--theta", type=float)
    mb.add_argument("--b", type=float, help="only for k = n-2")
    _common(mb, seed_default)

    verify = sub.add_parser("verify").add_subparsers(dest="action", required=True, parser_class=_Parser)
    vr = verify.add_parser("ric-k", help="minimum of Ric_k over planes in a Killing frame")
    vr.add_argument("--metric", required=True)
    vr.add_argument("--point")
    vr.add_argument("--k", type=int, required=True)
    vr.add_argument("--budget", type=int, default=10_000)
    vr.add_argument("--killing", help="'all', 'y-block' or comma separated coordinate indices")
    vr.add_argument("--samples-csv", help="dump every sampled (query, value) pair")
    _common(vr, seed_default)

    bound = sub.add_parser("bound").add_subparsers(dest="action", required=True, parser_class=_Parser)
    bc = bound.add_parser("check", help="non-positive Ric_k pair on an over-dimensional Killing slice")
    bc.add_argument("--metric", required=True)
    bc.add_argument("--slice", default="y-block")
    bc.add_argument("--k", type=int, required=True)
    bc.add_argument("--point")
    _common(bc, seed_default)

    sew = sub.add_parser("sew").add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in ("run", "taylor"):
        sp = sew.add_parser(name)
        sp.add_argument("--metric", required=True, help="base metric JSON")
        sp.add_argument("--model", help="model spec JSON; default: flat metric pulled back radially")
        sp.add_argument("--point")
        if name == "run":
            sp.add_argument("--delta", type=float, required=True)
            sp.add_argument("--sweep", type=int, default=1, help="number of halvings of delta")
        else:
            sp.add_argument("--t0", type=float, default=0.1)
            sp.add_argument("--levels", type=int, default=4)
            sp.add_argument("--pair", help="rotational field index pairs 'i,j;k,l'")
            sp.add_argument("--csv", help="also write (t, gap) rows here")
        _common(sp, seed_default)

    fr = sub.add_parser("full-repro", help="every grid case plus the sewing and Taylor experiments")
    fr.add_argument("--nmax", type=int, default=8)
    fr.add_argument("--budget", type=int, default=10_000)
    fr.add_argument("--no-sew", action="store_true")
    _common(fr, seed_default)
    return root


def config_from_args(ns) -> RunConfig:
    command = ns.group if ns.group == "full-repro" else f"{ns.group}-{ns.action}"
    cfg = RunConfig(command=command, output=ns.output, format=ns.format, seed=ns.seed)
    for name in ("metric", "model", "n", "k", "a", "theta", "delta", "budget"):
        if hasattr(ns, name) and getattr(ns, name) is not None:
            setattr(cfg, name, getattr(ns, name))
    for name in ("point", "killing", "samples_csv", "slice", "sweep", "t0", "levels", "pair", "csv", "nmax",
                 "no_sew", "jobs", "b"):
        if hasattr(ns, name):
            cfg.extra[name] = getattr(ns, name)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.budget < 1:
        raise UsageError("--budget must be >= 1")
    if cfg.extra.get("jobs", 1) < 1:
        raise UsageError("--jobs must be >= 1")
    if cfg.command in ("model-build", "verify-ric-k", "bound-check") and (cfg.k is None or cfg.k < 1):
        raise UsageError("--k must be >= 1")
    if cfg.command == "model-build" and (cfg.n is None or cfg.n < 3 or cfg.k > cfg.n - 2):
        raise UsageError("model build needs n >= 3 and 1 <= k <= n-2")
    if cfg.command == "full-repro" and cfg.extra.get("nmax", 8) < 3:
        raise UsageError("--nmax must be >= 3")
    if cfg.command == "sew-run" and cfg.extra.get("sweep", 1) < 1:
        raise UsageError("--sweep must be >= 1")
    if cfg.command == "sew-taylor" and cfg.extra.get("levels", 4) < 2:
        raise UsageError("--levels must be >= 2")


COMMANDS = {
    "model-build": cmd_model_build,
    "verify-ric-k": cmd_verify_ric_k,
    "bound-check": cmd_bound_check,
    "sew-run": cmd_sew_run,
    "sew-taylor": cmd_sew_taylor,
    "full-repro": cmd_full_repro,
}


def dispatch(cfg: RunConfig) -> int:
    try:
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"riccilab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except USAGE_ERRORS as exc:
        print(f"riccilab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RiccilabError as exc:
        print(f"riccilab: verification failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] in ALIASES:
        argv = ALIASES[argv[0]] + argv[1:]
    try:
        ns = build_parser(default_seed()).parse_args(argv)
        cfg = config_from_args(ns)
    except UsageError as exc:
        print(f"riccilab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
