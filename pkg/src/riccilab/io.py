"""JSON metric specs, curvature CSV dumps and atomic report writing."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .curvature import riemann
from .errors import BadInput
from .metric import MetricField, constant_curvature, custom_table, euclidean, sphere_product, warped_product
from .model import SCHEMA_VERSION, ModelSpec, model_metric_field

__all__ = ["metric_from_dict", "load_metric", "load_model_spec", "metric_to_dict", "curvature_rows",
           "write_curvature_csv", "dumps", "write_atomic"]


def metric_from_dict(data: dict) -> MetricField:
    kind = data.get("kind")
    try:
        if kind == "euclidean":
            return euclidean(int(data["n"]))
        if kind == "constant_curvature":
            return constant_curvature(int(data["n"]), float(data.get("kappa", 1.0)), float(data.get("radius", 2.0)))
        if kind == "warped_product":
            return warped_product(data["base_vals"], data["grads"])
        if kind == "custom_table":
            return custom_table(data["coords"], data["entries"], data.get("domain"), data.get("name", "custom"))
        if kind == "sphere_product":
            return sphere_product(int(data["flat_dim"]))
    except KeyError as exc:
        raise BadInput(f"metric spec of kind {kind!r} is missing field {exc}") from exc
    raise BadInput(f"unknown metric kind {kind!r}")


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BadInput(f"cannot read {path}: {exc}") from exc


def load_metric(path) -> MetricField:
    return metric_from_dict(_read_json(path))


def load_model_spec(path):
    """``ModelSpec`` when the file is a model spec, else None."""
    data = _read_json(path)
    if data.get("kind") == "warped_product" and "k" in data and "mu" in data:
        return ModelSpec.from_dict(data)
    return None


def metric_to_dict(g: MetricField) -> dict:
    if not g.meta or "kind" not in g.meta:
        raise BadInput(f"metric {g.name} has no serialisable description")
    out = {"schema_version": SCHEMA_VERSION}
    out.update(g.meta)
    return out


def curvature_rows(g: MetricField, points):
    """Rows ``(x_1..x_n, i, j, k, l, R_ijkl)`` for every point and index quadruple."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    rows = []
    for x in points:
        R = riemann(g, x).riemann_lowered
        for idx in np.ndindex(R.shape):
            rows.append(list(map(float, x)) + list(idx) + [float(R[idx])])
    return rows


def write_curvature_csv(g: MetricField, points, path):
    n = g.dim
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{a}" for a in range(n)] + ["i", "j", "k", "l", "R"])
    w.writerows(curvature_rows(g, points))
    write_atomic(path, buf.getvalue())


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n"


def write_atomic(path, text: str):
    """Write UTF-8 text via a temporary file in the same directory and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
