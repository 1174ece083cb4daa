"""On-disk formats: panel CSV, report CSV, model documents and key=value configs."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .baseline import LinearVarModel
from .core import (
    ModelShape,
    NlVarModel,
    NodeMap,
    RangeBounds,
    Role,
    TimeSeriesPanel,
    TrainReport,
    ValidationError,
    VarCoefficients,
)

FORMAT_VERSION = 1
LOAD_TOL = 1e-9


class ConfigError(ValidationError):
    pass


# --- panel CSV ---------------------------------------------------------------

def format_panel(panel: TimeSeriesPanel) -> str:
    n = panel.n_nodes
    lines = ["t," + ",".join(f"node_{i}" for i in range(n))]
    for t, row in enumerate(panel.data):
        lines.append(f"{t}," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def write_panel(path: str | Path, panel: TimeSeriesPanel) -> None:
    Path(path).write_text(format_panel(panel))


def parse_panel(text: str, role: Role = Role.OBSERVED, source: str = "<csv>") -> TimeSeriesPanel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValidationError(f"{source}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    n = len(header) - 1
    if n < 1 or header != ["t"] + [f"node_{i}" for i in range(n)]:
        raise ValidationError(f"{source}:1: header must be 't,node_0,...,node_{{N-1}}'")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != n + 1:
            raise ValidationError(f"{source}:{lineno}: expected {n + 1} fields, got {len(cells)}")
        try:
            int(cells[0])
            rows.append([float(c) for c in cells[1:]])
        except ValueError as exc:
            raise ValidationError(f"{source}:{lineno}: {exc}") from exc
    if not rows:
        raise ValidationError(f"{source}: no data rows")
    return TimeSeriesPanel(np.array(rows), role)


def read_panel(path: str | Path, role: Role = Role.OBSERVED) -> TimeSeriesPanel:
    return parse_panel(Path(path).read_text(), role, str(path))


def write_report(path: str | Path, report: TrainReport) -> None:
    lines = ["epoch,train_mse,test_mse"]
    for e in range(report.epochs):
        lines.append(f"{e},{float(report.train_mse[e])!r},{float(report.test_mse[e])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


# --- model documents ---------------------------------------------------------
# Floats go through json, which writes repr(): the shortest string that reads
# back to the identical double (at most 17 significant digits).

def model_to_dict(model: NlVarModel | LinearVarModel) -> dict[str, Any]:
    if isinstance(model, LinearVarModel):
        var = model.var.entries
        return {
            "format_version": FORMAT_VERSION,
            "linear_identity_maps": True,
            "shape": {"N": var.shape[1], "P": var.shape[0], "M": 0},
            "ranges": [],
            "var": var.ravel().tolist(),
            "maps": [],
        }
    s = model.shape
    return {
        "format_version": FORMAT_VERSION,
        "linear_identity_maps": False,
        "shape": {"N": s.n_nodes, "P": s.order, "M": s.n_units},
        "ranges": [[r.lower, r.upper] for r in model.ranges],
        "var": model.var.entries.ravel().tolist(),
        "maps": [{"alpha": m.alpha.tolist(), "w": m.w.tolist(), "k": m.k.tolist(), "b": m.b}
                 for m in model.maps],
    }


def model_from_dict(doc: dict[str, Any], source: str = "<model>") -> NlVarModel | LinearVarModel:
    def fail(msg):
        raise ValidationError(f"{source}: {msg}")

    if doc.get("format_version") != FORMAT_VERSION:
        fail(f"unsupported format_version {doc.get('format_version')!r} (expected {FORMAT_VERSION})")
    try:
        n, p, m = (int(doc["shape"][key]) for key in ("N", "P", "M"))
        flat = np.asarray(doc["var"], dtype=float)
        linear = bool(doc["linear_identity_maps"])
    except (KeyError, TypeError, ValueError) as exc:
        fail(f"missing or malformed field: {exc}")
    if flat.size != p * n * n:
        fail(f"var has {flat.size} entries, shape needs {p * n * n}")
    var = VarCoefficients(flat.reshape(p, n, n))
    if linear:
        return LinearVarModel(var)

    ranges, maps = doc.get("ranges", []), doc.get("maps", [])
    if len(ranges) != n or len(maps) != n:
        fail(f"expected {n} ranges and {n} maps, got {len(ranges)} and {len(maps)}")
    nodes = []
    for i, (r, mp) in enumerate(zip(ranges, maps)):
        try:
            bounds = RangeBounds(*r)
            node = NodeMap(mp["alpha"], mp["w"], mp["k"], mp["b"], bounds)
        except (KeyError, TypeError) as exc:
            fail(f"node {i}: malformed map: {exc}")
        if node.n_units != m:
            fail(f"node {i} has {node.n_units} units, shape says M={m}")
        bad = node.violations(LOAD_TOL)
        if bad:
            fail(f"node {i} violates constraint(s): {', '.join(bad)}")
        nodes.append(node)
    return NlVarModel(ModelShape(n, p, m), var, nodes)


def save_model(path: str | Path, model: NlVarModel | LinearVarModel) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path: str | Path) -> NlVarModel | LinearVarModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not a model document: {exc}") from exc
    return model_from_dict(doc, str(path))


# --- key=value configs -------------------------------------------------------

def parse_config(text: str, schema: dict[str, Any], source: str = "<config>") -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    ``schema`` maps each allowed key to its default, whose type is used to
    convert the value. Unknown keys and repeated keys are errors.
    """
    values = dict(schema)
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in schema:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} "
                              f"(known: {', '.join(sorted(schema))})")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: key {key!r} given twice")
        seen.add(key)
        kind = type(schema[key])
        try:
            if kind is int:
                values[key] = int(value)
            elif kind is float:
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: {key} must be {kind.__name__}, got {value!r}") from None
    return values


def read_config(path: str | Path | None, schema: dict[str, Any]) -> dict[str, Any]:
    if path is None:
        return dict(schema)
    return parse_config(Path(path).read_text(), schema, str(path))
