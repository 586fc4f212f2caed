"""Serialisation of experiment reports: curves.csv, scalars.json, manifest.json."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .experiments import ExperimentReport


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _dump_json(obj, path: Path) -> None:
    text = json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")


def format_curves_csv(report: ExperimentReport) -> str:
    names = list(report.curves)
    cols = [report.x] + [report.curves[k].values for k in names]
    lines = [",".join(["x", *names])]
    for row in zip(*cols):
        lines.append(",".join(format(float(v), ".17g") for v in row))
    return "\n".join(lines) + "\n"


def write_report(report: ExperimentReport, out_dir) -> list[Path]:
    """Write the three report files into ``out_dir`` (created if missing)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curves = out / "curves.csv"
    curves.write_text(format_curves_csv(report), encoding="utf-8", newline="\n")
    scalars = dict(report.scalars)
    if report.warnings:
        scalars["warnings"] = list(report.warnings)
    _dump_json(scalars, out / "scalars.json")
    _dump_json(report.manifest, out / "manifest.json")
    return [curves, out / "scalars.json", out / "manifest.json"]


def read_manifest(path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    return json.loads(p.read_text(encoding="utf-8"))
