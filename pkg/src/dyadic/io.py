"""Deterministic CSV and JSON output helpers."""

from __future__ import annotations

import datetime as _dt
import json
import math
from pathlib import Path

import numpy as np

from .core import ModelParams, regime_thresholds

__all__ = ["format_value", "csv_text", "write_text", "manifest", "json_default"]


def format_value(x) -> str:
    """Render a cell: floats with 17 significant digits, ``None`` as empty."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(format_value(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_text(path, text: str) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _clean(o):
    # JSON has no NaN or infinity
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, np.ndarray):
        return _clean(o.tolist())
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return _clean(o.item())
    return o


def manifest(command: str, params: ModelParams, results: dict, stats: dict) -> dict:
    """Manifest with the fixed top-level keys."""
    return _clean({
        "command": command,
        "params": params.as_dict(),
        "derived": {"k1": params.k1, "thresholds": regime_thresholds(params)},
        "results": results,
        "stats": stats,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    })


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, default=json_default) + "\n"
