"""Structured results and their CSV / JSON / figure emission.

A :class:`Report` holds one analysis: a model echo, scalar results and one
table (``columns`` plus ``data`` rows). JSON is the canonical form and the
CSV is a pure function of it, so ``csv_from_json(json.load(f))`` reproduces
the emitted CSV byte for byte.
"""

from __future__ import annotations

import io
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

SCHEMA_VERSION = "1"
DATA_SUFFIXES = {".csv", ".json"}
FIGURE_SUFFIXES = {".svg", ".png", ".pdf"}


def _clean(value):
    """Plain JSON types; non-finite floats become the strings ``nan``/``inf``/``-inf``."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(value, complex):
        return {"re": _clean(value.real), "im": _clean(value.imag)}
    return value


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


@dataclass
class Report:
    analysis: str
    model: dict
    results: dict
    columns: list
    data: list
    config: dict = field(default_factory=dict)
    summary: str = ""
    figure: Optional[Callable] = None

    def as_json(self) -> dict:
        return _clean({
            "schema_version": SCHEMA_VERSION,
            "analysis": self.analysis,
            "model": self.model,
            "config": self.config,
            "results": self.results,
            "columns": list(self.columns),
            "data": [list(row) for row in self.data],
        })


def json_text(report: Report) -> str:
    return json.dumps(report.as_json(), indent=2, sort_keys=False) + "\n"


def csv_from_json(obj: dict) -> str:
    """CSV text (header plus rows) regenerated from a parsed JSON report."""
    buf = io.StringIO()
    buf.write(",".join(obj["columns"]) + "\n")
    for row in obj["data"]:
        buf.write(",".join(format_cell(v) for v in row) + "\n")
    return buf.getvalue()


def emit_json(report: Report, path) -> None:
    Path(path).write_text(json_text(report))


def emit_csv(report: Report, path) -> None:
    Path(path).write_text(csv_from_json(report.as_json()))


def emit_figure(report: Report, path) -> None:
    from .plots import save

    if report.figure is None:
        raise ValueError(f"analysis {report.analysis!r} has no figure")
    save(report.figure(), path)


def emit(report: Report, path) -> None:
    """Dispatch on the file suffix."""
    suffix = Path(path).suffix.lower()
    if suffix == ".json":
        emit_json(report, path)
    elif suffix == ".csv":
        emit_csv(report, path)
    elif suffix in FIGURE_SUFFIXES:
        emit_figure(report, path)
    else:
        raise ValueError(f"unsupported output suffix {suffix!r} for {path}")


def write_run_metadata(path, argv, outputs, started: str, elapsed: float) -> None:
    """Sidecar with everything that would break byte-identical data files."""
    from . import __version__

    meta = {
        "argv": list(argv),
        "outputs": [str(p) for p in outputs],
        "started": started,
        "elapsed_seconds": elapsed,
        "isochrone_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "platform": sys.platform,
    }
    Path(path).write_text(json.dumps(meta, indent=2) + "\n")
