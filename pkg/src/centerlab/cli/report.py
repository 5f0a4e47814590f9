"""JSON reports and atomic file output."""

from __future__ import annotations

import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def plain(obj):
    """Convert numpy values, tuples and non-finite floats into JSON-safe objects."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": plain(obj.real), "im": plain(obj.imag)}
    return obj


def build_report(scenario: dict, result, thresholds: dict, warnings=(), *, timestamp=True, error=None) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "scenario": dict(scenario),
        "result": result,
        "thresholds": thresholds,
        "warnings": list(warnings),
    }
    if timestamp:
        report["scenario"]["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if error is not None:
        report["error"] = error
    return plain(report)


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename over the target."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def emit(text: str, out=None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)
