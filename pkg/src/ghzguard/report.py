"""CSV/JSON serialisation for CLI reports.

Numbers are written with 12 significant digits, independent of locale.
Complex values become ``{"re": x, "im": y}`` in JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

SIG_DIGITS = 12


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    out = format(x, f".{SIG_DIGITS}g")
    return "0" if out == "-0" else out


def _round(x: float) -> float:
    if not math.isfinite(x):
        return x
    return float(fmt_float(x))


def jsonable(value: Any) -> Any:
    """Convert report values to plain JSON types."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = _round(float(value))
        # JSON has no inf/nan literals.
        return v if math.isfinite(v) else fmt_float(v)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": _round(value.real), "im": _round(value.imag)}
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()] if value.ndim else jsonable(value.item())
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return value


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_float(float(value))
    if isinstance(value, Mapping):
        return ";".join(f"{k}={_csv_cell(v)}" for k, v in value.items())
    return str(value)


def to_csv(rows: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def to_json(command: str, meta: Mapping[str, Any], rows: Iterable[Mapping[str, Any]]) -> str:
    doc = {"command": command, "meta": jsonable(meta), "rows": [jsonable(r) for r in rows]}
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"
