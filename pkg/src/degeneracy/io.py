"""XYZ point files and JSON report envelopes.

XYZ: one point per line, coordinates separated by single spaces, written with
``repr(float)`` (shortest string that round-trips, at most 17 significant
digits).  Blank lines and lines starting with ``#`` are skipped on read.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
from pathlib import Path
from typing import Any, Optional, TextIO, Union

import numpy as np

from degeneracy.errors import InvalidInputError
from degeneracy.geometry import PointCloud

__all__ = [
    "XyzFormatError",
    "dumps_payload",
    "format_xyz",
    "make_envelope",
    "parse_xyz",
    "read_xyz",
    "to_jsonable",
    "write_xyz",
]


class XyzFormatError(InvalidInputError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


def format_xyz(cloud: PointCloud, header: Optional[str] = None) -> str:
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.extend(" ".join(repr(float(x)) for x in p) for p in cloud.points)
    return "\n".join(lines) + ("\n" if lines else "")


def write_xyz(cloud: PointCloud, dest: Union[str, Path, TextIO], header: Optional[str] = None) -> None:
    text = format_xyz(cloud, header)
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8")


def parse_xyz(text: str) -> PointCloud:
    rows: list[list[float]] = []
    width = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        try:
            row = [float(f) for f in fields]
        except ValueError:
            raise XyzFormatError(line_no, f"cannot parse coordinates from {raw!r}") from None
        if not all(math.isfinite(x) for x in row):
            raise XyzFormatError(line_no, "non-finite coordinate")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise XyzFormatError(line_no, f"expected {width} coordinates, found {len(row)}")
        rows.append(row)
    if not rows:
        return PointCloud(np.empty((0, 3)), dim=3)
    return PointCloud(np.array(rows, dtype=np.float64))


def read_xyz(path: Union[str, Path]) -> PointCloud:
    return parse_xyz(Path(path).read_text(encoding="utf-8"))


def to_jsonable(obj: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def make_envelope(version: str, command: str, params: dict, payload: Any, timestamp: Optional[str] = None) -> dict:
    if timestamp is None:
        timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return {
        "version": version,
        "command": command,
        "timestamp": timestamp,
        "params": to_jsonable(params),
        "payload": to_jsonable(payload),
    }


def dumps_payload(payload: Any) -> str:
    """Canonical JSON for comparing payloads byte for byte."""
    return json.dumps(to_jsonable(payload), sort_keys=True, allow_nan=False)
