"""Artifact serialization: columnar field dumps, CSV tables and JSON reports.

All writers are atomic (write to a temporary file in the target directory,
then rename) and deterministic: floats are rendered with shortest
round-trip repr, JSON keys are sorted, CSV uses CRLF line endings with '.'
decimals.  Every table starts with a comment line naming the generating
subcommand and seed.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError
from .fields import FourierField


def atomic_write_text(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def field_to_text(f: FourierField) -> str:
    """Columnar "n re im" dump of the spectrum."""
    lines = []
    for n, c in zip(f.wavenumbers(), f.coeffs):
        lines.append(f"{int(n)} {_fmt(c.real)} {_fmt(c.imag)}")
    return "\n".join(lines) + "\n"


def field_from_text(text: str, grid_size: int = 0) -> FourierField:
    """Inverse of field_to_text; accepts any subset of modes."""
    modes = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ConfigurationError(f"malformed field line: {line!r}")
        n = int(parts[0])
        modes[n] = float(parts[1]) + 1j * float(parts[2])
    if not modes:
        raise ConfigurationError("no modes in field dump")
    cutoff = max(abs(n) for n in modes)
    return FourierField.from_modes(modes, cutoff, grid_size)


def csv_text(meta: str, columns: Sequence[str],
             rows: Iterable[Sequence]) -> str:
    """CSV with CRLF line endings and a leading '# key=value ...' comment."""
    out = [f"# {meta}", ",".join(columns)]
    for row in rows:
        out.append(",".join(_fmt(v) for v in row))
    return "\r\n".join(out) + "\r\n"


def write_csv(path: str, meta: str, columns: Sequence[str],
              rows: Iterable[Sequence]) -> None:
    atomic_write_text(path, csv_text(meta, columns, rows))


def write_json(path: str, obj: dict, meta: Optional[str] = None) -> None:
    payload = dict(obj)
    if meta is not None:
        payload["_meta"] = meta
    atomic_write_text(path, json.dumps(_jsonable(payload), sort_keys=True,
                                       indent=2) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def read_table_csv(path: str) -> Tuple[List[str], np.ndarray]:
    """Read a comma-separated table, skipping '#' comment lines; returns
    (column names, data array)."""
    names: List[str] = []
    rows: List[List[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not names:
                names = [c.strip() for c in line.split(",")]
                continue
            rows.append([float(c) for c in line.split(",")])
    if not names or not rows:
        raise ConfigurationError(f"no data rows in {path}")
    return names, np.asarray(rows)


def read_grid_csv(path: str) -> Tuple[np.ndarray, np.ndarray]:
    """Read a two-column (x, value) grid dump."""
    _, data = read_table_csv(path)
    if data.shape[1] < 2:
        raise ConfigurationError(f"{path}: expected two columns")
    return data[:, 0], data[:, 1]
