"""Deterministic CSV/JSON writers with an embedded metadata header."""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = [
    "VERSION",
    "CONVENTIONS",
    "CONVENTION_HASH",
    "metadata",
    "atomic_write_text",
    "atomic_write_bytes",
    "format_float",
    "write_csv",
    "read_csv",
    "write_json",
    "read_json",
    "META_PREFIX",
]

VERSION = "0.1.0"
# Everything that changes numbers in stored files; bump on any change.
CONVENTIONS = (
    "units=hbar=omega=1;psi0_prefactor=(2pi)^-1/4;even-sector-only;"
    "overlap-sign=parent-positive;nu=sum q exp(-i(E'_m-E_n)t);"
    "state-index=N-terms;spectrum-cache=roots+offsets+norms/v1"
)
CONVENTION_HASH = hashlib.sha256(CONVENTIONS.encode()).hexdigest()[:12]
META_PREFIX = "# meta: "


def metadata(config: dict | None = None, **extra) -> dict:
    meta = {"package": "deltaquench", "version": VERSION, "convention_hash": CONVENTION_HASH}
    if config is not None:
        meta["config"] = config
    meta.update(extra)
    return meta


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj, *, indent: int | None = 2) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=indent, allow_nan=False)


def atomic_write_bytes(path, data: bytes) -> Path:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def format_float(value) -> str:
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return "%.17g" % value


def write_csv(path, columns: dict, meta: dict) -> Path:
    """Columns are equal-length sequences; integer columns stay integral."""
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    lengths = {a.shape[0] for a in arrays}
    if len(lengths) > 1:
        raise ValueError("CSV columns differ in length")
    formatted = []
    for arr in arrays:
        if arr.dtype.kind in "iu":
            formatted.append([str(int(v)) for v in arr])
        elif arr.dtype.kind == "f":
            formatted.append([format_float(v) for v in arr])
        else:
            formatted.append([str(v) for v in arr])
    lines = [META_PREFIX + dumps(meta, indent=None), ",".join(names)]
    lines.extend(",".join(row) for row in zip(*formatted))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path) -> tuple[dict, dict]:
    """Return ``(meta, columns)``; numeric-looking columns become float arrays."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith(META_PREFIX):
            raise ValueError(f"{path} has no metadata header")
        meta = json.loads(first[len(META_PREFIX):])
        names = fh.readline().rstrip("\n").split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    columns = {}
    for i, name in enumerate(names):
        raw = [r[i] for r in rows]
        try:
            columns[name] = np.array([float(v) for v in raw])
        except ValueError:
            columns[name] = np.array(raw, dtype=object)
    return meta, columns


def write_json(path, payload: dict, meta: dict) -> Path:
    body = dict(payload)
    body["meta"] = meta
    return atomic_write_text(path, dumps(body) + "\n")


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
