"""Sample files, normalization and report writing.

A sample file holds one JSON object per line::

    {"id": "s0", "values": [0.25, 0.75, 0.25]}

Reports are JSON documents with a deterministic ``body`` and a separate
``timings`` section; only the body is covered by ``body_sha256``.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import PwclustError

EPS = 2.0 ** -32


class DataError(PwclustError, ValueError):
    """Malformed or invalid input data."""


@dataclass(frozen=True)
class TimeSeries:
    id: str
    values: np.ndarray

    def __len__(self):
        return int(self.values.size)


@dataclass(frozen=True)
class Normalization:
    """Affine map ``x -> (x - lo) / ((hi - lo) * (1 + eps))`` shared by all samples."""

    lo: float
    hi: float
    eps: float = EPS

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.hi == self.lo:
            return np.full(x.shape, 0.5)
        out = (x - self.lo) / ((self.hi - self.lo) * (1.0 + self.eps))
        # guard the top end against rounding
        return np.clip(out, 0.0, np.nextafter(1.0, 0.0))

    def as_dict(self) -> dict:
        return {"min": self.lo, "max": self.hi, "eps": self.eps}


def read_samples(path) -> list:
    """Parse a sample file without normalizing; raises :class:`DataError` with a line number."""
    out = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict) or "id" not in rec or "values" not in rec:
                raise DataError(f"{path}:{lineno}: record needs 'id' and 'values'")
            sid = str(rec["id"])
            if sid in seen:
                raise DataError(f"{path}:{lineno}: duplicate id {sid!r}")
            seen.add(sid)
            vals = rec["values"]
            if not isinstance(vals, list) or not vals:
                raise DataError(f"{path}:{lineno}: 'values' must be a nonempty array")
            try:
                arr = np.array([float(v) for v in vals], dtype=np.float64)
            except (TypeError, ValueError):
                raise DataError(f"{path}:{lineno}: 'values' must be numbers") from None
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{path}:{lineno}: non-finite value in sample {sid!r}")
            out.append(TimeSeries(sid, arr))
    if not out:
        raise DataError(f"{path}: no samples found")
    return out


def normalize(samples) -> tuple:
    """Rescale all samples into ``[0, 1)`` with one affine map."""
    lo = min(float(s.values.min()) for s in samples)
    hi = max(float(s.values.max()) for s in samples)
    norm = Normalization(lo, hi)
    return [TimeSeries(s.id, norm.apply(s.values)) for s in samples], norm


def ingest(path) -> tuple:
    """Read and normalize a sample file; returns ``(samples, normalization)``."""
    return normalize(read_samples(path))


def _atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if not math.isfinite(f):
            raise ValueError("reports cannot hold non-finite numbers")
        return f
    return obj


def dumps_body(body: dict) -> str:
    """Canonical JSON for a report body (sorted keys, shortest round-trip floats)."""
    return json.dumps(_plain(body), sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_report(path, kind: str, body: dict, timings: dict | None = None):
    body = {"tool": "pwclust", "version": __version__, "kind": kind, **body}
    text_body = dumps_body(body)
    doc = {
        "body": json.loads(text_body),
        "body_sha256": hashlib.sha256(text_body.encode()).hexdigest(),
        "timings": _plain(timings or {}),
    }
    _atomic_write(path, json.dumps(doc, sort_keys=True, indent=1) + "\n")


def read_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_samples(path, samples):
    lines = [json.dumps({"id": s.id, "values": _plain(s.values)}, separators=(",", ":"))
             for s in samples]
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, obj):
    _atomic_write(path, json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n")
