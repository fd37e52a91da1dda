"""File formats: CSV series/profiles, key=value run configs, JSON manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigurationError
from .fields import GridSpec, RadialField
from .integrator import ProfileSnapshot, TimeSeries


def fmt(x: float) -> str:
    """Shortest decimal that parses back to the same double."""
    return repr(float(x))


def write_columns(path: Path, header: Iterable[str], columns: Iterable[Iterable[float]]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in zip(*columns):
            writer.writerow([fmt(v) for v in row])
    return path


def read_columns(path: Path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigurationError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    return header, data


def write_timeseries(path: Path, series: TimeSeries) -> Path:
    return write_columns(path, ("t", "f_origin"), (series.times, series.f_origin))


def read_timeseries(path: Path) -> TimeSeries:
    header, data = read_columns(path)
    if header[:2] != ["t", "f_origin"]:
        raise ConfigurationError(f"{path}: expected header t,f_origin, got {','.join(header)}")
    return TimeSeries(data[:, 0], data[:, 1])


def profile_filename(T: float) -> str:
    return f"profile_{fmt(T)}.csv"


def write_profile(path: Path, snapshot: ProfileSnapshot) -> Path:
    return write_columns(path, ("r", "f"), (snapshot.field.radii, snapshot.field.values))


def read_profile(path: Path, T: float | None = None) -> ProfileSnapshot:
    """Load ``r,f`` columns as a snapshot; ``T`` defaults to the one encoded in the name."""
    path = Path(path)
    header, data = read_columns(path)
    if header[:2] != ["r", "f"]:
        raise ConfigurationError(f"{path}: expected header r,f, got {','.join(header)}")
    if T is None:
        m = re.fullmatch(r"profile_(.+)\.csv", path.name)
        if not m:
            raise ConfigurationError(f"{path}: cannot infer snapshot time; pass it explicitly")
        T = float(m.group(1))
    r, f = data[:, 0], data[:, 1]
    grid = GridSpec(float(r[1] - r[0]), float(r[-1]))
    return ProfileSnapshot(float(T), RadialField(grid, f, float(T)))


def write_json(path: Path, payload: Mapping) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n",
                    encoding="utf-8")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def file_entries(paths: Iterable[Path], root: Path) -> list[dict]:
    return [{"path": str(Path(p).relative_to(root)), "sha256": sha256(p)} for p in paths]


def parse_keyvalue(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key=value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{source}:{lineno}: empty key")
        out[key.lstrip("-").replace("_", "-")] = value
    return out


def read_keyvalue(path: Path) -> dict[str, str]:
    path = Path(path)
    return parse_keyvalue(path.read_text(encoding="utf-8"), str(path))


def parse_float_list(text: str) -> list[float]:
    items = [s for s in re.split(r"[,\s]+", text.strip()) if s]
    values = [float(s) for s in items]
    if any(not math.isfinite(v) for v in values):
        raise ConfigurationError(f"non-finite entry in list {text!r}")
    return values
