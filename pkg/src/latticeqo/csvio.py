"""Deterministic CSV/JSON emitters.

Floats are written with 12 significant digits so that identical runs give
byte-identical files; every file starts with a comment header carrying the
tool version and (when available) the resolved-config hash.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__


def fmt(value) -> str:
    """Render one CSV field: floats at 12 significant digits."""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if x != x:
        return "nan"
    if x == 0.0:
        x = 0.0  # normalize -0.0
    return format(x, ".12g")


def config_hash(config: dict) -> str:
    """Short stable hash of a resolved configuration mapping."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def header_comment(extra: Iterable[str] = (), cfg_hash: str | None = None) -> list[str]:
    lines = [f"latticeqo {__version__}" + (f" config={cfg_hash}" if cfg_hash else "")]
    lines.extend(extra)
    return lines


def write_csv(
    path,
    columns: Sequence[str],
    rows: Iterable[Sequence],
    header_lines: Iterable[str] = (),
    cfg_hash: str | None = None,
) -> Path:
    """Write a CSV file with deterministic formatting; returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = []
    for line in header_comment(header_lines, cfg_hash):
        out.append(f"# {line}")
    out.append(",".join(columns))
    for row in rows:
        out.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path


def write_json(path, payload: dict, cfg_hash: str | None = None) -> Path:
    """Write a JSON report; metadata is embedded under the "meta" key."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"meta": {"tool": "latticeqo", "version": __version__}}
    if cfg_hash:
        doc["meta"]["config_hash"] = cfg_hash
    doc.update(payload)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_csv_columns(path) -> tuple[list[str], list[list[str]]]:
    """Minimal strict CSV reader: returns (column names, raw field rows).

    Raises ``ValueError`` with the offending 1-based line number on ragged
    rows.  Comment lines starting with '#' are skipped.
    """
    names: list[str] | None = None
    rows: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if names is None:
                names = fields
                continue
            if len(fields) != len(names):
                raise ValueError(
                    f"line {lineno}: expected {len(names)} fields, got {len(fields)}"
                )
            rows.append(fields)
    if names is None:
        raise ValueError("line 1: empty file, no header row")
    return names, rows
