"""CSV and manifest IO.

Every CSV carries a format-version comment line followed by a header row.
Cells are written with shortest round-trip float formatting so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

CSV_FORMAT = "wordniche-csv-1"
RUN_FORMAT = "wordniche-run-1"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"# format={CSV_FORMAT}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Read back a CSV written by :func:`write_csv` (comments skipped)."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        rows = [r for r in csv.reader(ln for ln in handle if not ln.startswith("#"))]
    if not rows:
        raise ValueError(f"no rows in {path}")
    return rows[0], rows[1:]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def write_json(path: str | Path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True))
        handle.write("\n")
