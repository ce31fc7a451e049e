"""CSV output: header row, UTF-8, '.' decimals, shortest round-trip floats."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        raise TypeError("split complex values into real and imaginary columns")
    return str(v)


def write_csv(path, header, rows) -> Path:
    """Write ``rows`` under ``header``; floats use ``repr`` so reruns are bit-identical."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(header)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for r in rows:
            if len(r) != n:
                raise ValueError(f"row has {len(r)} cells, header has {n}")
            w.writerow([format_cell(c) for c in r])
    return path


def read_csv(path) -> tuple:
    """``(header, rows)`` with every cell as a string."""
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
