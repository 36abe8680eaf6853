"""Small CSV helpers with stable column order."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from ..errors import MissingInput


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_csv(rows, columns, path=None):
    """Write dict rows with the given header; returns the CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    text = buf.getvalue()
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_csv(path):
    """Rows of a CSV file as dicts of strings.

    Raises
    ------
    MissingInput
        The file is missing or has no data rows.
    """
    p = Path(path)
    if not p.exists():
        raise MissingInput(f"{path} does not exist")
    with p.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise MissingInput(f"{path} has no data rows")
    return rows
