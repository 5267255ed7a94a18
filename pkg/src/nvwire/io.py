"""Locale-independent CSV and key-value file helpers."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import FileFormatError


def fmt(x, digits=6):
    """Format a real or complex number with ``digits`` significant digits."""
    if isinstance(x, (complex, np.complexfloating)):
        x = complex(x)
        sign = "+" if x.imag >= 0 or np.isnan(x.imag) else "-"
        return f"{x.real:.{digits}g}{sign}{abs(x.imag):.{digits}g}j"
    return f"{float(x):.{digits}g}"


def read_csv(path, header, converters):
    """Read a CSV file with an exact ``header`` and return columns as lists.

    ``converters`` maps each column to a callable; conversion failures
    raise :class:`FileFormatError` naming the offending line.
    """
    path = Path(path)
    try:
        fh = path.open("r", encoding="utf-8", newline="")
    except OSError as exc:
        raise FileFormatError(f"cannot open {path}: {exc.strerror}", path) from exc
    columns = [[] for _ in header]
    with fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise FileFormatError("empty file", path, 1) from None
        if [h.strip() for h in first] != list(header):
            raise FileFormatError(f"expected header {','.join(header)!r}, got "
                                  f"{','.join(first)!r}", path, 1)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise FileFormatError(f"expected {len(header)} fields, got {len(row)}",
                                      path, line)
            for col, conv, cell in zip(columns, converters, row):
                try:
                    col.append(conv(cell.strip()))
                except (TypeError, ValueError):
                    raise FileFormatError(f"cannot parse {cell.strip()!r}", path, line) from None
    return columns


def write_csv(path, header, rows):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_key_values(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    path = Path(path)
    out = {}
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(f"cannot open {path}: {exc.strerror}", path) from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FileFormatError("expected 'key = value'", path, lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise FileFormatError("empty key", path, lineno)
        out[key] = value
    return out


def write_key_values(path, mapping):
    lines = [f"{k} = {v}" for k, v in mapping.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_complex(text):
    """Accept ``-20.4+1.3i``, ``-20.4+1.3j`` or a plain real number."""
    s = str(text).strip().replace(" ", "").replace("i", "j")
    if s.endswith("j") and s[:-1] and s[-2] in "+-":
        s = s[:-1] + "1j"
    return complex(s)
