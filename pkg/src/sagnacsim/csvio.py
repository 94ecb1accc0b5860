"""Minimal CSV helpers with byte-stable round trips.

Floats are rendered with ``repr`` (shortest form that parses back to the
same double), which makes export -> import -> export byte-identical.
"""

from __future__ import annotations

from pathlib import Path

from .errors import DataError


def format_value(value) -> str:
    if isinstance(value, bool):
        raise TypeError("bool is not a CSV value")
    if isinstance(value, (int,)):
        return str(value)
    return repr(float(value))


def write_rows(path, header: tuple[str, ...], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_rows(path, expected_header: tuple[str, ...]) -> list[tuple[str, ...]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty CSV file")
    header = tuple(h.strip() for h in lines[0].split(","))
    if header != expected_header:
        raise DataError(
            f"{path}: expected header {','.join(expected_header)!r}, got {lines[0]!r}"
        )
    rows = []
    for ln in lines[1:]:
        fields = tuple(f.strip() for f in ln.split(","))
        if len(fields) != len(expected_header):
            raise DataError(f"{path}: malformed row {ln!r}")
        rows.append(fields)
    return rows
