"""Plain-text formats for measures, surfaces and curves.

A measure file has one atom per line, ``birth death mass``, separated by
whitespace.  Lines starting with ``#`` are comments.  Files with only two
columns are read as diagrams with every mass equal to 1.
"""
from __future__ import annotations

import io
import os
from typing import IO, Union

import numpy as np

from .measures import PersistenceMeasure
from .representations import RepresentationGrid

__all__ = [
    "parse_measure",
    "load_measure",
    "load_diagram",
    "format_measure",
    "save_measure",
    "format_surface_csv",
    "format_curve_csv",
]

PathOrFile = Union[str, os.PathLike, IO[str]]


def _read_text(source: PathOrFile) -> str:
    if hasattr(source, "read"):
        return source.read()
    with open(source, encoding="utf-8") as fh:
        return fh.read()


def parse_measure(text: str, columns=None) -> PersistenceMeasure:
    """Parse measure text; ``columns`` forces 2 or 3 columns, otherwise it is inferred."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise ValueError(f"line {lineno}: expected numbers, got {line!r}") from None
    if not rows:
        return PersistenceMeasure.empty()
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError("inconsistent number of columns")
    width = widths.pop()
    if columns is not None and width != columns:
        raise ValueError(f"expected {columns} columns, found {width}")
    if width == 2:
        return PersistenceMeasure(np.array(rows))
    if width == 3:
        arr = np.array(rows)
        return PersistenceMeasure(arr[:, :2], arr[:, 2])
    raise ValueError(f"expected 2 or 3 columns, found {width}")


def load_measure(source: PathOrFile) -> PersistenceMeasure:
    """Read ``birth death mass`` lines (``birth death`` lines get mass 1)."""
    return parse_measure(_read_text(source))


def load_diagram(source: PathOrFile) -> PersistenceMeasure:
    """Read the two-column ``birth death`` format, one unit atom per line."""
    return parse_measure(_read_text(source), columns=2)


def format_measure(mu: PersistenceMeasure, header: str = "") -> str:
    out = io.StringIO()
    for line in header.splitlines():
        out.write(f"# {line}\n")
    for (b, d), m in zip(mu.points, mu.masses):
        out.write(f"{_num(b)} {_num(d)} {_num(m)}\n")
    return out.getvalue()


def save_measure(mu: PersistenceMeasure, path: Union[str, os.PathLike], header: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_measure(mu, header))


def _num(x) -> str:
    return repr(float(x))


def format_surface_csv(values: np.ndarray, grid: RepresentationGrid) -> str:
    """Row ``i`` holds the values at ``x_i`` for every ``y_j``; bounds go in a comment line."""
    (x0, x1), (y0, y1) = grid.bounds
    nx, ny = grid.resolution
    out = io.StringIO()
    out.write(f"# x_min={_num(x0)} x_max={_num(x1)} nx={nx} y_min={_num(y0)} y_max={_num(y1)} ny={ny}\n")
    for row in np.asarray(values):
        out.write(",".join(_num(v) for v in row) + "\n")
    return out.getvalue()


def format_curve_csv(values: np.ndarray, grid: RepresentationGrid) -> str:
    out = io.StringIO()
    out.write("t,value\n")
    for t, v in zip(grid.axis(0), np.asarray(values)):
        out.write(f"{_num(t)},{_num(v)}\n")
    return out.getvalue()
