"""Deterministic CSV helpers.

Floats are written with repr (shortest round-trip form), so identical
values always serialize to identical bytes and parse back exactly.
Comment lines start with '#'.
"""

from __future__ import annotations

import numpy as np


def fmt(x) -> str:
    """Shortest exact decimal form of a float; empty string for None."""
    if x is None:
        return ""
    return repr(float(x))


def write_complex_matrix_csv(path, matrix, header_lines=()):
    """Row-major matrix dump; each entry becomes adjacent re,im cells."""
    matrix = np.asarray(matrix, dtype=complex)
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for row in matrix:
            cells = []
            for entry in row:
                cells.append(fmt(entry.real))
                cells.append(fmt(entry.imag))
            fh.write(",".join(cells) + "\n")


def read_complex_matrix_csv(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = [float(c) for c in line.split(",")]
            if len(cells) % 2 != 0:
                raise ValueError("expected an even number of cells (re,im pairs)")
            rows.append([complex(a, b) for a, b in zip(cells[::2], cells[1::2])])
    return np.asarray(rows, dtype=complex)


def write_real_matrix_csv(path, matrix, header_lines=()):
    matrix = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for row in matrix:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_real_matrix_csv(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(c) for c in line.split(",")])
    return np.asarray(rows, dtype=float)
