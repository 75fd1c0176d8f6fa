"""Dense complex-matrix helpers used by the network models and the optimizer.

Everything operates on plain numpy arrays. The matrices in this problem are
small (a few hundred ports at most), so full eigendecompositions and direct
solves are the right tool; no sparse or iterative machinery.

All functions are pure; arrays are never modified in place.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    NotHermitianError,
    NotPositiveDefiniteError,
    OutOfRangeError,
    ZeroVectorError,
)

# Hermitian admission tolerance, relative to the Frobenius norm. Coupling
# matrices are built symmetric but quadrature leaves last-digit noise.
HERMITIAN_REL_TOL = 1e-9

_ALLOWED_EXPONENTS = (0.5, -0.5, -1.0)


def hermitian_power(a, exponent):
    """Fractional power of a Hermitian positive-definite matrix.

    ``exponent`` must be one of +1/2, -1/2 or -1. Computed through a full
    eigendecomposition: reliable and O(n^3), which is fine at these sizes.
    Real symmetric input yields a real result.

    Raises NotHermitianError if the asymmetry exceeds ``HERMITIAN_REL_TOL``
    times the Frobenius norm, NotPositiveDefiniteError if any eigenvalue
    is <= 0.
    """
    if exponent not in _ALLOWED_EXPONENTS:
        raise ValueError(f"exponent must be one of {_ALLOWED_EXPONENTS}, got {exponent}")
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    norm = np.linalg.norm(a)
    asym = np.linalg.norm(a - a.conj().T)
    if asym > HERMITIAN_REL_TOL * max(norm, np.finfo(float).tiny):
        raise NotHermitianError(
            f"asymmetry {asym:.3e} exceeds tolerance {HERMITIAN_REL_TOL * norm:.3e}"
        )
    ah = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(ah)
    if w.min() <= 0.0:
        raise NotPositiveDefiniteError(f"minimum eigenvalue {w.min():.6e} <= 0")
    s = (v * w**exponent) @ v.conj().T
    return 0.5 * (s + s.conj().T)


def right_singular_frame(g):
    """First right-singular direction of a nonzero row vector, plus a
    deterministic orthonormal completion.

    Returns ``(v, v_perp)`` where ``v`` is the (n, 1) column g^H / ||g|| and
    ``v_perp`` is (n, n-1) with ``[v, v_perp]`` unitary. The completion is
    obtained by orthonormalizing the canonical basis vectors in order
    against ``v`` (a general SVD is unnecessary for a rank-1 row).
    """
    g = np.asarray(g, dtype=complex).reshape(-1)
    n = g.size
    norm = np.linalg.norm(g)
    if norm == 0.0:
        raise ZeroVectorError("cannot build a singular frame for the zero vector")
    frame = np.zeros((n, n), dtype=complex)
    frame[:, 0] = g.conj() / norm
    k = 1
    for j in range(n):
        if k == n:
            break
        c = np.zeros(n, dtype=complex)
        c[j] = 1.0
        for _ in range(2):  # second pass re-orthogonalizes against rounding
            c = c - frame[:, :k] @ (frame[:, :k].conj().T @ c)
        nc = np.linalg.norm(c)
        if nc > 1e-6:
            frame[:, k] = c / nc
            k += 1
    if k != n:
        raise RuntimeError("canonical completion failed to span the orthocomplement")
    return frame[:, :1], frame[:, 1:]


@dataclass(frozen=True)
class IndexRange:
    """1-based inclusive index range, mirroring submatrix selector notation."""

    start: int
    end: int

    def __post_init__(self):
        if not (1 <= self.start <= self.end):
            raise OutOfRangeError(f"invalid range {self.start}..{self.end}")

    def __len__(self):
        return self.end - self.start + 1

    @property
    def slice(self):
        return slice(self.start - 1, self.end)


def block(a, rows: IndexRange, cols: IndexRange):
    """Copy of the submatrix addressed by two 1-based inclusive ranges."""
    a = np.asarray(a)
    if rows.end > a.shape[0] or cols.end > a.shape[1]:
        raise OutOfRangeError(
            f"range ({rows.start}..{rows.end}, {cols.start}..{cols.end}) "
            f"outside matrix of shape {a.shape}"
        )
    return a[rows.slice, cols.slice].copy()


class UnitarySymmetryResiduals(NamedTuple):
    unitarity: float
    symmetry: float


def is_unitary_symmetric(theta) -> UnitarySymmetryResiduals:
    """Max-abs residuals of Theta^H Theta - I and Theta - Theta^T.

    Returns the two residuals; the caller decides pass/fail.
    """
    theta = np.asarray(theta)
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {theta.shape}")
    n = theta.shape[0]
    unit = np.max(np.abs(theta.conj().T @ theta - np.eye(n)))
    sym = np.max(np.abs(theta - theta.T))
    return UnitarySymmetryResiduals(float(unit), float(sym))
