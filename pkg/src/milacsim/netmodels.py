"""End-to-end channel, precoder and combiner matrices for the four
architectures: all-digital, analog network at the transmitter, at the
receiver, or at both ends.

Each architecture has an admittance-form model (channel plus precoder
and/or combiner selected from the inverse of a port system) and an
equivalent impedance form (the matching-network style expression); both are
implemented so they can be cross-validated.

A coupling of None means a perfectly matched, uncoupled array (z0 * I) and
short-circuits to the simplified formulas, so that path contains no matrix
inversions of the coupling at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .coupling import CouplingMatrix, REFERENCE_IMPEDANCE
from .errors import (
    DimensionMismatchError,
    SingularBlockError,
    SingularCouplingError,
    SingularSystemError,
)

# Reciprocal condition number below which a system is treated as singular.
RCOND_MIN = 1e-14


class Architecture(Enum):
    DIGITAL_MIMO = "digital_mimo"
    MILAC_TX = "milac_tx"
    MILAC_RX = "milac_rx"
    MILAC_BOTH = "milac_both"


@dataclass(frozen=True)
class ScenarioSpec:
    """Dimensions, couplings and transmission impedance for one scenario.

    The receiver-to-transmitter feedback block is structurally absent
    (unilateral approximation), so only z_rt exists.
    """

    architecture: Architecture
    n_t: int
    n_r: int
    z_rt: np.ndarray  # (n_r, n_t) Ohms
    n_s: int = 1
    n_z: int = 1
    coupling_tx: CouplingMatrix | None = None
    coupling_rx: CouplingMatrix | None = None
    z0: float = REFERENCE_IMPEDANCE

    def __post_init__(self):
        z_rt = np.asarray(self.z_rt, dtype=complex)
        if z_rt.shape != (self.n_r, self.n_t):
            raise DimensionMismatchError(
                f"z_rt has shape {z_rt.shape}, expected ({self.n_r}, {self.n_t})"
            )
        if not np.all(np.isfinite(z_rt)):
            raise ValueError("z_rt contains non-finite entries")
        if self.coupling_tx is not None and self.coupling_tx.n != self.n_t:
            raise DimensionMismatchError("coupling_tx size does not match n_t")
        if self.coupling_rx is not None and self.coupling_rx.n != self.n_r:
            raise DimensionMismatchError("coupling_rx size does not match n_r")
        for cm in (self.coupling_tx, self.coupling_rx):
            if cm is not None and abs(cm.z0 - self.z0) > 1e-9 * self.z0:
                raise ValueError("coupling reference impedance differs from spec z0")
        z_rt = z_rt.copy()
        z_rt.setflags(write=False)
        object.__setattr__(self, "z_rt", z_rt)


@dataclass(frozen=True)
class MilacPorts:
    """Admittance matrix of a reconfigurable analog network.

    A lossless reciprocal network has y = j*B with B real symmetric; use
    from_susceptance for that case. Arbitrary admittances are accepted so
    oracle tests can drive the models with lossy or non-reciprocal inputs.
    """

    y: np.ndarray  # Siemens
    side: str  # 'tx' or 'rx'

    def __post_init__(self):
        y = np.asarray(self.y, dtype=complex)
        if y.ndim != 2 or y.shape[0] != y.shape[1]:
            raise ValueError(f"admittance matrix must be square, got {y.shape}")
        if self.side not in ("tx", "rx"):
            raise ValueError("side must be 'tx' or 'rx'")
        y = y.copy()
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def dims(self) -> int:
        return self.y.shape[0]

    @classmethod
    def from_susceptance(cls, b, side) -> "MilacPorts":
        b = np.asarray(b)
        scale = max(float(np.linalg.norm(b)), np.finfo(float).tiny)
        if np.linalg.norm(np.asarray(b, dtype=complex).imag) > 1e-9 * scale:
            raise ValueError("susceptance matrix must be real")
        if np.linalg.norm(b - b.T) > 1e-9 * scale:
            raise ValueError("susceptance matrix must be symmetric")
        return cls(y=1j * np.asarray(b, dtype=float), side=side)

    def lossless_reciprocal_residuals(self):
        """Relative (reciprocity, losslessness) residuals of the admittance."""
        scale = max(float(np.linalg.norm(self.y)), np.finfo(float).tiny)
        recip = float(np.linalg.norm(self.y - self.y.T)) / scale
        lossless = float(np.linalg.norm(self.y.real)) / scale
        return recip, lossless


@dataclass(frozen=True)
class ScenarioModel:
    """Assembled (h, f, g); the end-to-end map is g @ h @ f with absent
    factors treated as identity."""

    h: np.ndarray
    f: np.ndarray | None = None
    g: np.ndarray | None = None

    def end_to_end(self):
        out = self.h
        if self.f is not None:
            out = out @ self.f
        if self.g is not None:
            out = self.g @ out
        return out


def _rcond(m) -> float:
    c = np.linalg.cond(m)
    if not np.isfinite(c) or c == 0.0:
        return 0.0
    return 1.0 / c


def _checked_solve(m, rhs, err_cls, what):
    if _rcond(m) < RCOND_MIN:
        raise err_cls(f"{what} is numerically singular (rcond < {RCOND_MIN})")
    return np.linalg.solve(m, rhs)


def _solve_guarded(m, rhs, err_cls, what):
    """Solve without the O(n^3) condition estimate.

    Only for call sites where invertibility is structurally guaranteed
    (the matrix has positive-definite real or Hermitian part, so
    x^H M x != 0 for x != 0). LAPACK failure or a non-finite result still
    raises, as a belt-and-braces guard.
    """
    try:
        out = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as err:
        raise err_cls(f"{what} is numerically singular") from err
    if not np.all(np.isfinite(out)):
        raise err_cls(f"{what} produced a non-finite solution")
    return out


def _right_solve(lhs, m, err_cls, what):
    """lhs @ inv(m) via a transposed solve."""
    return _checked_solve(m.T, lhs.T, err_cls, what).T


def _right_solve_guarded(lhs, m, err_cls, what):
    return _solve_guarded(m.T, lhs.T, err_cls, what).T


def _is_lossless_reciprocal(y) -> bool:
    scale = max(float(np.linalg.norm(y)), np.finfo(float).tiny)
    return (
        float(np.linalg.norm(y.real)) <= 1e-9 * scale
        and float(np.linalg.norm(y - y.T)) <= 1e-9 * scale
    )


def _require(spec, architecture):
    if spec.architecture is not architecture:
        raise ValueError(f"spec architecture is {spec.architecture}, expected {architecture}")


# --- channel matrices ------------------------------------------------------

def _h_digital(z_rr, z_rt, z_tt, z0):
    """z0 (Z_RR + z0 I)^-1 Z_RT (Z_TT + z0 I)^-1; None couplings reduce exactly."""
    if z_rr is None and z_tt is None:
        return z_rt / (4 * z0)
    h = z_rt
    scale = z0
    if z_rr is None:
        scale /= 2 * z0
    else:
        h = _solve_guarded(z_rr + z0 * np.eye(z_rr.shape[0]), h,
                           SingularSystemError, "Z_RR + z0 I")
    if z_tt is None:
        scale /= 2 * z0
    else:
        h = _right_solve_guarded(h, z_tt + z0 * np.eye(z_tt.shape[0]),
                                 SingularSystemError, "Z_TT + z0 I")
    return scale * h


def _h_tx(z_rr, z_rt, z_tt, z0):
    """z0 (Z_RR + z0 I)^-1 Z_RT Z_TT^-1."""
    if z_rr is None and z_tt is None:
        return z_rt / (2 * z0)
    h = z_rt
    scale = z0
    if z_rr is None:
        scale /= 2 * z0
    else:
        h = _solve_guarded(z_rr + z0 * np.eye(z_rr.shape[0]), h,
                           SingularSystemError, "Z_RR + z0 I")
    if z_tt is None:
        scale /= z0
    else:
        h = _right_solve_guarded(h, z_tt, SingularCouplingError, "Z_TT")
    return scale * h


def _h_rx(z_rr, z_rt, z_tt, z0):
    """z0 Z_RR^-1 Z_RT (Z_TT + z0 I)^-1."""
    if z_rr is None and z_tt is None:
        return z_rt / (2 * z0)
    h = z_rt
    scale = z0
    if z_rr is None:
        scale /= z0
    else:
        h = _solve_guarded(z_rr, h, SingularCouplingError, "Z_RR")
    if z_tt is None:
        scale /= 2 * z0
    else:
        h = _right_solve_guarded(h, z_tt + z0 * np.eye(z_tt.shape[0]),
                                 SingularSystemError, "Z_TT + z0 I")
    return scale * h


def _h_both(z_rr, z_rt, z_tt, z0):
    """z0 Z_RR^-1 Z_RT Z_TT^-1."""
    if z_rr is None and z_tt is None:
        return z_rt / z0
    h = z_rt
    scale = z0
    if z_rr is None:
        scale /= z0
    else:
        h = _solve_guarded(z_rr, h, SingularCouplingError, "Z_RR")
    if z_tt is None:
        scale /= z0
    else:
        h = _right_solve_guarded(h, z_tt, SingularCouplingError, "Z_TT")
    return scale * h


def _coupling_arrays(spec):
    z_tt = None if spec.coupling_tx is None else spec.coupling_tx.z
    z_rr = None if spec.coupling_rx is None else spec.coupling_rx.z
    return z_rr, z_tt


def channel_digital(spec: ScenarioSpec):
    """Wireless channel of the all-digital architecture."""
    _require(spec, Architecture.DIGITAL_MIMO)
    z_rr, z_tt = _coupling_arrays(spec)
    return _h_digital(z_rr, spec.z_rt, z_tt, spec.z0)


def channel_milac_tx(spec: ScenarioSpec):
    """Channel seen by a transmitter-side analog network."""
    _require(spec, Architecture.MILAC_TX)
    z_rr, z_tt = _coupling_arrays(spec)
    return _h_tx(z_rr, spec.z_rt, z_tt, spec.z0)


def channel_milac_rx(spec: ScenarioSpec):
    """Channel seen by a receiver-side analog network."""
    _require(spec, Architecture.MILAC_RX)
    z_rr, z_tt = _coupling_arrays(spec)
    return _h_rx(z_rr, spec.z_rt, z_tt, spec.z0)


def channel_milac_both(spec: ScenarioSpec):
    """Channel with analog networks at both ends."""
    _require(spec, Architecture.MILAC_BOTH)
    z_rr, z_tt = _coupling_arrays(spec)
    return _h_both(z_rr, spec.z_rt, z_tt, spec.z0)


# --- precoder / combiner (admittance form) ---------------------------------

def precoder_milac_tx(y_f: MilacPorts, spec: ScenarioSpec):
    """Precoder realized by the transmitter network.

    Rows n_s+1 .. n_s+n_t, columns 1 .. n_s of the inverse of
    Y_F / y0 + blockdiag(I, Z_TT^-1 / y0). The coupling enters the
    implemented map, not just the channel.
    """
    if y_f.dims != spec.n_s + spec.n_t:
        raise DimensionMismatchError(
            f"tx network has {y_f.dims} ports, expected {spec.n_s + spec.n_t}"
        )
    y0 = 1.0 / spec.z0
    m = np.array(y_f.y / y0, dtype=complex)
    idx = np.arange(spec.n_s)
    m[idx, idx] += 1.0
    if spec.coupling_tx is None:
        idx = np.arange(spec.n_s, spec.n_s + spec.n_t)
        m[idx, idx] += 1.0
    else:
        inv_ztt = _solve_guarded(
            spec.coupling_tx.z, np.eye(spec.n_t, dtype=complex),
            SingularCouplingError, "Z_TT",
        )
        m[spec.n_s:, spec.n_s:] += inv_ztt / y0
    cols = np.eye(spec.n_s + spec.n_t, dtype=complex)[:, : spec.n_s]
    # a lossless reciprocal network plus PD-real-part loading is provably
    # nonsingular; only arbitrary (lossy) admittances need the rcond gate
    if _is_lossless_reciprocal(y_f.y):
        sol = _solve_guarded(m, cols, SingularSystemError, "tx port system")
    else:
        sol = _checked_solve(m, cols, SingularSystemError, "tx port system")
    return sol[spec.n_s:, :]


def combiner_milac_rx(y_g: MilacPorts, spec: ScenarioSpec):
    """Combiner realized by the receiver network.

    Rows n_r+1 .. n_r+n_z, columns 1 .. n_r of the inverse of
    Y_G / y0 + blockdiag(Z_RR^-1 / y0, I).
    """
    if y_g.dims != spec.n_r + spec.n_z:
        raise DimensionMismatchError(
            f"rx network has {y_g.dims} ports, expected {spec.n_r + spec.n_z}"
        )
    y0 = 1.0 / spec.z0
    m = np.array(y_g.y / y0, dtype=complex)
    if spec.coupling_rx is None:
        idx = np.arange(spec.n_r)
        m[idx, idx] += 1.0
    else:
        inv_zrr = _solve_guarded(
            spec.coupling_rx.z, np.eye(spec.n_r, dtype=complex),
            SingularCouplingError, "Z_RR",
        )
        m[: spec.n_r, : spec.n_r] += inv_zrr / y0
    idx = np.arange(spec.n_r, spec.n_r + spec.n_z)
    m[idx, idx] += 1.0
    cols = np.eye(spec.n_r + spec.n_z, dtype=complex)[:, : spec.n_r]
    if _is_lossless_reciprocal(y_g.y):
        sol = _solve_guarded(m, cols, SingularSystemError, "rx port system")
    else:
        sol = _checked_solve(m, cols, SingularSystemError, "rx port system")
    return sol[spec.n_r:, :]


# --- impedance (matching-network) form --------------------------------------

def matching_form_tx(z_f, spec: ScenarioSpec):
    """(Z_T, J_T) of the impedance-form transmitter expression.

    J_T = Z_F12 (Z_F22 + Z_TT)^-1, Z_T = Z_F11 - J_T Z_F21. The end-to-end
    channel z0 (Z_RR + z0 I)^-1 Z_RT J_T^T (Z_T + z0 I)^-1 equals the
    admittance-form product channel @ precoder with Y_F = Z_F^-1.
    """
    z_f = np.asarray(z_f, dtype=complex)
    n = spec.n_s + spec.n_t
    if z_f.shape != (n, n):
        raise DimensionMismatchError(f"z_f has shape {z_f.shape}, expected ({n}, {n})")
    z11 = z_f[: spec.n_s, : spec.n_s]
    z12 = z_f[: spec.n_s, spec.n_s:]
    z21 = z_f[spec.n_s:, : spec.n_s]
    z22 = z_f[spec.n_s:, spec.n_s:]
    z_tt = spec.z0 * np.eye(spec.n_t) if spec.coupling_tx is None else spec.coupling_tx.z
    j_t = _right_solve(z12, z22 + z_tt, SingularBlockError, "Z_F22 + Z_TT")
    z_t = z11 - j_t @ z21
    return z_t, j_t


def matching_form_rx(z_g, spec: ScenarioSpec):
    """(Z_R, J_R) of the impedance-form receiver expression.

    J_R = Z_G21 (Z_G11 + Z_RR)^-1, Z_R = Z_G22 - J_R Z_G12.
    """
    z_g = np.asarray(z_g, dtype=complex)
    n = spec.n_r + spec.n_z
    if z_g.shape != (n, n):
        raise DimensionMismatchError(f"z_g has shape {z_g.shape}, expected ({n}, {n})")
    z11 = z_g[: spec.n_r, : spec.n_r]
    z12 = z_g[: spec.n_r, spec.n_r:]
    z21 = z_g[spec.n_r:, : spec.n_r]
    z22 = z_g[spec.n_r:, spec.n_r:]
    z_rr = spec.z0 * np.eye(spec.n_r) if spec.coupling_rx is None else spec.coupling_rx.z
    j_r = _right_solve(z21, z11 + z_rr, SingularBlockError, "Z_G11 + Z_RR")
    z_r = z22 - j_r @ z12
    return z_r, j_r


def matching_channel_tx(z_f, spec: ScenarioSpec):
    """End-to-end impedance-form channel for the transmitter-side network."""
    z_t, j_t = matching_form_tx(z_f, spec)
    z_rr, _ = _coupling_arrays(spec)
    left = spec.z_rt if z_rr is None else _checked_solve(
        z_rr + spec.z0 * np.eye(spec.n_r), spec.z_rt, SingularSystemError, "Z_RR + z0 I"
    )
    scale = spec.z0 if z_rr is not None else 0.5
    out = _right_solve(left @ j_t.T, z_t + spec.z0 * np.eye(spec.n_s),
                       SingularSystemError, "Z_T + z0 I")
    return scale * out


def matching_channel_rx(z_g, spec: ScenarioSpec):
    """End-to-end impedance-form channel for the receiver-side network."""
    z_r, j_r = matching_form_rx(z_g, spec)
    _, z_tt = _coupling_arrays(spec)
    right = spec.z_rt if z_tt is None else _right_solve(
        spec.z_rt, z_tt + spec.z0 * np.eye(spec.n_t), SingularSystemError, "Z_TT + z0 I"
    )
    scale = spec.z0 if z_tt is not None else 0.5
    out = _checked_solve(z_r + spec.z0 * np.eye(spec.n_z), j_r @ right,
                         SingularSystemError, "Z_R + z0 I")
    return scale * out


class MisoPipeline:
    """Prepared end-to-end evaluator for the single-stream transmitter
    architecture (one RF chain, one matched receive antenna).

    Implements exactly channel_milac_tx and the first column of
    precoder_milac_tx, with the coupling-dependent operators computed once
    so repeated designs on the same array are cheap. Susceptances must be
    real symmetric (lossless reciprocal), which also guarantees the port
    system is nonsingular.
    """

    def __init__(self, coupling: CouplingMatrix | None, z0=REFERENCE_IMPEDANCE, n_t: int | None = None):
        if coupling is None:
            if n_t is None:
                raise ValueError("n_t is required when there is no coupling")
            self.n_t = n_t
            self.z0 = float(z0)
            self.y_tt = None
        else:
            self.n_t = coupling.n
            self.z0 = coupling.z0
            self.y_tt = _solve_guarded(
                coupling.z, np.eye(coupling.n, dtype=complex),
                SingularCouplingError, "Z_TT",
            )
        self.y0 = 1.0 / self.z0
        base = np.zeros((self.n_t + 1, self.n_t + 1), dtype=complex)
        base[0, 0] = 1.0
        if self.y_tt is None:
            idx = np.arange(1, self.n_t + 1)
            base[idx, idx] = 1.0
        else:
            base[1:, 1:] = self.y_tt / self.y0
        base.setflags(write=False)
        self._port_base = base

    def channel_row(self, z_rt):
        z_rt = np.asarray(z_rt, dtype=complex).reshape(-1)
        if self.y_tt is None:
            return z_rt / (2 * self.z0)
        return 0.5 * z_rt @ self.y_tt

    def precoder_column(self, b):
        b = np.asarray(b)
        if b.shape != self._port_base.shape:
            raise DimensionMismatchError(
                f"susceptance has shape {b.shape}, expected {self._port_base.shape}"
            )
        m = 1j * b / self.y0 + self._port_base
        e1 = np.zeros(self.n_t + 1, dtype=complex)
        e1[0] = 1.0
        return _solve_guarded(m, e1, SingularSystemError, "tx port system")[1:]

    def power(self, b, z_rt, p_t=1.0) -> float:
        f = self.precoder_column(b)
        h = self.channel_row(z_rt)
        return float(p_t * abs(h @ f) ** 2)


def build_model(spec: ScenarioSpec, y_f: MilacPorts | None = None, y_g: MilacPorts | None = None) -> ScenarioModel:
    """Assemble (h, f, g) for the scenario's architecture."""
    arch = spec.architecture
    if arch is Architecture.DIGITAL_MIMO:
        return ScenarioModel(h=channel_digital(spec))
    if arch is Architecture.MILAC_TX:
        return ScenarioModel(h=channel_milac_tx(spec), f=precoder_milac_tx(y_f, spec))
    if arch is Architecture.MILAC_RX:
        return ScenarioModel(h=channel_milac_rx(spec), g=combiner_milac_rx(y_g, spec))
    return ScenarioModel(
        h=channel_milac_both(spec),
        f=precoder_milac_tx(y_f, spec),
        g=combiner_milac_rx(y_g, spec),
    )
