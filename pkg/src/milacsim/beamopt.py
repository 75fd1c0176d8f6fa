"""Closed-form optimal susceptance design for the single-stream downlink,
with and without mutual coupling, plus the digital baselines.

The transmitter is an analog multiport network (one RF-chain port plus one
port per antenna) whose lossless reciprocal admittance j*B is the design
variable. The coupling-aware optimum comes from a whitening congruence:
the port system is transformed with Re{Yhat}^(+-1/2) so the constraint set
becomes the set of unitary symmetric matrices, where the best scattering
matrix is known in closed form from the channel direction. Mapping back
through the inverse Cayley transform and the congruence yields B.

The coupling-unaware design solves the same problem pretending the array
is uncoupled; evaluating that design under the coupled model quantifies
the mismatch loss.

AwareOptimizer precomputes every coupling-dependent operator once, which
is what Monte Carlo sweeps should use; optimize_milac_mc is the one-shot
convenience wrapper.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from . import netmodels
from .coupling import CouplingMatrix, REFERENCE_IMPEDANCE
from .errors import (
    BoundMismatchError,
    NotPositiveDefiniteError,
    SingularCouplingError,
    SingularSystemError,
    ThetaPlusIdentitySingularError,
    ZeroVectorError,
)
from .matrixkit import hermitian_power, right_singular_frame

# Cayley-transform pole handling: retry phases for the pinned column, then
# give up. The design is optimal up to a unit phase on that column, so the
# rotation never changes the achieved power.
PHASE_RETRY_SEQUENCE = tuple(np.pi / 2**k for k in range(1, 9))
CAYLEY_RCOND_MIN = 1e-12
# Pipeline power must reproduce the closed-form bound this tightly.
BOUND_REL_TOL = 1e-8

# Fixed seed for the generic orthonormal completion used by the unaware
# design. The completion block of the scattering matrix enters the coupled
# model as V V^T, which is not invariant under a change of basis of the
# orthocomplement; a generic (rotation-free) basis reproduces the mismatch
# loss of a coupling-blind design, where a canonical-basis completion would
# understate it.
_GENERIC_COMPLETION_SEED = 0x6D696C61


@dataclass(frozen=True)
class MisoChannel:
    """Single-receive-antenna downlink: transmission impedance row, the
    transmit-array coupling (None = uncoupled), power and path gain."""

    z_rt: np.ndarray  # (n_t,) Ohms
    coupling: CouplingMatrix | None = None
    p_t: float = 1.0  # W
    rho: float = 1.0
    z0: float = REFERENCE_IMPEDANCE

    def __post_init__(self):
        z_rt = np.asarray(self.z_rt, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(z_rt)):
            raise ValueError("z_rt contains non-finite entries")
        if self.p_t <= 0:
            raise ValueError("transmit power must be positive")
        if self.rho <= 0:
            raise ValueError("path gain must be positive")
        if self.coupling is not None:
            if self.coupling.n != z_rt.size:
                raise ValueError("coupling size does not match z_rt length")
            object.__setattr__(self, "z0", self.coupling.z0)
        z_rt = z_rt.copy()
        z_rt.setflags(write=False)
        object.__setattr__(self, "z_rt", z_rt)

    @property
    def n_t(self) -> int:
        return self.z_rt.size


@dataclass(frozen=True)
class MilacDesign:
    """Susceptance matrix realizing a precoder, with diagnostics.

    b is exactly symmetric; j*b is the admittance of a lossless reciprocal
    network. theta_bar is the unitary-symmetric scattering matrix the
    design was derived from. achieved_power is the received power of the
    design under its own model, in Watts.
    """

    b: np.ndarray  # (n_t+1, n_t+1) real, Siemens
    theta_bar: np.ndarray
    achieved_power: float
    residues: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        if not np.array_equal(b, b.T):
            raise ValueError("susceptance matrix must be exactly symmetric")
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @property
    def n_ports(self) -> int:
        return self.b.shape[0]


def _admittance(coupling: CouplingMatrix):
    """Z_TT^-1; nonsingular because Re(Z_TT) is positive definite."""
    return netmodels._solve_guarded(
        coupling.z, np.eye(coupling.n, dtype=complex), SingularCouplingError, "Z_TT"
    )


def _channel_row(ch: MisoChannel, y_tt=None):
    """MISO channel row: z_rt Y_TT / 2 with coupling, z_rt / (2 z0) without."""
    if ch.coupling is None:
        return ch.z_rt / (2 * ch.z0)
    if y_tt is None:
        y_tt = _admittance(ch.coupling)
    return 0.5 * ch.z_rt @ y_tt


def _embed_scattering(column, completion):
    """(n+1)-port unitary symmetric matrix pinning the first column below
    the RF-chain port: [[0, v^T], [v, V V^T]]."""
    v = np.asarray(column).reshape(-1)
    n = v.size
    theta = np.empty((n + 1, n + 1), dtype=complex)
    theta[0, 0] = 0.0
    theta[0, 1:] = v
    theta[1:, 0] = v
    theta[1:, 1:] = completion @ completion.T
    return theta


def _inverse_cayley(theta, y0):
    """Susceptance with scattering matrix theta: -j y0 (I - T)(I + T)^-1.

    Returns (b, imag_residue, asym_residue); b is exactly symmetric real.
    For unitary symmetric theta the product is Hermitian and symmetric,
    hence real up to rounding; the dropped residues are reported.

    Pole detection: for unitary theta with eigenvalues e^{j a_k}, the
    susceptance 2-norm is y0 max|1 - e^{j a}| / |1 + e^{j a}|, which is
    about y0 / rcond(I + theta) near the pole, so thresholding ||b||
    at y0 / CAYLEY_RCOND_MIN flags rcond below CAYLEY_RCOND_MIN without
    an O(n^3) condition estimate.
    """
    n = theta.shape[0]
    m = np.eye(n) + theta
    try:
        b = -1j * y0 * np.linalg.solve(m.T, (np.eye(n) - theta).T).T
    except np.linalg.LinAlgError as err:
        raise SingularSystemError("I + Theta is exactly singular") from err
    norm = float(np.linalg.norm(b))
    if not np.isfinite(norm) or norm > y0 / CAYLEY_RCOND_MIN:
        raise SingularSystemError("I + Theta is numerically singular")
    scale = max(norm, np.finfo(float).tiny)
    imag_residue = float(np.linalg.norm(b.imag)) / scale
    asym_residue = float(np.linalg.norm(b - b.T)) / scale
    b = 0.5 * (b.real + b.real.T)
    return b, imag_residue, asym_residue


def _susceptance_from_column(column, completion, y0):
    """theta and susceptance for a pinned column, retrying the Cayley pole
    with deterministic phase rotations of the column."""
    phases = (0.0,) + PHASE_RETRY_SEQUENCE
    last_error = None
    for phi in phases:
        v = column if phi == 0.0 else column * np.exp(1j * phi)
        theta = _embed_scattering(v, completion)
        try:
            b, imag_res, asym_res = _inverse_cayley(theta, y0)
        except SingularSystemError as err:
            last_error = err
            continue
        return theta, b, imag_res, asym_res
    raise ThetaPlusIdentitySingularError(
        f"I + Theta remained singular after {len(PHASE_RETRY_SEQUENCE)} phase retries"
    ) from last_error


def _pipeline_power(b, ch: MisoChannel) -> float:
    """Received power of susceptance b evaluated strictly through the
    physics-compliant network model (channel and precoder), never a
    closed form."""
    pipe = netmodels.MisoPipeline(ch.coupling, ch.z0, n_t=ch.n_t)
    return pipe.power(b, ch.z_rt, ch.p_t)


class AwareOptimizer:
    """Coupling-aware globally optimal susceptance designer.

    Precomputes the admittance, the whitening roots and the closed-form
    bound operator for one coupling matrix; design() then costs one frame
    construction, one Cayley inversion and one pipeline check per channel.
    """

    def __init__(self, coupling: CouplingMatrix):
        self.coupling = coupling
        self.z0 = coupling.z0
        self.y0 = 1.0 / self.z0
        self.pipeline = netmodels.MisoPipeline(coupling, self.z0)
        y_tt = self.pipeline.y_tt
        re_y_tt = 0.5 * (y_tt.real + y_tt.real.T)
        self.whitener = hermitian_power(re_y_tt, -0.5)

        n = coupling.n
        y_hat = np.zeros((n + 1, n + 1), dtype=complex)
        y_hat[0, 0] = self.y0
        y_hat[1:, 1:] = y_tt
        re_hat = 0.5 * (y_hat.real + y_hat.real.T)
        self.congruence_root = hermitian_power(re_hat, 0.5)
        self.im_hat = y_hat.imag
        # the whitening fixes the RF-chain port: sqrt(y0) Re{Yhat}^(-1/2) e1 = e1
        e1 = np.zeros(n + 1)
        e1[0] = 1.0
        assert (
            np.linalg.norm(np.sqrt(self.y0) * hermitian_power(re_hat, -0.5) @ e1 - e1)
            < 1e-9
        )
        self.bound_root = hermitian_power(coupling.z.real, -0.5)

    def bound(self, z_rt, p_t=1.0) -> float:
        """Closed-form optimal power: (p_t y0 / 16) ||z Re{Z}^-1/2||^2."""
        return float(p_t * self.y0 / 16 * np.linalg.norm(z_rt @ self.bound_root) ** 2)

    def design(self, ch: MisoChannel) -> MilacDesign:
        if ch.coupling is not self.coupling and not np.array_equal(
            ch.coupling.z, self.coupling.z
        ):
            raise ValueError("channel was built for a different coupling matrix")
        h = self.pipeline.channel_row(ch.z_rt)
        g = h @ self.whitener
        v_col, v_perp = right_singular_frame(g)
        return self.design_from_column(ch, v_col[:, 0], v_perp)

    def design_from_column(self, ch: MisoChannel, column, completion) -> MilacDesign:
        """Whitened scattering matrix -> susceptance -> congruence -> bound
        check. The column may carry any unit phase (gauge freedom)."""
        theta_bar, b_bar, imag_res, asym_res = _susceptance_from_column(
            column, completion, self.y0
        )
        root = self.congruence_root
        b = (1.0 / self.y0) * root @ b_bar @ root - self.im_hat
        b_asym = float(np.linalg.norm(b - b.T)) / max(
            float(np.linalg.norm(b)), np.finfo(float).tiny
        )
        b = 0.5 * (b + b.T)

        achieved = self.pipeline.power(b, ch.z_rt, ch.p_t)
        bound = self.bound(ch.z_rt, ch.p_t)
        rel_gap = abs(achieved - bound) / bound
        if rel_gap > BOUND_REL_TOL:
            raise BoundMismatchError(
                f"pipeline power {achieved!r} misses the closed-form bound {bound!r} "
                f"(relative gap {rel_gap:.3e})"
            )
        return MilacDesign(
            b=b,
            theta_bar=theta_bar,
            achieved_power=achieved,
            residues={
                "b_bar_imag": imag_res,
                "b_bar_asym": asym_res,
                "b_asym": b_asym,
            },
        )


def optimize_milac_mc(ch: MisoChannel) -> MilacDesign:
    """Coupling-aware globally optimal susceptance design (one-shot).

    The returned design's pipeline power is checked against the
    closed-form bound; a mismatch beyond BOUND_REL_TOL raises
    BoundMismatchError (an implementation bug, never returned silently).
    Without coupling this is the uncoupled design problem, delegated to
    optimize_milac_nomc.
    """
    if ch.coupling is None:
        return optimize_milac_nomc(ch)
    return AwareOptimizer(ch.coupling).design(ch)


@lru_cache(maxsize=8)
def _completion_basis_raw(n):
    rng = np.random.default_rng(_GENERIC_COMPLETION_SEED)
    raw = rng.standard_normal((n, n - 1)) + 1j * rng.standard_normal((n, n - 1))
    raw.setflags(write=False)
    return raw


def _generic_completion(column):
    """Deterministic generic orthonormal completion of a unit column."""
    v = np.asarray(column).reshape(-1)
    n = v.size
    if n == 1:
        return np.zeros((1, 0), dtype=complex)
    raw = _completion_basis_raw(n) - np.outer(v, v.conj() @ _completion_basis_raw(n))
    q, _ = np.linalg.qr(raw)
    return q


def optimize_milac_nomc(ch: MisoChannel) -> MilacDesign:
    """Coupling-unaware susceptance design.

    Optimal for an uncoupled, perfectly matched array: the scattering
    column is the direction of the design-model channel z_rt / (2 z0),
    and any coupling in ``ch`` is deliberately ignored. achieved_power is
    the received power under that design model, p_t ||h||^2 / 4. When the
    channel really is uncoupled the pipeline must reproduce it exactly
    (checked); under a coupled channel use montecarlo.pipeline_power to
    measure what the design actually delivers.
    """
    y0 = 1.0 / ch.z0
    h = ch.z_rt / (2 * ch.z0)
    norm = np.linalg.norm(h)
    if norm == 0.0:
        raise ZeroVectorError("cannot beamform on an all-zero channel")
    column = h.conj() / norm
    completion = _generic_completion(column)
    theta, b, imag_res, asym_res = _susceptance_from_column(column, completion, y0)
    achieved = ch.p_t * norm**2 / 4
    if ch.coupling is None:
        pipeline = _pipeline_power(b, ch)
        rel_gap = abs(pipeline - achieved) / achieved
        if rel_gap > BOUND_REL_TOL:
            raise BoundMismatchError(
                f"pipeline power {pipeline!r} misses p_t ||h||^2 / 4 = {achieved!r} "
                f"(relative gap {rel_gap:.3e})"
            )
    return MilacDesign(
        b=b,
        theta_bar=theta,
        achieved_power=float(achieved),
        residues={"b_imag": imag_res, "b_asym": asym_res},
    )


# --- closed-form received powers (per channel realization) ------------------

def milac_mc_power_fn(coupling, p_t, z0=REFERENCE_IMPEDANCE):
    """Evaluator z_rt -> optimal received power, precomputing the
    whitened coupling once. With coupling, (p_t y0 / 16) ||z Re{Z}^-1/2||^2;
    without, (p_t y0^2 / 16) ||z||^2."""
    if coupling is None:
        y0 = 1.0 / z0

        def power(z_rt):
            return float(p_t * y0**2 / 16 * np.linalg.norm(z_rt) ** 2)

        return power
    y0 = 1.0 / coupling.z0
    re_inv_root = hermitian_power(coupling.z.real, -0.5)

    def power(z_rt):
        return float(p_t * y0 / 16 * np.linalg.norm(np.asarray(z_rt) @ re_inv_root) ** 2)

    return power


def digital_nomatching_power_fn(coupling, p_t, z0=REFERENCE_IMPEDANCE):
    """Evaluator z_rt -> best received power of the unmatched digital
    array: (p_t / 4) ||z (Z_TT + z0 I)^-1||^2."""
    if coupling is None:
        y0 = 1.0 / z0

        def power(z_rt):
            return float(p_t * y0**2 / 16 * np.linalg.norm(z_rt) ** 2)

        return power
    z0 = coupling.z0
    m = coupling.z + z0 * np.eye(coupling.n)
    inv = netmodels._solve_guarded(
        m, np.eye(coupling.n, dtype=complex), SingularSystemError, "Z_TT + z0 I"
    )

    def power(z_rt):
        return float(p_t / 4 * np.linalg.norm(np.asarray(z_rt) @ inv) ** 2)

    return power


def power_milac_mc(ch: MisoChannel) -> float:
    """Globally optimal received power of the analog-network transmitter."""
    return milac_mc_power_fn(ch.coupling, ch.p_t, ch.z0)(ch.z_rt)


def power_digital_matching(ch: MisoChannel) -> float:
    """Best received power of digital beamforming behind a matching
    network. Identical to power_milac_mc for every realization, by the
    same closed form; kept as a distinct entry point for the comparison
    tables."""
    return power_milac_mc(ch)


def power_digital_nomatching(ch: MisoChannel) -> float:
    """Best received power of digital beamforming with no matching network."""
    return digital_nomatching_power_fn(ch.coupling, ch.p_t, ch.z0)(ch.z_rt)


# --- expected powers under uncorrelated fading ------------------------------

def expected_power_milac_mc(coupling: CouplingMatrix, p_t, rho) -> float:
    """(p_t y0 rho / 16) Tr(Re{Z_TT}^-1)."""
    eigs = np.linalg.eigvalsh(coupling.z.real)
    if eigs.min() <= 0:
        raise NotPositiveDefiniteError(
            f"Re(Z_TT) has minimum eigenvalue {eigs.min():.6e}"
        )
    y0 = 1.0 / coupling.z0
    return float(p_t * y0 * rho / 16 * np.sum(1.0 / eigs))


def expected_power_milac_nomc(n_t, p_t, rho, z0=REFERENCE_IMPEDANCE) -> float:
    """(p_t y0^2 rho / 16) n_t: the uncoupled scaling law."""
    y0 = 1.0 / z0
    return float(p_t * y0**2 * rho / 16 * n_t)


def expected_power_digital_nomatching(coupling: CouplingMatrix, p_t, rho) -> float:
    """(p_t rho / 4) Tr(((Z_TT + z0 I)^H (Z_TT + z0 I))^-1)."""
    z0 = coupling.z0
    m = coupling.z + z0 * np.eye(coupling.n)
    inv = netmodels._solve_guarded(
        m, np.eye(coupling.n, dtype=complex), SingularSystemError, "Z_TT + z0 I"
    )
    return float(p_t * rho / 4 * np.sum(np.abs(inv) ** 2))


# --- matching network -------------------------------------------------------

def matching_network_impedance(coupling: CouplingMatrix):
    """Impedance matrix of the lossless matching network that delivers all
    generator power to the coupled array:
    [[0, -j sqrt(z0) R^1/2], [-j sqrt(z0) R^1/2, -j Im{Z_TT}]] with
    R = Re{Z_TT}."""
    root = hermitian_power(coupling.z.real, 0.5)
    n = coupling.n
    off = -1j * np.sqrt(coupling.z0) * root
    z_f = np.zeros((2 * n, 2 * n), dtype=complex)
    z_f[:n, n:] = off
    z_f[n:, :n] = off
    z_f[n:, n:] = -1j * coupling.z.imag
    return z_f


@dataclass(frozen=True)
class PowerReport:
    """Received powers of the four strategies for one channel realization,
    and their fading expectations."""

    milac_mc: float
    milac_nomc: float
    digital_matching: float
    digital_nomatching: float
    expected_milac_mc: float
    expected_milac_nomc: float
    expected_digital_matching: float
    expected_digital_nomatching: float


def power_report(ch: MisoChannel) -> PowerReport:
    """All four closed-form powers plus expectations for one realization."""
    nomc = float(ch.p_t * (1.0 / ch.z0) ** 2 / 16 * np.linalg.norm(ch.z_rt) ** 2)
    if ch.coupling is None:
        e_mc = expected_power_milac_nomc(ch.n_t, ch.p_t, ch.rho, ch.z0)
        e_dig = e_mc
    else:
        e_mc = expected_power_milac_mc(ch.coupling, ch.p_t, ch.rho)
        e_dig = expected_power_digital_nomatching(ch.coupling, ch.p_t, ch.rho)
    e_nomc = expected_power_milac_nomc(ch.n_t, ch.p_t, ch.rho, ch.z0)
    return PowerReport(
        milac_mc=power_milac_mc(ch),
        milac_nomc=nomc,
        digital_matching=power_digital_matching(ch),
        digital_nomatching=power_digital_nomatching(ch),
        expected_milac_mc=e_mc,
        expected_milac_nomc=e_nomc,
        expected_digital_matching=e_mc,
        expected_digital_nomatching=e_dig,
    )
