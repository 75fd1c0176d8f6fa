"""Mutual-coupling impedance matrix of a planar array of thin wire dipoles.

The array is a uniform planar grid in the x-y plane; the dipoles are
parallel to the y axis, carry the usual sinusoidal current profile, and are
assumed perfectly matched so that every diagonal entry of the coupling
matrix equals the reference impedance. Off-diagonal entries come from the
induced-EMF double integral between two dipole segments, evaluated with a
composite tensor-product Gauss-Legendre rule.

Two quadrature details matter for accuracy:

* the current profile sin(k0 (l/2 - |y - y_c|)) has a derivative kink at
  each dipole centre, so every axis is split there (plain Gauss-Legendre
  across the kink stalls near 1e-4 relative accuracy);
* collinear dipoles whose segments touch end-to-end (spacing == length)
  make the kernel singular at the shared endpoint. Gauss-Legendre nodes are
  strictly interior, so the rule stays finite, and geometrically graded
  panels toward that corner restore fast convergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (
    BadGridError,
    RealPartNotPDError,
    SameAntennaError,
    SingularKernelError,
)
from .ioutil import read_complex_matrix_csv, write_complex_matrix_csv

SPEED_OF_LIGHT = 299792458.0  # m/s
FREE_SPACE_IMPEDANCE = 377.0  # Ohms
REFERENCE_IMPEDANCE = 50.0  # Ohms

DEFAULT_QUAD_ORDER = 64
# Panel grading toward a touching segment endpoint: 10 levels at ratio 0.15
# resolve the corner down to ~6e-9 of the half-length.
_GRADE_LEVELS = 10
_GRADE_RATIO = 0.15
# Collinear pairs closer than this (relative gap between segment ends) get
# the graded rule; at lambda/4 spacing with lambda/4 dipoles the gap is 0.
_NEAR_TOUCH_REL_GAP = 0.25


@dataclass(frozen=True)
class PhysicalConstants:
    """Free-space and reference-port constants for one carrier frequency."""

    eta0: float = FREE_SPACE_IMPEDANCE  # Ohms
    k0: float = 0.0  # rad/m, 2*pi/lambda
    z0: float = REFERENCE_IMPEDANCE  # Ohms

    def __post_init__(self):
        if self.eta0 <= 0 or self.k0 <= 0 or self.z0 <= 0:
            raise ValueError("eta0, k0 and z0 must all be positive")

    @property
    def y0(self) -> float:
        return 1.0 / self.z0

    @classmethod
    def for_wavelength(cls, wavelength, z0=REFERENCE_IMPEDANCE, eta0=FREE_SPACE_IMPEDANCE):
        return cls(eta0=eta0, k0=2.0 * np.pi / wavelength, z0=z0)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array of y-parallel thin wire dipoles.

    positions[p] = (x_p, y_p) in meters; antenna p sits at grid cell
    (p % n_x, p // n_x) scaled by the pitch.
    """

    n_antennas: int
    n_x: int
    n_y: int
    spacing: float  # m
    dipole_length: float  # m
    dipole_radius: float  # m, recorded but unused by the kernel
    wavelength: float  # m
    positions: np.ndarray = field(repr=False)  # (n, 2) m

    def __post_init__(self):
        if self.n_x * self.n_y != self.n_antennas:
            raise BadGridError(
                f"{self.n_x} x {self.n_y} grid does not hold {self.n_antennas} antennas"
            )
        if not self.dipole_radius < self.dipole_length / 50:
            raise ValueError("dipole radius must satisfy r < l/50 (thin-wire model)")
        pos = np.asarray(self.positions, dtype=float)
        if pos.shape != (self.n_antennas, 2):
            raise ValueError(f"positions must have shape ({self.n_antennas}, 2)")
        expected = grid_positions(self.n_antennas, self.n_x, self.spacing)
        if not np.array_equal(pos, expected):
            raise ValueError("positions do not form the declared rectangular grid")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    def grid_index(self, p: int) -> tuple[int, int]:
        return p % self.n_x, p // self.n_x


def grid_positions(n_antennas, n_x, spacing):
    """Row-major grid coordinates: antenna p at ((p % n_x) d, (p // n_x) d)."""
    idx = np.arange(n_antennas)
    return np.column_stack(((idx % n_x) * spacing, (idx // n_x) * spacing))


def build_geometry(
    n_antennas,
    n_x,
    spacing_in_wavelengths,
    frequency_hz,
    ell_in_wavelengths=0.25,
    radius_in_wavelengths=None,
) -> ArrayGeometry:
    """Uniform planar dipole array from wavelength-relative dimensions."""
    if n_antennas < 1 or n_x < 1:
        raise BadGridError("antenna and column counts must be positive")
    if n_antennas % n_x != 0:
        raise BadGridError(f"n_x={n_x} does not divide n_antennas={n_antennas}")
    if spacing_in_wavelengths <= 0:
        raise ValueError("spacing must be positive")
    if frequency_hz <= 0:
        raise ValueError("frequency must be positive")
    wavelength = SPEED_OF_LIGHT / frequency_hz
    ell = ell_in_wavelengths * wavelength
    if radius_in_wavelengths is None:
        radius = ell / 200.0
    else:
        radius = radius_in_wavelengths * wavelength
    spacing = spacing_in_wavelengths * wavelength
    return ArrayGeometry(
        n_antennas=n_antennas,
        n_x=n_x,
        n_y=n_antennas // n_x,
        spacing=spacing,
        dipole_length=ell,
        dipole_radius=radius,
        wavelength=wavelength,
        positions=grid_positions(n_antennas, n_x, spacing),
    )


def _emf_kernel(u, v, dx, dy, ell, k0, eta0):
    """Induced-EMF integrand; u, v are offsets from the two dipole centres."""
    sep = dy + v - u
    d = np.sqrt(dx * dx + sep * sep)
    d2 = d * d
    bracket = (
        (sep * sep / d2) * (3.0 / d2 + 3j * k0 / d - k0 * k0)
        - (1j * k0 + 1.0 / d) / d
        + k0 * k0
    )
    current_u = np.sin(k0 * (ell / 2 - np.abs(u)))
    current_v = np.sin(k0 * (ell / 2 - np.abs(v)))
    feed = np.sin(k0 * ell / 2) ** 2
    return (
        (1j * eta0 / (4 * np.pi * k0))
        * bracket
        * np.exp(-1j * k0 * d)
        / d
        * current_u
        * current_v
        / feed
    )


@lru_cache(maxsize=None)
def _axis_rule(ell, points_per_panel, grade):
    """Composite Gauss-Legendre nodes/weights on [-l/2, l/2].

    Always split at 0 (current-profile kink). grade in {None, 'lo', 'hi'}
    adds geometrically shrinking panels toward that endpoint.
    """
    half = ell / 2
    breakpoints = [-half, 0.0, half]
    if grade == "hi":
        breakpoints += [half - half * _GRADE_RATIO**k for k in range(1, _GRADE_LEVELS + 1)]
    elif grade == "lo":
        breakpoints += [-half + half * _GRADE_RATIO**k for k in range(1, _GRADE_LEVELS + 1)]
    breakpoints = sorted(set(breakpoints))
    x, w = leggauss(points_per_panel)
    nodes, weights = [], []
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        nodes.append((a + b) / 2 + (b - a) / 2 * x)
        weights.append((b - a) / 2 * w)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _pair_impedance(dx, dy, ell, k0, eta0, quad_order) -> complex:
    """Mutual impedance for centre separation (dx, dy), both in meters."""
    points = max(quad_order // 2, 4)
    collinear = abs(dx) < 1e-12 * ell
    if collinear and abs(dy) < ell * (1.0 - 1e-12):
        raise SingularKernelError(
            f"collinear dipoles with centre offset {abs(dy):.3e} m overlap "
            f"(length {ell:.3e} m); the kernel is singular inside the domain"
        )
    if collinear and (abs(dy) - ell) < _NEAR_TOUCH_REL_GAP * ell:
        if dy >= 0:
            u, wu = _axis_rule(ell, points, "hi")
            v, wv = _axis_rule(ell, points, "lo")
        else:
            u, wu = _axis_rule(ell, points, "lo")
            v, wv = _axis_rule(ell, points, "hi")
    else:
        u, wu = _axis_rule(ell, points, None)
        v, wv = _axis_rule(ell, points, None)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    sep = dy + vv - uu
    if np.min(dx * dx + sep * sep) == 0.0:
        raise SingularKernelError("a quadrature node fell on a zero-distance point")
    vals = _emf_kernel(uu, vv, dx, dy, ell, k0, eta0)
    return complex(np.sum(np.outer(wu, wv) * vals))


def mutual_impedance(geom: ArrayGeometry, consts: PhysicalConstants, p, q, quad_order=DEFAULT_QUAD_ORDER) -> complex:
    """Mutual impedance between antennas p and q (0-based), in Ohms."""
    if p == q:
        raise SameAntennaError("the diagonal is set by the matching policy, not integration")
    if quad_order < 8:
        raise ValueError("quad_order must be at least 8")
    xp, yp = geom.positions[p]
    xq, yq = geom.positions[q]
    return _pair_impedance(
        xq - xp, yq - yp, geom.dipole_length, consts.k0, consts.eta0, quad_order
    )


@dataclass(frozen=True)
class CouplingMatrix:
    """Symmetric impedance matrix of an antenna array, diagonal fixed at z0.

    The real part must be positive definite (every closed-form power
    expression downstream assumes it); matrices failing the check are
    rejected at construction, not regularized.
    """

    z: np.ndarray  # (n, n) complex Ohms

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex)
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise ValueError(f"coupling matrix must be square, got {z.shape}")
        if not np.all(np.isfinite(z)):
            raise ValueError("coupling matrix contains non-finite entries")
        if not np.array_equal(z, z.T):
            raise ValueError("coupling matrix must be exactly symmetric")
        diag = np.diag(z)
        if np.any(diag.imag != 0.0) or np.any(diag.real != diag[0].real):
            raise ValueError("all diagonal entries must equal the same real z0")
        z0 = float(diag[0].real)
        if z0 <= 0:
            raise ValueError("reference impedance on the diagonal must be positive")
        min_eig = float(np.linalg.eigvalsh(0.5 * (z.real + z.real.T)).min())
        if min_eig < -1e-10 * z0:
            raise RealPartNotPDError(
                f"minimum eigenvalue of Re(Z) is {min_eig:.6e} Ohms"
            )
        z = z.copy()
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def z0(self) -> float:
        return float(self.z[0, 0].real)

    @classmethod
    def uncoupled(cls, n, z0=REFERENCE_IMPEDANCE) -> "CouplingMatrix":
        """Perfectly matched array with no mutual coupling: z0 * I."""
        return cls(z=z0 * np.eye(n, dtype=complex))

    def write_csv(self, path, header_lines=()):
        write_complex_matrix_csv(path, self.z, header_lines)

    @classmethod
    def read_csv(cls, path) -> "CouplingMatrix":
        return cls(z=read_complex_matrix_csv(path))


def random_coupling(n, rng, z0=REFERENCE_IMPEDANCE, reactance_scale=0.3) -> CouplingMatrix:
    """Random coupling matrix for validation: symmetric, diagonal exactly
    z0, real part positive definite (normalized Wishart), imaginary part
    symmetric with zero diagonal."""
    a = rng.standard_normal((n, 2 * n))
    gram = a @ a.T
    d = np.sqrt(np.diag(gram))
    re = z0 * gram / np.outer(d, d)
    np.fill_diagonal(re, z0)
    im = rng.standard_normal((n, n)) * reactance_scale * z0
    im = 0.5 * (im + im.T)
    np.fill_diagonal(im, 0.0)
    return CouplingMatrix(z=re + 1j * im)


def build_coupling_matrix(geom: ArrayGeometry, consts: PhysicalConstants | None = None, quad_order=DEFAULT_QUAD_ORDER) -> CouplingMatrix:
    """Coupling matrix of the array: diagonal z0, off-diagonals integrated.

    Entries depend only on the absolute grid offset, so each unique offset
    is integrated once and mirrored; symmetry is exact by construction.
    """
    if consts is None:
        consts = PhysicalConstants.for_wavelength(geom.wavelength)
    n = geom.n_antennas
    z = np.full((n, n), complex(consts.z0), dtype=complex)
    cache: dict[tuple[int, int], complex] = {}
    for p in range(n):
        ip, kp = geom.grid_index(p)
        for q in range(p + 1, n):
            iq, kq = geom.grid_index(q)
            key = (abs(iq - ip), abs(kq - kp))
            if key not in cache:
                cache[key] = _pair_impedance(
                    key[0] * geom.spacing,
                    key[1] * geom.spacing,
                    geom.dipole_length,
                    consts.k0,
                    consts.eta0,
                    quad_order,
                )
            z[p, q] = cache[key]
            z[q, p] = cache[key]
    return CouplingMatrix(z=z)
