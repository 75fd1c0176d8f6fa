"""Shared test utilities: random fixtures and brute-force oracles.

The oracles assemble each architecture's defining port equations into one
linear system and read the end-to-end map out of A = Z (Z + Zbar)^-1,
independently of the closed forms under test.
"""

import numpy as np

from milacsim import MilacPorts


def random_lossless_milac(n, rng, side, scale=0.02):
    """Random lossless reciprocal network: y = j * (real symmetric)."""
    b = rng.standard_normal((n, n)) * scale
    return MilacPorts.from_susceptance(0.5 * (b + b.T), side)


def random_z_rt(n_r, n_t, rng):
    return rng.standard_normal((n_r, n_t)) + 1j * rng.standard_normal((n_r, n_t))


def sqrt_spd_2x2(m):
    """Closed-form principal square root of a 2x2 SPD matrix."""
    s = np.sqrt(np.linalg.det(m))
    t = np.sqrt(np.trace(m) + 2 * s)
    return (m + s * np.eye(2)) / t


def oracle_digital(z_tt, z_rr, z_rt, z0):
    """Channel of the all-digital link from the full port system."""
    nt, nr = z_tt.shape[0], z_rr.shape[0]
    z_h = np.block([[z_tt, np.zeros((nt, nr))], [z_rt, z_rr]])
    a = z_h @ np.linalg.inv(z_h + z0 * np.eye(nt + nr))
    return a[nt:, :nt]


def oracle_tx(z_f, z_tt, z_rr, z_rt, z0, n_s):
    """End-to-end H @ F with the analog network at the transmitter."""
    n_t = z_tt.shape[0]
    n_r = z_rr.shape[0]
    z = np.block([
        [z_f[:n_s, :n_s], z_f[:n_s, n_s:], np.zeros((n_s, n_r))],
        [z_f[n_s:, :n_s], z_f[n_s:, n_s:], np.zeros((n_t, n_r))],
        [np.zeros((n_r, n_s)), -z_rt, z_rr],
    ])
    zbar = np.zeros_like(z)
    zbar[:n_s, :n_s] = z0 * np.eye(n_s)
    zbar[n_s:n_s + n_t, n_s:n_s + n_t] = z_tt
    zbar[n_s + n_t:, n_s + n_t:] = z0 * np.eye(n_r)
    a = z @ np.linalg.inv(z + zbar)
    return a[n_s + n_t:, :n_s]


def oracle_rx(z_g, z_tt, z_rr, z_rt, z0, n_z):
    """End-to-end G @ H with the analog network at the receiver."""
    n_t = z_tt.shape[0]
    n_r = z_rr.shape[0]
    z = np.block([
        [z_tt, np.zeros((n_t, n_r)), np.zeros((n_t, n_z))],
        [np.zeros((n_r, n_t)), z_g[:n_r, :n_r], z_g[:n_r, n_r:]],
        [np.zeros((n_z, n_t)), z_g[n_r:, :n_r], z_g[n_r:, n_r:]],
    ])
    zbar = np.zeros_like(z)
    zbar[:n_t, :n_t] = z0 * np.eye(n_t)
    zbar[n_t:n_t + n_r, :n_t] = -z_rt
    zbar[n_t:n_t + n_r, n_t:n_t + n_r] = z_rr
    zbar[n_t + n_r:, n_t + n_r:] = z0 * np.eye(n_z)
    a = z @ np.linalg.inv(z + zbar)
    return a[n_t + n_r:, :n_t]


def oracle_both(z_f, z_g, z_tt, z_rr, z_rt, z0, n_s, n_z):
    """End-to-end G @ H @ F with analog networks at both ends."""
    n_t = z_tt.shape[0]
    n_r = z_rr.shape[0]
    dim = n_s + n_t + n_r + n_z
    z = np.zeros((dim, dim), dtype=complex)
    z[:n_s + n_t, :n_s + n_t] = z_f
    z[n_s + n_t:, n_s + n_t:] = z_g
    zbar = np.zeros_like(z)
    zbar[:n_s, :n_s] = z0 * np.eye(n_s)
    zbar[n_s:n_s + n_t, n_s:n_s + n_t] = z_tt
    zbar[n_s + n_t:n_s + n_t + n_r, n_s:n_s + n_t] = z_rt
    zbar[n_s + n_t:n_s + n_t + n_r, n_s + n_t:n_s + n_t + n_r] = z_rr
    zbar[n_s + n_t + n_r:, n_s + n_t + n_r:] = z0 * np.eye(n_z)
    a = z @ np.linalg.inv(z + zbar)
    return a[n_s + n_t + n_r:, :n_s]
