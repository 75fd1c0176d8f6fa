"""Seeded Monte Carlo experiments over fading channels.

Every trial draws its channel from an RNG stream keyed by (seed, point
index, trial index), so results are bit-identical regardless of how many
worker threads execute the sweep, and per-trial powers are reduced in
trial order from a preallocated array. Coupling matrices are built once
per (n_t, spacing) point; quadrature dominates setup cost.

Experiment kinds:

* vs_antennas     -- power versus array size for each spacing, with the
                     full optimizer ("optim") and the closed-form per-trial
                     bound ("ub") sharing channel draws.
* aware_vs_unaware-- adds the coupling-blind design evaluated through the
                     coupled model ("unaware").
* vs_digital      -- adds the unmatched digital array ("digital").
* expectation_check -- closed-form strategies only, for validating the
                     fading expectations.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import beamopt
from .coupling import (
    FREE_SPACE_IMPEDANCE,
    REFERENCE_IMPEDANCE,
    PhysicalConstants,
    build_coupling_matrix,
    build_geometry,
)
from .errors import MilacSimError
from .ioutil import fmt
from .netmodels import MisoPipeline


class ExperimentKind(Enum):
    VS_ANTENNAS = "vs_antennas"
    AWARE_VS_UNAWARE = "aware_vs_unaware"
    VS_DIGITAL = "vs_digital"
    EXPECTATION_CHECK = "expectation_check"


@dataclass(frozen=True)
class ExperimentConfig:
    kind: ExperimentKind
    n_t_list: tuple[int, ...]
    spacing_list: tuple[float, ...]  # in wavelengths
    n_trials: int
    seed: int
    p_t: float = 1.0
    rho: float = 1.0
    frequency_hz: float = 28e9
    quad_order: int = 64
    n_x: int = 8
    ell_wavelengths: float = 0.25
    z0: float = REFERENCE_IMPEDANCE
    eta0: float = FREE_SPACE_IMPEDANCE
    include_uncoupled: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        object.__setattr__(self, "n_t_list", tuple(int(n) for n in self.n_t_list))
        object.__setattr__(self, "spacing_list", tuple(float(s) for s in self.spacing_list))


@dataclass(frozen=True)
class PointResult:
    """One (n_t, spacing, strategy) aggregate. spacing None = uncoupled."""

    n_t: int
    spacing: float | None
    strategy: str
    mean_power: float
    std_error: float
    theory: float | None
    n_trials: int
    error: str | None = None


@dataclass(frozen=True)
class TrialStats:
    experiment: str
    seed: int
    points: tuple[PointResult, ...] = field(default_factory=tuple)

    def write_csv(self, path, header_lines=()):
        cols = (
            "experiment,n_t,spacing_over_lambda,strategy,"
            "mean_W,stderr_W,theory_W,n_trials,seed,error"
        )
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write(cols + "\n")
            for pt in self.points:
                row = [
                    self.experiment,
                    str(pt.n_t),
                    fmt(pt.spacing),
                    pt.strategy,
                    fmt(pt.mean_power) if pt.error is None else "",
                    fmt(pt.std_error) if pt.error is None else "",
                    fmt(pt.theory),
                    str(pt.n_trials),
                    str(self.seed),
                    pt.error or "",
                ]
                fh.write(",".join(row) + "\n")


def trial_rng(seed, point_index, trial) -> np.random.Generator:
    """Independent stream for one trial, a pure function of its key."""
    return np.random.default_rng(np.random.SeedSequence(entropy=(seed, point_index, trial)))


def sample_channel(n_t, rho, rng: np.random.Generator):
    """Circularly symmetric complex Gaussian row, E|z_i|^2 = rho."""
    if rho <= 0:
        raise ValueError("path gain must be positive")
    scale = np.sqrt(rho / 2)
    return scale * (rng.standard_normal(n_t) + 1j * rng.standard_normal(n_t))


def pipeline_power(design: beamopt.MilacDesign, ch: beamopt.MisoChannel) -> float:
    """Received power of a design computed strictly through the network
    models (channel and precoder), never a closed form."""
    if design.n_ports != ch.n_t + 1:
        raise ValueError(
            f"design has {design.n_ports} ports, channel needs {ch.n_t + 1}"
        )
    return beamopt._pipeline_power(design.b, ch)


def _strategies(kind: ExperimentKind, coupling, cfg: ExperimentConfig, n_t):
    """(name, per-trial evaluator, theory value) triples for one point.

    All strategies of a point see the same channel draw; every
    coupling-dependent operator is prepared once here, outside the
    trial loop.
    """
    milac_closed = beamopt.milac_mc_power_fn(coupling, cfg.p_t, cfg.z0)
    if coupling is None:
        theory_milac = beamopt.expected_power_milac_nomc(n_t, cfg.p_t, cfg.rho, cfg.z0)
        theory_digital = theory_milac
    else:
        theory_milac = beamopt.expected_power_milac_mc(coupling, cfg.p_t, cfg.rho)
        theory_digital = beamopt.expected_power_digital_nomatching(coupling, cfg.p_t, cfg.rho)

    aware = None if coupling is None else beamopt.AwareOptimizer(coupling)
    pipe = MisoPipeline(coupling, cfg.z0, n_t=n_t)

    def optim(ch):
        design = beamopt.optimize_milac_nomc(ch) if aware is None else aware.design(ch)
        return design.achieved_power

    def ub(ch):
        return milac_closed(ch.z_rt)

    def unaware(ch):
        return pipe.power(beamopt.optimize_milac_nomc(ch).b, ch.z_rt, ch.p_t)

    digital_closed = beamopt.digital_nomatching_power_fn(coupling, cfg.p_t, cfg.z0)

    def digital(ch):
        return digital_closed(ch.z_rt)

    out = []
    if kind is not ExperimentKind.EXPECTATION_CHECK:
        out.append(("optim", optim, theory_milac))
    out.append(("ub", ub, theory_milac))
    if kind is ExperimentKind.AWARE_VS_UNAWARE and coupling is not None:
        out.append(("unaware", unaware, None))
    if kind in (ExperimentKind.VS_DIGITAL, ExperimentKind.EXPECTATION_CHECK):
        out.append(("digital", digital, theory_digital))
    return out


def _run_point(cfg: ExperimentConfig, point_index, n_t, spacing, coupling):
    strategies = _strategies(cfg.kind, coupling, cfg, n_t)
    powers = np.empty((len(strategies), cfg.n_trials))
    for t in range(cfg.n_trials):
        rng = trial_rng(cfg.seed, point_index, t)
        z_rt = sample_channel(n_t, cfg.rho, rng)
        ch = beamopt.MisoChannel(
            z_rt=z_rt, coupling=coupling, p_t=cfg.p_t, rho=cfg.rho, z0=cfg.z0
        )
        for s, (_, evaluate, _) in enumerate(strategies):
            powers[s, t] = evaluate(ch)
    results = []
    for s, (name, _, theory) in enumerate(strategies):
        mean = float(np.mean(powers[s]))
        if cfg.n_trials > 1:
            stderr = float(np.std(powers[s], ddof=1) / np.sqrt(cfg.n_trials))
        else:
            stderr = 0.0
        results.append(
            PointResult(
                n_t=n_t,
                spacing=spacing,
                strategy=name,
                mean_power=mean,
                std_error=stderr,
                theory=theory,
                n_trials=cfg.n_trials,
            )
        )
    return results


def _error_point(cfg, n_t, spacing, message):
    return [
        PointResult(
            n_t=n_t,
            spacing=spacing,
            strategy="error",
            mean_power=float("nan"),
            std_error=float("nan"),
            theory=None,
            n_trials=cfg.n_trials,
            error=message,
        )
    ]


def run_experiment(cfg: ExperimentConfig) -> TrialStats:
    """Run all (n_t, spacing) points of an experiment.

    Failed points (for example a coupling construction error) become
    tagged error rows; the sweep itself never aborts.
    """
    points = []
    for n_t in cfg.n_t_list:
        for spacing in cfg.spacing_list:
            points.append((n_t, spacing))
        if cfg.include_uncoupled:
            points.append((n_t, None))

    couplings: dict[tuple[int, float], object] = {}
    for n_t, spacing in points:
        if spacing is None:
            continue
        key = (n_t, spacing)
        if key in couplings:
            continue
        try:
            geom = build_geometry(
                n_t, cfg.n_x, spacing, cfg.frequency_hz, cfg.ell_wavelengths
            )
            consts = PhysicalConstants.for_wavelength(
                geom.wavelength, z0=cfg.z0, eta0=cfg.eta0
            )
            couplings[key] = build_coupling_matrix(geom, consts, cfg.quad_order)
        except MilacSimError as err:
            couplings[key] = err

    def run_one(indexed_point):
        point_index, (n_t, spacing) = indexed_point
        if spacing is not None and isinstance(couplings[(n_t, spacing)], MilacSimError):
            return _error_point(cfg, n_t, spacing, str(couplings[(n_t, spacing)]))
        coupling = None if spacing is None else couplings[(n_t, spacing)]
        try:
            return _run_point(cfg, point_index, n_t, spacing, coupling)
        except MilacSimError as err:
            return _error_point(cfg, n_t, spacing, str(err))

    indexed = list(enumerate(points))
    if cfg.workers == 1:
        per_point = [run_one(ip) for ip in indexed]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            per_point = list(pool.map(run_one, indexed))

    rows = [row for point_rows in per_point for row in point_rows]
    return TrialStats(experiment=cfg.kind.value, seed=cfg.seed, points=tuple(rows))
