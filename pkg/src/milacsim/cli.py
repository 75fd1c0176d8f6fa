"""Command-line entry point.

Subcommands:

* ``coupling``   -- build the dipole-array coupling matrix, write it as CSV
                    and print the trace-ratio summary.
* ``optimize``   -- design the analog network for one seeded channel and
                    report achieved power against the closed-form bound.
* ``experiment`` -- run a Monte Carlo sweep and write the per-point CSV.
* ``verify``     -- run the invariant battery and exit nonzero on failure.

Runs are driven by a TOML config file; ``--set section.key=value`` overrides
individual entries, and a few common knobs have dedicated flags. Every run
directory gets a ``manifest.json`` holding the fully resolved config, its
hash and the library versions; passing a manifest as ``--config`` re-runs
it, and the CSV bodies it produces are byte-identical.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import platform
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__, beamopt, montecarlo, netmodels
from .coupling import (
    CouplingMatrix,
    PhysicalConstants,
    build_coupling_matrix,
    build_geometry,
    random_coupling,
)
from .errors import MilacSimError
from .ioutil import write_real_matrix_csv
from .matrixkit import hermitian_power, is_unitary_symmetric

DEFAULTS = {
    "geometry": {
        "n_antennas": 64,
        "n_x": 8,
        "spacing_wavelengths": 0.5,
        "frequency_hz": 28e9,
        "dipole_length_wavelengths": 0.25,
    },
    "constants": {
        "z0_ohms": 50.0,
        "eta0_ohms": 377.0,
    },
    "quadrature": {
        "order": 64,
    },
    "power": {
        "p_t_watts": 1.0,
        "rho": 1.0,
    },
    "channel": {
        "seed": 1,
    },
    "optimize": {
        "mode": "aware",  # aware | unaware | nocoupling
    },
    "experiment": {
        "kind": "vs_antennas",
        "n_t": [16, 64],
        "spacing_wavelengths": [0.25, 0.5],
        "trials": 1000,
        "seed": 1,
        "include_uncoupled": True,
        "workers": 1,
    },
    "verify": {
        "seed": 1,
        "trials": 200,
        "inject_asymmetric": False,
    },
}


def _deep_merge(base, extra):
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_set(item):
    if "=" not in item:
        raise ValueError(f"--set expects section.key=value, got {item!r}")
    key, raw = item.split("=", 1)
    parts = key.strip().split(".")
    if len(parts) != 2:
        raise ValueError(f"--set key must be section.key, got {key!r}")
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return parts[0], parts[1], value


def load_config(config_path, overrides=()):
    """Defaults <- config file (TOML, or a manifest.json) <- --set overrides."""
    cfg = copy.deepcopy(DEFAULTS)
    if config_path is not None:
        path = Path(config_path)
        if path.suffix == ".json":
            manifest = json.loads(path.read_text())
            cfg = _deep_merge(cfg, manifest["config"])
        else:
            with open(path, "rb") as fh:
                cfg = _deep_merge(cfg, tomllib.load(fh))
    for item in overrides:
        section, key, value = _parse_set(item)
        cfg.setdefault(section, {})[key] = value
    return cfg


def config_hash(cfg) -> str:
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def _write_manifest(out_dir, command, cfg, outputs):
    manifest = {
        "command": command,
        "config": cfg,
        "config_hash": config_hash(cfg),
        "seed": cfg.get("experiment", {}).get("seed", cfg.get("channel", {}).get("seed")),
        "outputs": outputs,
        "versions": {
            "milacsim": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _geometry_from(cfg):
    g = cfg["geometry"]
    return build_geometry(
        g["n_antennas"],
        g["n_x"],
        g["spacing_wavelengths"],
        g["frequency_hz"],
        g["dipole_length_wavelengths"],
    )


def _constants_from(cfg, geom):
    c = cfg["constants"]
    return PhysicalConstants.for_wavelength(
        geom.wavelength, z0=c["z0_ohms"], eta0=c["eta0_ohms"]
    )


def _header_lines(cfg):
    return (f"config_hash={config_hash(cfg)}", f"seed={cfg['channel']['seed']}")


def cmd_coupling(cfg, out_dir):
    geom = _geometry_from(cfg)
    consts = _constants_from(cfg, geom)
    cm = build_coupling_matrix(geom, consts, cfg["quadrature"]["order"])
    out = Path(out_dir) / "coupling.csv"
    cm.write_csv(out, header_lines=_header_lines(cfg))
    trace_inv = float(np.sum(1.0 / np.linalg.eigvalsh(cm.z.real)))
    ratio = trace_inv / (consts.y0 * cm.n)
    print(
        f"coupling: {cm.n} antennas, spacing {cfg['geometry']['spacing_wavelengths']} lambda, "
        f"trace ratio Tr(Re(Z)^-1)/(Y0 N) = {ratio:.6f}"
    )
    print(f"wrote {out}")
    _write_manifest(out_dir, "coupling", cfg, [out.name])
    return 0


def cmd_optimize(cfg, out_dir):
    mode = cfg["optimize"]["mode"]
    if mode not in ("aware", "unaware", "nocoupling"):
        raise ValueError(f"optimize.mode must be aware|unaware|nocoupling, got {mode!r}")
    geom = _geometry_from(cfg)
    consts = _constants_from(cfg, geom)
    seed = cfg["channel"]["seed"]
    rng = montecarlo.trial_rng(seed, 0, 0)
    z_rt = montecarlo.sample_channel(geom.n_antennas, cfg["power"]["rho"], rng)
    coupling = None
    if mode != "nocoupling":
        coupling = build_coupling_matrix(geom, consts, cfg["quadrature"]["order"])
    ch = beamopt.MisoChannel(
        z_rt=z_rt,
        coupling=coupling,
        p_t=cfg["power"]["p_t_watts"],
        rho=cfg["power"]["rho"],
        z0=consts.z0,
    )
    if mode == "aware":
        design = beamopt.optimize_milac_mc(ch)
        delivered = design.achieved_power
        bound = beamopt.power_milac_mc(ch)
    elif mode == "unaware":
        design = beamopt.optimize_milac_nomc(ch)
        delivered = montecarlo.pipeline_power(design, ch)
        bound = beamopt.power_milac_mc(ch)
    else:
        design = beamopt.optimize_milac_nomc(ch)
        delivered = design.achieved_power
        bound = beamopt.power_milac_mc(ch)

    residuals = is_unitary_symmetric(design.theta_bar)
    gap = abs(delivered - bound) / bound
    loss_db = 10 * np.log10(bound / delivered) if delivered > 0 else float("inf")
    report = {
        "mode": mode,
        "n_t": geom.n_antennas,
        "spacing_wavelengths": cfg["geometry"]["spacing_wavelengths"],
        "seed": seed,
        "delivered_power_W": delivered,
        "closed_form_bound_W": bound,
        "relative_gap": gap,
        "loss_dB": loss_db,
        "theta_unitarity_residual": residuals.unitarity,
        "theta_symmetry_residual": residuals.symmetry,
        "config_hash": config_hash(cfg),
    }
    out_csv = Path(out_dir) / "susceptance.csv"
    write_real_matrix_csv(out_csv, design.b, header_lines=_header_lines(cfg))
    out_json = Path(out_dir) / "design_report.json"
    out_json.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(
        f"optimize[{mode}]: delivered {delivered:.6e} W, bound {bound:.6e} W, "
        f"relative gap {gap:.3e}, loss {loss_db:.3f} dB"
    )
    print(f"wrote {out_csv} and {out_json}")
    _write_manifest(out_dir, "optimize", cfg, [out_csv.name, out_json.name])
    return 0


def cmd_experiment(cfg, out_dir):
    e = cfg["experiment"]
    exp_cfg = montecarlo.ExperimentConfig(
        kind=montecarlo.ExperimentKind(e["kind"]),
        n_t_list=tuple(e["n_t"]),
        spacing_list=tuple(e["spacing_wavelengths"]),
        n_trials=e["trials"],
        seed=e["seed"],
        p_t=cfg["power"]["p_t_watts"],
        rho=cfg["power"]["rho"],
        frequency_hz=cfg["geometry"]["frequency_hz"],
        quad_order=cfg["quadrature"]["order"],
        n_x=cfg["geometry"]["n_x"],
        ell_wavelengths=cfg["geometry"]["dipole_length_wavelengths"],
        z0=cfg["constants"]["z0_ohms"],
        eta0=cfg["constants"]["eta0_ohms"],
        include_uncoupled=e["include_uncoupled"],
        workers=e["workers"],
    )
    stats = montecarlo.run_experiment(exp_cfg)
    out = Path(out_dir) / f"{exp_cfg.kind.value}.csv"
    stats.write_csv(
        out, header_lines=(f"config_hash={config_hash(cfg)}", f"seed={exp_cfg.seed}")
    )
    failed = [p for p in stats.points if p.error]
    print(f"experiment[{exp_cfg.kind.value}]: {len(stats.points)} rows, "
          f"{len(failed)} error rows")
    print(f"wrote {out}")
    _write_manifest(out_dir, "experiment", cfg, [out.name])
    return 0


# --- verify ------------------------------------------------------------------


def _verify_checks(cfg):
    """Yield (name, ok, detail) for the invariant battery."""
    seed = cfg["verify"]["seed"]
    trials = cfg["verify"]["trials"]
    inject = cfg["verify"]["inject_asymmetric"]
    z0 = cfg["constants"]["z0_ohms"]
    y0 = 1.0 / z0
    rng = np.random.default_rng(seed)

    # factor ladder: uncoupled channels are z_rt scaled by 1/4z0, 1/2z0, 1/z0
    z_rt = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    res = 0.0
    for arch, scale in (
        (netmodels.Architecture.DIGITAL_MIMO, 4 * z0),
        (netmodels.Architecture.MILAC_TX, 2 * z0),
        (netmodels.Architecture.MILAC_BOTH, z0),
    ):
        spec = netmodels.ScenarioSpec(architecture=arch, n_t=3, n_r=2, z_rt=z_rt, z0=z0)
        h = {
            netmodels.Architecture.DIGITAL_MIMO: netmodels.channel_digital,
            netmodels.Architecture.MILAC_TX: netmodels.channel_milac_tx,
            netmodels.Architecture.MILAC_BOTH: netmodels.channel_milac_both,
        }[arch](spec)
        res = max(res, float(np.max(np.abs(h - z_rt / scale))))
    yield "no-coupling factor ladder", res == 0.0, f"max residual {res:.1e}"

    # reciprocity, on raw arrays so an asymmetric fixture can be injected
    worst = 0.0
    for n_t, n_r in ((3, 2), (5, 4), (8, 8)):
        z_tt = random_coupling(n_t, rng, z0).z.copy()
        z_rr = random_coupling(n_r, rng, z0).z.copy()
        zrt = rng.standard_normal((n_r, n_t)) + 1j * rng.standard_normal((n_r, n_t))
        if inject:
            z_tt[0, 1] += 7.0  # breaks z_tt symmetry, hence reciprocity
        h_tx = netmodels._h_tx(z_rr, zrt, z_tt, z0)
        h_rx_swapped = netmodels._h_rx(z_tt, zrt.T, z_rr, z0)
        rel = np.linalg.norm(h_tx.T - h_rx_swapped) / np.linalg.norm(h_tx)
        worst = max(worst, float(rel))
    yield "reciprocity H_tx^T = H_rx(swapped)", worst < 1e-12, f"max rel residual {worst:.3e}"

    # dual-form equivalence, admittance vs impedance expressions
    worst = 0.0
    for n_s, n_t, n_r, n_z in ((1, 4, 1, 1), (2, 5, 3, 2)):
        c_tx = random_coupling(n_t, rng, z0)
        c_rx = random_coupling(n_r, rng, z0)
        zrt = rng.standard_normal((n_r, n_t)) + 1j * rng.standard_normal((n_r, n_t))
        b_f = rng.standard_normal((n_s + n_t, n_s + n_t)) * y0
        y_f = netmodels.MilacPorts.from_susceptance(0.5 * (b_f + b_f.T), "tx")
        b_g = rng.standard_normal((n_r + n_z, n_r + n_z)) * y0
        y_g = netmodels.MilacPorts.from_susceptance(0.5 * (b_g + b_g.T), "rx")
        spec = netmodels.ScenarioSpec(
            architecture=netmodels.Architecture.MILAC_BOTH,
            n_t=n_t, n_r=n_r, z_rt=zrt, n_s=n_s, n_z=n_z,
            coupling_tx=c_tx, coupling_rx=c_rx, z0=z0,
        )
        model = netmodels.build_model(spec, y_f=y_f, y_g=y_g)
        z_f = np.linalg.inv(y_f.y)
        z_g = np.linalg.inv(y_g.y)
        z_t, j_t = netmodels.matching_form_tx(z_f, spec)
        z_r, j_r = netmodels.matching_form_rx(z_g, spec)
        lhs = model.end_to_end()
        mid = j_r @ zrt @ j_t.T
        rhs = z0 * np.linalg.solve(
            z_r + z0 * np.eye(n_z), mid @ np.linalg.inv(z_t + z0 * np.eye(n_s))
        )
        rel = np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs)
        worst = max(worst, float(rel))
    yield "dual-form equivalence (admittance vs impedance)", worst < 1e-10, \
        f"max rel residual {worst:.3e}"

    # admittance identity: Y Re(Y)^-1 Y^H == Re(Z)^-1
    worst = 0.0
    for n in (4, 16, 32):
        cm = random_coupling(n, rng, z0)
        y = np.linalg.inv(cm.z)
        lhs = y @ np.linalg.solve(y.real, y.conj().T)
        rhs = np.linalg.inv(cm.z.real)
        worst = max(worst, float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs)))
    yield "admittance identity Y Re(Y)^-1 Y^H = Re(Z)^-1", worst < 1e-10, \
        f"max rel residual {worst:.3e}"

    # dipole-array fixture for the remaining checks
    geom = build_geometry(16, 8, 0.25, cfg["geometry"]["frequency_hz"],
                          cfg["geometry"]["dipole_length_wavelengths"])
    consts = PhysicalConstants.for_wavelength(geom.wavelength, z0=z0,
                                              eta0=cfg["constants"]["eta0_ohms"])
    cm = build_coupling_matrix(geom, consts, cfg["quadrature"]["order"])

    # coupling can only help on average: trace ratio >= 1
    ratios = []
    ok = True
    for spacing in (0.25, 0.5, 1.0):
        g = build_geometry(16, 8, spacing, cfg["geometry"]["frequency_hz"],
                           cfg["geometry"]["dipole_length_wavelengths"])
        c = build_coupling_matrix(
            g, PhysicalConstants.for_wavelength(g.wavelength, z0=z0,
                                                eta0=cfg["constants"]["eta0_ohms"]),
            cfg["quadrature"]["order"])
        ratio = float(np.sum(1.0 / np.linalg.eigvalsh(c.z.real)) / (y0 * c.n))
        ratios.append(f"{spacing:g}l:{ratio:.4f}")
        ok = ok and ratio >= 1.0 - 1e-12
    yield "trace ratio Tr(Re(Z)^-1) >= Y0 N", ok, ", ".join(ratios)

    # optimizer invariants + bound attainment on the fixture
    z = montecarlo.sample_channel(16, 1.0, montecarlo.trial_rng(seed, 0, 0))
    ch = beamopt.MisoChannel(z_rt=z, coupling=cm, z0=z0)
    design = beamopt.optimize_milac_mc(ch)
    resid = is_unitary_symmetric(design.theta_bar)
    ok = resid.unitarity < 1e-10 and resid.symmetry < 1e-10
    yield "scattering matrix unitary and symmetric", ok, \
        f"unitarity {resid.unitarity:.3e}, symmetry {resid.symmetry:.3e}"
    gap = abs(design.achieved_power - beamopt.power_milac_mc(ch)) / beamopt.power_milac_mc(ch)
    yield "pipeline power attains closed-form bound", gap < 1e-8, f"relative gap {gap:.3e}"

    # the analog network ties digital beamforming behind a matching network
    worst_shared = 0.0
    worst_indep = 0.0
    root_inv = hermitian_power(cm.z.real, -0.5)
    for _ in range(trials):
        z = montecarlo.sample_channel(16, 1.0, rng)
        ch = beamopt.MisoChannel(z_rt=z, coupling=cm, z0=z0)
        p_milac = beamopt.power_milac_mc(ch)
        p_match = beamopt.power_digital_matching(ch)
        worst_shared = max(worst_shared, abs(p_milac - p_match) / p_milac)
        h_mn = -1j / (4 * np.sqrt(z0)) * z @ root_inv
        worst_indep = max(
            worst_indep, abs(np.linalg.norm(h_mn) ** 2 - p_milac) / p_milac
        )
    ok = worst_shared == 0.0 and worst_indep < 1e-12
    yield "matching-network power equality", ok, \
        f"shared-path {worst_shared:.1e}, independent {worst_indep:.3e}"

    # the analog network never loses to the unmatched digital array
    violations = 0
    for _ in range(trials):
        z = montecarlo.sample_channel(16, 1.0, rng)
        ch = beamopt.MisoChannel(z_rt=z, coupling=cm, z0=z0)
        if beamopt.power_milac_mc(ch) < beamopt.power_digital_nomatching(ch) * (1 - 1e-12):
            violations += 1
    eye_cm = CouplingMatrix.uncoupled(16, z0)
    z = montecarlo.sample_channel(16, 1.0, rng)
    ch_eye = beamopt.MisoChannel(z_rt=z, coupling=eye_cm, z0=z0)
    eq_gap = abs(
        beamopt.power_milac_mc(ch_eye) - beamopt.power_digital_nomatching(ch_eye)
    ) / beamopt.power_milac_mc(ch_eye)
    ok = violations == 0 and eq_gap < 1e-12
    yield "analog >= unmatched digital", ok, \
        f"{violations} violations / {trials} draws, uncoupled equality gap {eq_gap:.3e}"


def cmd_verify(cfg, out_dir):
    failures = 0
    for name, ok, detail in _verify_checks(cfg):
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: {detail}")
        if not ok:
            failures += 1
    print(f"verify: {failures} failing check(s)")
    return 0 if failures == 0 else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="milacsim",
        description="Physics-compliant simulator and optimizer for analog-network-aided MIMO",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("coupling", "build and export the dipole-array coupling matrix"),
        ("optimize", "design the analog network for one seeded channel"),
        ("experiment", "run a Monte Carlo sweep and write CSV results"),
        ("verify", "run the invariant battery"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="TOML config (or a manifest.json)")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override all seeds")
        p.add_argument("--trials", type=int, default=None, help="override trial count")
        p.add_argument("--quad-order", type=int, default=None, help="override quadrature order")
        p.add_argument(
            "--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
            help="override one config entry (repeatable)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        if args.seed is not None:
            cfg["channel"]["seed"] = args.seed
            cfg["experiment"]["seed"] = args.seed
            cfg["verify"]["seed"] = args.seed
        if args.trials is not None:
            cfg["experiment"]["trials"] = args.trials
            cfg["verify"]["trials"] = args.trials
        if args.quad_order is not None:
            cfg["quadrature"]["order"] = args.quad_order
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        handler = {
            "coupling": cmd_coupling,
            "optimize": cmd_optimize,
            "experiment": cmd_experiment,
            "verify": cmd_verify,
        }[args.command]
        return handler(cfg, out_dir)
    except (MilacSimError, ValueError, OSError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
