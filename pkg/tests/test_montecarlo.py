import dataclasses

import numpy as np
import pytest

from milacsim import (
    CouplingMatrix,
    ExperimentConfig,
    ExperimentKind,
    MilacDesign,
    MisoChannel,
    optimize_milac_mc,
    optimize_milac_nomc,
    pipeline_power,
    power_milac_mc,
    run_experiment,
    sample_channel,
    trial_rng,
)

Z0 = 50.0
Y0 = 1.0 / Z0


def tiny_config(**overrides):
    base = dict(
        kind=ExperimentKind.VS_ANTENNAS,
        n_t_list=(8,),
        spacing_list=(0.25,),
        n_trials=25,
        seed=77,
        n_x=4,
        include_uncoupled=True,
        workers=1,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestSampleChannel:
    def test_moments(self):
        gen = np.random.default_rng(1)
        draws = sample_channel(100_000, 1.0, gen)
        # mean -> 0 within 4 standard errors per component
        se = np.sqrt(0.5 / draws.size)
        assert abs(np.mean(draws.real)) < 4 * se
        assert abs(np.mean(draws.imag)) < 4 * se
        # unit second moment within 2%
        assert np.mean(np.abs(draws) ** 2) == pytest.approx(1.0, rel=0.02)

    def test_path_gain_scales_variance(self):
        gen = np.random.default_rng(2)
        draws = sample_channel(50_000, 3.0, gen)
        assert np.mean(np.abs(draws) ** 2) == pytest.approx(3.0, rel=0.03)

    def test_zero_path_gain_rejected(self):
        with pytest.raises(ValueError):
            sample_channel(4, 0.0, np.random.default_rng(0))

    def test_fixed_seed_is_bit_identical(self):
        a = sample_channel(16, 1.0, trial_rng(5, 2, 9))
        b = sample_channel(16, 1.0, trial_rng(5, 2, 9))
        assert np.array_equal(a, b)
        c = sample_channel(16, 1.0, trial_rng(5, 2, 10))
        assert not np.array_equal(a, c)


class TestPipelinePower:
    def test_aware_design_attains_bound(self, coupling_cache):
        cm = coupling_cache(16, 0.25)
        z = sample_channel(16, 1.0, trial_rng(1, 0, 0))
        ch = MisoChannel(z_rt=z, coupling=cm)
        design = optimize_milac_mc(ch)
        assert pipeline_power(design, ch) == pytest.approx(
            power_milac_mc(ch), rel=1e-8
        )

    def test_unaware_design_under_uncoupled_model(self):
        z = sample_channel(8, 1.0, trial_rng(2, 0, 0))
        ch = MisoChannel(z_rt=z, coupling=None)
        design = optimize_milac_nomc(ch)
        expected = np.linalg.norm(z / (2 * Z0)) ** 2 / 4
        assert pipeline_power(design, ch) == pytest.approx(expected, rel=1e-10)

    def test_zero_susceptance_is_suboptimal(self, coupling_cache):
        cm = coupling_cache(16, 0.25)
        z = sample_channel(16, 1.0, trial_rng(3, 0, 0))
        ch = MisoChannel(z_rt=z, coupling=cm)
        idle = MilacDesign(
            b=np.zeros((17, 17)), theta_bar=np.eye(17), achieved_power=0.0
        )
        assert pipeline_power(idle, ch) < power_milac_mc(ch)

    def test_dimension_check(self):
        ch = MisoChannel(z_rt=np.ones(4, dtype=complex), coupling=None)
        bad = MilacDesign(b=np.zeros((3, 3)), theta_bar=np.eye(3), achieved_power=0.0)
        with pytest.raises(ValueError):
            pipeline_power(bad, ch)


class TestRunExperiment:
    def test_optim_equals_bound_rows(self):
        stats = run_experiment(tiny_config())
        rows = {(p.n_t, p.spacing, p.strategy): p for p in stats.points}
        for spacing in (0.25, None):
            optim = rows[(8, spacing, "optim")]
            bound = rows[(8, spacing, "ub")]
            assert optim.mean_power == pytest.approx(bound.mean_power, rel=1e-8)
            assert optim.theory == bound.theory

    def test_uncoupled_theory_is_scaling_law(self):
        stats = run_experiment(tiny_config())
        row = next(p for p in stats.points if p.spacing is None and p.strategy == "ub")
        assert row.theory == pytest.approx(Y0**2 / 16 * 8, rel=1e-12)

    def test_rerun_is_bit_identical(self):
        a = run_experiment(tiny_config())
        b = run_experiment(tiny_config())
        assert a == b

    def test_workers_do_not_change_results(self):
        serial = run_experiment(tiny_config(n_t_list=(8, 12), workers=1))
        threaded = run_experiment(tiny_config(n_t_list=(8, 12), workers=4))
        assert serial == threaded

    def test_aware_vs_unaware_has_unaware_rows(self):
        stats = run_experiment(
            tiny_config(kind=ExperimentKind.AWARE_VS_UNAWARE, n_trials=10)
        )
        strategies = {(p.spacing, p.strategy) for p in stats.points}
        assert (0.25, "unaware") in strategies
        assert (None, "unaware") not in strategies  # meaningless when uncoupled
        unaware = next(p for p in stats.points if p.strategy == "unaware")
        assert unaware.theory is None

    def test_vs_digital_strategies_and_ordering(self):
        stats = run_experiment(
            tiny_config(kind=ExperimentKind.VS_DIGITAL, n_trials=40)
        )
        rows = {(p.spacing, p.strategy): p for p in stats.points}
        assert rows[(0.25, "ub")].mean_power >= rows[(0.25, "digital")].mean_power
        assert rows[(0.25, "digital")].theory is not None

    def test_vs_digital_gap_vanishes_at_weak_coupling(self):
        # at one-wavelength spacing the two strategies agree within 5%
        stats = run_experiment(
            tiny_config(
                kind=ExperimentKind.VS_DIGITAL,
                n_t_list=(16,),
                n_x=8,
                spacing_list=(1.0,),
                n_trials=400,
                include_uncoupled=False,
            )
        )
        rows = {p.strategy: p for p in stats.points}
        ratio = rows["ub"].mean_power / rows["digital"].mean_power
        assert 1.0 <= ratio < 1.05

    def test_expectation_check_has_no_pipeline_rows(self):
        stats = run_experiment(
            tiny_config(kind=ExperimentKind.EXPECTATION_CHECK, n_trials=10)
        )
        assert {p.strategy for p in stats.points} == {"ub", "digital"}

    def test_failed_point_is_tagged_not_dropped(self):
        # spacing below the dipole length makes collinear segments overlap;
        # that point must surface as an error row while others succeed
        stats = run_experiment(tiny_config(spacing_list=(0.1, 0.5), n_trials=5))
        errors = [p for p in stats.points if p.error]
        good = [p for p in stats.points if not p.error]
        assert len(errors) == 1
        assert errors[0].spacing == 0.1
        assert "singular" in errors[0].error.lower() or "overlap" in errors[0].error.lower()
        assert any(p.spacing == 0.5 for p in good)

    def test_csv_write(self, tmp_path):
        stats = run_experiment(tiny_config(n_trials=5))
        path = tmp_path / "out.csv"
        stats.write_csv(path, header_lines=("hash=abc",))
        text = path.read_text()
        assert text.startswith("# hash=abc\n")
        header = text.splitlines()[1]
        assert header == (
            "experiment,n_t,spacing_over_lambda,strategy,"
            "mean_W,stderr_W,theory_W,n_trials,seed,error"
        )
        # one line per point plus comment and header
        assert len(text.splitlines()) == 2 + len(stats.points)

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            tiny_config(n_trials=0)
        with pytest.raises(ValueError):
            tiny_config(workers=0)
        with pytest.raises(ValueError):
            tiny_config(seed=-1)


class TestTrialStats:
    def test_frozen_rows(self):
        stats = run_experiment(tiny_config(n_trials=3))
        with pytest.raises(dataclasses.FrozenInstanceError):
            stats.points[0].mean_power = 0.0


def test_stderr_definition():
    stats = run_experiment(tiny_config(n_trials=10, kind=ExperimentKind.EXPECTATION_CHECK))
    row = next(p for p in stats.points if p.spacing == 0.25 and p.strategy == "ub")
    # recompute the per-trial powers independently from the same streams
    from milacsim import PhysicalConstants, beamopt, build_coupling_matrix, build_geometry

    geom = build_geometry(8, 4, 0.25, 28e9)
    cm = build_coupling_matrix(geom, PhysicalConstants.for_wavelength(geom.wavelength))
    fn = beamopt.milac_mc_power_fn(cm, 1.0, Z0)
    powers = []
    for t in range(10):
        z = sample_channel(8, 1.0, trial_rng(77, 0, t))
        powers.append(fn(z))
    assert row.mean_power == pytest.approx(np.mean(powers), rel=1e-12)
    assert row.std_error == pytest.approx(np.std(powers, ddof=1) / np.sqrt(10), rel=1e-12)
