import numpy as np
import pytest

from irsbeam import alamouti, bench
from irsbeam.bench import (SCENARIO_PRESETS, SCHEMES, Scenario,
                           compute_trial_artifacts, fd_oracle_for_fixed_phases,
                           gnuplot_columns, run_scheme, scenario_channels,
                           scenario_config, small_instance_oracle, sweep,
                           uncertainty_sweep, write_csv)
from irsbeam.channels import assemble
from irsbeam.config import SystemConfig, validate_config


def identity_like_channels():
    # H_I = [[3, 0], [0, 1]], H_B = I2: effective channel is diag(3*phi1, phi2).
    return assemble(np.eye(1, 2), np.array([[0.0, 1.0]]),
                    np.array([[3.0], [0.0]]), np.array([[0.0], [1.0]]))


class TestFdOracle:
    def test_diagonal_effective_channel(self):
        ch = identity_like_channels()
        ph = alamouti.PhaseConfig(phi=np.ones(2, dtype=complex), r1=1)
        F, snr = fd_oracle_for_fixed_phases(ch, ph, p_t_w=2.0, sigma2=1.0)
        # top singular value 3 -> gain 2*9, snr = (2/2)*18
        assert snr == pytest.approx(18.0, rel=1e-12)
        assert np.linalg.norm(F) ** 2 == pytest.approx(2.0, rel=1e-12)

    def test_zero_channel(self):
        ch = assemble(np.zeros((1, 2)), np.zeros((1, 2)),
                      np.zeros((2, 1)), np.zeros((2, 1)))
        ph = alamouti.PhaseConfig(phi=np.ones(2, dtype=complex), r1=1)
        F, snr = fd_oracle_for_fixed_phases(ch, ph, 2.0, 1.0)
        assert snr == 0.0
        np.testing.assert_array_equal(F, np.zeros((2, 2)))

    def test_dominates_random_feasible_precoders(self, small_channels, rng):
        phi = np.exp(2j * np.pi * rng.random(6))
        ph = alamouti.PhaseConfig(phi=phi, r1=3)
        _, best = fd_oracle_for_fixed_phases(small_channels, ph, 2.0, 1.0)
        for _ in range(50):
            F = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
            F *= np.sqrt(2.0) / np.linalg.norm(F)
            g = alamouti.effective_channel(small_channels, ph, F)
            assert alamouti.snr(g, 2.0, 1.0) <= best * (1 + 1e-10)


class TestScenarios:
    def test_presets_cover_paper_geometries(self):
        assert set(SCENARIO_PRESETS) == {"first", "second", "third", "coverage"}
        assert SCENARIO_PRESETS["second"].d_b2 == 600.0
        assert SCENARIO_PRESETS["third"].r_per_irs == 50

    def test_invalid_distance_rejected(self):
        with pytest.raises(ValueError):
            Scenario(name="bad", d_b1=-1.0)

    def test_invalid_user_mode_rejected(self):
        with pytest.raises(ValueError):
            Scenario(name="bad", user_mode="scattered")

    def test_scenario_config_overrides_irs_size(self, table1_cfg):
        cfg = scenario_config(table1_cfg, SCENARIO_PRESETS["third"])
        assert cfg.R1 == 50 and cfg.R2 == 50

    def test_scenario_channels_shapes(self, table1_cfg):
        sc = SCENARIO_PRESETS["coverage"]
        cfg = scenario_config(table1_cfg, sc)
        ch = scenario_channels(cfg, sc, np.random.default_rng(0))
        assert ch.H_B.shape == (50, 10)


@pytest.fixture(scope="module")
def artifacts():
    cfg = validate_config(SystemConfig(M=4, N_RF=2, R1=3, R2=3))
    from irsbeam.channels import generate_channels
    ch = generate_channels(cfg, np.random.default_rng(7))
    return compute_trial_artifacts(cfg, ch, np.random.default_rng(1),
                                   schemes=SCHEMES)


class TestTrialArtifacts:

    def test_all_schemes_produce_gains(self, artifacts):
        assert set(artifacts.gains) == set(SCHEMES)
        assert not artifacts.errors

    def test_bound_chain_ordering(self, artifacts):
        g = artifacts.gains
        slack = 1 + 1e-8
        assert g["ProposedHP"] <= g["ProposedFD"] * slack
        assert g["ProposedFD"] <= g["UpperBoundFD"] * slack
        assert g["UpperBoundFD"] == g["UpperBoundHP"]

    def test_baselines_below_proposed(self, artifacts):
        g = artifacts.gains
        assert g["RandomIRS"] <= g["ProposedFD"]
        assert g["AntennaSelection"] <= g["ProposedFD"] * (1 + 1e-8)

    def test_rank_residuals_recorded(self, artifacts):
        rq, rw = artifacts.rank_residuals
        assert rq < 1e-3 and rw < 1e-3


class TestRunScheme:
    def test_unknown_scheme_rejected(self, small_cfg, small_channels):
        with pytest.raises(ValueError):
            run_scheme("Genie", small_channels, small_cfg)

    def test_report_fields_consistent(self, small_cfg, small_channels):
        rep = run_scheme("RandomIRS", small_channels, small_cfg)
        assert rep.scheme == "RandomIRS"
        assert rep.rate == pytest.approx(alamouti.achievable_rate(rep.snr_linear))
        assert rep.wall_time > 0


class TestSweep:
    def test_bit_exact_determinism(self, small_cfg):
        sc = Scenario(name="mini", r_per_irs=3)
        a, _, _ = sweep(small_cfg, sc, ("RandomIRS",), [0.0, 10.0], n_trials=3)
        b, _, _ = sweep(small_cfg, sc, ("RandomIRS",), [0.0, 10.0], n_trials=3)
        assert a == b

    def test_row_layout(self, small_cfg):
        sc = Scenario(name="mini", r_per_irs=3)
        rows, failures, _ = sweep(small_cfg, sc, ("RandomIRS", "NoBeamforming"),
                                  [5.0, 10.0], n_trials=2)
        assert not failures
        assert len(rows) == 4
        assert all(r["n_trials"] == 2 for r in rows)
        keys = {(r["scheme"], r["snr_db"]) for r in rows}
        assert ("RandomIRS", 5.0) in keys and ("NoBeamforming", 10.0) in keys

    def test_rate_grows_with_snr(self, small_cfg):
        sc = Scenario(name="mini", r_per_irs=3)
        rows, _, _ = sweep(small_cfg, sc, ("RandomIRS",), [0.0, 10.0, 20.0],
                           n_trials=2)
        rates = [r["mean_rate"] for r in sorted(rows, key=lambda r: r["snr_db"])]
        assert rates == sorted(rates)

    def test_zero_trials_rejected(self, small_cfg):
        with pytest.raises(ValueError):
            sweep(small_cfg, Scenario(name="mini", r_per_irs=3),
                  ("RandomIRS",), [0.0], n_trials=0)


class TestUncertaintySweep:
    def test_negative_alpha_rejected(self, small_cfg):
        with pytest.raises(ValueError):
            uncertainty_sweep(small_cfg, [-0.1], [10.0], 1)

    def test_zero_alpha_sits_exactly_on_axis(self, small_cfg):
        # Matched combining at alpha = 0 gives log2(1 + SNR) by the
        # noise normalization, independent of the channel draw.
        sc = Scenario(name="mini", r_per_irs=3)
        rows = uncertainty_sweep(small_cfg, [0.0], [10.0], n_trials=3, scenario=sc)
        assert rows[0]["mean_rate"] == pytest.approx(np.log2(11.0), rel=1e-9)
        assert rows[0]["stderr_rate"] == pytest.approx(0.0, abs=1e-9)

    def test_zero_alpha_tops_every_alpha(self, small_cfg):
        sc = Scenario(name="mini", r_per_irs=3)
        rows = uncertainty_sweep(small_cfg, [0.0, 0.5], [10.0], n_trials=3,
                                 scenario=sc)
        by_alpha = {r["alpha"]: r["mean_rate"] for r in rows}
        assert by_alpha[0.0] >= by_alpha[0.5]

    def test_deterministic(self, small_cfg):
        sc = Scenario(name="mini", r_per_irs=3)
        a = uncertainty_sweep(small_cfg, [0.2], [10.0], n_trials=2, scenario=sc)
        b = uncertainty_sweep(small_cfg, [0.2], [10.0], n_trials=2, scenario=sc)
        assert a == b


class TestSmallInstanceOracle:
    def test_bounds_any_phase_choice(self, tiny_cfg, tiny_channels, rng):
        best = small_instance_oracle(tiny_cfg, tiny_channels, n_levels=16)
        for _ in range(20):
            k = rng.integers(0, 16, size=2)
            phi = np.exp(2j * np.pi * k / 16)
            ph = alamouti.PhaseConfig(phi=phi, r1=1)
            _, val = fd_oracle_for_fixed_phases(tiny_channels, ph,
                                                tiny_cfg.p_t_w, tiny_cfg.sigma2)
            assert val <= best * (1 + 1e-12)

    def test_too_many_elements_rejected(self, tiny_cfg, small_channels):
        with pytest.raises(ValueError):
            small_instance_oracle(tiny_cfg, small_channels)


class TestCsvOutput:
    def test_floats_round_trip_exact(self, tmp_path):
        rows = [{"x": 0.1 + 0.2, "label": "a"}, {"x": 1e-17, "label": "b"}]
        p = tmp_path / "out.csv"
        write_csv(p, rows)
        import csv as csv_mod
        with open(p) as fh:
            back = list(csv_mod.DictReader(fh))
        assert float(back[0]["x"]) == rows[0]["x"]
        assert float(back[1]["x"]) == rows[1]["x"]

    def test_empty_rows_write_header_only(self, tmp_path):
        p = tmp_path / "empty.csv"
        write_csv(p, [], fieldnames=["a", "b"])
        assert p.read_text().strip() == "a,b"

    def test_gnuplot_reshape(self):
        rows = [
            {"snr": 0, "scheme": "A", "rate": 1.0},
            {"snr": 5, "scheme": "A", "rate": 2.0},
            {"snr": 0, "scheme": "B", "rate": 0.5},
        ]
        wide = gnuplot_columns(rows, "snr", "scheme", "rate")
        assert wide == [{"snr": 0, "A": 1.0, "B": 0.5},
                        {"snr": 5, "A": 2.0, "B": ""}]
