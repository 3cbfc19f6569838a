import numpy as np
import pytest

from irsbeam.channels import (assemble, gen_sv_channel, generate_channels,
                              generate_split_user_channels, load_channels,
                              path_loss, perturb, save_channels, upa_response)
from irsbeam.config import SystemConfig, validate_config

WL = 0.0107
HALF = WL / 2.0


class TestUpaResponse:
    def test_broadside_elevation_kills_horizontal_phase(self):
        v = upa_response(0.0, np.pi / 2, (4, 1), HALF, WL)
        np.testing.assert_allclose(v, 0.5 * np.ones(4), atol=1e-12)

    def test_single_element_is_scalar_one(self):
        v = upa_response(1.3, 0.7, (1, 1), HALF, WL)
        np.testing.assert_allclose(v, [1.0], atol=1e-12)

    def test_endfire_two_element_alternation(self):
        v = upa_response(np.pi / 2, np.pi / 2, (2, 1), HALF, WL)
        np.testing.assert_allclose(v, np.array([1.0, -1.0]) / np.sqrt(2), atol=1e-12)

    @pytest.mark.parametrize("dims", [(1, 1), (3, 2), (5, 5), (10, 1)])
    def test_unit_norm(self, dims, rng):
        for _ in range(5):
            az, el = rng.uniform(0, 2 * np.pi), rng.uniform(0.01, np.pi - 0.01)
            v = upa_response(az, el, dims, HALF, WL)
            assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)

    def test_non_finite_angle_rejected(self):
        with pytest.raises(ValueError):
            upa_response(np.nan, 0.5, (2, 2), HALF, WL)


class TestPathLoss:
    def test_unit_distance_gives_intercept(self):
        assert path_loss(1.0, 61.4, 2.0) == pytest.approx(61.4)

    def test_hundred_meters(self):
        assert path_loss(100.0, 61.4, 2.0) == pytest.approx(101.4)

    def test_table1_distance(self):
        assert path_loss(30.0, 61.4, 2.0) == pytest.approx(61.4 + 20 * np.log10(30.0))

    def test_nonpositive_distance_rejected(self):
        with pytest.raises(ValueError):
            path_loss(0.0)


class TestGenSvChannel:
    def test_single_path_is_rank_one(self):
        h = gen_sv_channel((2, 2), (3, 1), 1, 0.0, np.random.default_rng(0), HALF, WL)
        s = np.linalg.svd(h, compute_uv=False)
        assert s[1] < 1e-12 * s[0]

    def test_energy_normalization_monte_carlo(self):
        # E||H||_F^2 = n_rx * n_tx at zero path loss.
        rng = np.random.default_rng(42)
        energies = [np.linalg.norm(gen_sv_channel((2, 2), (2, 2), 5, 0.0,
                                                  rng, HALF, WL)) ** 2
                    for _ in range(10_000)]
        assert np.mean(energies) == pytest.approx(16.0, rel=0.05)

    def test_path_loss_scales_energy_exactly_on_paired_seed(self):
        h0 = gen_sv_channel((2, 2), (2, 2), 5, 0.0, np.random.default_rng(9), HALF, WL)
        h60 = gen_sv_channel((2, 2), (2, 2), 5, 60.0, np.random.default_rng(9), HALF, WL)
        ratio = np.linalg.norm(h60) ** 2 / np.linalg.norm(h0) ** 2
        assert ratio == pytest.approx(1e-6, rel=1e-10)


class TestAssemble:
    def test_stacking_is_lossless(self, rng):
        hb1 = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        hb2 = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
        hi1 = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        hi2 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        ch = assemble(hb1, hb2, hi1, hi2)
        np.testing.assert_array_equal(ch.H_B[:3], hb1)
        np.testing.assert_array_equal(ch.H_B[3:], hb2)
        np.testing.assert_array_equal(ch.H_I[:, :3], hi1)
        np.testing.assert_array_equal(ch.H_I[:, 3:], hi2)

    def test_gram_matrix_hermitian_psd_rank_two(self, rng):
        hi = rng.standard_normal((2, 50)) + 1j * rng.standard_normal((2, 50))
        ch = assemble(rng.standard_normal((25, 4)), rng.standard_normal((25, 4)),
                      hi[:, :25], hi[:, 25:])
        t = ch.H_I_tilde
        assert np.linalg.norm(t - t.conj().T) < 1e-10 * np.linalg.norm(t)
        w = np.linalg.eigvalsh(t)
        assert w[0] > -1e-10 * max(1.0, w[-1])
        assert np.sum(w > 1e-10 * w[-1]) <= 2

    def test_near_zero_user_channel_gives_sparse_gram(self):
        hi1 = np.array([[1.0], [0.0]])
        hi2 = np.zeros((2, 1))
        ch = assemble(np.ones((1, 2)), np.ones((1, 2)), hi1, hi2)
        expected = np.zeros((2, 2))
        expected[0, 0] = 1.0
        np.testing.assert_allclose(ch.H_I_tilde, expected, atol=1e-14)

    def test_dimension_mismatch_rejected(self, rng):
        with pytest.raises(ValueError):
            assemble(np.ones((3, 4)), np.ones((2, 5)), np.ones((2, 3)), np.ones((2, 2)))


class TestGenerateChannels:
    def test_seeded_generation_bit_reproducible(self, table1_cfg):
        a = generate_channels(table1_cfg, np.random.default_rng(5))
        b = generate_channels(table1_cfg, np.random.default_rng(5))
        np.testing.assert_array_equal(a.H_B, b.H_B)
        np.testing.assert_array_equal(a.H_I, b.H_I)

    def test_shapes(self, table1_cfg):
        ch = generate_channels(table1_cfg, np.random.default_rng(0))
        assert ch.H_B.shape == (50, 10)
        assert ch.H_I.shape == (2, 50)
        assert ch.H_I_tilde.shape == (50, 50)

    def test_transmit_gain_credit_on_bs_links(self, table1_cfg):
        lo = generate_channels(table1_cfg.with_overrides(g_t=0.0),
                               np.random.default_rng(4))
        hi = generate_channels(table1_cfg.with_overrides(g_t=20.0),
                               np.random.default_rng(4))
        ratio = np.linalg.norm(hi.H_B1) ** 2 / np.linalg.norm(lo.H_B1) ** 2
        assert ratio == pytest.approx(100.0, rel=1e-9)
        # user-side links unaffected
        np.testing.assert_array_equal(lo.H_I1, hi.H_I1)

    def test_split_user_geometry(self, table1_cfg):
        d = np.array([[15.0, 50.0], [50.0, 15.0]])
        ch = generate_split_user_channels(table1_cfg, np.random.default_rng(1), d)
        assert ch.H_I.shape == (2, 50)
        # user 1 is nearer IRS 1 than IRS 2, so its IRS-1 row carries more energy
        assert np.linalg.norm(ch.H_I1[0]) > np.linalg.norm(ch.H_I2[0])


class TestPerturb:
    def test_zero_alpha_identical(self, small_channels):
        out = perturb(small_channels, 0.0, np.random.default_rng(0))
        np.testing.assert_array_equal(out.H_B, small_channels.H_B)
        np.testing.assert_array_equal(out.H_I, small_channels.H_I)

    def test_energy_scales_quadratically_on_same_seed(self, small_channels):
        p1 = perturb(small_channels, 0.1, np.random.default_rng(8))
        p2 = perturb(small_channels, 1.0, np.random.default_rng(8))
        e1 = np.linalg.norm(p1.H_B - small_channels.H_B) ** 2
        e2 = np.linalg.norm(p2.H_B - small_channels.H_B) ** 2
        assert e1 / e2 == pytest.approx(0.01, rel=1e-10)

    def test_unit_alpha_error_energy_matches_channel_energy(self, table1_channels):
        # alpha = 1 is a relative error level: expected perturbation
        # energy equals the channel energy.
        rng = np.random.default_rng(3)
        diffs = []
        for _ in range(200):
            p = perturb(table1_channels, 1.0, rng)
            diffs.append(np.linalg.norm(p.H_B1 - table1_channels.H_B1) ** 2)
        target = np.linalg.norm(table1_channels.H_B1) ** 2
        assert np.mean(diffs) == pytest.approx(target, rel=0.1)

    def test_negative_alpha_rejected(self, small_channels):
        with pytest.raises(ValueError):
            perturb(small_channels, -0.5, np.random.default_rng(0))


class TestChannelIO:
    def test_save_load_round_trip_exact(self, small_channels, tmp_path):
        p = tmp_path / "ch.txt"
        save_channels(p, small_channels)
        loaded = load_channels(p)
        np.testing.assert_array_equal(loaded.H_B, small_channels.H_B)
        np.testing.assert_array_equal(loaded.H_I, small_channels.H_I)
        np.testing.assert_array_equal(loaded.H_I_tilde, small_channels.H_I_tilde)

    def test_missing_block_rejected(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("H_B1 1 1\n1.0+0.0j\n")
        with pytest.raises(ValueError):
            load_channels(p)
