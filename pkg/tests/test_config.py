import numpy as np
import pytest
from hypothesis import given, strategies as st

from irsbeam.config import (ConfigError, SystemConfig, dbm_to_watt,
                            db_to_linear, linear_to_db, load_config_file,
                            near_square_dims, spawn_streams, validate_config,
                            watt_to_dbm)


class TestValidateConfig:
    def test_table1_values_accepted(self):
        cfg = validate_config(SystemConfig(M=10, N_RF=2, K=2, R1=25, R2=25,
                                           p_t_dbm=30.0))
        assert cfg.M == 10

    def test_rf_chains_exceeding_antennas_rejected(self):
        with pytest.raises(ConfigError):
            validate_config(SystemConfig(M=10, N_RF=12))

    def test_three_users_rejected(self):
        with pytest.raises(ConfigError):
            validate_config(SystemConfig(K=3))

    def test_all_violations_reported(self):
        with pytest.raises(ConfigError) as exc:
            validate_config(SystemConfig(K=3, N_RF=12, R1=0, sigma2=-1.0))
        assert len(exc.value.violations) >= 4

    def test_inconsistent_upa_dims_rejected(self):
        with pytest.raises(ConfigError):
            validate_config(SystemConfig(bs_dims=(3, 3)))  # 9 != M=10

    def test_with_overrides_returns_new_config(self):
        cfg = SystemConfig()
        cfg2 = cfg.with_overrides(M=12)
        assert cfg2.M == 12 and cfg.M == 10


class TestUnitConversions:
    def test_dbm_watt_known_value(self):
        assert dbm_to_watt(30.0) == pytest.approx(1.0, rel=1e-12)
        assert dbm_to_watt(0.0) == pytest.approx(1e-3, rel=1e-12)

    @given(st.floats(min_value=-80.0, max_value=80.0))
    def test_dbm_watt_round_trip(self, x_dbm):
        assert watt_to_dbm(dbm_to_watt(x_dbm)) == pytest.approx(x_dbm, abs=1e-10)

    @given(st.floats(min_value=-120.0, max_value=120.0))
    def test_db_linear_round_trip(self, x_db):
        assert linear_to_db(db_to_linear(x_db)) == pytest.approx(x_db, abs=1e-10)


class TestNearSquareDims:
    @pytest.mark.parametrize("n,expected", [(10, (5, 2)), (25, (5, 5)),
                                            (1, (1, 1)), (7, (7, 1)), (12, (4, 3))])
    def test_known_factorizations(self, n, expected):
        assert near_square_dims(n) == expected

    @given(st.integers(min_value=1, max_value=500))
    def test_product_recovers_count(self, n):
        w, h = near_square_dims(n)
        assert w * h == n and w >= h >= 1


class TestRngStreams:
    def test_same_seed_same_streams(self):
        a = spawn_streams(5, ["x", "y"])
        b = spawn_streams(5, ["x", "y"])
        assert np.array_equal(a["x"].random(8), b["x"].random(8))
        assert np.array_equal(a["y"].random(8), b["y"].random(8))

    def test_labels_get_distinct_streams(self):
        s = spawn_streams(5, ["x", "y"])
        assert not np.array_equal(s["x"].random(8), s["y"].random(8))


class TestConfigFile:
    def test_parse_and_override(self, tmp_path):
        p = tmp_path / "exp.cfg"
        p.write_text("# comment\nM = 12\nR1 = 30  # inline\np_t_dbm = 27.5\n")
        over = load_config_file(p)
        assert over == {"M": 12, "R1": 30, "p_t_dbm": 27.5}
        cfg = validate_config(SystemConfig(**over))
        assert cfg.M == 12 and cfg.p_t_dbm == 27.5

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("bogus = 1\n")
        with pytest.raises(ConfigError):
            load_config_file(p)

    def test_bad_value_rejected(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("M = ten\n")
        with pytest.raises(ConfigError):
            load_config_file(p)
