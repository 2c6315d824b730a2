import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from gyrosat import io
from gyrosat.config import (
    ConfigError,
    load_kv,
    parse_kv,
    render_kv,
    rig_config,
    scenario,
)
from gyrosat.imu import ImuSample, SaturationWindow, Source

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


class TestCsv:
    @settings(suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(st.lists(st.tuples(*[finite] * 7), min_size=1, max_size=20))
    def test_imu_round_trip(self, tmp_path, rows):
        samples = [ImuSample(r[0], r[1:4], r[4:7]) for r in rows]
        path = tmp_path / "m.csv"
        io.write_imu_csv(path, samples)
        back = io.read_imu_csv(path)
        for a, b in zip(samples, back):
            assert a.t == b.t
            np.testing.assert_array_equal(a.gyro, b.gyro)
            np.testing.assert_array_equal(a.accel, b.accel)

    def test_estimates_round_trip(self, tmp_path):
        t = np.array([0.0, 0.005])
        omega = np.array([[1.0, np.nan, 3.0], [0.1, 0.2, 0.3]])
        var = np.array([[1e-5, np.inf, 3.65], [1.0, 2.0, 3.0]])
        src = [("measured", "rejected", "recovered"), ("smoothed",) * 3]
        path = tmp_path / "e.csv"
        io.write_estimates_csv(path, t, omega, var, src)
        assert path.read_text().splitlines()[0] == ",".join(io.ESTIMATE_HEADER)
        t2, w2, v2, s2 = io.read_estimates_csv(path)
        np.testing.assert_array_equal(t2, t)
        np.testing.assert_array_equal(w2, omega)
        np.testing.assert_array_equal(v2, var)
        assert s2[0] == (Source.MEASURED, Source.REJECTED, Source.RECOVERED)

    def test_windows_round_trip(self, tmp_path):
        path = tmp_path / "w.csv"
        io.write_windows_csv(path, [SaturationWindow(2, 0.1, 0.25, 20, 51)])
        assert path.read_text() == "axis,t_start,t_end\nz,0.1,0.25\n"
        (w,) = io.read_windows_csv(path)
        assert (w.axis, w.t_start, w.t_end) == (2, 0.1, 0.25)

    def test_report_round_trip(self, tmp_path):
        path = tmp_path / "r.csv"
        rows = [("seed_0001", "median", 3.5, 0.5, 85.71428571428572)]
        io.write_report_csv(path, rows)
        assert io.read_report_csv(path) == rows

    def test_truth_round_trip(self, tmp_path):
        path = tmp_path / "t.csv"
        io.write_truth_csv(path, [0.0, 0.1], [[1, 2, 3], [4, 5, 6]])
        t, w = io.read_truth_csv(path)
        np.testing.assert_array_equal(w, [[1, 2, 3], [4, 5, 6]])

    def test_bad_line_named(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("t,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0,0\n# note\n0.1,0,zero,0,0,0,0\n")
        with pytest.raises(io.CsvFormatError) as exc:
            io.read_imu_csv(path)
        assert exc.value.line == 4
        assert str(exc.value).startswith(f"{path}:4:")

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("t,gx,gy,gz,ax,ay,az\n0,0,0\n")
        with pytest.raises(io.CsvFormatError, match=":2:"):
            io.read_imu_csv(path)

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("t,wx,wy,wz\n0,0,0,0\n")
        with pytest.raises(io.CsvFormatError, match="expected header"):
            io.read_imu_csv(path)

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        io.atomic_write(tmp_path / "sub" / "f.txt", "x\n")
        assert [p.name for p in (tmp_path / "sub").iterdir()] == ["f.txt"]


class TestConfig:
    def test_parse(self):
        kv = parse_kv("# rig\ncom_to_imu = 0, 0.1, 0  # metres\n\ngyro_sat = 10.5\n")
        assert kv == {"com_to_imu": "0, 0.1, 0", "gyro_sat": "10.5"}

    @pytest.mark.parametrize(
        "text, match",
        [("bogus = 1", "unknown key"), ("seed = 1\nseed = 2", "duplicate"), ("seed 1", "key = value")],
    )
    def test_parse_errors(self, text, match):
        with pytest.raises(ConfigError, match=match):
            parse_kv(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="config file not found"):
            load_kv(tmp_path / "nope.cfg")

    def test_rig(self):
        cfg = rig_config(parse_kv("com_to_imu = 0 0.1 0\ngyro_sat = 9 10 11\nfrozen_axis = yes"))
        np.testing.assert_array_equal(cfg.gyro_sat, [9, 10, 11])
        assert cfg.frozen_axis

    def test_rig_invalid_value(self):
        with pytest.raises(ConfigError):
            rig_config(parse_kv("gyro_noise_var = -1"))

    def test_render_round_trip(self):
        values = {"com_to_imu": [0.0, 0.1, 0.2], "seed": 4, "jerk_psd": 1e6}
        kv = parse_kv(render_kv(values))
        np.testing.assert_array_equal(rig_config(kv).com_to_imu, [0.0, 0.1, 0.2])
        assert kv["seed"] == "4"

    def test_fixed_scenario(self):
        kv = parse_kv(
            "initial_omega = 12 0 0\nduration = 0.5\ninertia = 0.4 0.4 0.4\n"
            "collisions = 0.1 1 0 0 0 0 0 0.02; 0.3 -1 0 0 0 0 0 0.02\nsample_rate = 400\n"
        )
        sc = scenario(kv, seed=9)
        assert sc.seed == 9 and len(sc.collisions) == 2
        assert sc.sensor.sample_rate == 400
        np.testing.assert_array_equal(sc.initial.omega, [12, 0, 0])

    def test_fixed_scenario_needs_duration(self):
        with pytest.raises(ConfigError, match="duration"):
            scenario(parse_kv("initial_omega = 1 0 0"))

    def test_tumble_overrides(self):
        sc = scenario(parse_kv("tumble_n_collisions_range = 2 2\nduration = 4\nseed = 3"))
        assert sc.duration == 4.0 and len(sc.collisions) == 3 and sc.seed == 3

    def test_bad_inertia(self):
        with pytest.raises(ConfigError):
            scenario(parse_kv("inertia = 1 1 5"))
