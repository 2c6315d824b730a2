import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gyrosat.imu import RigConfig, Source, VelocityEstimate
from gyrosat.smoother import (
    SmoothedTrajectory,
    SmoothingError,
    process_noise,
    query,
    query_many,
    smooth,
    smooth_arrays,
    transition,
)
from oracles import dense_gp_posterior

# dense-oracle posterior for t=[0, .1, .25, .4, .5], y=[1, 1.3, .9, 1.6, 2], r=.1, q=1
FIVE_T = [0.0, 0.1, 0.25, 0.4, 0.5]
FIVE_Y = [1.0, 1.3, 0.9, 1.6, 2.0]
FIVE_MEAN = [0.929907143294744, 1.0987591328278625, 1.3547055420137302,
             1.6188326315061388, 1.797795550357669]
FIVE_VAR = [0.05726983568955451, 0.03339359489559968, 0.02085090296964154,
            0.03339349689895244, 0.05727024990846985]
# ramp through 0, .1, .2, .3 with a measurement-free knot at t=.15, r=.01, q=1
RAMP_MID_MEAN = 0.1499997005089807
RAMP_MID_VAR = 0.0026804574363836764


def one_axis(t, y, r, q):
    """Run the smoother with the signal on x and copies on y, z."""
    y = np.repeat(np.asarray(y, float)[:, None], 3, axis=1)
    r = np.repeat(np.broadcast_to(np.asarray(r, float), (len(t),))[:, None], 3, axis=1)
    return smooth_arrays(np.asarray(t, float), y, r, q)


def estimates(t, omega, var, source=None):
    omega = np.asarray(omega, float).reshape(len(t), 3)
    var = np.broadcast_to(np.asarray(var, float), omega.shape)
    source = source or [("measured",) * 3] * len(t)
    return [VelocityEstimate(ti, w, v, s) for ti, w, v, s in zip(t, omega, var, source)]


class TestDenseEquivalence:
    def test_five_knot_frozen(self):
        mean, cov, _ = one_axis(FIVE_T, FIVE_Y, 0.1, 1.0)
        np.testing.assert_allclose(mean[:, 0, 0], FIVE_MEAN, rtol=0, atol=1e-8)
        np.testing.assert_allclose(cov[:, 0, 0, 0], FIVE_VAR, rtol=0, atol=1e-8)

    def test_five_knot_live(self):
        mean, cov, cross = one_axis(FIVE_T, FIVE_Y, 0.1, 1.0)
        m_ref, c_ref = dense_gp_posterior(FIVE_T, FIVE_Y, [0.1] * 5, 1.0)
        np.testing.assert_allclose(mean[:, 0], m_ref, atol=1e-8)
        for k in range(5):
            np.testing.assert_allclose(cov[k, 0], c_ref[2 * k:2 * k + 2, 2 * k:2 * k + 2], atol=1e-8)
        for k in range(4):
            np.testing.assert_allclose(cross[k, 0], c_ref[2 * k:2 * k + 2, 2 * k + 2:2 * k + 4], atol=1e-8)

    @settings(max_examples=60, deadline=None)
    @given(
        n=st.integers(2, 10),
        seed=st.integers(0, 2**32 - 1),
        q=st.sampled_from([0.1, 1.0, 30.0]),
    )
    def test_random_instances(self, n, seed, q):
        rng = np.random.default_rng(seed)
        t = np.cumsum(rng.uniform(0.02, 0.3, n))
        y = rng.normal(0, 2, n)
        r = rng.uniform(0.01, 1.0, n)
        y[rng.random(n) < 0.2] = np.nan
        r[np.isnan(y)] = np.inf
        mean, cov, _ = one_axis(t, y, r, q)
        m_ref, c_ref = dense_gp_posterior(t, y, r, q)
        np.testing.assert_allclose(mean[:, 0], m_ref, atol=1e-8)
        for k in range(n):
            np.testing.assert_allclose(cov[k, 0], c_ref[2 * k:2 * k + 2, 2 * k:2 * k + 2], atol=1e-8)


class TestSmooth:
    def test_constant_fixed_point(self):
        t = np.linspace(0, 1, 21)
        traj = smooth(estimates(t, np.full((21, 3), 3.25), 1e-8), RigConfig())
        np.testing.assert_allclose(traj.omega, 3.25, atol=1e-9)
        np.testing.assert_allclose(traj.mean[:, :, 1], 0.0, atol=1e-6)

    def test_rejected_knot_is_less_certain(self):
        t = [0.0, 0.01, 0.02, 0.03, 0.04]
        src = [("measured",) * 3] * 5
        src[2] = ("rejected", "measured", "measured")
        omega = np.ones((5, 3))
        omega[2, 0] = np.nan
        var = np.full((5, 3), 0.01)
        var[2, 0] = np.inf
        traj = smooth(estimates(t, omega, var, src), RigConfig())
        v = traj.omega_var[:, 0]
        assert v[2] > v[1] and v[2] > v[3]

    def test_output_tags_and_provenance(self):
        t = [0.0, 0.01, 0.02]
        src = [("measured",) * 3, ("recovered", "measured", "measured"), ("measured",) * 3]
        traj = smooth(estimates(t, np.ones((3, 3)), 0.01, src), RigConfig())
        assert all(e.source == (Source.SMOOTHED,) * 3 for e in traj.estimates())
        assert traj.input_sources[1][0] is Source.RECOVERED

    def test_axis_permutation(self):
        rng = np.random.default_rng(3)
        t = np.cumsum(rng.uniform(0.005, 0.02, 30))
        omega = rng.normal(0, 5, (30, 3))
        var = rng.uniform(1e-4, 1.0, (30, 3))
        cfg = RigConfig()
        a = smooth(estimates(t, omega, var), cfg)
        perm = [2, 0, 1]
        b = smooth(estimates(t, omega[:, perm], var[:, perm]), cfg)
        np.testing.assert_array_equal(b.omega, a.omega[:, perm])
        np.testing.assert_array_equal(b.omega_var, a.omega_var[:, perm])

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_never_less_certain_than_measurement(self, seed):
        rng = np.random.default_rng(seed)
        n = 40
        t = np.cumsum(rng.uniform(0.001, 0.01, n))
        var = rng.choice([2.74e-5, 3.65], (n, 3))
        traj = smooth(estimates(t, rng.normal(0, 10, (n, 3)), var), RigConfig())
        assert np.all(traj.omega_var <= var * (1 + 1e-9))
        assert np.all(traj.omega_var > 0)
        eig = np.linalg.eigvalsh(traj.cov)
        assert np.all(eig > 0)

    def test_measurement_free_knot_changes_nothing(self):
        rng = np.random.default_rng(11)
        t = np.cumsum(rng.uniform(0.01, 0.05, 12))
        y = rng.normal(0, 1, 12)
        base, _, _ = one_axis(t, y, 0.05, 10.0)
        ti = np.insert(t, 5, 0.5 * (t[4] + t[5]))
        yi = np.insert(y, 5, np.nan)
        ri = np.insert(np.full(12, 0.05), 5, np.inf)
        more, _, _ = one_axis(ti, yi, ri, 10.0)
        np.testing.assert_allclose(np.delete(more, 5, axis=0), base, atol=1e-9)

    def test_time_shift(self):
        rng = np.random.default_rng(5)
        t = np.cumsum(rng.uniform(0.01, 0.05, 15))
        omega = rng.normal(0, 3, (15, 3))
        a = smooth(estimates(t, omega, 0.1), RigConfig())
        b = smooth(estimates(t + 100.0, omega, 0.1), RigConfig())
        np.testing.assert_allclose(b.mean, a.mean, atol=1e-9)
        np.testing.assert_allclose(b.cov, a.cov, atol=1e-9)

    def test_needs_two(self):
        with pytest.raises(SmoothingError):
            smooth(estimates([0.0], [[1, 2, 3]], 0.1), RigConfig())

    def test_needs_increasing_times(self):
        with pytest.raises(SmoothingError, match="increasing"):
            smooth(estimates([0.0, 0.0], np.ones((2, 3)), 0.1), RigConfig())


class TestQuery:
    @pytest.fixture
    def traj(self):
        rng = np.random.default_rng(2)
        t = np.cumsum(rng.uniform(0.01, 0.05, 10))
        return smooth(estimates(t, rng.normal(0, 2, (10, 3)), 0.05), RigConfig(jerk_psd=50.0))

    def test_knot_exact(self, traj):
        for k in range(len(traj)):
            w, v = query(traj, traj.times[k])
            np.testing.assert_array_equal(w, traj.omega[k])
            np.testing.assert_array_equal(v, traj.omega_var[k])

    def test_extrapolation(self, traj):
        with pytest.raises(SmoothingError, match="extrapolation not supported"):
            query(traj, traj.times[-1] + 1e-6)
        with pytest.raises(SmoothingError, match="extrapolation not supported"):
            query(traj, traj.times[0] - 1e-6)

    def test_constant_between_knots(self):
        t = [0.0, 0.1, 0.2, 0.3]
        traj = smooth(estimates(t, np.full((4, 3), -7.0), 1e-8), RigConfig())
        w, _ = query(traj, 0.15)
        np.testing.assert_allclose(w, -7.0, atol=1e-9)

    def test_ramp_midpoint(self):
        t = [0.0, 0.1, 0.2, 0.3]
        y = [0.0, 0.1, 0.2, 0.3]
        mean, cov, cross = one_axis(t, y, 0.01, 1.0)
        traj = SmoothedTrajectory(np.array(t), mean, cov, cross, 1.0, ())
        w, v = query(traj, 0.15)
        assert w[0] == pytest.approx(RAMP_MID_MEAN, abs=1e-6)
        assert v[0] == pytest.approx(RAMP_MID_VAR, abs=1e-8)

    def test_query_matches_inserted_knot(self, traj):
        # the bridge equals the posterior at an extra measurement-free knot
        tq = 0.3 * traj.times[3] + 0.7 * traj.times[4]
        w, v = query(traj, tq)
        rng = np.random.default_rng(2)
        t = np.insert(np.cumsum(rng.uniform(0.01, 0.05, 10)), 4, tq)
        y = np.insert(rng.normal(0, 2, (10, 3)), 4, np.nan, axis=0)
        r = np.where(np.isnan(y), np.inf, 0.05)
        mean, cov, _ = smooth_arrays(t, y, r, 50.0)
        np.testing.assert_allclose(w, mean[4, :, 0], atol=1e-9)
        np.testing.assert_allclose(v, cov[4, :, 0, 0], atol=1e-9)

    def test_query_many(self, traj):
        ts = np.linspace(traj.times[0], traj.times[-1], 7)
        w, v = query_many(traj, ts)
        assert w.shape == (7, 3) and v.shape == (7, 3)
        np.testing.assert_array_equal(w[3], query(traj, ts[3])[0])


def test_prior_matrices():
    np.testing.assert_array_equal(transition(0.5), [[1, 0.5], [0, 1]])
    np.testing.assert_allclose(process_noise(0.5, 2.0), 2 * np.array([[0.125 / 3, 0.125], [0.125, 0.5]]))


def test_default_constants():
    cfg = RigConfig()
    assert (cfg.jerk_psd, cfg.gyro_noise_var, cfg.estimate_var) == (1e6, 2.74e-5, 3.65)
