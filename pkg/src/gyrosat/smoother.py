"""Continuous-time smoothing of angular velocity under a white-noise-on-jerk prior.

Each axis carries the state ``[w, wdot]`` driven by white angular jerk of
power spectral density ``q``. The prior is Markov, so the batch GP posterior
is computed exactly by a Kalman filter followed by a Rauch-Tung-Striebel pass.
The three axes are independent and are processed side by side.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .imu import RigConfig, Source, VelocityEstimate

# Variance of the unobserved rate (and of w when the first knot has no
# measurement) at the first knot.
INITIAL_DIFFUSE_VAR = 1e4


class SmoothingError(ValueError):
    pass


def transition(dt: float) -> NDArray[np.float64]:
    """State transition over ``dt`` for the ``[w, wdot]`` state."""
    return np.array([[1.0, dt], [0.0, 1.0]])


def process_noise(dt: float, q: float) -> NDArray[np.float64]:
    """Covariance of the jerk-driven state increment over ``dt``."""
    return q * np.array([[dt**3 / 3.0, dt**2 / 2.0], [dt**2 / 2.0, dt]])


def _sym(p: NDArray[np.float64]) -> NDArray[np.float64]:
    return 0.5 * (p + np.swapaxes(p, -1, -2))


@dataclass(frozen=True)
class SmootherState:
    """Posterior of ``[w, wdot]`` on one axis at one knot."""

    mean: NDArray[np.float64]
    cov: NDArray[np.float64]


@dataclass(frozen=True)
class SmoothedTrajectory:
    """Smoothed angular velocity with enough information to query any time in span.

    Attributes
    ----------
    times : ndarray, shape (N,)
    mean : ndarray, shape (N, 3, 2)
        Posterior mean of ``[w, wdot]`` per knot and axis.
    cov : ndarray, shape (N, 3, 2, 2)
    cross : ndarray, shape (N-1, 3, 2, 2)
        Posterior cross-covariance ``Cov(x_k, x_{k+1})``.
    jerk_psd : float
    input_sources : tuple of tuples
        Provenance of the estimate each knot was built from.
    """

    times: NDArray[np.float64]
    mean: NDArray[np.float64]
    cov: NDArray[np.float64]
    cross: NDArray[np.float64]
    jerk_psd: float
    input_sources: tuple[tuple[Source, Source, Source], ...]

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int, axis: int) -> SmootherState:
        return SmootherState(self.mean[k, axis].copy(), self.cov[k, axis].copy())

    @property
    def omega(self) -> NDArray[np.float64]:
        """Knot posterior means of angular velocity, shape (N, 3)."""
        return self.mean[:, :, 0]

    @property
    def omega_var(self) -> NDArray[np.float64]:
        return self.cov[:, :, 0, 0]

    def estimates(self) -> list[VelocityEstimate]:
        tags = (Source.SMOOTHED,) * 3
        return [
            VelocityEstimate(t, w, v, tags)
            for t, w, v in zip(self.times, self.omega, self.omega_var)
        ]

    def query(self, t: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return query(self, t)


def _measurements(
    estimates: Sequence[VelocityEstimate],
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    t = np.array([e.t for e in estimates], dtype=float)
    y = np.array([e.omega for e in estimates], dtype=float)
    r = np.array([e.var for e in estimates], dtype=float)
    for k, e in enumerate(estimates):
        for axis in range(3):
            if not e.usable(axis):
                y[k, axis] = np.nan
    missing = ~np.isfinite(y) | ~np.isfinite(r)
    y[missing] = np.nan
    r[missing] = np.inf
    return t, y, r


def smooth_arrays(
    t: ArrayLike, y: ArrayLike, r: ArrayLike, q: float
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Full-information posterior for independent per-axis scalar measurements.

    Parameters
    ----------
    t : array-like, shape (N,)
        Strictly increasing knot times.
    y : array-like, shape (N, D)
        Measured angular velocity; ``nan`` marks a missing measurement.
    r : array-like, shape (N, D)
        Measurement variances (ignored where ``y`` is missing).
    q : float
        Angular-jerk PSD.

    Returns
    -------
    mean : ndarray, shape (N, D, 2)
    cov : ndarray, shape (N, D, 2, 2)
    cross : ndarray, shape (N-1, D, 2, 2)
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.asarray(r, dtype=float)
    n, d = y.shape
    has = np.isfinite(y)

    m_f = np.zeros((n, d, 2))
    p_f = np.zeros((n, d, 2, 2))
    m_p = np.zeros((n, d, 2))
    p_p = np.zeros((n, d, 2, 2))

    # the first measurement, when present, initializes the prior directly
    m_f[0, :, 0] = np.where(has[0], y[0], 0.0)
    p_f[0, :, 0, 0] = np.where(has[0], r[0], INITIAL_DIFFUSE_VAR)
    p_f[0, :, 1, 1] = INITIAL_DIFFUSE_VAR
    m_p[0], p_p[0] = m_f[0], p_f[0]

    eye = np.eye(2)
    for k in range(1, n):
        dt = t[k] - t[k - 1]
        phi = transition(dt)
        m_p[k] = m_f[k - 1] @ phi.T
        p_p[k] = _sym(phi @ p_f[k - 1] @ phi.T + process_noise(dt, q))

        m, p = m_p[k].copy(), p_p[k].copy()
        obs = has[k]
        if obs.any():
            s = p[obs, 0, 0] + r[k, obs]
            gain = p[obs, :, 0] / s[:, None]
            m[obs] = m[obs] + gain * (y[k, obs] - m[obs, 0])[:, None]
            # Joseph form
            a = eye - gain[:, :, None] * np.array([1.0, 0.0])[None, None, :]
            p[obs] = (
                a @ p[obs] @ np.swapaxes(a, -1, -2)
                + r[k, obs][:, None, None] * gain[:, :, None] * gain[:, None, :]
            )
        m_f[k], p_f[k] = m, _sym(p)

    m_s = m_f.copy()
    p_s = p_f.copy()
    cross = np.zeros((max(n - 1, 0), d, 2, 2))
    for k in range(n - 2, -1, -1):
        phi = transition(t[k + 1] - t[k])
        # G = P_f Phi^T P_pred^-1, solved with P_pred symmetric
        g = np.swapaxes(np.linalg.solve(p_p[k + 1], phi @ p_f[k]), -1, -2)
        m_s[k] = m_f[k] + np.einsum("dij,dj->di", g, m_s[k + 1] - m_p[k + 1])
        p_s[k] = _sym(p_f[k] + g @ (p_s[k + 1] - p_p[k + 1]) @ np.swapaxes(g, -1, -2))
        cross[k] = g @ p_s[k + 1]
    return m_s, p_s, cross


def smooth(estimates: Sequence[VelocityEstimate], cfg: RigConfig) -> SmoothedTrajectory:
    """Smooth fused angular-velocity estimates.

    Measured and recovered axes are weighted by the variance carried in each
    estimate; rejected axes contribute nothing at their knot.

    Raises
    ------
    SmoothingError
        With fewer than two estimates or non-increasing times.
    """
    if len(estimates) < 2:
        raise SmoothingError("at least 2 estimates are required")
    t, y, r = _measurements(estimates)
    if not np.all(np.diff(t) > 0):
        raise SmoothingError("estimate times must be strictly increasing")
    mean, cov, cross = smooth_arrays(t, y, r, cfg.jerk_psd)
    t.setflags(write=False)
    return SmoothedTrajectory(
        times=t,
        mean=mean,
        cov=cov,
        cross=cross,
        jerk_psd=float(cfg.jerk_psd),
        input_sources=tuple(e.source for e in estimates),
    )


def interpolation_weights(
    dt_before: float, dt_after: float, q: float
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Weights of the prior bridge between two knots.

    Returns ``(lam, psi, cond)`` with ``x(tau) = lam x_k + psi x_{k+1} + noise``
    and ``cond`` the covariance of that noise.
    """
    q1 = process_noise(dt_before, q)
    phi2 = transition(dt_after)
    dt = dt_before + dt_after
    psi = np.linalg.solve(process_noise(dt, q), phi2 @ q1).T
    lam = transition(dt_before) - psi @ transition(dt)
    cond = _sym(q1 - psi @ phi2 @ q1)
    return lam, psi, cond


def query(
    traj: SmoothedTrajectory, t: float
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Posterior mean and variance of angular velocity at time ``t``.

    Raises
    ------
    SmoothingError
        If ``t`` lies outside the knot span.
    """
    times = traj.times
    t = float(t)
    if not times[0] <= t <= times[-1]:
        raise SmoothingError(
            f"extrapolation not supported: t={t} outside [{times[0]}, {times[-1]}]"
        )
    k = int(np.searchsorted(times, t, side="left"))
    if times[k] == t:
        return traj.mean[k, :, 0].copy(), traj.cov[k, :, 0, 0].copy()

    k -= 1
    lam, psi, cond = interpolation_weights(t - times[k], times[k + 1] - t, traj.jerk_psd)
    w = np.hstack((lam, psi))
    mean = traj.mean[k] @ lam.T + traj.mean[k + 1] @ psi.T
    joint = np.zeros((3, 4, 4))
    joint[:, :2, :2] = traj.cov[k]
    joint[:, 2:, 2:] = traj.cov[k + 1]
    joint[:, :2, 2:] = traj.cross[k]
    joint[:, 2:, :2] = np.swapaxes(traj.cross[k], -1, -2)
    cov = w @ joint @ w.T + cond
    return mean[:, 0], cov[:, 0, 0]


def query_many(
    traj: SmoothedTrajectory, ts: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Vector form of :func:`query`; returns arrays of shape (M, 3)."""
    ts = np.asarray(ts, dtype=float).reshape(-1)
    omega = np.empty((len(ts), 3))
    var = np.empty((len(ts), 3))
    for i, t in enumerate(ts):
        omega[i], var[i] = query(traj, t)
    return omega, var
