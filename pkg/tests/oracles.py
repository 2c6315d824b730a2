"""Independent reference computations used only by the tests.

None of these share code with the paths they check.
"""

from __future__ import annotations

import numpy as np

DIFFUSE = 1e4


def dense_gp_posterior(t, y, r, q):
    """Batch posterior of the [w, wdot] jerk-driven GP for one axis.

    Builds the full 2N x 2N prior covariance by lifting the state sequence onto
    its independent driving terms, then conditions on every measurement in
    one dense solve. The first measurement, when present, defines the prior
    at the first knot (``N([y0, 0], diag(r0, DIFFUSE))``) and is not applied
    again; otherwise the prior there is ``N(0, DIFFUSE * I)``.

    Returns ``(mean (N, 2), cov (2N, 2N))``.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    r = np.asarray(r, float)
    n = len(t)

    m0 = np.zeros(2)
    p0 = np.diag([DIFFUSE, DIFFUSE])
    if np.isfinite(y[0]):
        m0[0] = y[0]
        p0[0, 0] = r[0]

    # x = L v, v = (x0, w_1, ..., w_{N-1}) independent
    def phi(dt):
        return np.array([[1.0, dt], [0.0, 1.0]])

    def qmat(dt):
        return q * np.array([[dt**3 / 3, dt**2 / 2], [dt**2 / 2, dt]])

    lift = np.zeros((2 * n, 2 * n))
    dcov = np.zeros((2 * n, 2 * n))
    dcov[:2, :2] = p0
    for i in range(n):
        for j in range(i + 1):
            lift[2 * i:2 * i + 2, 2 * j:2 * j + 2] = phi(t[i] - t[j])
        if i > 0:
            dcov[2 * i:2 * i + 2, 2 * i:2 * i + 2] = qmat(t[i] - t[i - 1])
    mu = lift[:, :2] @ m0
    prior = lift @ dcov @ lift.T

    rows = [k for k in range(1, n) if np.isfinite(y[k])]
    if not rows:
        return mu.reshape(n, 2), prior
    h = np.zeros((len(rows), 2 * n))
    for j, k in enumerate(rows):
        h[j, 2 * k] = 1.0
    s = h @ prior @ h.T + np.diag(r[rows])
    gain = np.linalg.solve(s, h @ prior).T
    mean = mu + gain @ (y[rows] - h @ mu)
    cov = prior - gain @ h @ prior
    return mean.reshape(n, 2), 0.5 * (cov + cov.T)


def brute_force_saturation(gyro, thresholds):
    """Per-axis list of (start, stop) runs found by a plain scan."""
    gyro = np.asarray(gyro, float)
    runs = {0: [], 1: [], 2: []}
    for axis in range(3):
        start = None
        for i, value in enumerate(gyro[:, axis]):
            hot = abs(value) >= thresholds[axis]
            if hot and start is None:
                start = i
            if not hot and start is not None:
                runs[axis].append((start, i))
                start = None
        if start is not None:
            runs[axis].append((start, len(gyro)))
    return runs


def freefall_accel(omega, omega_dot, t_vec):
    """Proper acceleration at ``t_vec`` from the centre of mass in free fall,
    written out component by component."""
    wx, wy, wz = omega
    ax, ay, az = omega_dot
    tx, ty, tz = t_vec
    # w x t
    c = (wy * tz - wz * ty, wz * tx - wx * tz, wx * ty - wy * tx)
    # w x (w x t)
    cc = (wy * c[2] - wz * c[1], wz * c[0] - wx * c[2], wx * c[1] - wy * c[0])
    # wdot x t
    tan = (ay * tz - az * ty, az * tx - ax * tz, ax * ty - ay * tx)
    return np.array([tan[i] + cc[i] for i in range(3)])
