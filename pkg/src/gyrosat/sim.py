"""Torque-free tumbling rigid body with short collisions, used as ground truth.

The body rotates according to Euler's equations and falls freely between
collisions. A collision is a finite-duration, constant-rate change of angular
and linear velocity. Measurements are synthesized at the IMU offset with the
exact rigid-body acceleration formula, then corrupted with Gaussian noise and
clipped like a real sensor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .imu import DEFAULT_GYRO_NOISE_VAR, DEFAULT_GYRO_SAT, ImuSample

GRAVITY = np.array([0.0, 0.0, -9.81])


class ScenarioError(ValueError):
    pass


# -- quaternions, scalar-first [w, x, y, z] ---------------------------------


def quat_multiply(a: NDArray[np.float64], b: NDArray[np.float64]) -> NDArray[np.float64]:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_to_matrix(q: NDArray[np.float64]) -> NDArray[np.float64]:
    """Rotation matrix of a unit quaternion (body to world)."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_quaternion(rng: np.random.Generator) -> NDArray[np.float64]:
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


# -- model ------------------------------------------------------------------


@dataclass(frozen=True)
class BodyModel:
    """Mass properties of the tumbling body.

    Parameters
    ----------
    inertia : array-like, shape (3, 3) or (3,)
        Inertia tensor about the centre of mass, body frame, kg m^2. A
        3-vector is read as the diagonal.
    com_to_imu : array-like, shape (3,)
        Offset from the centre of mass to the IMU, metres.
    gravity : array-like, shape (3,)
        Gravity in the world frame, m/s^2.
    """

    inertia: NDArray[np.float64] = field(
        default_factory=lambda: np.diag([0.40, 0.43, 0.47])
    )
    com_to_imu: NDArray[np.float64] = field(
        default_factory=lambda: np.array([0.08, 0.06, 0.10])
    )
    gravity: NDArray[np.float64] = field(default_factory=lambda: GRAVITY.copy())

    def __post_init__(self) -> None:
        inertia = np.asarray(self.inertia, dtype=float)
        if inertia.shape == (3,):
            inertia = np.diag(inertia)
        if inertia.shape != (3, 3):
            raise ScenarioError("inertia must be 3x3 or a 3-vector diagonal")
        if not np.allclose(inertia, inertia.T):
            raise ScenarioError("inertia must be symmetric")
        lam = np.linalg.eigvalsh(inertia)
        if not np.all(lam > 0):
            raise ScenarioError("inertia must be positive definite")
        tol = 1e-12 * lam.max()
        if lam[0] + lam[1] < lam[2] - tol:
            raise ScenarioError("inertia eigenvalues violate the triangle inequality")
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "_inertia_inv", np.linalg.inv(inertia))
        object.__setattr__(
            self, "com_to_imu", np.asarray(self.com_to_imu, dtype=float).reshape(3)
        )
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=float).reshape(3))

    @property
    def inertia_inv(self) -> NDArray[np.float64]:
        return self._inertia_inv  # type: ignore[attr-defined]

    def euler_rate(self, omega: NDArray[np.float64]) -> NDArray[np.float64]:
        """Torque-free angular acceleration ``I^-1 ((I w) x w)``."""
        return self.inertia_inv @ np.cross(self.inertia @ omega, omega)

    def kinetic_energy(self, omega: ArrayLike) -> float:
        omega = np.asarray(omega, dtype=float)
        return 0.5 * float(omega @ self.inertia @ omega)

    def momentum_norm(self, omega: ArrayLike) -> float:
        return float(np.linalg.norm(self.inertia @ np.asarray(omega, dtype=float)))


@dataclass(frozen=True)
class SimState:
    """Rigid-body state. ``q`` maps body to world; ``omega`` is in the body frame;
    ``p`` and ``v`` are the centre-of-mass position and velocity in the world frame."""

    t: float
    q: NDArray[np.float64]
    omega: NDArray[np.float64]
    p: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))
    v: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))

    @property
    def rotation(self) -> NDArray[np.float64]:
        return quat_to_matrix(self.q)


@dataclass(frozen=True)
class CollisionEvent:
    """Constant-rate velocity change over ``[t, t + duration)``.

    ``delta_omega`` is in the body frame, ``delta_v`` in the world frame.
    """

    t: float
    delta_omega: NDArray[np.float64]
    delta_v: NDArray[np.float64]
    duration: float

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ScenarioError("collision duration must be positive")
        object.__setattr__(self, "delta_omega", np.asarray(self.delta_omega, float).reshape(3))
        object.__setattr__(self, "delta_v", np.asarray(self.delta_v, float).reshape(3))

    @property
    def t_end(self) -> float:
        return self.t + self.duration

    @property
    def omega_rate(self) -> NDArray[np.float64]:
        return self.delta_omega / self.duration

    @property
    def accel(self) -> NDArray[np.float64]:
        return self.delta_v / self.duration


def _deriv(w, q, inertia, inertia_inv, extra):
    # plain floats: numpy call overhead dominates on 3-vectors
    w0, w1, w2 = w
    l0 = inertia[0][0] * w0 + inertia[0][1] * w1 + inertia[0][2] * w2
    l1 = inertia[1][0] * w0 + inertia[1][1] * w1 + inertia[1][2] * w2
    l2 = inertia[2][0] * w0 + inertia[2][1] * w1 + inertia[2][2] * w2
    c0, c1, c2 = l1 * w2 - l2 * w1, l2 * w0 - l0 * w2, l0 * w1 - l1 * w0
    j = inertia_inv
    wd = (
        j[0][0] * c0 + j[0][1] * c1 + j[0][2] * c2 + extra[0],
        j[1][0] * c0 + j[1][1] * c1 + j[1][2] * c2 + extra[1],
        j[2][0] * c0 + j[2][1] * c1 + j[2][2] * c2 + extra[2],
    )
    qw, qx, qy, qz = q
    qd = (
        0.5 * (-qx * w0 - qy * w1 - qz * w2),
        0.5 * (qw * w0 + qy * w2 - qz * w1),
        0.5 * (qw * w1 - qx * w2 + qz * w0),
        0.5 * (qw * w2 + qx * w1 - qy * w0),
    )
    return wd, qd


def _axpy(x, a, y):
    return tuple(xi + a * yi for xi, yi in zip(x, y))


def _rk4(w, q, inertia, inertia_inv, dt, extra):
    k1w, k1q = _deriv(w, q, inertia, inertia_inv, extra)
    k2w, k2q = _deriv(_axpy(w, 0.5 * dt, k1w), _axpy(q, 0.5 * dt, k1q), inertia, inertia_inv, extra)
    k3w, k3q = _deriv(_axpy(w, 0.5 * dt, k2w), _axpy(q, 0.5 * dt, k2q), inertia, inertia_inv, extra)
    k4w, k4q = _deriv(_axpy(w, dt, k3w), _axpy(q, dt, k3q), inertia, inertia_inv, extra)
    h = dt / 6.0
    w = tuple(
        wi + h * (a + 2 * b + 2 * c + d) for wi, a, b, c, d in zip(w, k1w, k2w, k3w, k4w)
    )
    q = tuple(
        qi + h * (a + 2 * b + 2 * c + d) for qi, a, b, c, d in zip(q, k1q, k2q, k3q, k4q)
    )
    n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]) ** 0.5
    return w, tuple(qi / n for qi in q)


_NO_EXTRA = (0.0, 0.0, 0.0)


def step(
    state: SimState,
    body: BodyModel,
    dt: float,
    omega_rate: ArrayLike | None = None,
    accel: ArrayLike | None = None,
) -> SimState:
    """Advance the state by ``dt`` with classical RK4 on attitude and rate.

    Parameters
    ----------
    omega_rate : array-like, optional
        Extra constant angular acceleration (body frame) held over the step.
    accel : array-like, optional
        Extra constant non-gravitational acceleration of the centre of mass
        (world frame) held over the step.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    extra = _NO_EXTRA if omega_rate is None else tuple(np.asarray(omega_rate, float).tolist())
    w, q = _rk4(
        tuple(state.omega.tolist()),
        tuple(np.asarray(state.q, float).tolist()),
        body.inertia.tolist(),
        body.inertia_inv.tolist(),
        dt,
        extra,
    )
    a = body.gravity if accel is None else body.gravity + np.asarray(accel, float)
    p = state.p + state.v * dt + 0.5 * a * dt * dt
    v = state.v + a * dt
    return SimState(t=state.t + dt, q=np.array(q), omega=np.array(w), p=p, v=v)


def synthesize_imu(
    state: SimState,
    omega_dot: ArrayLike,
    body: BodyModel,
    com_accel: ArrayLike | None = None,
) -> ImuSample:
    """Noise-free, unclipped IMU reading for a state.

    Parameters
    ----------
    state : SimState
    omega_dot : array-like, shape (3,)
        Angular acceleration at this instant, body frame.
    body : BodyModel
    com_accel : array-like, optional
        Coordinate acceleration of the centre of mass, world frame. ``None``
        means free fall, i.e. ``com_accel == gravity``.
    """
    omega = state.omega
    omega_dot = np.asarray(omega_dot, dtype=float)
    t_vec = body.com_to_imu
    if com_accel is None:
        proper_com = np.zeros(3)
    else:
        specific = np.asarray(com_accel, dtype=float) - body.gravity
        proper_com = state.rotation.T @ specific
    accel = proper_com + np.cross(omega_dot, t_vec) + np.cross(omega, np.cross(omega, t_vec))
    return ImuSample(state.t, omega.copy(), accel)


# -- scenarios --------------------------------------------------------------


@dataclass(frozen=True)
class SensorConfig:
    """Sampling, noise and clipping of the simulated IMU."""

    sample_rate: float = 200.0
    gyro_noise_var: float = DEFAULT_GYRO_NOISE_VAR
    accel_noise_var: float = 1e-2
    gyro_sat: NDArray[np.float64] = field(
        default_factory=lambda: np.full(3, DEFAULT_GYRO_SAT)
    )
    accel_rail: float | None = None
    oversample: int = 10

    def __post_init__(self) -> None:
        sat = np.broadcast_to(np.asarray(self.gyro_sat, dtype=float), (3,)).copy()
        object.__setattr__(self, "gyro_sat", sat)
        if not self.sample_rate > 0:
            raise ScenarioError("sample_rate must be positive")
        if self.gyro_noise_var < 0 or self.accel_noise_var < 0:
            raise ScenarioError("noise variances must be non-negative")
        if self.oversample < 1:
            raise ScenarioError("oversample must be >= 1")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one simulated run."""

    body: BodyModel
    initial: SimState
    duration: float
    collisions: tuple[CollisionEvent, ...] = ()
    sensor: SensorConfig = field(default_factory=SensorConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ScenarioError("duration must be positive")
        events = tuple(sorted(self.collisions, key=lambda c: c.t))
        for a, b in zip(events, events[1:]):
            if b.t < a.t_end:
                raise ScenarioError(
                    f"overlapping collisions at t={a.t:g} and t={b.t:g}"
                )
        object.__setattr__(self, "collisions", events)


@dataclass(frozen=True)
class TumbleGenerator:
    """Random tumbling scenarios: a slow roll is spun up by a launch phase into
    a fast spin mostly about one body axis, followed by a handful of collisions.

    ``omega_range`` bounds the spin rate reached at the end of the launch. All
    ranges are inclusive and every draw comes from the supplied seed.
    """

    omega_range: tuple[float, float] = (8.0, 19.0)
    axis_tilt_std: float = 0.15
    duration_range: tuple[float, float] = (3.0, 6.0)
    n_collisions_range: tuple[int, int] = (3, 8)
    collision_duration_range: tuple[float, float] = (0.01, 0.03)
    delta_omega_std: float = 2.0
    delta_v_range: tuple[float, float] = (0.5, 2.0)
    launch_duration_range: tuple[float, float] = (0.3, 0.6)
    initial_fraction: float = 0.2

    def __call__(
        self,
        seed: int,
        body: BodyModel | None = None,
        sensor: SensorConfig | None = None,
    ) -> Scenario:
        rng = np.random.default_rng(seed)
        body = body or BodyModel()
        sensor = sensor or SensorConfig()

        duration = rng.uniform(*self.duration_range)
        axis = np.zeros(3)
        axis[rng.integers(3)] = rng.choice([-1.0, 1.0])
        axis = axis + rng.normal(scale=self.axis_tilt_std, size=3)
        axis /= np.linalg.norm(axis)
        spin = rng.uniform(*self.omega_range) * axis
        omega0 = self.initial_fraction * spin

        launch_start = 0.1
        launch = CollisionEvent(
            t=launch_start,
            delta_omega=spin - omega0,
            delta_v=np.zeros(3),
            duration=float(rng.uniform(*self.launch_duration_range)),
        )

        n_events = int(rng.integers(self.n_collisions_range[0], self.n_collisions_range[1] + 1))
        # one collision per equal slot after the launch keeps them apart
        slots = np.linspace(launch.t_end + 0.05, duration, n_events + 1)
        events = [launch]
        for k in range(n_events):
            dur = rng.uniform(*self.collision_duration_range)
            lo, hi = slots[k], slots[k + 1] - dur
            dv_dir = rng.normal(size=3)
            dv_dir /= np.linalg.norm(dv_dir)
            events.append(
                CollisionEvent(
                    t=float(rng.uniform(lo, hi)),
                    delta_omega=rng.normal(scale=self.delta_omega_std, size=3),
                    delta_v=rng.uniform(*self.delta_v_range) * dv_dir,
                    duration=float(dur),
                )
            )
        initial = SimState(t=0.0, q=random_quaternion(rng), omega=omega0)
        return Scenario(body, initial, float(duration), tuple(events), sensor, seed)


@dataclass(frozen=True)
class SimulationResult:
    """Truth and measurement streams of one run, sampled on the same grid."""

    truth_t: NDArray[np.float64]
    truth_omega: NDArray[np.float64]
    measurements: list[ImuSample]
    clean: list[ImuSample]
    states: list[SimState]

    @property
    def truth(self) -> list[tuple[float, NDArray[np.float64]]]:
        return list(zip(self.truth_t.tolist(), self.truth_omega))


def _active(events: Sequence[CollisionEvent], steps: NDArray[np.int64], k: int) -> int | None:
    for i, (start, stop) in enumerate(steps):
        if start <= k < stop:
            return i
    return None


def run_scenario(scenario: Scenario) -> SimulationResult:
    """Integrate a scenario and synthesize noisy, clipped IMU measurements.

    Collision boundaries are snapped to the integration grid so each event
    delivers exactly its velocity change. The returned truth stream is the
    unclipped, noise-free angular velocity at every measurement time.
    """
    sensor = scenario.sensor
    body = scenario.body
    rate_dt = 1.0 / sensor.sample_rate
    dt = rate_dt / sensor.oversample
    n_samples = int(np.floor(scenario.duration * sensor.sample_rate + 1e-9)) + 1
    n_steps = (n_samples - 1) * sensor.oversample

    events = scenario.collisions
    steps = np.array(
        [
            (round(c.t / dt), round(c.t / dt) + max(1, round(c.duration / dt)))
            for c in events
        ],
        dtype=np.int64,
    ).reshape(-1, 2)
    for (_, a_stop), (b_start, _) in zip(steps, steps[1:]):
        if b_start < a_stop:
            raise ScenarioError("collisions overlap after snapping to the time step")
    # per-step rates that deliver the exact velocity change
    rates = [
        (c.delta_omega / ((stop - start) * dt), c.delta_v / ((stop - start) * dt))
        for c, (start, stop) in zip(events, steps)
    ]

    rng = np.random.default_rng(scenario.seed)
    init = scenario.initial
    w = tuple(np.asarray(init.omega, float).tolist())
    q = np.asarray(init.q, float)
    q = tuple((q / np.linalg.norm(q)).tolist())
    p, v = np.asarray(init.p, float), np.asarray(init.v, float)
    t0 = float(init.t)
    inertia, inertia_inv = body.inertia.tolist(), body.inertia_inv.tolist()

    clean: list[ImuSample] = []
    states: list[SimState] = []
    for k in range(n_steps + 1):
        active = _active(events, steps, k)
        w_rate, a_rate = (None, None) if active is None else rates[active]
        if k % sensor.oversample == 0:
            state = SimState(t0 + k * dt, np.array(q), np.array(w), p.copy(), v.copy())
            omega_dot = body.euler_rate(state.omega)
            com_accel = None
            if active is not None:
                omega_dot = omega_dot + w_rate
                com_accel = body.gravity + a_rate
            clean.append(synthesize_imu(state, omega_dot, body, com_accel))
            states.append(state)
        if k < n_steps:
            extra = _NO_EXTRA if w_rate is None else tuple(w_rate.tolist())
            w, q = _rk4(w, q, inertia, inertia_inv, dt, extra)
            acc = body.gravity if a_rate is None else body.gravity + a_rate
            p = p + v * dt + 0.5 * acc * dt * dt
            v = v + acc * dt

    truth_t = np.array([s.t for s in clean])
    truth_omega = np.array([s.gyro for s in clean])
    accel = np.array([s.accel for s in clean])

    gyro = truth_omega + rng.normal(scale=np.sqrt(sensor.gyro_noise_var), size=truth_omega.shape)
    accel_meas = accel + rng.normal(scale=np.sqrt(sensor.accel_noise_var), size=accel.shape)
    gyro = np.clip(gyro, -sensor.gyro_sat, sensor.gyro_sat)
    if sensor.accel_rail is not None:
        accel_meas = np.clip(accel_meas, -sensor.accel_rail, sensor.accel_rail)

    measurements = [
        ImuSample(t, g, a) for t, g, a in zip(truth_t, gyro, accel_meas)
    ]
    return SimulationResult(truth_t, truth_omega, measurements, clean, states)
