"""IMU samples, rig configuration and saturation-window detection.

Frame conventions: every vector in this package is expressed in the IMU body
frame unless a name says otherwise (``*_world``). Timestamps are seconds,
relative to stream start, stored as float64.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

AXIS_NAMES = ("x", "y", "z")

# Published constants for the MTi-30 rig.
DEFAULT_GYRO_SAT = 10.5
DEFAULT_GYRO_NOISE_VAR = 2.74e-5
DEFAULT_ESTIMATE_VAR = 3.65
DEFAULT_JERK_PSD = 1e6
# detection margin in gyro noise standard deviations
DEFAULT_SAT_MARGIN_SIGMAS = 3.0
DEFAULT_R_MIN = 0.01


class StreamError(ValueError):
    """Raised for malformed IMU streams."""


class Source(str, enum.Enum):
    """Provenance of one axis of a fused angular-velocity estimate."""

    MEASURED = "measured"
    RECOVERED = "recovered"
    REJECTED = "rejected"
    SMOOTHED = "smoothed"


def _vec3(value: ArrayLike, name: str) -> NDArray[np.float64]:
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got {arr.shape[0]}")
    arr.setflags(write=False)
    return arr


def axis_index(axis: int | str) -> int:
    """Map ``0/1/2`` or ``'x'/'y'/'z'`` to an axis index."""
    if isinstance(axis, str):
        try:
            return AXIS_NAMES.index(axis.strip().lower())
        except ValueError:
            raise ValueError(f"unknown axis {axis!r}") from None
    axis = int(axis)
    if axis not in (0, 1, 2):
        raise ValueError(f"axis index must be 0, 1 or 2, got {axis}")
    return axis


@dataclass(frozen=True)
class ImuSample:
    """One timestamped gyroscope + accelerometer reading.

    Parameters
    ----------
    t : float
        Time in seconds.
    gyro : array-like, shape (3,)
        Angular rate in rad/s, body frame.
    accel : array-like, shape (3,)
        Proper acceleration (specific force) in m/s^2, body frame.
    """

    t: float
    gyro: NDArray[np.float64]
    accel: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "gyro", _vec3(self.gyro, "gyro"))
        object.__setattr__(self, "accel", _vec3(self.accel, "accel"))

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.t)
            and np.all(np.isfinite(self.gyro))
            and np.all(np.isfinite(self.accel))
        )


@dataclass(frozen=True)
class RigConfig:
    """Physical and statistical constants of a sensor rig.

    Parameters
    ----------
    com_to_imu : array-like, shape (3,)
        Offset from the centre of mass to the IMU, metres, body frame.
    gyro_sat : float or array-like, shape (3,)
        Per-axis gyroscope saturation point, rad/s.
    gyro_noise_var : float
        Variance assigned to unsaturated gyro readings, (rad/s)^2.
    estimate_var : float
        Variance assigned to accelerometer-recovered rates, (rad/s)^2.
    jerk_psd : float
        Power spectral density of the white angular-jerk prior.
    sat_margin : float, optional
        Detection margin below the rail, rad/s. Defaults to three gyro noise
        standard deviations, enough to catch a clipped reading that jitters
        just under the rail without flagging valid readings near it.
    r_min : float
        Smallest usable lever arm, metres.
    accel_rail : float, optional
        Accelerometer saturation point, m/s^2. ``None`` disables the check.
    frozen_axis : bool
        Keep the rotation axis fixed at window entry instead of updating it
        from every new estimate.
    """

    com_to_imu: NDArray[np.float64] = field(
        default_factory=lambda: np.array([0.08, 0.06, 0.10])
    )
    gyro_sat: NDArray[np.float64] = field(
        default_factory=lambda: np.full(3, DEFAULT_GYRO_SAT)
    )
    gyro_noise_var: float = DEFAULT_GYRO_NOISE_VAR
    estimate_var: float = DEFAULT_ESTIMATE_VAR
    jerk_psd: float = DEFAULT_JERK_PSD
    sat_margin: float | None = None
    r_min: float = DEFAULT_R_MIN
    accel_rail: float | None = None
    frozen_axis: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "com_to_imu", _vec3(self.com_to_imu, "com_to_imu"))
        sat = np.broadcast_to(np.asarray(self.gyro_sat, dtype=float), (3,))
        object.__setattr__(self, "gyro_sat", _vec3(sat, "gyro_sat"))
        if not np.linalg.norm(self.com_to_imu) > 0:
            raise ValueError("com_to_imu must be non-zero")
        if not np.all(self.gyro_sat > 0):
            raise ValueError("gyro_sat must be positive on every axis")
        for name in ("gyro_noise_var", "estimate_var", "jerk_psd", "r_min"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.sat_margin is None:
            object.__setattr__(
                self,
                "sat_margin",
                DEFAULT_SAT_MARGIN_SIGMAS * float(np.sqrt(self.gyro_noise_var)),
            )
        object.__setattr__(self, "sat_margin", float(self.sat_margin))
        if not 0 <= self.sat_margin < self.gyro_sat.min():
            raise ValueError("sat_margin must lie in [0, min(gyro_sat))")
        if self.accel_rail is not None and not self.accel_rail > 0:
            raise ValueError("accel_rail must be positive when set")

    @property
    def thresholds(self) -> NDArray[np.float64]:
        """Per-axis detection threshold ``gyro_sat - sat_margin``."""
        return self.gyro_sat - self.sat_margin


@dataclass(frozen=True)
class SaturationWindow:
    """Maximal run of consecutive samples saturated on one gyro axis.

    ``start``/``stop`` index the normalized stream, half-open.
    ``multi_axis`` marks windows that overlap a saturation on another axis
    at one or more samples; those samples cannot be recovered.
    """

    axis: int
    t_start: float
    t_end: float
    start: int
    stop: int
    multi_axis: bool = False

    @property
    def sample_range(self) -> range:
        return range(self.start, self.stop)

    @property
    def axis_name(self) -> str:
        return AXIS_NAMES[self.axis]

    def contains(self, t: ArrayLike) -> NDArray[np.bool_]:
        t = np.asarray(t, dtype=float)
        return (t >= self.t_start) & (t <= self.t_end)


@dataclass(frozen=True)
class VelocityEstimate:
    """Fused angular velocity at one instant.

    A ``REJECTED`` axis holds ``nan`` in ``omega``; consumers must treat it as
    missing. Its ``var`` entry is ``inf``.
    """

    t: float
    omega: NDArray[np.float64]
    var: NDArray[np.float64]
    source: tuple[Source, Source, Source]

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "omega", _vec3(self.omega, "omega"))
        object.__setattr__(self, "var", _vec3(self.var, "var"))
        object.__setattr__(self, "source", tuple(Source(s) for s in self.source))
        if len(self.source) != 3:
            raise ValueError("source needs one tag per axis")
        if not np.all(self.var > 0):
            raise ValueError("variances must be positive")

    def usable(self, axis: int) -> bool:
        return self.source[axis] is not Source.REJECTED


def stream_arrays(
    samples: Sequence[ImuSample],
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Stack a stream into ``(t, gyro, accel)`` arrays of shape (N,), (N,3), (N,3)."""
    t = np.array([s.t for s in samples], dtype=float)
    gyro = np.array([s.gyro for s in samples], dtype=float).reshape(-1, 3)
    accel = np.array([s.accel for s in samples], dtype=float).reshape(-1, 3)
    return t, gyro, accel


def samples_from_arrays(
    t: ArrayLike, gyro: ArrayLike, accel: ArrayLike
) -> list[ImuSample]:
    t = np.asarray(t, dtype=float)
    gyro = np.asarray(gyro, dtype=float)
    accel = np.asarray(accel, dtype=float)
    return [ImuSample(t[i], gyro[i], accel[i]) for i in range(len(t))]


def normalize_stream(samples: Sequence[ImuSample]) -> list[ImuSample]:
    """Sort by time and collapse duplicate timestamps, keeping the last sample.

    Raises
    ------
    StreamError
        If the stream is empty or any sample holds a non-finite value.
    """
    if len(samples) == 0:
        raise StreamError("empty stream")
    for i, s in enumerate(samples):
        if not s.is_finite():
            raise StreamError(f"non-finite value in sample {i}")

    # stable sort keeps input order among equal timestamps, so the last
    # occurrence in the input wins the collapse
    order = sorted(range(len(samples)), key=lambda i: samples[i].t)
    out: list[ImuSample] = []
    for i in order:
        if out and out[-1].t == samples[i].t:
            out[-1] = samples[i]
        else:
            out.append(samples[i])
    return out


def saturation_mask(gyro: ArrayLike, cfg: RigConfig) -> NDArray[np.bool_]:
    """Boolean (N, 3) mask of readings at or beyond the detection threshold."""
    gyro = np.asarray(gyro, dtype=float).reshape(-1, 3)
    return np.abs(gyro) >= cfg.thresholds


def _runs(mask: NDArray[np.bool_]) -> list[tuple[int, int]]:
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[0::2].tolist(), edges[1::2].tolist()))


def detect_saturation(
    samples: Sequence[ImuSample], cfg: RigConfig
) -> list[SaturationWindow]:
    """Find maximal runs of saturated readings on each gyro axis.

    Windows are returned sorted by start index, then axis. A window is flagged
    ``multi_axis`` when any of its samples is saturated on another axis too.
    """
    if len(samples) == 0:
        return []
    t, gyro, _ = stream_arrays(samples)
    mask = saturation_mask(gyro, cfg)
    multi = mask.sum(axis=1) > 1

    windows = []
    for axis in range(3):
        for start, stop in _runs(mask[:, axis]):
            windows.append(
                SaturationWindow(
                    axis=axis,
                    t_start=float(t[start]),
                    t_end=float(t[stop - 1]),
                    start=start,
                    stop=stop,
                    multi_axis=bool(multi[start:stop].any()),
                )
            )
    windows.sort(key=lambda w: (w.start, w.axis))
    return windows
