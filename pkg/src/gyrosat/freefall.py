"""Recovery of a saturated gyro axis from the centripetal accelerometer reading.

While the body is in free fall and spinning about an axis ``e`` through its
centre of mass, the accelerometer at offset ``t`` reads

    a = wdot x t + w x (w x t)

The second term has magnitude ``|w|^2 |r|`` and points from the IMU towards
the rotation axis, along the lever arm ``r = (t.e)e - t``. Projecting ``a`` on
``r/|r|`` gives ``|w|^2 |r|``, and subtracting the two unsaturated gyro
components leaves the square of the saturated one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .imu import (
    ImuSample,
    RigConfig,
    SaturationWindow,
    Source,
    VelocityEstimate,
    axis_index,
    stream_arrays,
)

logger = logging.getLogger(__name__)

_UNIT_TOL = 1e-6


class RecoveryError(ValueError):
    """Base class for conditions under which a sample cannot be recovered."""


class DegenerateLeverArmError(RecoveryError):
    """The IMU lies on (or too close to) the rotation axis."""


class MultiAxisSaturationError(RecoveryError):
    """More than one gyro axis is saturated at the same sample."""


@dataclass(frozen=True)
class LeverArm:
    """Orthogonal vector from the IMU to the rotation axis, body frame."""

    r: NDArray[np.float64]
    e: NDArray[np.float64]

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.r))


@dataclass(frozen=True)
class RotationalFrame:
    """Right-handed triad with ``x_hat`` along the lever arm and ``z_hat`` along
    the rotation axis, expressed in the body frame."""

    x_hat: NDArray[np.float64]
    y_hat: NDArray[np.float64]
    z_hat: NDArray[np.float64]

    @property
    def matrix(self) -> NDArray[np.float64]:
        """Rows are the frame axes, so ``matrix @ v`` expresses ``v`` in the frame."""
        return np.vstack((self.x_hat, self.y_hat, self.z_hat))


def _unit(e: ArrayLike) -> NDArray[np.float64]:
    e = np.asarray(e, dtype=float).reshape(3)
    n = np.linalg.norm(e)
    if not abs(n - 1.0) <= _UNIT_TOL:
        raise ValueError(f"rotation axis must be a unit vector, |e| = {n:g}")
    return e


def lever_arm(
    t_vec: ArrayLike, e: ArrayLike, r_min: float = 0.01
) -> LeverArm:
    """Lever arm ``r = (t.e)e - t`` from the IMU to the rotation axis.

    Parameters
    ----------
    t_vec : array-like, shape (3,)
        Offset from the centre of mass to the IMU, metres.
    e : array-like, shape (3,)
        Unit rotation axis.
    r_min : float
        Shortest admissible lever arm, metres.

    Raises
    ------
    DegenerateLeverArmError
        If ``|r| < r_min``.
    """
    e = _unit(e)
    t_vec = np.asarray(t_vec, dtype=float).reshape(3)
    r = np.dot(t_vec, e) * e - t_vec
    # strip the round-off component along e
    r = r - np.dot(r, e) * e
    if np.linalg.norm(r) < r_min:
        raise DegenerateLeverArmError(
            f"degenerate lever arm: |r| = {np.linalg.norm(r):.3g} m < {r_min:g} m"
        )
    return LeverArm(r=r, e=e)


def rotational_frame(e: ArrayLike, r: LeverArm) -> RotationalFrame:
    e = _unit(e)
    n = r.magnitude
    if n == 0.0:
        raise DegenerateLeverArmError("degenerate lever arm: |r| = 0")
    x_hat = r.r / n
    z_hat = e
    y_hat = np.cross(z_hat, x_hat)
    return RotationalFrame(x_hat=x_hat, y_hat=y_hat, z_hat=z_hat)


@dataclass(frozen=True)
class AxisRecovery:
    """Outcome of recovering one saturated sample.

    ``value`` is ``None`` when ``source`` is ``REJECTED``. ``radicand`` is the
    quantity under the square root (``nan`` if it was never computed).
    """

    value: float | None
    source: Source
    radicand: float = float("nan")
    reason: str = ""


def _sign(reading: float, prev_value: float | None) -> float:
    if reading > 0:
        return 1.0
    if reading < 0:
        return -1.0
    # a clipped axis cannot physically read 0; keep continuity
    if prev_value is not None and np.isfinite(prev_value) and prev_value < 0:
        return -1.0
    return 1.0


def recover_axis(
    sample: ImuSample,
    window_axis: int | str,
    e_prev: ArrayLike,
    cfg: RigConfig,
    multi_axis: bool = False,
    prev_value: float | None = None,
) -> AxisRecovery:
    """Estimate the saturated gyro component of one sample.

    Parameters
    ----------
    sample : ImuSample
        Reading whose ``window_axis`` gyro component is clipped.
    window_axis : int or str
        Saturated axis.
    e_prev : array-like, shape (3,)
        Unit rotation axis of the previous fused estimate.
    cfg : RigConfig
    multi_axis : bool
        Set when another axis is saturated at the same sample.
    prev_value : float, optional
        Previous fused value on this axis, used only to break a sign tie.

    Returns
    -------
    AxisRecovery
        ``RECOVERED`` with the signed rate, or ``REJECTED`` when the radicand
        is negative or the accelerometer is on its rail.

    Raises
    ------
    MultiAxisSaturationError
        If ``multi_axis`` is set.
    DegenerateLeverArmError
        If the lever arm for ``e_prev`` is shorter than ``cfg.r_min``.
    """
    axis = axis_index(window_axis)
    if multi_axis:
        raise MultiAxisSaturationError("assumption 5 violated: multi-axis saturation")

    arm = lever_arm(cfg.com_to_imu, e_prev, cfg.r_min)
    frame = rotational_frame(arm.e, arm)

    if cfg.accel_rail is not None and np.any(np.abs(sample.accel) >= cfg.accel_rail):
        return AxisRecovery(None, Source.REJECTED, reason="accelerometer on rail")

    a_x = float(np.dot(sample.accel, frame.x_hat))
    others = [i for i in range(3) if i != axis]
    radicand = a_x / arm.magnitude - float(np.sum(sample.gyro[others] ** 2))
    if radicand < 0:
        return AxisRecovery(None, Source.REJECTED, radicand, "negative radicand")

    magnitude = max(np.sqrt(radicand), float(cfg.thresholds[axis]))
    value = _sign(float(sample.gyro[axis]), prev_value) * magnitude
    return AxisRecovery(float(value), Source.RECOVERED, radicand)


def recover_stream(
    samples: Sequence[ImuSample],
    windows: Sequence[SaturationWindow],
    cfg: RigConfig,
    frozen_axis: bool | None = None,
) -> list[VelocityEstimate]:
    """Fuse gyro readings with accelerometer-recovered rates along a stream.

    Outside saturation windows the gyro reading passes through with variance
    ``cfg.gyro_noise_var``. Inside a window the saturated axis is recovered
    sample by sample; the rotation axis comes from the previous fused estimate
    (or from the estimate just before the window when ``frozen_axis``).
    Samples that cannot be recovered are tagged ``REJECTED`` on that axis.
    """
    if frozen_axis is None:
        frozen_axis = cfg.frozen_axis
    t, gyro, _ = stream_arrays(samples)
    n = len(t)

    omega = gyro.copy()
    var = np.full((n, 3), cfg.gyro_noise_var)
    source = [[Source.MEASURED] * 3 for _ in range(n)]

    sat_axes: list[list[int]] = [[] for _ in range(n)]
    refused = np.zeros((n, 3), dtype=bool)
    entry = {}
    for w in windows:
        for i in w.sample_range:
            sat_axes[i].append(w.axis)
        entry[w.start] = entry.get(w.start, []) + [w.axis]
        if w.start == 0:
            logger.info("refusing %s-window at t=%g: no prior rotation axis",
                        w.axis_name, w.t_start)
            refused[w.start:w.stop, w.axis] = True

    e_last: NDArray[np.float64] | None = None
    e_frozen: dict[int, NDArray[np.float64] | None] = {}
    for i in range(n):
        for axis in entry.get(i, []):
            e_frozen[axis] = e_last

        axes = sat_axes[i]
        if not axes:
            norm = np.linalg.norm(omega[i])
            if norm > 0:
                e_last = omega[i] / norm
            continue

        if len(axes) > 1:
            for axis in axes:
                omega[i, axis] = np.nan
                var[i, axis] = np.inf
                source[i][axis] = Source.REJECTED
            continue

        axis = axes[0]
        e_use = e_frozen.get(axis) if frozen_axis else e_last
        result: AxisRecovery | None = None
        if not refused[i, axis] and e_use is not None:
            prev = omega[i - 1, axis] if i > 0 else None
            try:
                result = recover_axis(samples[i], axis, e_use, cfg, prev_value=prev)
            except RecoveryError as exc:
                logger.debug("sample %d rejected: %s", i, exc)

        if result is None or result.value is None:
            omega[i, axis] = np.nan
            var[i, axis] = np.inf
            source[i][axis] = Source.REJECTED
            continue

        omega[i, axis] = result.value
        var[i, axis] = cfg.estimate_var
        source[i][axis] = Source.RECOVERED
        e_last = omega[i] / np.linalg.norm(omega[i])

    return [
        VelocityEstimate(t[i], omega[i], var[i], tuple(source[i])) for i in range(n)
    ]
