"""Flat ``key = value`` configuration files.

One file may hold both rig keys (used by estimation) and scenario keys (used
by simulation). Vectors are comma- or whitespace-separated numbers; the
collision list separates events with ``;``. Everything is SI.

Rig keys
    com_to_imu, gyro_sat, gyro_noise_var, estimate_var, jerk_psd, sat_margin,
    r_min, accel_rail, frozen_axis

Scenario keys
    seed, duration, inertia (diagonal or 9 row-major values), gravity,
    initial_omega, initial_quat, collisions (``t dwx dwy dwz dvx dvy dvz dur``
    per event), sample_rate, oversample, accel_noise_var

Tumble generator keys, used when ``initial_omega`` is absent
    tumble_omega_range, tumble_duration_range, tumble_n_collisions_range,
    tumble_axis_tilt_std, tumble_delta_omega_std, tumble_delta_v_range,
    tumble_collision_duration_range, tumble_launch_duration_range
"""

from __future__ import annotations

import os
import re
from typing import Mapping

import numpy as np

from .imu import RigConfig
from .sim import (
    BodyModel,
    CollisionEvent,
    Scenario,
    SensorConfig,
    SimState,
    TumbleGenerator,
)


class ConfigError(ValueError):
    pass


RIG_KEYS = {
    "com_to_imu", "gyro_sat", "gyro_noise_var", "estimate_var", "jerk_psd",
    "sat_margin", "r_min", "accel_rail", "frozen_axis",
}
SCENARIO_KEYS = {
    "seed", "duration", "inertia", "gravity", "initial_omega", "initial_quat",
    "collisions", "sample_rate", "oversample", "accel_noise_var",
}
TUMBLE_KEYS = {
    "tumble_omega_range", "tumble_duration_range", "tumble_n_collisions_range",
    "tumble_axis_tilt_std", "tumble_delta_omega_std", "tumble_delta_v_range",
    "tumble_collision_duration_range", "tumble_launch_duration_range",
}
KNOWN_KEYS = RIG_KEYS | SCENARIO_KEYS | TUMBLE_KEYS

_SPLIT = re.compile(r"[,\s]+")


def parse_kv(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_kv(path: str | os.PathLike) -> dict[str, str]:
    try:
        with open(path) as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    return parse_kv(text, str(path))


def _numbers(key: str, value: str, n: int | None = None) -> np.ndarray:
    try:
        arr = np.array([float(v) for v in _SPLIT.split(value.strip()) if v], dtype=float)
    except ValueError:
        raise ConfigError(f"{key}: expected numbers, got {value!r}") from None
    if n is not None and arr.size != n:
        raise ConfigError(f"{key}: expected {n} numbers, got {arr.size}")
    return arr


def _scalar(kv: Mapping[str, str], key: str, default=None):
    if key not in kv:
        return default
    return float(_numbers(key, kv[key], 1)[0])


def _bool(key: str, value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def rig_config(kv: Mapping[str, str], **overrides) -> RigConfig:
    args: dict = {}
    if "com_to_imu" in kv:
        args["com_to_imu"] = _numbers("com_to_imu", kv["com_to_imu"], 3)
    if "gyro_sat" in kv:
        sat = _numbers("gyro_sat", kv["gyro_sat"])
        if sat.size not in (1, 3):
            raise ConfigError("gyro_sat: expected 1 or 3 numbers")
        args["gyro_sat"] = sat if sat.size == 3 else sat[0]
    for key in ("gyro_noise_var", "estimate_var", "jerk_psd", "sat_margin", "r_min", "accel_rail"):
        if key in kv:
            args[key] = _scalar(kv, key)
    if "frozen_axis" in kv:
        args["frozen_axis"] = _bool("frozen_axis", kv["frozen_axis"])
    args.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RigConfig(**args)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _collisions(value: str) -> tuple[CollisionEvent, ...]:
    events = []
    for chunk in value.split(";"):
        if not chunk.strip():
            continue
        v = _numbers("collisions", chunk, 8)
        events.append(CollisionEvent(v[0], v[1:4], v[4:7], v[7]))
    return tuple(events)


def _range(kv: Mapping[str, str], key: str, cast=float):
    lo, hi = _numbers(key, kv[key], 2)
    if hi < lo:
        raise ConfigError(f"{key}: upper bound below lower bound")
    return cast(lo), cast(hi)


def scenario(kv: Mapping[str, str], seed: int | None = None) -> Scenario:
    """Build a scenario; ``seed`` overrides the ``seed`` key."""
    if seed is None:
        seed = int(_scalar(kv, "seed", 0))
    try:
        body_args: dict = {}
        if "inertia" in kv:
            inertia = _numbers("inertia", kv["inertia"])
            if inertia.size == 9:
                inertia = inertia.reshape(3, 3)
            elif inertia.size != 3:
                raise ConfigError("inertia: expected 3 or 9 numbers")
            body_args["inertia"] = inertia
        if "com_to_imu" in kv:
            body_args["com_to_imu"] = _numbers("com_to_imu", kv["com_to_imu"], 3)
        if "gravity" in kv:
            body_args["gravity"] = _numbers("gravity", kv["gravity"], 3)
        body = BodyModel(**body_args)

        sensor_args: dict = {}
        for key in ("sample_rate", "gyro_noise_var", "accel_noise_var", "accel_rail"):
            if key in kv:
                sensor_args[key] = _scalar(kv, key)
        if "oversample" in kv:
            sensor_args["oversample"] = int(_scalar(kv, "oversample"))
        if "gyro_sat" in kv:
            sensor_args["gyro_sat"] = _numbers("gyro_sat", kv["gyro_sat"])
        sensor = SensorConfig(**sensor_args)

        if "initial_omega" in kv:
            q = (
                _numbers("initial_quat", kv["initial_quat"], 4)
                if "initial_quat" in kv
                else np.array([1.0, 0.0, 0.0, 0.0])
            )
            initial = SimState(0.0, q, _numbers("initial_omega", kv["initial_omega"], 3))
            if "duration" not in kv:
                raise ConfigError("duration is required with initial_omega")
            return Scenario(
                body,
                initial,
                _scalar(kv, "duration"),
                _collisions(kv.get("collisions", "")),
                sensor,
                seed,
            )

        gen_args: dict = {}
        for key in TUMBLE_KEYS:
            if key not in kv:
                continue
            name = key[len("tumble_"):]
            if name.endswith("_range"):
                cast = int if name == "n_collisions_range" else float
                gen_args[name] = _range(kv, key, cast)
            else:
                gen_args[name] = _scalar(kv, key)
        if "duration" in kv:
            d = _scalar(kv, "duration")
            gen_args["duration_range"] = (d, d)
        return TumbleGenerator(**gen_args)(seed, body=body, sensor=sensor)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def render_kv(values: Mapping[str, object]) -> str:
    """Inverse of :func:`parse_kv` for simple scalar and vector values."""
    lines = []
    for key, value in values.items():
        if isinstance(value, (list, tuple, np.ndarray)):
            value = ", ".join(repr(float(v)) for v in np.ravel(value))
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
