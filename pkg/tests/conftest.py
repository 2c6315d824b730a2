import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gyrosat.imu import ImuSample, RigConfig  # noqa: E402


@pytest.fixture
def cfg():
    return RigConfig(com_to_imu=[0.0, 0.1, 0.0], gyro_sat=10.5, sat_margin=0.1)


def make_stream(gyro, accel=None, dt=0.01):
    gyro = np.asarray(gyro, float).reshape(-1, 3)
    accel = np.zeros_like(gyro) if accel is None else np.asarray(accel, float).reshape(-1, 3)
    return [ImuSample(i * dt, g, a) for i, (g, a) in enumerate(zip(gyro, accel))]


ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
