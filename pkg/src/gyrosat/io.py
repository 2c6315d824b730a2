"""CSV readers and writers for measurement, truth, estimate, window and report files.

All files are comma separated with a required header; lines starting with
``#`` are ignored on read. Floats are written with ``repr`` so that a
round trip is exact and repeated runs are byte-identical.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .imu import AXIS_NAMES, ImuSample, SaturationWindow, Source, axis_index

IMU_HEADER = ("t", "gx", "gy", "gz", "ax", "ay", "az")
TRUTH_HEADER = ("t", "wx", "wy", "wz")
ESTIMATE_HEADER = (
    "t", "wx", "wy", "wz", "var_x", "var_y", "var_z", "src_x", "src_y", "src_z",
)
WINDOW_HEADER = ("axis", "t_start", "t_end")
REPORT_HEADER = ("run", "stat", "raw", "recovered", "reduction_pct")


class CsvFormatError(ValueError):
    """Malformed CSV content; ``line`` is 1-based."""

    def __init__(self, path: str | os.PathLike, line: int, message: str) -> None:
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def fmt(x: float) -> str:
    return repr(float(x))


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _render(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def _records(path: str | os.PathLike, header: Sequence[str]) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(line_number, fields)`` after checking the header."""
    seen_header = False
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if not seen_header:
                if tuple(fields) != tuple(header):
                    raise CsvFormatError(
                        path, lineno, f"expected header {','.join(header)!r}, got {line!r}"
                    )
                seen_header = True
                continue
            if len(fields) != len(header):
                raise CsvFormatError(
                    path, lineno, f"expected {len(header)} fields, got {len(fields)}"
                )
            yield lineno, fields
    if not seen_header:
        raise CsvFormatError(path, 0, "missing header")


def _floats(path, lineno: int, fields: Sequence[str]) -> list[float]:
    try:
        values = [float(f) for f in fields]
    except ValueError as exc:
        raise CsvFormatError(path, lineno, str(exc)) from None
    return values


def header_of(path: str | os.PathLike) -> tuple[str, ...]:
    with open(path, newline="") as fh:
        for raw in fh:
            line = raw.strip()
            if line and not line.startswith("#"):
                return tuple(f.strip() for f in line.split(","))
    return ()


# -- measurements -----------------------------------------------------------


def read_imu_csv(path: str | os.PathLike) -> list[ImuSample]:
    samples = []
    for lineno, fields in _records(path, IMU_HEADER):
        v = _floats(path, lineno, fields)
        if not all(np.isfinite(v)):
            raise CsvFormatError(path, lineno, "non-finite value")
        samples.append(ImuSample(v[0], v[1:4], v[4:7]))
    return samples


def write_imu_csv(path: str | os.PathLike, samples: Sequence[ImuSample]) -> None:
    rows = (
        [fmt(s.t), *map(fmt, s.gyro), *map(fmt, s.accel)] for s in samples
    )
    atomic_write(path, _render(IMU_HEADER, rows))


# -- truth ------------------------------------------------------------------


def read_truth_csv(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(t, omega)`` arrays of shape (N,) and (N, 3)."""
    data = [_floats(path, lineno, f) for lineno, f in _records(path, TRUTH_HEADER)]
    arr = np.array(data, dtype=float).reshape(-1, 4)
    return arr[:, 0], arr[:, 1:]


def write_truth_csv(path: str | os.PathLike, t, omega) -> None:
    rows = ([fmt(ti), *map(fmt, wi)] for ti, wi in zip(t, omega))
    atomic_write(path, _render(TRUTH_HEADER, rows))


# -- estimates --------------------------------------------------------------


def write_estimates_csv(path, t, omega, var, sources) -> None:
    rows = (
        [fmt(ti), *map(fmt, wi), *map(fmt, vi), *(Source(s).value for s in si)]
        for ti, wi, vi, si in zip(t, omega, var, sources)
    )
    atomic_write(path, _render(ESTIMATE_HEADER, rows))


def read_estimates_csv(path):
    """Return ``(t, omega, var, sources)``; ``sources`` is a list of 3-tuples."""
    t, omega, var, sources = [], [], [], []
    for lineno, fields in _records(path, ESTIMATE_HEADER):
        v = _floats(path, lineno, fields[:7])
        try:
            src = tuple(Source(s) for s in fields[7:])
        except ValueError as exc:
            raise CsvFormatError(path, lineno, str(exc)) from None
        t.append(v[0])
        omega.append(v[1:4])
        var.append(v[4:7])
        sources.append(src)
    return (
        np.array(t, dtype=float),
        np.array(omega, dtype=float).reshape(-1, 3),
        np.array(var, dtype=float).reshape(-1, 3),
        sources,
    )


# -- windows ----------------------------------------------------------------


def write_windows_csv(path, windows: Sequence[SaturationWindow]) -> None:
    rows = ([w.axis_name, fmt(w.t_start), fmt(w.t_end)] for w in windows)
    atomic_write(path, _render(WINDOW_HEADER, rows))


def read_windows_csv(path) -> list[SaturationWindow]:
    """Windows read back carry times and axis only; sample indices are -1."""
    windows = []
    for lineno, fields in _records(path, WINDOW_HEADER):
        try:
            axis = axis_index(fields[0])
        except ValueError as exc:
            raise CsvFormatError(path, lineno, str(exc)) from None
        t0, t1 = _floats(path, lineno, fields[1:])
        if t1 < t0:
            raise CsvFormatError(path, lineno, "t_end before t_start")
        windows.append(SaturationWindow(axis, t0, t1, -1, -1))
    return windows


# -- reports ----------------------------------------------------------------


def write_report_csv(path, rows: Iterable[tuple[str, str, float, float, float]]) -> None:
    out = ([run, stat, fmt(raw), fmt(rec), fmt(red)] for run, stat, raw, rec, red in rows)
    atomic_write(path, _render(REPORT_HEADER, out))


def read_report_csv(path) -> list[tuple[str, str, float, float, float]]:
    rows = []
    for lineno, fields in _records(path, REPORT_HEADER):
        raw, rec, red = _floats(path, lineno, fields[2:])
        rows.append((fields[0], fields[1], raw, rec, red))
    return rows


__all__ = [
    "AXIS_NAMES",
    "CsvFormatError",
    "ESTIMATE_HEADER",
    "IMU_HEADER",
    "REPORT_HEADER",
    "TRUTH_HEADER",
    "WINDOW_HEADER",
    "atomic_write",
    "header_of",
    "read_estimates_csv",
    "read_imu_csv",
    "read_report_csv",
    "read_truth_csv",
    "read_windows_csv",
    "write_estimates_csv",
    "write_imu_csv",
    "write_report_csv",
    "write_truth_csv",
    "write_windows_csv",
]
