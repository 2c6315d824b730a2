"""Angular-speed error statistics restricted to gyro saturation windows."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .imu import AXIS_NAMES, ImuSample, SaturationWindow, VelocityEstimate
from .smoother import SmoothedTrajectory, query

STAT_NAMES = ("median", "mean", "p90", "p99", "max")


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class PairedSamples:
    """Truth and estimate at common timestamps.

    ``var`` is the estimate variance when known (smoothed input), else ``None``.
    ``dropped`` counts truth samples that found no partner.
    """

    t: NDArray[np.float64]
    truth: NDArray[np.float64]
    estimate: NDArray[np.float64]
    var: NDArray[np.float64] | None = None
    dropped: int = 0

    def __len__(self) -> int:
        return len(self.t)


def _as_truth(truth) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    if isinstance(truth, tuple) and len(truth) == 2 and np.ndim(truth[0]) == 1:
        t, w = truth
    else:
        t = [row[0] for row in truth]
        w = [row[1] for row in truth]
    return np.asarray(t, dtype=float), np.asarray(w, dtype=float).reshape(-1, 3)


def _as_stream(est):
    """``(t, omega, var)`` from arrays, IMU samples or velocity estimates."""
    if isinstance(est, tuple) and len(est) in (2, 3):
        t = np.asarray(est[0], dtype=float)
        w = np.asarray(est[1], dtype=float).reshape(-1, 3)
        var = None if len(est) == 2 or est[2] is None else np.asarray(est[2], float).reshape(-1, 3)
        return t, w, var
    t = np.array([e.t for e in est], dtype=float)
    if len(est) and isinstance(est[0], ImuSample):
        return t, np.array([e.gyro for e in est], dtype=float).reshape(-1, 3), None
    if len(est) and isinstance(est[0], VelocityEstimate):
        w = np.array([e.omega for e in est], dtype=float).reshape(-1, 3)
        return t, w, np.array([e.var for e in est], dtype=float).reshape(-1, 3)
    raise TypeError("estimates must be a trajectory, (t, omega[, var]) arrays, or samples")


def _median_spacing(t: NDArray[np.float64]) -> float:
    return float(np.median(np.diff(t))) if len(t) > 1 else np.inf


def align_truth(
    truth,
    estimates: SmoothedTrajectory | Sequence | tuple,
    tolerance: float | None = None,
) -> PairedSamples:
    """Pair truth samples with estimates.

    A :class:`SmoothedTrajectory` is queried at every truth time inside its
    span. A discrete stream (``(t, omega)`` or ``(t, omega, var)`` arrays, IMU
    samples or velocity estimates) is matched by nearest timestamp, accepting a match only when
    it is strictly closer than ``tolerance``. The default tolerance is half
    the finer of the two median sample spacings.

    Raises
    ------
    EvaluationError
        When no truth sample can be paired.
    """
    t_true, w_true = _as_truth(truth)
    if isinstance(estimates, SmoothedTrajectory):
        lo, hi = estimates.times[0], estimates.times[-1]
        keep = (t_true >= lo) & (t_true <= hi)
        if not keep.any():
            raise EvaluationError("truth and estimates do not overlap in time")
        est = np.empty((keep.sum(), 3))
        var = np.empty((keep.sum(), 3))
        for j, ti in enumerate(t_true[keep]):
            est[j], var[j] = query(estimates, ti)
        return PairedSamples(
            t_true[keep], w_true[keep], est, var, int((~keep).sum())
        )

    t_est, w_est, v_est = _as_stream(estimates)
    if len(t_est) == 0 or len(t_true) == 0:
        raise EvaluationError("truth and estimates do not overlap in time")
    order = np.argsort(t_est, kind="stable")
    t_est, w_est = t_est[order], w_est[order]
    if v_est is not None:
        v_est = v_est[order]
    if tolerance is None:
        tolerance = 0.5 * min(_median_spacing(t_true), _median_spacing(t_est))
        if not np.isfinite(tolerance):
            tolerance = 1e-9

    idx = np.clip(np.searchsorted(t_est, t_true), 1, max(len(t_est) - 1, 1))
    left = np.clip(idx - 1, 0, len(t_est) - 1)
    right = np.clip(idx, 0, len(t_est) - 1)
    use_right = np.abs(t_est[right] - t_true) < np.abs(t_true - t_est[left])
    nearest = np.where(use_right, right, left)
    keep = np.abs(t_est[nearest] - t_true) < tolerance
    if not keep.any():
        raise EvaluationError("truth and estimates do not overlap in time")
    match = nearest[keep]
    return PairedSamples(
        t_true[keep],
        w_true[keep],
        w_est[match],
        None if v_est is None else v_est[match],
        int((~keep).sum()),
    )


@dataclass(frozen=True)
class SignalStats:
    """Summary of absolute errors (rad/s)."""

    median: float
    mean: float
    p90: float
    p99: float
    max: float
    n: int

    @classmethod
    def from_errors(cls, errors: ArrayLike) -> SignalStats:
        e = np.asarray(errors, dtype=float)
        e = e[np.isfinite(e)]
        if e.size == 0:
            raise EvaluationError("no saturated samples")
        p50, p90, p99 = np.percentile(e, [50, 90, 99])
        return cls(float(p50), float(e.mean()), float(p90), float(p99), float(e.max()), int(e.size))

    def get(self, name: str) -> float:
        return float(getattr(self, name))


def reduction_pct(raw: float, recovered: float) -> float:
    """Percentage reduction ``100 (1 - recovered / raw)``; ``nan`` when ``raw == 0``."""
    if raw == 0:
        return float("nan") if recovered != 0 else 0.0
    return 100.0 * (1.0 - recovered / raw)


@dataclass(frozen=True)
class ErrorReport:
    """Raw versus recovered saturation-window errors for one run or an aggregate."""

    run: str
    raw: SignalStats
    recovered: SignalStats
    raw_errors: NDArray[np.float64] = field(repr=False)
    recovered_errors: NDArray[np.float64] = field(repr=False)

    @property
    def median_reduction(self) -> float:
        return reduction_pct(self.raw.median, self.recovered.median)

    def rows(self) -> list[tuple[str, str, float, float, float]]:
        """``(run, stat, raw, recovered, reduction_pct)`` rows in CSV order."""
        return [
            (self.run, s, self.raw.get(s), self.recovered.get(s),
             reduction_pct(self.raw.get(s), self.recovered.get(s)))
            for s in STAT_NAMES
        ]

    def text(self) -> str:
        lines = [f"run {self.run}: {self.raw.n} saturated samples"]
        lines.append(f"  {'stat':<8}{'raw':>12}{'recovered':>12}{'reduction':>12}")
        for _, stat, raw, rec, red in self.rows():
            lines.append(f"  {stat:<8}{raw:>12.4f}{rec:>12.4f}{red:>11.1f}%")
        return "\n".join(lines)


def window_errors(
    pairs: PairedSamples,
    windows: Iterable[SaturationWindow],
    norm: str = "axis",
) -> NDArray[np.float64]:
    """Absolute errors of ``pairs`` inside saturation windows.

    With ``norm="axis"`` the error is taken on each window's saturated axis;
    with ``norm="vector"`` it is the 3-vector error norm. A pair covered by
    windows on two axes contributes once per axis.
    """
    if norm not in ("axis", "vector"):
        raise ValueError("norm must be 'axis' or 'vector'")
    diff = pairs.estimate - pairs.truth
    chunks = []
    covered = np.zeros(len(pairs), dtype=bool)
    for w in windows:
        inside = w.contains(pairs.t)
        if norm == "axis":
            chunks.append(np.abs(diff[inside, w.axis]))
        else:
            covered |= inside
    if norm == "vector":
        chunks.append(np.linalg.norm(diff[covered], axis=1))
    return np.concatenate(chunks) if chunks else np.empty(0)


def saturation_error_stats(
    raw_pairs: PairedSamples,
    recovered_pairs: PairedSamples,
    windows: Sequence[SaturationWindow],
    run: str = "",
    norm: str = "axis",
) -> ErrorReport:
    """Compare raw and recovered signals against truth inside saturation windows.

    Raises
    ------
    EvaluationError
        If no paired sample lies inside a window.
    """
    raw_e = window_errors(raw_pairs, windows, norm)
    rec_e = window_errors(recovered_pairs, windows, norm)
    return ErrorReport(
        run,
        SignalStats.from_errors(raw_e),
        SignalStats.from_errors(rec_e),
        raw_e,
        rec_e,
    )


def aggregate(reports: Sequence[ErrorReport], pooling: str = "pooled") -> ErrorReport:
    """Combine per-run reports.

    ``pooled`` concatenates every run's errors before computing statistics.
    ``per-run`` takes, for each statistic, the median across runs of the
    per-run values.
    """
    if not reports:
        raise EvaluationError("no runs to aggregate")
    if pooling == "pooled":
        raw_e = np.concatenate([r.raw_errors for r in reports])
        rec_e = np.concatenate([r.recovered_errors for r in reports])
        return ErrorReport(
            "pooled", SignalStats.from_errors(raw_e), SignalStats.from_errors(rec_e), raw_e, rec_e
        )
    if pooling == "per-run":

        def combine(stats: list[SignalStats]) -> SignalStats:
            return SignalStats(
                *(float(np.median([s.get(name) for s in stats])) for name in STAT_NAMES),
                n=sum(s.n for s in stats),
            )

        return ErrorReport(
            "per_run",
            combine([r.raw for r in reports]),
            combine([r.recovered for r in reports]),
            np.concatenate([r.raw_errors for r in reports]),
            np.concatenate([r.recovered_errors for r in reports]),
        )
    raise ValueError("pooling must be 'pooled' or 'per-run'")


def plot_series(
    pairs_raw: PairedSamples,
    pairs_est: PairedSamples,
    windows: Sequence[SaturationWindow],
) -> list[tuple[float, str, float, float, float, float, float]]:
    """Rows ``(t, axis, truth, raw, estimate, lower, upper)`` for every saturated
    axis sample, with a three-standard-deviation band around the estimate."""
    raw_by_t = {float(t): w for t, w in zip(pairs_raw.t, pairs_raw.estimate)}
    rows = []
    for w in windows:
        inside = np.flatnonzero(w.contains(pairs_est.t))
        for j in inside:
            t = float(pairs_est.t[j])
            est = float(pairs_est.estimate[j, w.axis])
            sd = np.sqrt(pairs_est.var[j, w.axis]) if pairs_est.var is not None else 0.0
            raw = raw_by_t.get(t)
            rows.append((
                t,
                AXIS_NAMES[w.axis],
                float(pairs_est.truth[j, w.axis]),
                float(raw[w.axis]) if raw is not None else float("nan"),
                est,
                est - 3 * sd,
                est + 3 * sd,
            ))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows
