"""Detect, recover and smooth in one call, plus evaluation of a simulated run."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .freefall import recover_stream
from .imu import (
    ImuSample,
    RigConfig,
    SaturationWindow,
    VelocityEstimate,
    detect_saturation,
    normalize_stream,
)
from .metrics import ErrorReport, align_truth, saturation_error_stats
from .sim import SimulationResult
from .smoother import SmoothedTrajectory, smooth


@dataclass(frozen=True)
class EstimateResult:
    samples: list[ImuSample]
    windows: list[SaturationWindow]
    fused: list[VelocityEstimate]
    trajectory: SmoothedTrajectory


def estimate(
    samples: Sequence[ImuSample], cfg: RigConfig, frozen_axis: bool | None = None
) -> EstimateResult:
    """Normalize a stream, recover saturated samples and smooth the result."""
    samples = normalize_stream(samples)
    windows = detect_saturation(samples, cfg)
    fused = recover_stream(samples, windows, cfg, frozen_axis)
    return EstimateResult(samples, windows, fused, smooth(fused, cfg))


def evaluate_simulation(
    sim: SimulationResult, cfg: RigConfig, run: str = "", norm: str = "axis"
) -> tuple[EstimateResult, ErrorReport]:
    """Run the estimator on a simulated run and score it against its truth."""
    result = estimate(sim.measurements, cfg)
    truth = (sim.truth_t, sim.truth_omega)
    raw = align_truth(truth, result.samples)
    rec = align_truth(truth, result.trajectory)
    return result, saturation_error_stats(raw, rec, result.windows, run, norm)
