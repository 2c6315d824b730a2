"""
One simulated tumble, end to end
================================

Simulate a tumbling rig, clip its gyro, recover the saturated axis and
smooth everything with the jerk prior. Then look at one window.
"""

import numpy as np

from gyrosat.imu import RigConfig
from gyrosat.pipeline import evaluate_simulation
from gyrosat.sim import TumbleGenerator, run_scenario
from gyrosat.smoother import query_many

scenario = TumbleGenerator()(seed=7)
print(f"{scenario.duration:.2f} s, {len(scenario.collisions)} events")
sim = run_scenario(scenario)

cfg = RigConfig(com_to_imu=scenario.body.com_to_imu)
result, report = evaluate_simulation(sim, cfg, run="seed_7")
print(len(result.windows), "saturation windows")
print(report.text())

# the longest window, sampled more finely than the IMU
w = max(result.windows, key=lambda w: w.t_end - w.t_start)
ts = np.linspace(w.t_start, w.t_end, 9)
mean, var = query_many(result.trajectory, ts)
truth = np.array([np.interp(ts, sim.truth_t, sim.truth_omega[:, w.axis])]).ravel()
print(f"\n{w.axis_name}-axis window {w.t_start:.3f}..{w.t_end:.3f} s")
print("      t     truth  estimate   3 sigma")
for t, tr, m, v in zip(ts, truth, mean[:, w.axis], var[:, w.axis]):
    print(f"{t:7.3f} {tr:9.3f} {m:9.3f} {3 * np.sqrt(v):9.3f}")

# how the fused inputs were tagged on the saturated axis
tags = [e.source[w.axis].value for e in result.fused[w.start:w.stop]]
print({tag: tags.count(tag) for tag in set(tags)})
