"""
Recovering a clipped gyro reading from the accelerometer
========================================================

A body spins at 12 rad/s about x. The gyro rails at 10.5 rad/s, but an
accelerometer 10 cm off the axis still feels the centripetal pull.
"""

import numpy as np

from gyrosat.freefall import lever_arm, recover_axis, rotational_frame
from gyrosat.imu import ImuSample, RigConfig

cfg = RigConfig(com_to_imu=[0.0, 0.1, 0.0])
omega = np.array([12.0, 0.0, 0.0])

# centripetal acceleration at the IMU, free fall so nothing else
accel = np.cross(omega, np.cross(omega, cfg.com_to_imu))
gyro = np.clip(omega, -cfg.gyro_sat, cfg.gyro_sat)
sample = ImuSample(0.0, gyro, accel)
print("gyro reads", sample.gyro, "accel reads", sample.accel)

# the lever arm points from the IMU to the rotation axis
e = np.array([1.0, 0.0, 0.0])
arm = lever_arm(cfg.com_to_imu, e)
frame = rotational_frame(e, arm)
print("lever arm", arm.r, "|r| =", arm.magnitude)
print("x-hat", frame.x_hat, "a.x-hat =", sample.accel @ frame.x_hat)

out = recover_axis(sample, "x", e, cfg)
print("recovered", out.value, out.source.value)

# noise can push the radicand below zero; nothing is fabricated then
noisy = ImuSample(0.0, gyro, [0.0, 0.03, 0.0])
print("noisy sample:", recover_axis(noisy, "x", e, cfg))
