"""Blocked-force bench measurement, simulated.

Drives the spool motor against a rigid constraint with repeated PWM bursts
(15 s period, 66.7% duty) and plots the gravity-compensated force channels;
the z channel peaks at the stall force, stall torque over spool radius.
"""

import pathlib

import numpy as np

from vinesim import DeviceGeometry, blocked_tendon_force
from vinesim.dynamics import STALL_TORQUE, TipInertia, blocked_force_trace, max_liftable_tip_mass, write_blocked_force_csv

OUT = pathlib.Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

geom = DeviceGeometry()
peak = blocked_tendon_force(STALL_TORQUE, geom.r_m)
print(f"stall torque {STALL_TORQUE * 1000:.1f} N.mm over spool {geom.r_m * 1000:.3f} mm -> {peak:.2f} N")

t, fx, fy, fz, ftot = blocked_force_trace(pulses=4, tip_weight=0.05)
print(f"trace: {len(t)} samples over {t[-1]:.0f} s, z peak {np.max(fz):.3f} N (gravity compensated)")
write_blocked_force_csv(OUT / "blocked_force.csv", t, fx, fy, fz, ftot)
print(f"wrote {OUT / 'blocked_force.csv'}")

inertia = TipInertia(r_t=np.array([0, 0, 0.02]), r_G=np.array([0, 0.02, 0]))
print(f"quasi-static payload at equal arms: {max_liftable_tip_mass(STALL_TORQUE, geom.r_m, inertia):.3f} kg")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(t, fx, "r-", label="x")
    ax.plot(t, fy, "b--", label="y")
    ax.plot(t, fz, "g-", label="z")
    ax.plot(t, ftot, "k:", label="total")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("force (N)")
    ax.set_title("blocked force, repeated PWM bursts")
    ax.legend(ncol=4)
    fig.tight_layout()
    fig.savefig(OUT / "blocked_force.png", dpi=130)
    print(f"plot: {OUT / 'blocked_force.png'}")
except ImportError:
    print("matplotlib unavailable, skipping the plot")
