"""Tendon spool winding versus joint angle.

Plots the spool-to-joint map for all three motors, shows the zero-winding
identity and the full-bend saturation point, and verifies the closed-form
inverse by round-tripping a dense sweep of joint angles.
"""

import math
import pathlib

import numpy as np

from vinesim import DeviceGeometry, joint_to_tendon, tendon_to_joint

OUT = pathlib.Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

geom = DeviceGeometry()
print(f"spool radius: {geom.r_m * 1000:.3f} mm")
print(f"zero winding -> joint angle {tendon_to_joint(0.0, 2, geom)} rad (exact zero)")
print(f"full bend at spool angle {geom.phi_full_bend:.2f} rad "
      f"-> {math.degrees(tendon_to_joint(geom.phi_full_bend, 2, geom)):.2f} deg")

phis = np.linspace(0.0, geom.phi_full_bend, 200)
curves = {j: np.degrees([tendon_to_joint(p, j, geom) for p in phis]) for j in (0, 1, 2)}

qs = np.linspace(-geom.alpha_max, geom.alpha_max, 1000)
worst = max(
    abs(tendon_to_joint(joint_to_tendon(q, j, geom), j, geom) - q)
    for q in qs
    for j in (0, 1, 2)
)
print(f"inverse round-trip worst error over 3000 samples: {worst:.2e} rad")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    labels = {0: "motor 0 (left)", 1: "motor 1 (right)", 2: "motor 2 (up)"}
    for j, curve in curves.items():
        ax.plot(phis, curve, label=labels[j])
    ax.set_xlabel("spool angle (rad)")
    ax.set_ylabel("joint angle (deg)")
    ax.set_title("tendon winding to joint angle")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(OUT / "tendon_map.png", dpi=130)
    print(f"plot: {OUT / 'tendon_map.png'}")
except ImportError:
    print("matplotlib unavailable, skipping the plot")
