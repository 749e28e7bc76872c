"""Reachable workspace of the steering tip.

Sweeps the bendable joint over its full range, confirms every reachable tip
point sits on the sphere of radius r_eff, and renders the truncated
quarter-sphere surface along with the characterization sweep pattern.
"""

import math
import pathlib

import numpy as np

from vinesim import DeviceGeometry, workspace_surface
from vinesim.kinematics import characterization_sweep, tip_points_for_angles, write_workspace_csv

OUT = pathlib.Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

geom = DeviceGeometry()
print(f"device: h={geom.h * 1000:.2f} mm  r={geom.r * 1000:.1f} mm  L2={geom.L2 * 1000:.1f} mm")
print(f"effective radius: {geom.r_eff * 1000:.1f} mm")
print(f"max bend (face collision): {math.degrees(geom.alpha_max):.2f} deg")

theta, beta, pts = workspace_surface(geom, resolution=math.radians(1.0))
norms = np.linalg.norm(pts, axis=1)
print(f"surface samples: {len(pts)}, radius spread: {np.ptp(norms):.2e} m")

polar = np.degrees(np.arccos(pts[:, 2] / geom.r_eff))
print(f"max polar angle: {polar.max():.2f} deg (cap at {math.degrees(geom.alpha_max):.2f})")

write_workspace_csv(OUT / "workspace_surface.csv", theta, beta, pts)
sweep_t, sweep_b = characterization_sweep(geom, math.radians(1.0))
sweep_pts = tip_points_for_angles(sweep_t, sweep_b, geom)
write_workspace_csv(OUT / "workspace_sweep.csv", sweep_t, sweep_b, sweep_pts)
print(f"wrote {OUT / 'workspace_surface.csv'} and the sweep pattern")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(111, projection="3d")
    ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], s=2, c=pts[:, 2], cmap="viridis", alpha=0.4)
    ax.plot(sweep_pts[:, 0], sweep_pts[:, 1], sweep_pts[:, 2], "r-", lw=1, label="sweep")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_zlabel("z (m)")
    ax.set_title("tip workspace: truncated quarter sphere")
    ax.legend()
    fig.savefig(OUT / "workspace.png", dpi=130)
    print(f"plot: {OUT / 'workspace.png'}")
except ImportError:
    print("matplotlib unavailable, skipping the plot")
