"""Burrow reconstruction with environmental overlays.

Grows through the synthetic field burrow until the dead end, localizes the
track from the emitted sensor streams, and reports the reconstructed
geometry alongside the temperature and humidity profile.
"""

import pathlib

import numpy as np

from vinesim import run_scenario
from vinesim import localization as loc
from vinesim.environment import reconstruct_burrow, write_burrow_csv

OUT = pathlib.Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

res = run_scenario("burrow-field")
est = loc.run_pipeline(res.frames, res.encoder, q0=res.initial_orientation, start=res.start_position)
profile = reconstruct_burrow(
    est,
    temperature=np.append(res.temperature, res.temperature[-1]),
    humidity=np.append(res.humidity, res.humidity[-1]),
)
s = profile.summary()
print("burrow survey summary:")
print(f"  displacement: ({s['displacement_m'][0]:.3f}, {s['displacement_m'][1]:.3f}, "
      f"{s['displacement_m'][2]:.3f}) m")
print(f"  vertical rise: {s['vertical_rise_m'] * 1000:.0f} mm")
print(f"  in-plane bending angle: {s['bending_angle_deg']:.1f} deg")
print(f"  path length: {s['path_length_m']:.3f} m")
print(f"  temperature: {s['temperature_C']:.1f} C, humidity: {s['humidity_pct']:.1f} %RH")

write_burrow_csv(OUT / "burrow_profile.csv", profile)
print(f"wrote {OUT / 'burrow_profile.csv'}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pts = profile.trajectory
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(111, projection="3d")
    sc = ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], c=profile.temperature, s=4, cmap="plasma")
    fig.colorbar(sc, label="temperature (C)", shrink=0.7)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_zlabel("z (m)")
    ax.set_title("reconstructed burrow with temperature overlay")
    fig.savefig(OUT / "burrow.png", dpi=130)
    print(f"plot: {OUT / 'burrow.png'}")
except ImportError:
    print("matplotlib unavailable, skipping the plot")
