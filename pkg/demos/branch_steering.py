"""Teleoperated branch selection on the 2D junction course.

Seven junction pieces each offer straight-through or a 45 degree turn.  The
scripted run slows before each junction, winds the turn-side tendon, creeps
through, releases, and re-propels; the tip takes every turn and the body
follows the chosen path.
"""

import pathlib

from vinesim import run_scenario
from vinesim.environment import centerline

OUT = pathlib.Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

res = run_scenario("branch2d-7")
print("junction decisions:")
for ev in res.junction_events:
    print(f"  t={ev['t']:7.2f} s  {ev['junction']}  ->  {ev['label']}")
print(f"everted length: {res.states[-1].everted_length:.3f} m")

straight = {"schedule": [{"t_start": 0.0, "motor": 4, "duty": 100, "duration": 25.0}]}
null_res = run_scenario("branch2d-7", script=straight)
print(f"null script outcome: {[e['label'] for e in null_res.junction_events]} (exits straight)")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.5, 6))
    for seg in res.network.segments.values():
        ax.plot([seg.start[0], seg.end[0]], [seg.start[1], seg.end[1]],
                color="0.8", lw=seg.diameter * 300, solid_capstyle="round")
    ref = centerline(res.network, ["turn"] * 7)
    ax.plot(ref[:, 0], ref[:, 1], "k--", lw=1, label="all-turn centerline")
    gt = res.ground_truth
    ax.plot(gt[:, 0], gt[:, 1], "b-", lw=1.5, label="tip path")
    ng = null_res.ground_truth
    ax.plot(ng[:, 0], ng[:, 1], "r-", lw=1.5, label="null-script path")
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title("branch steering through seven junctions")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(OUT / "branch_steering.png", dpi=130)
    print(f"plot: {OUT / 'branch_steering.png'}")
except ImportError:
    print("matplotlib unavailable, skipping the plot")
