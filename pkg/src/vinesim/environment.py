"""Pipe-network and burrow geometry.

Networks are chains of straight cylindrical segments joined end to end;
turn connectors are discretized circular arcs (default radius one pipe
diameter) or sharp kinks, and branch points carry explicit junction records.
Networks are immutable once validated, so every query is concurrency-safe.
"""

import csv
import heapq
import json
import math
from dataclasses import dataclass

import numpy as np

ENDPOINT_TOL = 1e-9
ANGLE_TOL_DEG = 0.1
PRESET_NAMES = ("pipe3d-45", "branch2d-7", "climb45", "burrow-field")

# field measurements of the reference burrow run
BURROW_ENDPOINT = np.array([-0.425, 0.797, 0.073])
BURROW_TEMP_C = 17.2
BURROW_RH_PCT = 39.4


@dataclass(frozen=True)
class PipeSegment:
    id: str
    start: np.ndarray
    end: np.ndarray
    diameter: float

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "end", np.asarray(self.end, dtype=float))
        length = float(np.linalg.norm(self.end - self.start))
        if length <= 0:
            raise ValueError(f"segment {self.id} has zero length")
        if self.diameter <= 0:
            raise ValueError(f"segment {self.id} has non-positive diameter")
        object.__setattr__(self, "_length", length)
        object.__setattr__(self, "_direction", (self.end - self.start) / length)

    @property
    def length(self) -> float:
        return self._length

    @property
    def direction(self) -> np.ndarray:
        return self._direction


@dataclass(frozen=True)
class Junction:
    """Branch point: outgoing branch segments and their turn angles.

    branch_angles are the deviations from the incoming axis in degrees;
    the straight-through branch, when present, carries angle 0.
    """

    id: str
    position: np.ndarray
    incoming_id: str
    branch_ids: tuple
    branch_angles: tuple
    branch_labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if len(self.branch_ids) < 1:
            raise ValueError(f"junction {self.id} needs at least one branch")
        if any(not 0.0 <= a < 180.0 for a in self.branch_angles):
            raise ValueError(f"junction {self.id} branch angles must lie in [0, 180) deg")


class CourseValidationError(ValueError):
    pass


class PipeNetwork:
    """Validated set of segments plus junction records; immutable."""

    def __init__(self, segments, junctions, entry: str):
        self.segments = {s.id: s for s in segments}
        self.junctions = {j.id: j for j in junctions}
        self.entry = entry
        self._successors = {}
        for s in segments:
            nxt = [
                t.id
                for t in segments
                if t.id != s.id and np.linalg.norm(t.start - s.end) <= ENDPOINT_TOL
            ]
            self._successors[s.id] = nxt
        self._junction_after = {}
        for j in junctions:
            self._junction_after[j.incoming_id] = j
        self._validate()
        # flat arrays for vectorized containment queries
        self._ids = [s.id for s in segments]
        self._starts = np.array([s.start for s in segments])
        dirs = np.array([s.direction for s in segments])
        self._dirs = dirs
        self._lens = np.array([s.length for s in segments])
        self._radii = np.array([0.5 * s.diameter for s in segments])

    def _validate(self):
        if self.entry not in self.segments:
            raise CourseValidationError("entry segment missing")
        seen = set()
        stack = [self.entry]
        while stack:
            sid = stack.pop()
            if sid in seen:
                continue
            seen.add(sid)
            stack.extend(self._successors[sid])
        if seen != set(self.segments):
            raise CourseValidationError("network is disconnected from its entry")
        for sid, nxt in self._successors.items():
            if len(nxt) > 1 and sid not in self._junction_after:
                raise CourseValidationError(f"segments branch after {sid} without a junction")
        for j in self.junctions.values():
            incoming = self.segments[j.incoming_id]
            if np.linalg.norm(incoming.end - j.position) > ENDPOINT_TOL:
                raise CourseValidationError(f"junction {j.id} is not at the end of its inlet")
            for bid, angle in zip(j.branch_ids, j.branch_angles):
                branch = self.segments[bid]
                cosang = float(np.clip(np.dot(incoming.direction, branch.direction), -1, 1))
                geo = math.degrees(math.acos(cosang))
                if abs(geo - angle) > ANGLE_TOL_DEG:
                    raise CourseValidationError(
                        f"junction {j.id} branch {bid}: declared {angle:.2f} deg, "
                        f"geometry gives {geo:.2f} deg"
                    )
        self._check_self_intersection()

    def _check_self_intersection(self):
        # pipes far apart along the course must not overlap in space; nearby
        # stretches are allowed to touch (elbow chords legitimately do), so
        # gate the clearance test on graph distance through the network
        segs = list(self.segments.values())
        index = {s.id: i for i, s in enumerate(segs)}
        adj = [[] for _ in segs]
        for i, a in enumerate(segs):
            ends_a = (a.start, a.end)
            for b in segs[i + 1 :]:
                k = index[b.id]
                if any(
                    np.linalg.norm(ea - eb) <= ENDPOINT_TOL
                    for ea in ends_a
                    for eb in (b.start, b.end)
                ):
                    w = 0.5 * (a.length + b.length)
                    adj[i].append((k, w))
                    adj[k].append((i, w))
        for i, a in enumerate(segs):
            dist = [math.inf] * len(segs)
            dist[i] = 0.0
            heap = [(0.0, i)]
            while heap:
                d0, u = heapq.heappop(heap)
                if d0 > dist[u]:
                    continue
                for v, w in adj[u]:
                    nd = d0 + w
                    if nd < dist[v]:
                        dist[v] = nd
                        heapq.heappush(heap, (nd, v))
            for k in range(i + 1, len(segs)):
                b = segs[k]
                if dist[k] <= 3.0 * math.pi * max(a.diameter, b.diameter):
                    continue
                d = _segment_segment_distance(a.start, a.end, b.start, b.end)
                if d < 0.8 * 0.5 * (a.diameter + b.diameter):
                    raise CourseValidationError(
                        f"segments {a.id} and {b.id} self-intersect (clearance {d:.4f} m)"
                    )

    def successors_of(self, seg_id: str):
        return list(self._successors[seg_id])

    def junction_after(self, seg_id: str):
        return self._junction_after.get(seg_id)

    def contains(self, p, hint=None):
        """Whether p lies inside any pipe; returns (inside, nearest_point).

        hint: optional iterable of segment ids to test first with early exit.
        """
        p = np.asarray(p, dtype=float)
        if hint is not None:
            for sid in hint:
                seg = self.segments[sid]
                d, c = _point_segment_distance(p, seg.start, seg.end)
                if d <= 0.5 * seg.diameter:
                    return True, c
        rel = p - self._starts
        t = np.clip(np.einsum("ij,ij->i", rel, self._dirs), 0.0, self._lens)
        closest = self._starts + t[:, None] * self._dirs
        dist = np.linalg.norm(p - closest, axis=1)
        i = int(np.argmin(dist))
        inside = bool(np.any(dist <= self._radii))
        return inside, closest[i]

    def total_length(self) -> float:
        return float(np.sum(self._lens))


def _point_segment_distance(p, a, b):
    ab = b - a
    denom = float(np.dot(ab, ab))
    t = 0.0 if denom == 0 else float(np.clip(np.dot(p - a, ab) / denom, 0.0, 1.0))
    c = a + t * ab
    return float(np.linalg.norm(p - c)), c


def _segment_segment_distance(p1, p2, q1, q2):
    """Minimum distance between two 3D segments (clamped closest points)."""
    d1, d2, r = p2 - p1, q2 - q1, p1 - q1
    a, e, f = float(np.dot(d1, d1)), float(np.dot(d2, d2)), float(np.dot(d2, r))
    b, c = float(np.dot(d1, d2)), float(np.dot(d1, r))
    denom = a * e - b * b
    s = 0.0 if denom < 1e-15 else float(np.clip((b * f - c * e) / denom, 0.0, 1.0))
    t = 0.0 if e < 1e-15 else (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = float(np.clip(-c / a, 0.0, 1.0)) if a > 1e-15 else 0.0
    elif t > 1.0:
        t = 1.0
        s = float(np.clip((b - c) / a, 0.0, 1.0)) if a > 1e-15 else 0.0
    return float(np.linalg.norm((p1 + s * d1) - (q1 + t * d2)))


def _rotate_about(v, axis, angle):
    """Rodrigues rotation of v about a unit axis."""
    axis = axis / np.linalg.norm(axis)
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(axis, v) * s + axis * np.dot(axis, v) * (1 - c)


class CourseBuilder:
    """Cursor-based course construction: straights, arc turns, junctions."""

    def __init__(self, diameter, start=(0.0, 0.0, 0.0), heading=(1.0, 0.0, 0.0), up=(0.0, 0.0, 1.0)):
        self.diameter = diameter
        self.pos = np.asarray(start, dtype=float)
        self.heading = np.asarray(heading, dtype=float)
        self.up = np.asarray(up, dtype=float)
        self.segments = []
        self.junctions = []
        self._n = 0

    def _next_id(self):
        sid = f"s{self._n:03d}"
        self._n += 1
        return sid

    def _add_segment(self, end, diameter=None):
        seg = PipeSegment(self._next_id(), self.pos.copy(), end, diameter or self.diameter)
        self.segments.append(seg)
        self.pos = np.asarray(end, dtype=float)
        return seg

    def straight(self, length, diameter=None):
        return self._add_segment(self.pos + length * self.heading, diameter)

    def _turn_axis(self, roll_deg):
        return _rotate_about(self.up, self.heading, math.radians(roll_deg))

    def arc(self, angle_deg, roll_deg=0.0, radius=None, chord_deg=5.0):
        """Turn through angle_deg along a circular arc; vertices stay on
        the circle (each chord advances along the mid-chord tangent)."""
        radius = self.diameter if radius is None else radius
        axis = self._turn_axis(roll_deg)
        total = math.radians(angle_deg)
        n = max(1, int(math.ceil(abs(angle_deg) / chord_deg)))
        step = total / n
        chord = 2.0 * radius * math.sin(abs(step) / 2.0)
        segs = []
        for _ in range(n):
            mid = _rotate_about(self.heading, axis, step / 2.0)
            segs.append(self._add_segment(self.pos + chord * mid))
            self.heading = _rotate_about(self.heading, axis, step)
        self.up = _rotate_about(self.up, axis, total)  # parallel-transport the frame
        return segs

    def kink(self, angle_deg, roll_deg=0.0):
        axis = self._turn_axis(roll_deg)
        self.heading = _rotate_about(self.heading, axis, math.radians(angle_deg))
        self.up = _rotate_about(self.up, axis, math.radians(angle_deg))

    def junction(self, branches):
        """Create a branch point at the cursor.

        branches: list of (angle_deg, roll_deg, label, length) for each
        outgoing straight pipe.  Returns (junction, cursors) where cursors
        are (position, heading, up) tuples at each branch end.
        """
        inlet = self.segments[-1]
        jid = f"j{len(self.junctions):03d}"
        branch_ids, angles, labels, cursors = [], [], [], []
        for angle_deg, roll_deg, label, length in branches:
            axis = self._turn_axis(roll_deg)
            rot = math.radians(angle_deg)
            h = _rotate_about(self.heading, axis, rot)
            end = self.pos + length * h
            seg = PipeSegment(self._next_id(), self.pos.copy(), end, self.diameter)
            self.segments.append(seg)
            branch_ids.append(seg.id)
            angles.append(abs(angle_deg))
            labels.append(label)
            cursors.append((end, h, _rotate_about(self.up, axis, rot)))
        self.junctions.append(
            Junction(jid, self.pos.copy(), inlet.id, tuple(branch_ids), tuple(angles), tuple(labels))
        )
        return self.junctions[-1], cursors

    def resume(self, cursor):
        self.pos, self.heading, self.up = (np.asarray(c, dtype=float).copy() for c in cursor)

    def network(self, entry=None):
        return PipeNetwork(self.segments, self.junctions, entry or self.segments[0].id)


def _preset_pipe3d(sharp=False):
    """Six 0.2 m x 5 cm straights joined by 45 deg connectors whose turn
    planes alternate, giving a genuinely three-dimensional course."""
    b = CourseBuilder(diameter=0.05)
    rolls = [0.0, 90.0, -90.0, 90.0, 0.0]
    for i in range(6):
        b.straight(0.2)
        if i < 5:
            if sharp:
                b.kink(45.0, rolls[i])
            else:
                b.arc(45.0, rolls[i])
    return b.network()


def _preset_branch2d():
    """Seven junction pieces, each offering straight-through or a 45 deg
    turn; the turn branches chain the pieces together, the straight branches
    are exit stubs.  Links are 15.0 cm long, 5.30 cm internal diameter; the
    last turn branch is shortened so the spiral does not close on the entry."""
    b = CourseBuilder(diameter=0.053)
    b.straight(0.15)
    for i in range(7):
        turn_len = 0.15 if i < 6 else 0.08
        _, cursors = b.junction(
            [(0.0, 0.0, "forward", 0.15), (45.0, 0.0, "turn", turn_len)]
        )
        b.resume(cursors[1])
    return b.network()


def _preset_climb45():
    """Straight 5.3 cm pipe with one 45 deg branch climbing against gravity."""
    b = CourseBuilder(diameter=0.053)
    b.straight(0.45)
    _, cursors = b.junction(
        [(0.0, 0.0, "forward", 0.30), (45.0, 90.0, "up", 0.35)]
    )
    return b.network()


def _burrow_arc_parameters():
    # single left-curling arc whose chord reproduces the surveyed x/y
    # displacement; tan(phi/2) = y/x fixes the swept angle, then the radius
    dx, dy = BURROW_ENDPOINT[0], BURROW_ENDPOINT[1]
    half = math.atan2(dy, dx)  # in (pi/2, pi) for this quadrant
    phi = 2.0 * half
    radius = dx / math.sin(phi)
    return radius, phi


def _preset_burrow():
    """Synthetic stand-in for the surveyed animal burrow: a winding 5 cm
    tunnel rising 7.3 cm while curling through a wide horizontal arc so the
    net displacement matches the field reconstruction."""
    radius, phi = _burrow_arc_parameters()
    n = 48
    pts = []
    for i in range(n + 1):
        a = phi * i / n
        pts.append(
            np.array(
                [radius * math.sin(a), radius * (1.0 - math.cos(a)), BURROW_ENDPOINT[2] * i / n]
            )
        )
    pts[-1] = BURROW_ENDPOINT.copy()
    segments = [
        PipeSegment(f"s{i:03d}", pts[i], pts[i + 1], 0.05) for i in range(n)
    ]
    return PipeNetwork(segments, [], segments[0].id)


def preset_course(name: str, sharp_connectors: bool = False) -> PipeNetwork:
    if name == "pipe3d-45":
        return _preset_pipe3d(sharp=sharp_connectors)
    if name == "branch2d-7":
        return _preset_branch2d()
    if name == "climb45":
        return _preset_climb45()
    if name == "burrow-field":
        return _preset_burrow()
    raise KeyError(f"unknown course preset {name!r}")


def build_course(spec) -> PipeNetwork:
    """Build a network from a structured description.

    Accepts {"preset": name} or an explicit {"segments": [...],
    "junctions": [...], "entry": id} mapping (as parsed from JSON).
    """
    if isinstance(spec, str):
        spec = json.loads(spec)
    if "preset" in spec:
        return preset_course(spec["preset"], bool(spec.get("sharp_connectors", False)))
    segments = [
        PipeSegment(s["id"], np.array(s["start"], dtype=float), np.array(s["end"], dtype=float), float(s["diameter"]))
        for s in spec["segments"]
    ]
    junctions = [
        Junction(
            j["id"],
            np.array(j["position"], dtype=float),
            j["incoming_id"],
            tuple(j["branch_ids"]),
            tuple(float(a) for a in j["branch_angles"]),
            tuple(j.get("branch_labels", [str(i) for i in range(len(j["branch_ids"]))])),
        )
        for j in spec.get("junctions", [])
    ]
    return PipeNetwork(segments, junctions, spec["entry"])


def network_to_spec(network: PipeNetwork) -> dict:
    return {
        "segments": [
            {"id": s.id, "start": list(s.start), "end": list(s.end), "diameter": s.diameter}
            for s in network.segments.values()
        ],
        "junctions": [
            {
                "id": j.id,
                "position": list(j.position),
                "incoming_id": j.incoming_id,
                "branch_ids": list(j.branch_ids),
                "branch_angles": list(j.branch_angles),
                "branch_labels": list(j.branch_labels),
            }
            for j in network.junctions.values()
        ],
        "entry": network.entry,
    }


def route_segments(network: PipeNetwork, branch_choices=()) -> list:
    """Segment ids from the entry through the chosen branches.

    Choices are consumed in junction order; each may be a branch label,
    branch segment id, or index into the junction's branch list.
    """
    choices = list(branch_choices)
    route = [network.entry]
    while True:
        cur = route[-1]
        j = network.junction_after(cur)
        if j is not None:
            if choices:
                pick = choices.pop(0)
                if isinstance(pick, int):
                    if not 0 <= pick < len(j.branch_ids):
                        raise KeyError(f"junction {j.id} has no branch index {pick}")
                    nxt = j.branch_ids[pick]
                elif pick in j.branch_ids:
                    nxt = pick
                elif pick in j.branch_labels:
                    nxt = j.branch_ids[j.branch_labels.index(pick)]
                else:
                    raise KeyError(f"invalid branch choice {pick!r} at junction {j.id}")
            else:
                nxt = j.branch_ids[0]
            route.append(nxt)
            continue
        nxt = network.successors_of(cur)
        if not nxt:
            return route
        route.append(nxt[0])


def centerline(network: PipeNetwork, branch_choices=()) -> np.ndarray:
    """Polyline through the network for the given branch decisions."""
    ids = route_segments(network, branch_choices)
    pts = [network.segments[ids[0]].start]
    pts.extend(network.segments[sid].end for sid in ids)
    return np.array(pts)


def polyline_length(points) -> float:
    points = np.asarray(points, dtype=float)
    return float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))


def bending_angle_xy(displacement) -> float:
    """In-plane bend of a displacement: atan2(|y|, |x|) in degrees.

    Absolute components, matching how the field reconstruction reports a
    positive angle from mixed-sign displacements; invariant to z and scale.
    """
    x, y = float(displacement[0]), float(displacement[1])
    if x == 0.0 and y == 0.0:
        raise ValueError("displacement has no x-y projection")
    return math.degrees(math.atan2(abs(y), abs(x)))


@dataclass(frozen=True)
class BurrowProfile:
    """Reconstructed burrow polyline with optional environmental overlays."""

    trajectory: np.ndarray
    temperature: np.ndarray = None
    humidity: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "trajectory", np.asarray(self.trajectory, dtype=float))
        for name in ("temperature", "humidity"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                object.__setattr__(self, name, v)
                if len(v) != len(self.trajectory):
                    raise ValueError(f"{name} stream is misaligned with the trajectory")
        if self.humidity is not None and (np.any(self.humidity < 0) or np.any(self.humidity > 100)):
            raise ValueError("humidity must lie in [0, 100] %RH")

    def summary(self) -> dict:
        disp = self.trajectory[-1] - self.trajectory[0]
        out = {
            "displacement_m": [float(v) for v in disp],
            "vertical_rise_m": float(disp[2]),
            "bending_angle_deg": bending_angle_xy(disp),
            "path_length_m": polyline_length(self.trajectory),
        }
        if self.temperature is not None:
            out["temperature_C"] = float(np.mean(self.temperature))
        if self.humidity is not None:
            out["humidity_pct"] = float(np.mean(self.humidity))
        return out


def reconstruct_burrow(trajectory, temperature=None, humidity=None) -> BurrowProfile:
    """Burrow profile from an estimated tip trajectory plus time-aligned
    temperature/humidity samples (one per trajectory sample)."""
    positions = getattr(trajectory, "positions", trajectory)
    return BurrowProfile(np.asarray(positions, dtype=float), temperature, humidity)


def write_burrow_csv(path, profile: BurrowProfile):
    """Profile exporter: header s_m,x,y,z,temp_C,rh_pct (blank overlays allowed)."""
    pts = profile.trajectory
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["s_m", "x", "y", "z", "temp_C", "rh_pct"])
        for i in range(len(pts)):
            temp = "" if profile.temperature is None else repr(float(profile.temperature[i]))
            rh = "" if profile.humidity is None else repr(float(profile.humidity[i]))
            w.writerow([repr(float(s[i]))] + [repr(float(v)) for v in pts[i]] + [temp, rh])
