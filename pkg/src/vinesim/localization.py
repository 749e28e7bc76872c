"""Dead-reckoning localization: encoder growth odometry fused with IMU
orientation.

The global frame is z-up with gravity-inclusive accelerometer readings
(a stationary, level sensor reads (0, 0, -g)).  Orientation estimation is a
quaternion complementary filter: gyro integration corrected toward the
accelerometer gravity direction and the magnetometer heading.  The gravity
reference is centripetally compensated using the encoder-derived forward
speed, which keeps the filter exact on consistent (noiseless) streams even
through curved pipe.  Position integrates the everted length along the fused
forward axis (heading mode) or along the direction of the integrated global
velocity (velocity mode).
"""

import json
import math
import csv
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import quat

GRAVITY = 9.81
DEFAULT_GAIN = 0.02
DEFAULT_MAG_REF = (50.0, 0.0, 0.0)  # uT, horizontal north along +x
DEFAULT_EVERSION_FACTOR = 2.0  # tail material feeds at twice the tip speed
FORWARD_AXIS = (0.0, 0.0, 1.0)  # local growth axis


@dataclass(frozen=True)
class SensorFrame:
    """One IMU sample: body-frame rates, acceleration, magnetic field."""

    t: float
    omega_B: tuple
    a_B: tuple
    m_B: tuple


@dataclass(frozen=True)
class EncoderSample:
    """Base-spool rotation increment over one sample interval."""

    t: float
    delta_theta: float


@dataclass
class TrajectoryEstimate:
    """Fused global-frame tip track: one sample per encoder interval edge."""

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    quaternions: list

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        for q in self.quaternions:
            if abs(quat.norm(q) - 1.0) > 1e-9:
                raise ValueError("orientation quaternions must be unit norm")

    @property
    def path_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.positions, axis=0), axis=1)))

    @property
    def endpoint(self) -> np.ndarray:
        return self.positions[-1]


@dataclass(frozen=True)
class TrackingErrorReport:
    mean: float
    std_dev: float
    per_sample: np.ndarray


def spool_to_length(delta_theta: float, r_spool_base: float, eversion_factor: float = DEFAULT_EVERSION_FACTOR) -> float:
    """Tip advance for a base-spool increment.

    Released material is r * dtheta; the tail feeds at eversion_factor times
    the tip speed, so the tip advances by the released length over the factor.
    """
    if r_spool_base <= 0 or eversion_factor <= 0:
        raise ValueError("need positive spool radius and eversion factor")
    return r_spool_base * delta_theta / eversion_factor


def _check_monotone(times):
    t = np.asarray(times, dtype=float)
    if len(t) > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("timestamps must be strictly increasing")


def fuse_orientation(frames, gain: float = DEFAULT_GAIN, q0=quat.IDENTITY,
                     forward_speed=None, mag_ref=DEFAULT_MAG_REF):
    """Complementary orientation fusion over a SensorFrame sequence.

    Returns one unit quaternion per frame (the orientation holding over that
    frame's interval).  gain in [0, 1] scales both the gravity and heading
    corrections; gain 0 is pure gyro integration.  forward_speed (m/s per
    frame), when given, removes the centripetal and longitudinal kinematic
    acceleration omega x v + dv/dt from the accelerometer before using it as
    the gravity reference.
    """
    if not 0.0 <= gain <= 1.0:
        raise ValueError("gain must lie in [0, 1]")
    _check_monotone([f.t for f in frames])
    n = len(frames)
    if n == 0:
        return []
    m_ref_hat = _normalize3(mag_ref)
    out = []
    q = quat.normalize(q0)
    prev_speed = 0.0
    prev_omega = (0.0, 0.0, 0.0)
    for k in range(n):
        f = frames[k]
        dt = (frames[k + 1].t - f.t) if k + 1 < n else (f.t - frames[k - 1].t if n > 1 else 0.01)
        ax, ay, az = f.a_B
        speed = forward_speed[k] if forward_speed is not None else 0.0
        if forward_speed is not None:
            # kinematic acceleration seen by the tip-mounted sensor: the
            # previous interval's velocity re-expressed in the current body
            # frame (through the gyro increment) differenced against the
            # current one
            wx, wy, wz = prev_omega
            rot_prev = quat.rotate_inv(
                quat.from_rotvec((wx * dt, wy * dt, wz * dt)),
                (0.0, 0.0, prev_speed),
            )
            ax -= (0.0 - rot_prev[0]) / dt
            ay -= (0.0 - rot_prev[1]) / dt
            az -= (speed - rot_prev[2]) / dt
        # gravity-direction correction
        g_norm = math.sqrt(ax * ax + ay * ay + az * az)
        if gain > 0.0 and g_norm > 1e-9:
            v_meas = (ax / g_norm, ay / g_norm, az / g_norm)
            v_pred = quat.rotate_inv(q, (0.0, 0.0, -1.0))
            e = _cross(v_meas, v_pred)
            q = quat.multiply(q, quat.from_rotvec((gain * e[0], gain * e[1], gain * e[2])))
            # heading correction about the gravity axis only
            m_norm = math.sqrt(f.m_B[0] ** 2 + f.m_B[1] ** 2 + f.m_B[2] ** 2)
            if m_norm > 1e-9:
                m_meas = (f.m_B[0] / m_norm, f.m_B[1] / m_norm, f.m_B[2] / m_norm)
                m_pred = quat.rotate_inv(q, m_ref_hat)
                em = _cross(m_meas, m_pred)
                g_b = quat.rotate_inv(q, (0.0, 0.0, -1.0))
                proj = em[0] * g_b[0] + em[1] * g_b[1] + em[2] * g_b[2]
                q = quat.multiply(
                    q,
                    quat.from_rotvec((gain * proj * g_b[0], gain * proj * g_b[1], gain * proj * g_b[2])),
                )
        q = quat.normalize(q)
        out.append(q)
        # gyro propagation to the next interval
        wx, wy, wz = f.omega_B
        q = quat.normalize(quat.multiply(q, quat.from_rotvec((wx * dt, wy * dt, wz * dt))))
        prev_speed = speed
        prev_omega = f.omega_B
    return out


def _cross(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def _normalize3(v):
    n = math.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2)
    if n == 0:
        raise ValueError("cannot normalize zero vector")
    return (v[0] / n, v[1] / n, v[2] / n)


def body_to_global(a_B, orientation, g: float = GRAVITY) -> np.ndarray:
    """Gravity-free linear acceleration in the global (z-up) frame."""
    if abs(quat.norm(orientation) - 1.0) > 1e-6:
        raise ValueError("orientation must be a unit quaternion")
    ax, ay, az = quat.rotate(orientation, tuple(a_B))
    return np.array([ax, ay, az + g])


def dead_reckon(encoder, orientations, mode: str = "heading", accel_B=None,
                start=(0.0, 0.0, 0.0), r_spool_base: float = 0.02,
                eversion_factor: float = DEFAULT_EVERSION_FACTOR,
                g: float = GRAVITY) -> TrajectoryEstimate:
    """Integrate encoder growth increments along the fused orientation.

    heading mode steps the position by each interval's everted length along
    the orientation's forward axis.  velocity mode integrates the global
    gravity-free acceleration to a velocity vector and steps the everted
    length along its direction (falling back to the heading axis while the
    velocity is negligible); it requires the body-frame accel stream.
    """
    if mode not in ("heading", "velocity"):
        raise ValueError(f"unknown dead-reckoning mode {mode!r}")
    n = len(encoder)
    if len(orientations) != n:
        raise ValueError("encoder and orientation streams are misaligned")
    if mode == "velocity" and (accel_B is None or len(accel_B) != n):
        raise ValueError("velocity mode needs a time-aligned accel stream")
    _check_monotone([e.t for e in encoder])

    times = np.empty(n + 1)
    positions = np.empty((n + 1, 3))
    velocities = np.zeros((n + 1, 3))
    positions[0] = np.asarray(start, dtype=float)
    times[: n] = [e.t for e in encoder]
    last_dt = (encoder[-1].t - encoder[-2].t) if n > 1 else 0.01
    times[n] = encoder[-1].t + last_dt

    v = np.zeros(3)
    for k in range(n):
        dt = times[k + 1] - times[k]
        dl = spool_to_length(encoder[k].delta_theta, r_spool_base, eversion_factor)
        heading = np.array(quat.rotate(orientations[k], FORWARD_AXIS))
        if mode == "heading":
            step_dir = heading
            velocities[k] = (dl / dt) * heading if dt > 0 else 0.0
        else:
            v = v + body_to_global(accel_B[k], orientations[k], g) * dt
            speed = float(np.linalg.norm(v))
            step_dir = v / speed if speed > 1e-9 else heading
            velocities[k] = v
        positions[k + 1] = positions[k] + dl * step_dir
    velocities[n] = velocities[n - 1]
    quats = list(orientations) + [orientations[-1]]
    return TrajectoryEstimate(times, positions, velocities, quats)


def resample_to_encoder(frames, encoder):
    """Linearly interpolate IMU channels onto the encoder clock.

    When the two streams already share timestamps the frames pass through
    untouched, keeping consistent streams bit-exact.
    """
    _check_monotone([f.t for f in frames])
    _check_monotone([e.t for e in encoder])
    t_imu = np.array([f.t for f in frames])
    t_enc = np.array([e.t for e in encoder])
    if len(t_imu) == len(t_enc) and np.max(np.abs(t_imu - t_enc)) < 1e-9:
        return list(frames)
    if t_enc[0] < t_imu[0] - 1e-9 or t_enc[-1] > t_imu[-1] + 1e-9:
        raise ValueError("encoder clock extends outside the IMU stream")
    channels = np.array([[*f.omega_B, *f.a_B, *f.m_B] for f in frames])
    out = []
    for t in t_enc:
        row = [float(np.interp(t, t_imu, channels[:, i])) for i in range(9)]
        out.append(SensorFrame(float(t), tuple(row[0:3]), tuple(row[3:6]), tuple(row[6:9])))
    return out


def run_pipeline(frames, encoder, mode: str = "heading", gain: float = DEFAULT_GAIN,
                 q0=quat.IDENTITY, start=(0.0, 0.0, 0.0), r_spool_base: float = 0.02,
                 eversion_factor: float = DEFAULT_EVERSION_FACTOR,
                 mag_ref=DEFAULT_MAG_REF, compensate: bool = True) -> TrajectoryEstimate:
    """Full localization chain: resample, fuse orientation, dead reckon."""
    frames = resample_to_encoder(frames, encoder)
    speeds = None
    if compensate:
        t = [e.t for e in encoder]
        speeds = []
        for k, e in enumerate(encoder):
            dt = (t[k + 1] - t[k]) if k + 1 < len(t) else (t[k] - t[k - 1] if len(t) > 1 else 0.01)
            speeds.append(spool_to_length(e.delta_theta, r_spool_base, eversion_factor) / dt)
    orientations = fuse_orientation(frames, gain=gain, q0=q0, forward_speed=speeds, mag_ref=mag_ref)
    accel = [f.a_B for f in frames] if mode == "velocity" else None
    return dead_reckon(encoder, orientations, mode=mode, accel_B=accel, start=start,
                       r_spool_base=r_spool_base, eversion_factor=eversion_factor)


def simplify_polyline(points, angle_tol: float = 1e-9) -> np.ndarray:
    """Drop interior vertices where consecutive directions are collinear.

    Merging exactly-collinear runs leaves every point-to-polyline distance
    unchanged; angle_tol bounds the accepted direction deviation in radians.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) <= 2:
        return pts
    keep = [0]
    for i in range(1, len(pts) - 1):
        u = pts[i] - pts[keep[-1]]
        v = pts[i + 1] - pts[i]
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu == 0.0 or nv == 0.0:
            continue
        if np.linalg.norm(np.cross(u / nu, v / nv)) > angle_tol:
            keep.append(i)
    keep.append(len(pts) - 1)
    return pts[keep]


def tracking_error(estimate, reference) -> TrackingErrorReport:
    """Per-sample distance from the estimate to the reference polyline.

    Segment-wise projection onto the reference; mean and (population)
    standard deviation over all estimate samples.
    """
    pts = estimate.positions if isinstance(estimate, TrajectoryEstimate) else np.asarray(estimate, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if len(ref) == 0 or len(pts) == 0:
        raise ValueError("estimate and reference must be non-empty")
    if len(ref) == 1:
        d = np.linalg.norm(pts - ref[0], axis=1)
        return TrackingErrorReport(float(np.mean(d)), float(np.std(d)), d)
    ref = simplify_polyline(ref)
    a = ref[:-1]
    ab = ref[1:] - a
    denom = np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300)
    per = np.empty(len(pts))
    chunk = max(16, int(2.0e6 / max(1, len(a))))
    for lo in range(0, len(pts), chunk):
        p = pts[lo : lo + chunk]
        rel = p[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("pse,se->ps", rel, ab) / denom, 0.0, 1.0)
        c = a[None, :, :] + t[:, :, None] * ab[None, :, :]
        d2 = np.einsum("pse,pse->ps", p[:, None, :] - c, p[:, None, :] - c)
        per[lo : lo + chunk] = np.sqrt(d2.min(axis=1))
    return TrackingErrorReport(float(np.mean(per)), float(np.std(per)), per)


class StreamingLocalizer:
    """Incremental pipeline front-end for live telemetry.

    A single owner calls process(); producers may enqueue from other
    contexts through feed(), which appends to a thread-safe deque.  The
    latest estimate is published as an immutable snapshot tuple swapped
    atomically, so readers never need a lock.
    """

    def __init__(self, q0=quat.IDENTITY, start=(0.0, 0.0, 0.0), gain: float = DEFAULT_GAIN,
                 r_spool_base: float = 0.02, eversion_factor: float = DEFAULT_EVERSION_FACTOR,
                 mag_ref=DEFAULT_MAG_REF):
        self._queue = deque()
        self._gain = gain
        self._mag_ref = _normalize3(mag_ref)
        self._r_spool = r_spool_base
        self._factor = eversion_factor
        self._q = quat.normalize(q0)
        self._pos = tuple(float(v) for v in start)
        self._t_last = None
        self._snapshot = (0.0, self._pos, self._q)
        self.history = [self._snapshot]

    def feed(self, frame: SensorFrame, sample: EncoderSample):
        self._queue.append((frame, sample))

    def process(self):
        """Drain queued samples; returns the number consumed."""
        n = 0
        while self._queue:
            frame, sample = self._queue.popleft()
            self._step(frame, sample)
            n += 1
        return n

    def _step(self, frame: SensorFrame, sample: EncoderSample):
        dt = 0.01 if self._t_last is None else max(1e-6, frame.t - self._t_last)
        self._t_last = frame.t
        dl = spool_to_length(sample.delta_theta, self._r_spool, self._factor)
        fused = fuse_orientation(
            [SensorFrame(0.0, frame.omega_B, frame.a_B, frame.m_B)],
            gain=self._gain,
            q0=self._q,
            mag_ref=self._mag_ref,
        )
        # correction from the single-frame filter, then manual gyro
        # propagation so the next step starts from the post-rate attitude
        q_corr = fused[0]
        h = quat.rotate(q_corr, FORWARD_AXIS)
        self._pos = (
            self._pos[0] + dl * h[0],
            self._pos[1] + dl * h[1],
            self._pos[2] + dl * h[2],
        )
        wx, wy, wz = frame.omega_B
        self._q = quat.normalize(
            quat.multiply(q_corr, quat.from_rotvec((wx * dt, wy * dt, wz * dt)))
        )
        snap = (frame.t, self._pos, q_corr)
        self._snapshot = snap
        self.history.append(snap)

    @property
    def snapshot(self):
        """Latest (t, position, orientation); lock-free read."""
        return self._snapshot


def write_imu_csv(path, frames):
    """IMU log: header t,omega_x,omega_y,omega_z,a_x,a_y,a_z,m_x,m_y,m_z."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "omega_x", "omega_y", "omega_z", "a_x", "a_y", "a_z", "m_x", "m_y", "m_z"])
        for fr in frames:
            w.writerow([repr(float(v)) for v in (fr.t, *fr.omega_B, *fr.a_B, *fr.m_B)])


def read_imu_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    out = []
    for row in rows[1:]:
        vals = [float(v) for v in row]
        out.append(SensorFrame(vals[0], tuple(vals[1:4]), tuple(vals[4:7]), tuple(vals[7:10])))
    return out


def write_encoder_csv(path, samples):
    """Encoder log: header t,delta_theta."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "delta_theta"])
        for s in samples:
            w.writerow([repr(float(s.t)), repr(float(s.delta_theta))])


def read_encoder_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    return [EncoderSample(float(r[0]), float(r[1])) for r in rows[1:]]


def write_trajectory_ndjson(path, estimate: TrajectoryEstimate):
    """Trajectory output: one JSON record {t, p, q} per line."""
    with open(path, "w") as f:
        for k in range(len(estimate.times)):
            rec = {
                "t": float(estimate.times[k]),
                "p": [float(v) for v in estimate.positions[k]],
                "q": [float(v) for v in estimate.quaternions[k]],
            }
            f.write(json.dumps(rec) + "\n")


def read_trajectory_ndjson(path):
    times, positions, quats = [], [], []
    with open(path) as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            times.append(rec["t"])
            positions.append(rec["p"])
            quats.append(tuple(rec["q"]))
    velocities = np.zeros((len(times), 3))
    return TrajectoryEstimate(np.array(times), np.array(positions), velocities, quats)
