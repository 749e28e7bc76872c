"""Quasi-static growth-and-steering simulator.

The tip advances by eversion along its steered heading inside a pipe
network, the body trails the tip's path, and synthetic IMU/encoder streams
are emitted consistently with the realized motion.  One logical owner steps
the simulation; snapshots handed out are immutable.

Conventions: global frame z-up; the unbent device axis tracks the local pipe
tangent; the device reference x axis points toward global up (rolled by the
disturbance angle gamma when unbraced), and positive joint theta bends the
tip toward -y of the device frame.
"""

import json
import math
import random
from dataclasses import dataclass

import numpy as np

from . import quat
from .environment import PipeNetwork, preset_course, BURROW_TEMP_C, BURROW_RH_PCT
from .kinematics import DeviceGeometry, RotationAngles, TendonState, tendon_to_joint
from .localization import (
    DEFAULT_EVERSION_FACTOR,
    EncoderSample,
    SensorFrame,
    GRAVITY,
    DEFAULT_MAG_REF,
)

MOTOR_LEFT, MOTOR_RIGHT, MOTOR_UP, MOTOR_BRACE, MOTOR_GROW = 0, 1, 2, 3, 4
BRACED_ENVELOPE = 0.061  # extended bracing-leg outside diameter, m


@dataclass(frozen=True)
class MotorCommand:
    """One actuation command: motor index, PWM duty percent, duration."""

    motor: int
    duty: float
    duration: float

    def __post_init__(self):
        if self.motor not in (0, 1, 2, 3, 4):
            raise ValueError(f"motor index {self.motor} out of range 0..4")
        if not -100 <= self.duty <= 100:
            raise ValueError("duty must lie in [-100, 100]")
        if self.duration <= 0:
            raise ValueError("duration must be positive")


@dataclass(frozen=True)
class NoiseModel:
    """Synthetic sensor noise: densities in per-root-Hz units, bias constant.

    Defaults approximate a commodity MEMS IMU and a coarse base encoder.
    """

    gyro_bias: float = 0.002
    gyro_sigma: float = 0.005
    accel_sigma: float = 0.05
    mag_sigma: float = 0.5
    encoder_quantization: float = 0.01

    def __post_init__(self):
        if min(self.gyro_sigma, self.accel_sigma, self.mag_sigma, self.encoder_quantization) < 0:
            raise ValueError("noise magnitudes must be non-negative")

    @classmethod
    def noiseless(cls):
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    growth_rate: float = 0.02        # m/s at 100% duty
    spool_rate: float = 2.0          # rad/s at 100% duty
    min_growth_pressure: float = 1000.0   # Pa; below this the body cannot evert
    default_pressure: float = 5500.0      # Pa at deployment
    relax_tau: float = 0.5           # s, slack-joint conformance time constant
    roll_drift: float = math.radians(2.5)  # rad/s unbraced reaction twist
    roll_sigma: float = 0.08         # rad/sqrt(s) unbraced roll random walk
    roll_settle_tau: float = 1.0     # s, gravity re-settling of the roll angle
    restore_gain: float = 20.0       # 1/m, heading pull toward the centerline
    body_area: float = math.pi * 0.025**2


@dataclass(frozen=True)
class RobotState:
    """Immutable snapshot of the simulated robot."""

    t: float
    everted_length: float
    tip_position: tuple
    orientation: tuple
    joint: RotationAngles
    tendons: TendonState
    braced: bool
    partial_grip: bool
    motion_blocked: bool
    pressure: float
    roll: float
    segment_id: str


@dataclass
class ScenarioResult:
    """Everything one scenario run produced.

    ground_truth is the realized body path; orientations/step_lengths/
    pos_history are the raw per-interval histories the sensor streams were
    synthesized from (kept so noise studies can re-synthesize without
    re-running the simulation).
    """

    preset: str
    seed: int
    states: list
    frames: list
    encoder: list
    ground_truth: np.ndarray
    network: PipeNetwork
    junction_events: list
    orientations: list
    step_lengths: list
    pos_history: list
    dt: float
    temperature: np.ndarray = None
    humidity: np.ndarray = None

    @property
    def initial_orientation(self):
        return self.orientations[0]

    @property
    def start_position(self):
        return self.ground_truth[0]


def _norm3(v):
    return math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def _unit(v):
    n = _norm3(v)
    return (v[0] / n, v[1] / n, v[2] / n)


class Simulator:
    """Single-owner simulation loop over an optional pipe network."""

    def __init__(self, network: PipeNetwork = None, config: SimConfig = None,
                 geometry: DeviceGeometry = None, seed: int = 0):
        self.network = network
        self.config = config or SimConfig()
        self.geometry = geometry or DeviceGeometry()
        self.rng = random.Random(seed)
        self.seed = seed
        self.t = 0.0
        self.phi = [0.0, 0.0, 0.0]
        self.theta = 0.0
        self.beta = 0.0
        self.roll = 0.0
        self.braced = False
        self.partial_grip = True
        self.motion_blocked = False
        self.pressure = self.config.default_pressure
        self.everted = 0.0
        self.junction_events = []
        self._events = []          # (t_start, MotorCommand) in arrival order
        self._event_ptr = 0
        self._started = {}         # motor -> latest started (t_start, cmd)
        self._pressure_events = []  # (t, pascals)
        # per-segment plain-float tables keep the step loop off numpy
        self._seg = {}
        if network is not None:
            for sid, s in network.segments.items():
                terminal = not network.successors_of(sid) and network.junction_after(sid) is None
                self._seg[sid] = (
                    tuple(float(v) for v in s.start),
                    tuple(float(v) for v in s.direction),
                    s.length,
                    0.5 * s.diameter,
                    terminal,
                )
            entry = network.segments[network.entry]
            self.pos = tuple(float(v) for v in entry.start)
            self._seg_id = entry.id
            base_dir = tuple(float(v) for v in entry.direction)
        else:
            self.pos = (0.0, 0.0, 0.0)
            self._seg_id = None
            base_dir = (1.0, 0.0, 0.0)
        self._base_dir = base_dir
        self._last_x_axis = None
        self.body_path = [self.pos]       # movement vertices only
        self.pos_history = [self.pos]     # tip position at every interval edge
        self.step_lengths = []
        self.orient_history = []
        self._time_hist = []

    # -- command scheduling ------------------------------------------------

    def schedule(self, command: MotorCommand, t_start: float):
        self._events.append((float(t_start), command))
        self._events.sort(key=lambda e: e[0])
        self._event_ptr = 0
        self._started.clear()

    def schedule_pressure(self, pascals: float, t_start: float):
        self._pressure_events.append((float(t_start), float(pascals)))
        self._pressure_events.sort(key=lambda e: e[0])

    def enqueue_command(self, command: MotorCommand):
        """Teleop entry: the command starts at the current simulation time.

        A new command for a busy motor supersedes the in-flight one.
        """
        self._events.append((self.t, command))

    def _active_commands(self):
        # later events supersede earlier ones for the same motor
        while self._event_ptr < len(self._events) and self._events[self._event_ptr][0] <= self.t + 1e-12:
            t_start, cmd = self._events[self._event_ptr]
            self._started[cmd.motor] = (t_start, cmd)
            self._event_ptr += 1
        out = {}
        for motor, (t_start, cmd) in self._started.items():
            if self.t < t_start + cmd.duration - 1e-12:
                out[motor] = cmd
        return out

    # -- frames ------------------------------------------------------------

    def _device_frame(self, base_dir):
        """Columns (x, y, z) of the device base frame: z along the unbent
        axis, x toward global up rolled by gamma."""
        z = _unit(base_dir)
        ux, uy, uz = 0.0, 0.0, 1.0
        d = z[0] * ux + z[1] * uy + z[2] * uz
        xr = (ux - d * z[0], uy - d * z[1], uz - d * z[2])
        n = _norm3(xr)
        if n < 1e-9:
            xr = self._last_x_axis or (1.0, 0.0, 0.0)
            n = _norm3(xr)
        x = (xr[0] / n, xr[1] / n, xr[2] / n)
        if self.roll != 0.0:
            c, s = math.cos(self.roll), math.sin(self.roll)
            # rotate x about z by the roll angle
            zx = (z[1] * x[2] - z[2] * x[1], z[2] * x[0] - z[0] * x[2], z[0] * x[1] - z[1] * x[0])
            x = (x[0] * c + zx[0] * s, x[1] * c + zx[1] * s, x[2] * c + zx[2] * s)
        self._last_x_axis = x
        y = (z[1] * x[2] - z[2] * x[1], z[2] * x[0] - z[0] * x[2], z[0] * x[1] - z[1] * x[0])
        return x, y, z

    def _tip_heading(self, base_dir):
        x, y, z = self._device_frame(base_dir)
        st, ct = math.sin(self.theta), math.cos(self.theta)
        sb, cb = math.sin(self.beta), math.cos(self.beta)
        bx, by, bz = sb * ct, -st, cb * ct
        return (
            x[0] * bx + y[0] * by + z[0] * bz,
            x[1] * bx + y[1] * by + z[1] * bz,
            x[2] * bx + y[2] * by + z[2] * bz,
        ), (x, y, z)

    def _orientation_quat(self, frame):
        x, y, z = frame
        st, ct = math.sin(self.theta), math.cos(self.theta)
        sb, cb = math.sin(self.beta), math.cos(self.beta)
        # base frame times the joint bend rotation Ry(beta) @ Rx(theta)
        bend = (
            (cb, sb * st, sb * ct),
            (0.0, ct, -st),
            (-sb, cb * st, cb * ct),
        )
        m = tuple(
            tuple(
                x[r] * bend[0][c] + y[r] * bend[1][c] + z[r] * bend[2][c]
                for c in range(3)
            )
            for r in range(3)
        )
        return quat.from_matrix(m)

    # -- geometry helpers ---------------------------------------------------

    def _local_diameter(self):
        if self.network is None or self._seg_id is None:
            return math.inf
        return 2.0 * self._seg[self._seg_id][3]

    def _hint_ids(self):
        hints = [self._seg_id]
        j = self.network.junction_after(self._seg_id)
        if j is not None:
            hints.extend(j.branch_ids)
        else:
            hints.extend(self.network.successors_of(self._seg_id))
        return hints

    def _inside(self, p):
        if self.network is None:
            return True
        for sid in self._hint_ids():
            a, d, L, r, terminal = self._seg[sid]
            px, py, pz = p[0] - a[0], p[1] - a[1], p[2] - a[2]
            t = px * d[0] + py * d[1] + pz * d[2]
            if terminal and t > L:
                continue  # a blind pipe end is a wall, not a rounded cap
            t = L if t > L else (0.0 if t < 0.0 else t)
            dx, dy, dz = px - t * d[0], py - t * d[1], pz - t * d[2]
            if dx * dx + dy * dy + dz * dz <= r * r:
                return True
        return False

    def _nearest_axis_point(self, p):
        a, d, L, _, _ = self._seg[self._seg_id]
        t = (p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1] + (p[2] - a[2]) * d[2]
        t = L if t > L else (0.0 if t < 0.0 else t)
        return (a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]), t, L

    # -- bracing -----------------------------------------------------------

    def set_bracing(self, engaged: bool):
        """Extend or retract the stabilizing legs.

        With legs out, grip requires wall contact: in pipes wider than the
        61 mm extended envelope the legs spin free and the partial-grip flag
        records it (expansion force is not modeled).
        """
        self.braced = bool(engaged)
        if engaged:
            self.partial_grip = self._local_diameter() > BRACED_ENVELOPE
        else:
            self.partial_grip = True
        return self.snapshot()

    # -- main loop ----------------------------------------------------------

    def step(self, active_commands=None):
        """Advance one time slice dt under the given commands.

        When active_commands is None, the internal schedule provides them.
        """
        cfg = self.config
        dt = cfg.dt
        commands = self._active_commands() if active_commands is None else {
            c.motor: c for c in active_commands
        }
        while self._pressure_events and self._pressure_events[0][0] <= self.t + 1e-12:
            _, pa = self._pressure_events.pop(0)
            self.pressure = pa

        # bracing motor: sign selects extend/retract
        if MOTOR_BRACE in commands:
            self.set_bracing(commands[MOTOR_BRACE].duty > 0)

        # steering spools wind at a duty-scaled rate, saturating at full bend
        phi_max = self.geometry.phi_full_bend
        for j in (0, 1, 2):
            if j in commands:
                self.phi[j] += cfg.spool_rate * (commands[j].duty / 100.0) * dt
                self.phi[j] = min(max(self.phi[j], 0.0), phi_max)

        # taut tendons pin the joint through the spool map; slack axes relax
        # exponentially toward the pipe axis
        decay = math.exp(-dt / cfg.relax_tau)
        q0 = tendon_to_joint(self.phi[0], 0, self.geometry)
        q1 = tendon_to_joint(self.phi[1], 1, self.geometry)
        if self.phi[0] > 1e-12 or self.phi[1] > 1e-12:
            a = self.geometry.alpha_max
            self.theta = min(a, max(-a, -(q0 + q1)))
        else:
            self.theta *= decay
        if self.phi[2] > 1e-12:
            self.beta = min(self.geometry.alpha_max, tendon_to_joint(self.phi[2], 2, self.geometry))
        else:
            self.beta *= decay

        # unbraced out-of-plane steering twists the unanchored body: the
        # winding reaction drifts the roll angle with a seeded random walk
        grip = self.braced and not self.partial_grip
        if not grip and self.phi[2] > 1e-12:
            self.roll += cfg.roll_drift * dt + cfg.roll_sigma * math.sqrt(dt) * self.rng.gauss(0.0, 1.0)
        elif not self.braced:
            self.roll *= math.exp(-dt / cfg.roll_settle_tau)

        # growth: pressure-gated eversion along the steered heading
        requested = 0.0
        if MOTOR_GROW in commands and self.pressure >= cfg.min_growth_pressure:
            requested = cfg.growth_rate * max(0.0, commands[MOTOR_GROW].duty) / 100.0 * dt

        step_dir = None
        realized = 0.0
        if requested > 0.0:
            self.motion_blocked = False
            base = self._base_dir
            if self.network is not None:
                nearest, _, _ = self._nearest_axis_point(self.pos)
                g = cfg.restore_gain
                base = _unit(
                    (
                        base[0] + g * (nearest[0] - self.pos[0]),
                        base[1] + g * (nearest[1] - self.pos[1]),
                        base[2] + g * (nearest[2] - self.pos[2]),
                    )
                )
            heading, _ = self._tip_heading(base)
            p_try = (
                self.pos[0] + requested * heading[0],
                self.pos[1] + requested * heading[1],
                self.pos[2] + requested * heading[2],
            )
            if self._inside(p_try):
                new_pos = p_try
                step_dir = heading
            else:
                # wall contact: slide along the tube axis instead
                p_axial = (
                    self.pos[0] + requested * base[0],
                    self.pos[1] + requested * base[1],
                    self.pos[2] + requested * base[2],
                )
                if self._inside(p_axial):
                    new_pos = p_axial
                    step_dir = base
                else:
                    new_pos = None
                    self.motion_blocked = True
            if new_pos is not None:
                realized = requested
                self.pos = new_pos
                self.everted += realized
                self.body_path.append(new_pos)
                self._advance_route(step_dir)

        if step_dir is None:
            _, frame = self._tip_heading(self._base_dir)
            q = self._orientation_quat(frame)
        else:
            # the emitted orientation's forward axis is the realized step
            # direction, exactly what dead reckoning integrates
            q = self._orientation_quat_for_dir(step_dir)

        self.pos_history.append(self.pos)
        self.step_lengths.append(realized)
        self.orient_history.append(q)
        self._time_hist.append(self.t)
        self.t += dt

    def _orientation_quat_for_dir(self, direction):
        saved_theta, saved_beta = self.theta, self.beta
        self.theta = 0.0
        self.beta = 0.0
        frame = self._device_frame(direction)
        q = self._orientation_quat(frame)
        self.theta, self.beta = saved_theta, saved_beta
        return q

    def _advance_route(self, step_dir):
        if self.network is None:
            self._base_dir = step_dir
            return
        while True:
            a, d, L, _, _ = self._seg[self._seg_id]
            t_along = (
                (self.pos[0] - a[0]) * d[0]
                + (self.pos[1] - a[1]) * d[1]
                + (self.pos[2] - a[2]) * d[2]
            )
            if t_along < L - 1e-12:
                break
            j = self.network.junction_after(self._seg_id)
            if j is not None:
                heading, _ = self._tip_heading(self._base_dir)
                best, best_dot = None, -2.0
                for bid in j.branch_ids:
                    bd = self._seg[bid][1]
                    dot = heading[0] * bd[0] + heading[1] * bd[1] + heading[2] * bd[2]
                    if dot > best_dot:
                        best, best_dot = bid, dot
                label = j.branch_labels[j.branch_ids.index(best)]
                self.junction_events.append(
                    {"junction": j.id, "branch": best, "label": label,
                     "t": self.t, "roll": self.roll}
                )
                self._seg_id = best
            else:
                nxt = self.network.successors_of(self._seg_id)
                if not nxt:
                    break  # dead end: containment will block further growth
                self._seg_id = nxt[0]
            self._base_dir = self._seg[self._seg_id][1]

    def run(self, duration: float):
        """Step the internal schedule for the given sim-time span."""
        n = int(round(duration / self.config.dt))
        for _ in range(n):
            self.step()
        return self.snapshot()

    def snapshot(self) -> RobotState:
        _, frame = self._tip_heading(self._base_dir)
        return RobotState(
            t=self.t,
            everted_length=self.everted,
            tip_position=self.pos,
            orientation=self._orientation_quat(frame),
            joint=RotationAngles(theta=self.theta, beta=self.beta, gamma=self.roll, frame=3),
            tendons=TendonState(tuple(self.phi)),
            braced=self.braced,
            partial_grip=self.partial_grip,
            motion_blocked=self.motion_blocked,
            pressure=self.pressure,
            roll=self.roll,
            segment_id=self._seg_id,
        )


# -- synthetic sensors -------------------------------------------------------


def synth_imu(orientations, positions, dt: float, noise: NoiseModel = None,
              seed: int = 0, rate: float = None, g: float = GRAVITY,
              mag_ref=DEFAULT_MAG_REF, initial_velocity=(0.0, 0.0, 0.0)):
    """Generate an IMU stream consistent with a pose history.

    orientations: per-interval unit quaternions (length n); positions:
    interval edges (length n+1).  Angular rate comes from the finite
    difference of orientation, acceleration from the finite difference of
    velocity plus gravity mapped into the body frame, and the magnetic field
    from a fixed reference rotated into the body frame.  Noise is added per
    the model; rate defaults to 1/dt.  initial_velocity seeds the velocity
    difference so windowed emission stays consistent with a longer history.
    """
    n = len(orientations)
    if n < 1 or len(positions) != n + 1:
        raise ValueError("need n orientations and n+1 positions with n >= 1")
    rate = rate or 1.0 / dt
    rng = np.random.default_rng(seed)
    if noise is None:
        noise = NoiseModel.noiseless()
    bias = np.zeros(3)
    if noise.gyro_bias > 0:
        axis = rng.normal(size=3)
        bias = noise.gyro_bias * axis / np.linalg.norm(axis)
    sg = noise.gyro_sigma * math.sqrt(rate)
    sa = noise.accel_sigma * math.sqrt(rate)
    sm = noise.mag_sigma
    frames = []
    prev_u = tuple(float(v) for v in initial_velocity)
    for k in range(n):
        q = orientations[k]
        if k + 1 < n:
            dq = quat.multiply(quat.conjugate(q), orientations[k + 1])
            rv = quat.to_rotvec(dq)
            w = (rv[0] / dt, rv[1] / dt, rv[2] / dt)
        else:
            w = (0.0, 0.0, 0.0)
        u = (
            (positions[k + 1][0] - positions[k][0]) / dt,
            (positions[k + 1][1] - positions[k][1]) / dt,
            (positions[k + 1][2] - positions[k][2]) / dt,
        )
        a_g = (
            (u[0] - prev_u[0]) / dt,
            (u[1] - prev_u[1]) / dt,
            (u[2] - prev_u[2]) / dt - g,
        )
        a_b = quat.rotate_inv(q, a_g)
        m_b = quat.rotate_inv(q, mag_ref)
        if noise.gyro_sigma > 0 or noise.gyro_bias > 0:
            w = (
                w[0] + bias[0] + sg * rng.standard_normal(),
                w[1] + bias[1] + sg * rng.standard_normal(),
                w[2] + bias[2] + sg * rng.standard_normal(),
            )
        if noise.accel_sigma > 0:
            a_b = (
                a_b[0] + sa * rng.standard_normal(),
                a_b[1] + sa * rng.standard_normal(),
                a_b[2] + sa * rng.standard_normal(),
            )
        if noise.mag_sigma > 0:
            m_b = (
                m_b[0] + sm * rng.standard_normal(),
                m_b[1] + sm * rng.standard_normal(),
                m_b[2] + sm * rng.standard_normal(),
            )
        frames.append(SensorFrame(k * dt, w, a_b, m_b))
        prev_u = u
    return frames


def synth_encoder(step_lengths, dt: float, noise: NoiseModel = None,
                  r_spool_base: float = 0.02,
                  eversion_factor: float = DEFAULT_EVERSION_FACTOR):
    """Encoder stream for per-interval tip advances.

    Quantization accumulates a remainder so the total released material is
    preserved; zero quantization reproduces the advances exactly.
    """
    if noise is None:
        noise = NoiseModel.noiseless()
    quant = noise.encoder_quantization
    samples = []
    carry = 0.0
    for k, dl in enumerate(step_lengths):
        theta = dl * eversion_factor / r_spool_base + carry
        if quant > 0:
            ticks = math.floor(theta / quant)
            emitted = ticks * quant
            carry = theta - emitted
        else:
            emitted = theta
            carry = 0.0
        samples.append(EncoderSample(k * dt, emitted))
    return samples


# -- scenario runner ----------------------------------------------------------


def default_script(preset: str, config: SimConfig = None, network: PipeNetwork = None):
    """Motor/pressure schedule reproducing each demonstration scenario."""
    cfg = config or SimConfig()
    v = cfg.growth_rate
    if preset in ("pipe3d-45", "burrow-field"):
        total = (network or preset_course(preset)).total_length()
        return {
            "schedule": [
                {"t_start": 0.0, "motor": MOTOR_GROW, "duty": 100, "duration": total / v + 3.0}
            ]
        }
    if preset == "branch2d-7":
        # per junction: approach to 5 cm short, stop, wind the turn-side
        # tendon, creep through the branch, release, repeat
        sched = []
        t = 0.0
        wind = 5.0
        for k in range(7):
            leg = 0.10 if k == 0 else 0.05
            sched.append({"t_start": t, "motor": MOTOR_GROW, "duty": 100, "duration": leg / v})
            t += leg / v + 0.5
            sched.append({"t_start": t, "motor": MOTOR_RIGHT, "duty": 100, "duration": wind})
            t += wind + 0.5
            sched.append({"t_start": t, "motor": MOTOR_GROW, "duty": 50, "duration": 0.1 / (0.5 * v)})
            t += 0.1 / (0.5 * v) + 0.5
            sched.append({"t_start": t, "motor": MOTOR_RIGHT, "duty": -100, "duration": wind + 0.5})
            t += wind + 1.0
        sched.append({"t_start": t, "motor": MOTOR_GROW, "duty": 100, "duration": 0.06 / v})
        return {"schedule": sched}
    if preset == "climb45":
        # grow to just short of the elbow, then the anti-gravity timeline:
        # depressurize, brace, steer up, re-pressurize and propel, release
        t0 = 0.44 / v + 2.0
        sched = [
            {"t_start": 0.0, "motor": MOTOR_GROW, "duty": 100, "duration": 0.44 / v},
            {"t_start": t0, "pressure_kpa": 0.0},
            {"t_start": t0 + 10.0, "motor": MOTOR_BRACE, "duty": 100, "duration": 1.0},
            {"t_start": t0 + 20.0, "motor": MOTOR_UP, "duty": 100, "duration": 6.0},
            {"t_start": t0 + 79.0, "pressure_kpa": 5.5},
            {"t_start": t0 + 79.0, "motor": MOTOR_GROW, "duty": 100, "duration": 0.30 / v},
            {"t_start": t0 + 79.0 + 0.30 / v + 1.0, "motor": MOTOR_UP, "duty": -100, "duration": 7.0},
            {"t_start": t0 + 79.0 + 0.30 / v + 1.0, "motor": MOTOR_BRACE, "duty": -100, "duration": 1.0},
        ]
        return {"schedule": sched}
    raise KeyError(f"unknown preset {preset!r}")


def load_script(source):
    """Scenario script from a JSON mapping/string/path-like."""
    if isinstance(source, dict):
        return source
    text = source if isinstance(source, str) and source.lstrip().startswith("{") else open(source).read()
    return json.loads(text)


def _apply_schedule(sim: Simulator, script: dict):
    for entry in script.get("schedule", []):
        if "pressure_kpa" in entry:
            sim.schedule_pressure(entry["pressure_kpa"] * 1000.0, entry["t_start"])
        else:
            sim.schedule(
                MotorCommand(int(entry["motor"]), float(entry["duty"]), float(entry["duration"])),
                entry["t_start"],
            )


def script_duration(script: dict) -> float:
    end = 0.0
    for entry in script.get("schedule", []):
        end = max(end, entry["t_start"] + entry.get("duration", 0.0))
    return end


def run_scenario(preset: str, noise: NoiseModel = None, script: dict = None,
                 seed: int = 0, config: SimConfig = None,
                 geometry: DeviceGeometry = None, duration: float = None,
                 snapshot_every: int = 50, sensors: bool = True) -> ScenarioResult:
    """Run a preset scenario and emit time-aligned synthetic sensor streams.

    Deterministic for a given (preset, seed, script) triple.  The ground
    truth polyline is the realized body path; sensor streams are generated
    from the realized motion so a noiseless run is exactly reconstructible.
    sensors=False skips stream synthesis for dynamics-only studies.
    """
    cfg = config or SimConfig()
    network = preset_course(preset)
    sim = Simulator(network, cfg, geometry, seed=seed)
    script = script if script is not None else default_script(preset, cfg, network)
    _apply_schedule(sim, script)
    span = duration if duration is not None else script_duration(script) + 1.0
    n = int(round(span / cfg.dt))
    states = [sim.snapshot()]
    for k in range(n):
        sim.step()
        if (k + 1) % snapshot_every == 0 or k == n - 1:
            states.append(sim.snapshot())
    frames = encoder = []
    if sensors:
        frames = synth_imu(sim.orient_history, sim.pos_history, cfg.dt, noise, seed=seed + 1)
        encoder = synth_encoder(sim.step_lengths, cfg.dt, noise)
    temperature = humidity = None
    if preset == "burrow-field" and sensors:
        m = len(frames)
        temperature = np.full(m, BURROW_TEMP_C)
        humidity = np.full(m, BURROW_RH_PCT)
    return ScenarioResult(
        preset=preset,
        seed=seed,
        states=states,
        frames=frames,
        encoder=encoder,
        ground_truth=np.array(sim.body_path),
        network=network,
        junction_events=list(sim.junction_events),
        orientations=list(sim.orient_history),
        step_lengths=list(sim.step_lengths),
        pos_history=list(sim.pos_history),
        dt=cfg.dt,
        temperature=temperature,
        humidity=humidity,
    )
