"""Quasi-static force and torque analysis of the steered tip section.

The tip hangs on a 6-DOF spring-damper soft joint and is loaded by tendon
pull, gravity, body propulsion, environment contact, and a centrifugal term.
Balance residuals are zero when the corresponding published balance holds.
Units: N, N*m, m, kg, rad throughout.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import DeviceGeometry

STALL_TORQUE = 13.0e-3  # N*m at 3.3 V drive


def _zeros3():
    return np.zeros(3)


@dataclass(frozen=True)
class TipInertia:
    """Mass properties and moment arms of the tip section.

    r_t, r_G, r_e are the arms from the active-joint frame origin to the
    tendon attachment, the center of mass, and the environment contact.
    """

    m: float = 0.05
    I: np.ndarray = field(default_factory=lambda: 1e-5 * np.eye(3))
    r_t: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.018, 0.02]))
    r_G: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.044]))
    r_e: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.0883]))

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError("tip mass must be positive")
        I = np.asarray(self.I, dtype=float)
        if not np.allclose(I, I.T) or np.any(np.linalg.eigvalsh(I) <= 0):
            raise ValueError("inertia must be symmetric positive definite")


@dataclass(frozen=True)
class SoftJointParams:
    """Diagonal spring/damper constants of the soft joint.

    Defaults are zero: the molded joint's stiffness is negligible next to
    the other load terms, and the simplified balances drop it.
    """

    k_x: float = 0.0
    k_y: float = 0.0
    k_z: float = 0.0
    b_x: float = 0.0
    b_y: float = 0.0
    b_z: float = 0.0
    k_theta: float = 0.0
    k_beta: float = 0.0
    k_gamma: float = 0.0
    b_theta: float = 0.0
    b_beta: float = 0.0
    b_gamma: float = 0.0

    def __post_init__(self):
        for name, v in self.__dict__.items():
            if v < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class BodyState:
    """Internal pressure (Pa) and cross-sectional area (m^2) of the body."""

    P_b: float = 5500.0
    A_b: float = math.pi * 0.025**2

    def __post_init__(self):
        if self.P_b < 0 or self.A_b <= 0:
            raise ValueError("need P_b >= 0 and A_b > 0")


@dataclass
class ForceBreakdown:
    """Individual load terms acting on the tip section."""

    G: np.ndarray = field(default_factory=_zeros3)
    F_t: np.ndarray = field(default_factory=_zeros3)
    F_e: np.ndarray = field(default_factory=_zeros3)
    F_p: np.ndarray = field(default_factory=_zeros3)
    F_c: np.ndarray = field(default_factory=_zeros3)
    F_s_linear: np.ndarray = field(default_factory=_zeros3)
    F_d_linear: np.ndarray = field(default_factory=_zeros3)
    tau_e: np.ndarray = field(default_factory=_zeros3)
    tau_s_rot: np.ndarray = field(default_factory=_zeros3)
    tau_d_rot: np.ndarray = field(default_factory=_zeros3)
    tau_m: float = 0.0


def propulsion_force(body: BodyState) -> float:
    """Eversion propulsion along the growth axis: half of pressure * area."""
    return 0.5 * body.P_b * body.A_b


def centrifugal_term(geom: DeviceGeometry, joint_rates) -> float:
    """Centrifugal load of the rotating tip frame.

    Evaluates 0.5 * (L2/2 + h) * (theta_dot^2 + beta_dot^2 + gamma_dot^2)
    verbatim; note the expression carries units of length * rate^2, so it is
    used for relative comparisons only, never absolute-force checks.
    """
    td, bd, gd = joint_rates
    return 0.5 * (geom.L2 / 2.0 + geom.h) * (td * td + bd * bd + gd * gd)


def spring_damper_reaction(params: SoftJointParams, linear_def, linear_rate, rot_def, rot_rate):
    """Elementwise diagonal spring/damper reactions.

    Returns (F_s, F_d, tau_s, tau_d) for linear deformation/rate and
    rotational deformation/rate triples.
    """
    ks = np.array([params.k_x, params.k_y, params.k_z])
    bs = np.array([params.b_x, params.b_y, params.b_z])
    kr = np.array([params.k_theta, params.k_beta, params.k_gamma])
    br = np.array([params.b_theta, params.b_beta, params.b_gamma])
    return (
        ks * np.asarray(linear_def, dtype=float),
        bs * np.asarray(linear_rate, dtype=float),
        kr * np.asarray(rot_def, dtype=float),
        br * np.asarray(rot_rate, dtype=float),
    )


def force_residual(breakdown: ForceBreakdown, inertia: TipInertia, accel) -> np.ndarray:
    """m*a minus the sum of all translational load terms; zero at balance."""
    total = (
        breakdown.G
        + breakdown.F_t
        + breakdown.F_e
        + breakdown.F_p
        + breakdown.F_c
        + breakdown.F_s_linear
        + breakdown.F_d_linear
    )
    return inertia.m * np.asarray(accel, dtype=float) - total


def torque_residual(breakdown: ForceBreakdown, inertia: TipInertia, ang_accel) -> np.ndarray:
    """I*alpha minus all moment terms about the joint frame; zero at balance."""
    total = (
        breakdown.tau_e
        + np.cross(inertia.r_t, breakdown.F_t)
        + np.cross(inertia.r_G, breakdown.G)
        + np.cross(inertia.r_e, breakdown.F_e)
        + breakdown.tau_s_rot
        + breakdown.tau_d_rot
    )
    return np.asarray(inertia.I, dtype=float) @ np.asarray(ang_accel, dtype=float) - total


def blocked_tendon_force(tau_m: float, r_m: float) -> float:
    """Tendon force at motor stall: stall torque over spool radius."""
    if r_m <= 0:
        raise ValueError("spool radius must be positive")
    return tau_m / r_m


def max_liftable_tip_mass(tau_m: float, r_m: float, inertia: TipInertia, g: float = 9.81) -> float:
    """Largest tip mass the tendon can hold quasi-statically.

    Lever balance |r_t| * F_t >= |r_G| * m * g with propulsion, centrifugal
    and joint-stiffness terms dropped (slow rotation, soft joint).
    """
    if tau_m < 0 or r_m <= 0 or g <= 0:
        raise ValueError("need tau_m >= 0, r_m > 0, g > 0")
    arm_t = float(np.linalg.norm(inertia.r_t))
    arm_g = float(np.linalg.norm(inertia.r_G))
    if arm_t == 0.0 or arm_g == 0.0:
        raise ValueError("moment arms must be nonzero")
    return arm_t * blocked_tendon_force(tau_m, r_m) / (arm_g * g)


def blocked_force_trace(
    tau_m: float = STALL_TORQUE,
    r_m: float = DeviceGeometry().r_m,
    period: float = 15.0,
    duty: float = 0.667,
    pulses: int = 4,
    dt: float = 0.05,
    tip_weight: float = 0.0,
    g: float = 9.81,
):
    """Simulated repeated-pulse blocked-force measurement.

    A PWM burst of the given period/duty drives the spool against a rigid
    constraint; the z channel carries tau_m / r_m during each burst while x/y
    stay at zero (cross-axis leakage is a hardware artifact, not modeled).
    The returned forces are gravity-compensated: the raw sensor sees the tip
    weight in -z, and exactly that contribution is subtracted back out.
    Returns (t, fx, fy, fz, ftotal) arrays.
    """
    t = np.arange(0.0, pulses * period + dt / 2, dt)
    on = (t % period) < duty * period
    peak = blocked_tendon_force(tau_m, r_m)
    raw_fz = np.where(on, peak, 0.0) - tip_weight * g
    fz = raw_fz + tip_weight * g  # gravity compensation
    fx = np.zeros_like(t)
    fy = np.zeros_like(t)
    ftotal = np.sqrt(fx**2 + fy**2 + fz**2)
    return t, fx, fy, fz, ftotal


def write_blocked_force_csv(path, t, fx, fy, fz, ftotal):
    """Trace exporter: header t_s,fx_N,fy_N,fz_N,ftotal_N."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t_s", "fx_N", "fy_N", "fz_N", "ftotal_N"])
        for row in zip(t, fx, fy, fz, ftotal):
            w.writerow([repr(float(v)) for v in row])
