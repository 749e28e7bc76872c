"""Forward kinematics of the external tip-steering device.

The steered tip is modeled as a prismatic-spherical-spherical chain: the
growing body acts as a prismatic joint, the two silicone joints as spherical
joints.  Frames: {0} robot base, {1} after the prismatic joint, {2} at the
proximal (passive) soft joint, {3} at the distal (active) soft joint.  The
local z axis is the growth axis; all lengths are meters, angles radians.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_CONTAINER_RADIUS = 0.018
_HALF_MAX_BEND_DEG = 26.25  # alpha_max/2 with the stock joint geometry


def _default_h():
    return DEFAULT_CONTAINER_RADIUS * math.tan(math.radians(_HALF_MAX_BEND_DEG))


@dataclass(frozen=True)
class DeviceGeometry:
    """Physical constants of the steering tip.

    h: half height of a soft joint
    r: rigid cylinder container radius
    L2: tip container length
    r_m: steering motor spool radius
    r_spool_base: base material-spool radius (odometry encoder)

    Defaults give an effective radius of 0.0883 m and a maximum bend of
    52.5 deg, matching the characterized device scale.
    """

    h: float = field(default_factory=_default_h)
    r: float = DEFAULT_CONTAINER_RADIUS
    L2: float = 0.0883 - DEFAULT_CONTAINER_RADIUS - math.tan(math.radians(_HALF_MAX_BEND_DEG)) * DEFAULT_CONTAINER_RADIUS
    r_m: float = 13.0e-3 / 7.40  # ~1.757 mm, consistent with the stall-torque/blocked-force pair
    r_spool_base: float = 0.02

    def __post_init__(self):
        for name in ("h", "r", "L2", "r_m", "r_spool_base"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"geometry field {name} must be positive")

    @property
    def alpha_max(self) -> float:
        """Maximum joint bend: the two rigid faces hinged over the joint
        half height h touch at twice the face half-angle atan(h/r)."""
        return 2.0 * math.atan2(self.h, self.r)

    @property
    def r_eff(self) -> float:
        return effective_radius(self)

    @property
    def phi_full_bend(self) -> float:
        """Spool angle winding the tendon to the full bend alpha_max."""
        return 2.0 * self.h / self.r_m

    @property
    def phi_domain_limit(self) -> float:
        """Spool angle beyond which the joint map leaves its domain."""
        return (self.h + math.hypot(self.h, self.r)) / self.r_m


@dataclass(frozen=True)
class RotationAngles:
    """Fixed-angle ZYX rotation of one chain frame.

    theta rotates about x, beta about y, gamma about z. frame is the chain
    index i in {1, 2, 3}.
    """

    theta: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    frame: int = 3

    def validate(self, geom: DeviceGeometry):
        a = geom.alpha_max + 1e-12
        if abs(self.theta) > a or abs(self.beta) > a:
            raise ValueError(
                f"joint angles (theta={self.theta:.4f}, beta={self.beta:.4f}) "
                f"exceed alpha_max={geom.alpha_max:.4f}"
            )
        if not -math.pi < self.gamma <= math.pi:
            raise ValueError("gamma must lie in (-pi, pi]")


@dataclass(frozen=True)
class TendonState:
    """Spool angles of the three steering motors (0: left, 1: right, 2: up)."""

    phi: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if len(self.phi) != 3:
            raise ValueError("expected three spool angles")
        if any(p < 0.0 for p in self.phi):
            raise ValueError("spool angles wind in the positive direction only")


class TendonOverwindError(ValueError):
    """Spool angle outside the arcsine domain of the joint map."""


def rot_x(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(beta: float) -> np.ndarray:
    c, s = math.cos(beta), math.sin(beta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(gamma: float) -> np.ndarray:
    c, s = math.cos(gamma), math.sin(gamma)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_zyx(gamma: float, beta: float, theta: float) -> np.ndarray:
    """Fixed-angle rotation matrix Rz(gamma) @ Ry(beta) @ Rx(theta)."""
    return rot_z(gamma) @ rot_y(beta) @ rot_x(theta)


def orthonormality_residual(rotation: np.ndarray) -> float:
    rotation = np.asarray(rotation, dtype=float)
    return float(np.max(np.abs(rotation.T @ rotation - np.eye(3))))


@dataclass(frozen=True)
class HomogeneousTransform:
    """Rigid transform p -> rotation @ p + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def apply(self, p) -> np.ndarray:
        return self.rotation @ np.asarray(p, dtype=float) + self.translation

    def __matmul__(self, other: "HomogeneousTransform") -> "HomogeneousTransform":
        return HomogeneousTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    @staticmethod
    def identity() -> "HomogeneousTransform":
        return HomogeneousTransform(np.eye(3), np.zeros(3))


def compose_transform(rotation, origin) -> HomogeneousTransform:
    """Build a rigid transform, rejecting non-orthonormal rotation input."""
    rotation = np.asarray(rotation, dtype=float)
    if rotation.shape != (3, 3):
        raise ValueError("rotation must be 3x3")
    if orthonormality_residual(rotation) > 1e-6:
        raise ValueError("rotation matrix is not orthonormal")
    return HomogeneousTransform(rotation, np.asarray(origin, dtype=float))


def effective_radius(geom: DeviceGeometry) -> float:
    """Distance from the active joint center to the steered tip point."""
    return geom.h + geom.L2 + geom.r


def chain_transforms(angles, geom: DeviceGeometry, extension: float = 0.0):
    """Transforms frame {i-1} -> {i} for i = 1..3.

    Link offsets are stacked along the local z axis: the prismatic joint
    contributes the everted length, the proximal module one effective-radius
    stack, and the active joint rotates about its own center (zero offset),
    which keeps the frame-{2} tip locus on the sphere of radius r_eff.
    """
    by_frame = {a.frame: a for a in angles}
    offsets = {1: extension, 2: effective_radius(geom), 3: 0.0}
    out = []
    for i in (1, 2, 3):
        a = by_frame.get(i, RotationAngles(frame=i))
        a.validate(geom)
        r = rot_zyx(a.gamma, a.beta, a.theta)
        out.append(HomogeneousTransform(r, np.array([0.0, 0.0, offsets[i]])))
    return out


def tip_position(angles, geom: DeviceGeometry, k: int = 2, extension: float = 0.0) -> np.ndarray:
    """Steered tip point (0, 0, r_eff in frame {3}) expressed in frame {k}.

    angles: iterable of RotationAngles covering any of frames 1..3; omitted
    frames default to zero rotation.
    """
    if k not in (0, 1, 2, 3):
        raise ValueError("frame index k must be in 0..3")
    transforms = chain_transforms(angles, geom, extension)
    p = np.array([0.0, 0.0, effective_radius(geom)])
    for t in reversed(transforms[k:]):
        p = t.apply(p)
    return p


def _bend_bracket(phi: float, geom: DeviceGeometry) -> float:
    """Unsigned bend magnitude of the joint map.

    Written as a difference of like-formed arcsines (asin(h/hypot) equals
    atan(h/r) analytically) so that phi = 0 maps to exactly 0.0.
    """
    hyp = math.hypot(geom.h, geom.r)
    arg = (geom.h - geom.r_m * phi) / hyp
    if arg < -1.0 or arg > 1.0:
        raise TendonOverwindError(
            f"tendon over-wound: spool angle {phi:.4f} rad leaves the joint-map domain"
        )
    return math.asin(geom.h / hyp) - math.asin(arg)


def tendon_to_joint(phi_j: float, j: int, geom: DeviceGeometry) -> float:
    """Joint angle q_j produced by winding motor j's spool to angle phi_j.

    q_j = (-1)^j * [atan(h/r) - asin((h - r_m*phi_j) / sqrt(h^2 + r^2))].
    Motor 0 drives theta_3 < 0, motor 1 theta_3 > 0, motor 2 beta_3 (the
    signed map from q_j to joint angles lives in tendons_to_joint_angles).
    """
    if j not in (0, 1, 2):
        raise ValueError("motor index must be 0, 1 or 2")
    sign = -1.0 if j % 2 else 1.0
    return sign * _bend_bracket(phi_j, geom)


def joint_to_tendon(q_j: float, j: int, geom: DeviceGeometry) -> float:
    """Spool angle phi_j reaching joint angle q_j (closed-form inverse)."""
    if j not in (0, 1, 2):
        raise ValueError("motor index must be 0, 1 or 2")
    if abs(q_j) > geom.alpha_max + 1e-12:
        raise ValueError(f"joint angle {q_j:.4f} exceeds alpha_max {geom.alpha_max:.4f}")
    sign = -1.0 if j % 2 else 1.0
    hyp = math.hypot(geom.h, geom.r)
    return (geom.h - hyp * math.sin(math.atan2(geom.h, geom.r) - sign * q_j)) / geom.r_m


def tendons_to_joint_angles(tendons: TendonState, geom: DeviceGeometry) -> RotationAngles:
    """Active-joint angles for a set of spool windings.

    Left/right windings act antagonistically on theta_3 (motor 0 bends it
    negative, motor 1 positive); the up motor sets beta_3, clamped to the
    face-collision limit alpha_max.
    """
    q0 = tendon_to_joint(tendons.phi[0], 0, geom)
    q1 = tendon_to_joint(tendons.phi[1], 1, geom)
    q2 = tendon_to_joint(tendons.phi[2], 2, geom)
    a = geom.alpha_max
    theta = min(a, max(-a, -(q0 + q1)))
    beta = min(a, max(0.0, q2))
    return RotationAngles(theta=theta, beta=beta, gamma=0.0, frame=3)


def total_bend(theta: float, beta: float) -> float:
    """Polar angle of the tip direction from the frame-{2} z axis."""
    c = math.cos(theta) * math.cos(beta)
    return math.acos(min(1.0, max(-1.0, c)))


def workspace_surface(geom: DeviceGeometry, resolution: float = math.radians(0.5)):
    """Reachable tip surface in frame {2}.

    Samples theta in [-alpha_max, alpha_max] and beta in [0, alpha_max]
    (elevation is upward-only; downward motion is passive), keeping pairs
    whose total bend stays below the face-collision limit.  Returns
    (theta, beta, points) arrays with points of shape (n, 3); every point
    lies on the sphere of radius r_eff.
    """
    if resolution <= 0.0:
        raise ValueError("resolution must be positive")
    a = geom.alpha_max
    n_t = max(2, int(round(2.0 * a / resolution)) + 1)
    n_b = max(2, int(round(a / resolution)) + 1)
    thetas = np.linspace(-a, a, n_t)
    betas = np.linspace(0.0, a, n_b)
    tg, bg = np.meshgrid(thetas, betas, indexing="ij")
    bend = np.arccos(np.clip(np.cos(tg) * np.cos(bg), -1.0, 1.0))
    keep = bend <= a + 1e-12
    t, b = tg[keep], bg[keep]
    points = effective_radius(geom) * np.stack(
        [np.sin(b) * np.cos(t), -np.sin(t), np.cos(b) * np.cos(t)], axis=1
    )
    return t, b, points


def characterization_sweep(geom: DeviceGeometry, resolution: float = math.radians(0.5)):
    """Angle schedule of the workspace characterization protocol.

    The boundary is swept first, then five intermediate lines: two with
    beta = 0, one with theta = 0, one with theta = beta, one with
    theta = -beta.  Returns (theta, beta) arrays in sweep order.
    """
    if resolution <= 0.0:
        raise ValueError("resolution must be positive")
    a = geom.alpha_max
    n = max(2, int(round(a / resolution)) + 1)
    seg_t, seg_b = [], []

    def add(ts, bs):
        seg_t.append(np.asarray(ts, dtype=float))
        seg_b.append(np.asarray(bs, dtype=float))

    # boundary: beta = 0 edge, then the constant-total-bend cap arc
    t_edge = np.linspace(-a, a, 2 * n - 1)
    add(t_edge, np.zeros_like(t_edge))
    t_cap = np.linspace(a, -a, 2 * n - 1)
    b_cap = np.arccos(np.clip(math.cos(a) / np.cos(t_cap), -1.0, 1.0))
    add(t_cap, b_cap)
    # two lines with beta = 0 (forward and return pass)
    add(np.linspace(-a, a, 2 * n - 1), np.zeros(2 * n - 1))
    add(np.linspace(a, -a, 2 * n - 1), np.zeros(2 * n - 1))
    # theta = 0 meridian
    add(np.zeros(n), np.linspace(0.0, a, n))
    # diagonals theta = +/- beta up to the cap
    d = math.acos(math.sqrt(math.cos(a)))
    bd = np.linspace(0.0, d, n)
    add(bd, bd)
    add(-bd, bd)
    return np.concatenate(seg_t), np.concatenate(seg_b)


def tip_points_for_angles(theta, beta, geom: DeviceGeometry) -> np.ndarray:
    """Frame-{2} tip points for paired angle arrays (gamma = 0)."""
    t = np.asarray(theta, dtype=float)
    b = np.asarray(beta, dtype=float)
    return effective_radius(geom) * np.stack(
        [np.sin(b) * np.cos(t), -np.sin(t), np.cos(b) * np.cos(t)], axis=1
    )


def write_workspace_csv(path, theta, beta, points):
    """Workspace exporter: header theta_rad,beta_rad,x,y,z, one row per sample."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["theta_rad", "beta_rad", "x", "y", "z"])
        for t, b, p in zip(theta, beta, points):
            w.writerow([repr(float(t)), repr(float(b)), repr(float(p[0])), repr(float(p[1])), repr(float(p[2]))])
