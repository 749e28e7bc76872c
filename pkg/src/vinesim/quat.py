"""Scalar unit-quaternion utilities.

Quaternions are (w, x, y, z) tuples representing body-to-global rotations:
rotate(q, v_body) = v_global.  Plain-float tuples keep the streaming filter
and simulator loops fast; convert to numpy only at API boundaries.
"""

import math

IDENTITY = (1.0, 0.0, 0.0, 0.0)


def multiply(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def conjugate(q):
    w, x, y, z = q
    return (w, -x, -y, -z)


def norm(q):
    w, x, y, z = q
    return math.sqrt(w * w + x * x + y * y + z * z)


def normalize(q):
    n = norm(q)
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    w, x, y, z = q
    return (w / n, x / n, y / n, z / n)


def rotate(q, v):
    """Rotate vector v (3-tuple) by unit quaternion q."""
    w, x, y, z = q
    vx, vy, vz = v
    # q * (0, v) * conj(q), expanded
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return (
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


def rotate_inv(q, v):
    """Rotate v by the inverse of unit quaternion q (global to body)."""
    return rotate(conjugate(q), v)


def from_rotvec(r):
    """Quaternion for a rotation vector (axis * angle, radians)."""
    rx, ry, rz = r
    angle = math.sqrt(rx * rx + ry * ry + rz * rz)
    if angle < 1e-12:
        # first-order expansion keeps tiny rotations exact to double precision
        return normalize((1.0, 0.5 * rx, 0.5 * ry, 0.5 * rz))
    s = math.sin(0.5 * angle) / angle
    return (math.cos(0.5 * angle), rx * s, ry * s, rz * s)


def to_rotvec(q):
    """Rotation vector (axis * angle) of a unit quaternion, angle in [0, pi]."""
    w, x, y, z = q
    if w < 0.0:
        w, x, y, z = -w, -x, -y, -z
    vn = math.sqrt(x * x + y * y + z * z)
    if vn < 1e-12:
        return (2.0 * x, 2.0 * y, 2.0 * z)
    angle = 2.0 * math.atan2(vn, w)
    s = angle / vn
    return (x * s, y * s, z * s)


def from_matrix(m):
    """Quaternion from a 3x3 rotation matrix (row-major nested or ndarray)."""
    t = m[0][0] + m[1][1] + m[2][2]
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        q = (0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s)
    elif m[0][0] > m[1][1] and m[0][0] > m[2][2]:
        s = math.sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2.0
        q = ((m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s)
    elif m[1][1] > m[2][2]:
        s = math.sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2.0
        q = ((m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s)
    else:
        s = math.sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2.0
        q = ((m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s)
    return normalize(q)


def to_matrix(q):
    """3x3 rotation matrix (nested tuples) of a unit quaternion."""
    w, x, y, z = q
    return (
        (1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)),
        (2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)),
        (2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)),
    )


def angle_between(a, b):
    """Rotation angle (radians) taking quaternion a to quaternion b."""
    d = multiply(conjugate(a), b)
    w = min(1.0, max(-1.0, abs(d[0])))
    return 2.0 * math.acos(w)
