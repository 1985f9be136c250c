"""Small 3-vector and quaternion helpers on plain tuples (hot-loop friendly)."""

import math

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]  # (w, x, y, z), scalar first


def vadd(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vsub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vscale(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def vdot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def vcross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def vnorm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def vunit(a: Vec3, fallback: Vec3 = (0.0, 0.0, 1.0)) -> Vec3:
    n = vnorm(a)
    if n < 1e-12:
        return fallback
    return (a[0] / n, a[1] / n, a[2] / n)


def quat_normalize(q: Quat) -> Quat:
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    return (w / n, x / n, y / n, z / n)


def quat_to_matrix(q: Quat) -> tuple[float, ...]:
    """Row-major body-to-world rotation matrix (9 floats)."""
    w, x, y, z = q
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    return (
        1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy),
        2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx),
        2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy),
    )


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    """Rotate a body-frame vector into the world frame."""
    m = quat_to_matrix(q)
    return (
        m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
        m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
        m[6] * v[0] + m[7] * v[1] + m[8] * v[2],
    )


def quat_integrate(q: Quat, omega_body: Vec3, dt: float) -> Quat:
    """Advance attitude one step from body angular rate; renormalizes."""
    w, x, y, z = q
    ox, oy, oz = omega_body
    half = 0.5 * dt
    nw = w - half * (x * ox + y * oy + z * oz)
    nx = x + half * (w * ox + y * oz - z * oy)
    ny = y + half * (w * oy + z * ox - x * oz)
    nz = z + half * (w * oz + x * oy - y * ox)
    return quat_normalize((nw, nx, ny, nz))


def quat_from_yaw(yaw: float) -> Quat:
    return (math.cos(0.5 * yaw), 0.0, 0.0, math.sin(0.5 * yaw))


def mat_transpose_mul(a: tuple[float, ...], b: tuple[float, ...]) -> tuple[float, ...]:
    """Compute A^T B for row-major 3x3 matrices."""
    return (
        a[0] * b[0] + a[3] * b[3] + a[6] * b[6],
        a[0] * b[1] + a[3] * b[4] + a[6] * b[7],
        a[0] * b[2] + a[3] * b[5] + a[6] * b[8],
        a[1] * b[0] + a[4] * b[3] + a[7] * b[6],
        a[1] * b[1] + a[4] * b[4] + a[7] * b[7],
        a[1] * b[2] + a[4] * b[5] + a[7] * b[8],
        a[2] * b[0] + a[5] * b[3] + a[8] * b[6],
        a[2] * b[1] + a[5] * b[4] + a[8] * b[7],
        a[2] * b[2] + a[5] * b[5] + a[8] * b[8],
    )


def vee_antisym(m: tuple[float, ...]) -> Vec3:
    """Map the antisymmetric part of a 3x3 matrix to its axial vector."""
    return (
        0.5 * (m[7] - m[5]),
        0.5 * (m[2] - m[6]),
        0.5 * (m[3] - m[1]),
    )
