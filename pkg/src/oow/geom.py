"""Rigid-body poses and quaternion helpers shared by the simulator modules.

Quaternions are stored as numpy arrays [w, x, y, z] and kept unit-norm.
Camera/view conventions: +x right, +y up, -z forward (OpenGL style).
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    return q / n


def quat_mul(qa: np.ndarray, qb: np.ndarray) -> np.ndarray:
    """Hamilton product qa * qb."""
    w1, x1, y1, z1 = qa
    w2, x2, y2, z2 = qb
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate 3-vector v by unit quaternion q."""
    w, x, y, z = float(q[0]), float(q[1]), float(q[2]), float(q[3])
    vx, vy, vz = float(v[0]), float(v[1]), float(v[2])
    # v' = v + 2w (u x v) + 2 u x (u x v), unrolled for speed
    cx = y * vz - z * vy
    cy = z * vx - x * vz
    cz = x * vy - y * vx
    return np.array([
        vx + 2.0 * (w * cx + y * cz - z * cy),
        vy + 2.0 * (w * cy + z * cx - x * cz),
        vz + 2.0 * (w * cz + x * cy - y * cx),
    ])


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate(([math.cos(half)], math.sin(half) * axis))


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(r: np.ndarray) -> np.ndarray:
    """Rotation matrix -> unit quaternion (Shepperd's branch method)."""
    r = np.asarray(r, dtype=float)
    t = np.trace(r)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (r[2, 1] - r[1, 2]) / s,
                      (r[0, 2] - r[2, 0]) / s,
                      (r[1, 0] - r[0, 1]) / s])
    elif r[0, 0] >= r[1, 1] and r[0, 0] >= r[2, 2]:
        s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        q = np.array([(r[2, 1] - r[1, 2]) / s,
                      0.25 * s,
                      (r[0, 1] + r[1, 0]) / s,
                      (r[0, 2] + r[2, 0]) / s])
    elif r[1, 1] >= r[2, 2]:
        s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
        q = np.array([(r[0, 2] - r[2, 0]) / s,
                      (r[0, 1] + r[1, 0]) / s,
                      0.25 * s,
                      (r[1, 2] + r[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
        q = np.array([(r[1, 0] - r[0, 1]) / s,
                      (r[0, 2] + r[2, 0]) / s,
                      (r[1, 2] + r[2, 1]) / s,
                      0.25 * s])
    return quat_normalize(q)


def angular_distance_deg(qa: np.ndarray, qb: np.ndarray) -> float:
    """Rotation angle between two unit quaternions, in degrees [0, 180].

    Uses 2*acos(|<qa, qb>|), which collapses the q/-q double cover.
    """
    dot = abs(float(np.dot(qa, qb)))
    dot = min(dot, 1.0)
    return math.degrees(2.0 * math.acos(dot))


@dataclass
class Pose:
    """Rigid pose: world position plus unit orientation quaternion."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: IDENTITY_QUAT.copy())

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.orientation = np.asarray(self.orientation, dtype=float)
        if self.position.shape != (3,):
            raise ValueError("position must be a 3-vector")
        if abs(np.linalg.norm(self.orientation) - 1.0) > 1e-9:
            raise ValueError("orientation must be a unit quaternion")

    def transform_point(self, local: np.ndarray) -> np.ndarray:
        return self.position + quat_rotate(self.orientation, local)

    def compose(self, other: "Pose") -> "Pose":
        """self o other: apply other in self's frame."""
        return Pose(self.transform_point(other.position),
                    quat_normalize(quat_mul(self.orientation, other.orientation)))

    def inverse(self) -> "Pose":
        qi = quat_conj(self.orientation)
        return Pose(quat_rotate(qi, -self.position), qi)

    def copy(self) -> "Pose":
        return Pose(self.position.copy(), self.orientation.copy())

    def almost_equal(self, other: "Pose", tol: float = 1e-9) -> bool:
        return (np.allclose(self.position, other.position, atol=tol)
                and min(np.linalg.norm(self.orientation - other.orientation),
                        np.linalg.norm(self.orientation + other.orientation)) <= tol)

    def to_dict(self) -> dict:
        return {"pos": [float(v) for v in self.position],
                "quat": [float(v) for v in self.orientation]}

    @staticmethod
    def from_dict(d: dict) -> "Pose":
        return Pose(np.array(d["pos"], dtype=float),
                    quat_normalize(np.array(d["quat"], dtype=float)))

    @staticmethod
    def from_matrix(t: np.ndarray) -> "Pose":
        return Pose(t[:3, 3].copy(), quat_from_matrix(t[:3, :3]))
