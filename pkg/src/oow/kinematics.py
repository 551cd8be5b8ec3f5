"""DH-chain kinematics for the simulated 7-DoF arm.

Forward kinematics and the position Jacobian follow the classic
Denavit-Hartenberg convention:

    T_i = RotZ(q_i + theta_offset_i) @ TransZ(d_i) @ TransX(a_i) @ RotX(alpha_i)

Inverse kinematics is Jacobian-transpose gradient descent on the squared
end-effector position error, restricted to the first five joints; the two
distal wrist joints are driven directly by the operator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
from pathlib import Path

import numpy as np

from .geom import Pose, angular_distance_deg

__all__ = [
    "DHRow", "JointState", "ArmConfig", "angular_distance_deg",
    "forward_kinematics", "position_jacobian", "solve_ik", "apply_wrist",
    "link_frames", "dh_transform", "load_arm_config", "default_arm_config",
    "two_link_planar",
]

N_ACTIVE_DEFAULT = 5
IK_STEP_DEFAULT = 1.0
IK_EPS_DEFAULT = 0.01
IK_MAX_ITER_DEFAULT = 200
IK_DT_DEFAULT = 0.02
WRIST_RATE_DEFAULT = 0.5


@dataclass(frozen=True)
class DHRow:
    """One Denavit-Hartenberg row (theta offset, d, a, alpha)."""

    theta_offset: float
    d: float
    a: float
    alpha: float

    def __post_init__(self):
        for name in ("theta_offset", "d", "a", "alpha"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"DH field {name} must be finite")


@dataclass
class JointState:
    """Joint angles plus per-joint velocity limits (rad/s)."""

    angles: np.ndarray
    max_velocity: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float).copy()
        self.max_velocity = np.asarray(self.max_velocity, dtype=float).copy()
        if self.angles.shape != self.max_velocity.shape:
            raise ValueError("angles and max_velocity must have equal length")
        if np.any(self.max_velocity <= 0):
            raise ValueError("velocity limits must be positive")

    def copy(self) -> "JointState":
        return JointState(self.angles.copy(), self.max_velocity.copy())


def dh_transform(row: DHRow, angle: float) -> np.ndarray:
    """4x4 homogeneous transform of one joint at the given angle."""
    th = angle + row.theta_offset
    ct, st = math.cos(th), math.sin(th)
    ca, sa = math.cos(row.alpha), math.sin(row.alpha)
    return np.array([
        [ct, -st * ca, st * sa, row.a * ct],
        [st, ct * ca, -ct * sa, row.a * st],
        [0.0, sa, ca, row.d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def link_frames(dh: list[DHRow], joints: JointState) -> list[np.ndarray]:
    """Homogeneous frames [base, after joint 1, ..., after joint n]."""
    if len(dh) != len(joints.angles):
        raise ValueError("DH rows and joint count differ")
    frames = [np.eye(4)]
    t = np.eye(4)
    for row, q in zip(dh, joints.angles):
        t = t @ dh_transform(row, q)
        frames.append(t.copy())
    return frames


def forward_kinematics(dh: list[DHRow], joints: JointState) -> tuple[Pose, list[np.ndarray]]:
    """End-effector pose plus every intermediate link frame."""
    frames = link_frames(dh, joints)
    return Pose.from_matrix(frames[-1]), frames


def position_jacobian(dh: list[DHRow], joints: JointState,
                      n_active: int = N_ACTIVE_DEFAULT) -> np.ndarray:
    """3 x n_active Jacobian of end-effector position wrt the first joints.

    Column j is z_{j-1} x (p_ee - p_{j-1}) for revolute joints.
    """
    n_active = min(n_active, len(joints.angles))
    frames = link_frames(dh, joints)
    p_ee = frames[-1][:3, 3]
    jac = np.zeros((3, n_active))
    for j in range(n_active):
        z = frames[j][:3, 2]
        r = p_ee - frames[j][:3, 3]
        jac[0, j] = z[1] * r[2] - z[2] * r[1]
        jac[1, j] = z[2] * r[0] - z[0] * r[2]
        jac[2, j] = z[0] * r[1] - z[1] * r[0]
    return jac


def solve_ik(dh: list[DHRow], target: np.ndarray, joints: JointState,
             step: float = IK_STEP_DEFAULT, eps: float = IK_EPS_DEFAULT,
             max_iter: int = IK_MAX_ITER_DEFAULT, dt: float = IK_DT_DEFAULT,
             n_active: int = N_ACTIVE_DEFAULT) -> tuple[JointState, bool]:
    """Jacobian-transpose descent of ||ee - target||^2 over the active joints.

    The descent direction is -J^T e; its length comes from an exact line
    search on the linearized error (alpha = <e, JJ^T e> / ||JJ^T e||^2),
    scaled by ``step``. Each iteration stands for one control tick of
    duration dt: the joint delta is clamped elementwise to max_velocity*dt.
    Wrist joints beyond n_active are never touched. Unreachable targets
    come back with converged=False and the best-effort joint state.
    """
    if step <= 0 or eps <= 0:
        raise ValueError("step and eps must be positive")
    target = np.asarray(target, dtype=float)
    out = joints.copy()
    n_active = min(n_active, len(out.angles))
    clamp = out.max_velocity[:n_active] * dt
    for _ in range(max_iter):
        pose, _ = forward_kinematics(dh, out)
        err = pose.position - target
        if np.linalg.norm(err) <= eps:
            return out, True
        jac = position_jacobian(dh, out, n_active)
        grad = jac.T @ err
        jjte = jac @ grad
        denom = float(jjte @ jjte)
        if denom < 1e-30:
            break  # gradient vanished (singular pose); no progress possible
        alpha = float(err @ jjte) / denom
        delta = np.clip(-step * alpha * grad, -clamp, clamp)
        out.angles[:n_active] += delta
    pose, _ = forward_kinematics(dh, out)
    return out, bool(np.linalg.norm(pose.position - target) <= eps)


def apply_wrist(joints: JointState, roll_cmd: float, pitch_cmd: float,
                yaw_cmd: float, dt: float,
                rate: float = WRIST_RATE_DEFAULT) -> JointState:
    """Drive joints 5/6/7 (pitch/yaw/roll) at cmd*rate, velocity-clamped."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    out = joints.copy()
    n = len(out.angles)
    for idx, cmd in zip((n - 3, n - 2, n - 1), (pitch_cmd, yaw_cmd, roll_cmd)):
        cmd = float(np.clip(cmd, -1.0, 1.0))
        delta = cmd * rate * dt
        limit = out.max_velocity[idx] * dt
        out.angles[idx] += float(np.clip(delta, -limit, limit))
    return out


@dataclass
class ArmConfig:
    """DH table plus actuation limits, as loaded from an ``arm.dh`` file."""

    dh: list[DHRow]
    max_velocity: np.ndarray
    wrist_rate: float = WRIST_RATE_DEFAULT

    def __post_init__(self):
        self.max_velocity = np.asarray(self.max_velocity, dtype=float)
        if len(self.dh) != len(self.max_velocity):
            raise ValueError("one velocity limit per DH row required")

    def home_state(self) -> JointState:
        return JointState(np.zeros(len(self.dh)), self.max_velocity.copy())


def load_arm_config(path: str | Path) -> ArmConfig:
    """Parse the ``arm.dh`` format.

    Lines (``#`` comments allowed)::

        dh <theta_offset_rad> <d_m> <a_m> <alpha_rad>   # one per joint
        max_velocity <v1> ... <vn>                      # rad/s
        wrist_rate <rate>                               # rad/s, optional
    """
    rows: list[DHRow] = []
    max_velocity: np.ndarray | None = None
    wrist_rate = WRIST_RATE_DEFAULT
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, vals = parts[0], parts[1:]
        if key == "dh":
            if len(vals) != 4:
                raise ValueError(f"{path}:{ln}: dh line needs 4 numbers")
            rows.append(DHRow(*(float(v) for v in vals)))
        elif key == "max_velocity":
            max_velocity = np.array([float(v) for v in vals])
        elif key == "wrist_rate":
            wrist_rate = float(vals[0])
        else:
            raise ValueError(f"{path}:{ln}: unknown directive {key!r}")
    if not rows:
        raise ValueError(f"{path}: no dh rows")
    if max_velocity is None:
        max_velocity = np.full(len(rows), 0.3)
    return ArmConfig(rows, max_velocity, wrist_rate)


def default_arm_config() -> ArmConfig:
    """The shipped Canadarm2-like geometry (see data/canadarm2.dh)."""
    from importlib.resources import files
    return load_arm_config(files("oow.data").joinpath("canadarm2.dh"))


def two_link_planar(l1: float = 1.0, l2: float = 1.0) -> list[DHRow]:
    """Planar test arm used throughout the kinematics tests."""
    return [DHRow(0.0, 0.0, l1, 0.0), DHRow(0.0, 0.0, l2, 0.0)]
