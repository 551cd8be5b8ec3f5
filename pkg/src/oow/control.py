"""Gamepad-style input mapping and the round-trip latency queue.

Stick and button commands are interpreted in the selected camera's frame
(+x right, +y up, -z forward) and rotated into world coordinates, so the
end-effector always moves relative to the view the operator is watching.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .geom import Pose, quat_mul, quat_normalize, quat_rotate, quat_from_axis_angle

BUTTONS = frozenset({
    "L1", "R1", "L2", "R2", "Cross", "Triangle", "Square", "Circle",
    "DpadU", "DpadD", "DpadL", "DpadR",
})

TRANSLATE_SPEED_DEFAULT = 0.5   # m/s at full stick deflection
CAMERA_RATE_DEFAULT = 0.8       # rad/s pan/tilt
AXIS_DEADZONE = 0.08


class OrderingError(ValueError):
    """Raised when a command violates the monotone sequence contract."""


@dataclass(frozen=True)
class InputCommand:
    """One decoded controller message (client issue time + sticks + buttons)."""

    timestamp: float
    seq: int
    lx: float = 0.0
    ly: float = 0.0
    rx: float = 0.0
    ry: float = 0.0
    buttons: frozenset[str] = frozenset()

    def __post_init__(self):
        for name in ("lx", "ly", "rx", "ry"):
            v = getattr(self, name)
            if not -1.0 <= v <= 1.0:
                raise ValueError(f"axis {name}={v} outside [-1, 1]")
        unknown = set(self.buttons) - BUTTONS
        if unknown:
            raise ValueError(f"unknown buttons: {sorted(unknown)}")
        object.__setattr__(self, "buttons", frozenset(self.buttons))


@dataclass
class Camera:
    """One rig camera: a base pose plus adjustable pan/tilt.

    ``mount`` is a link-frame index for arm-mounted cameras (the base pose is
    then a local offset in that link's frame) or None for fixed cameras.
    """

    pose: Pose
    pan: float = 0.0
    tilt: float = 0.0
    mount: int | None = None

    def world_pose(self, link_frames: list[np.ndarray] | None = None) -> Pose:
        if self.mount is None:
            base = self.pose
        else:
            if link_frames is None:
                raise ValueError("arm-mounted camera needs link frames")
            base = Pose.from_matrix(link_frames[self.mount]).compose(self.pose)
        q = quat_mul(base.orientation,
                     quat_mul(quat_from_axis_angle(np.array([0.0, 1.0, 0.0]), self.pan),
                              quat_from_axis_angle(np.array([1.0, 0.0, 0.0]), self.tilt)))
        return Pose(base.position.copy(), quat_normalize(q))


@dataclass
class CameraRig:
    """Exactly four cameras with one selected for control coupling."""

    cameras: list[Camera]
    selected: int = 0

    def __post_init__(self):
        if len(self.cameras) != 4:
            raise ValueError("rig requires exactly 4 cameras")
        if not 0 <= self.selected < 4:
            raise ValueError("selected camera index out of range")

    def cycle(self, steps: int) -> None:
        self.selected = (self.selected + steps) % 4


@dataclass
class ControlDelta:
    """World-space effect of one input command over one tick."""

    target_delta: np.ndarray = field(default_factory=lambda: np.zeros(3))
    wrist_roll: float = 0.0
    wrist_pitch: float = 0.0
    wrist_yaw: float = 0.0
    camera_cycle: int = 0
    camera_pan: float = 0.0
    camera_tilt: float = 0.0
    latch: str | None = None  # None | "grapple" | "release"


def _deadzone(v: float) -> float:
    return 0.0 if abs(v) < AXIS_DEADZONE else v


def map_input(cmd: InputCommand, rig: CameraRig, dt: float,
              speed: float = TRANSLATE_SPEED_DEFAULT,
              camera_rate: float = CAMERA_RATE_DEFAULT,
              camera_pose: Pose | None = None) -> ControlDelta:
    """Map one command through the selected camera frame.

    camera_pose overrides the rig camera's own world pose when the caller
    has already recomputed it from fresh link frames this tick.
    """
    if camera_pose is None:
        camera_pose = rig.cameras[rig.selected].world_pose()
    q = camera_pose.orientation
    right = quat_rotate(q, np.array([1.0, 0.0, 0.0]))
    up = quat_rotate(q, np.array([0.0, 1.0, 0.0]))
    forward = quat_rotate(q, np.array([0.0, 0.0, -1.0]))

    lx, ly = _deadzone(cmd.lx), _deadzone(cmd.ly)
    rx, ry = _deadzone(cmd.rx), _deadzone(cmd.ry)
    depth = (1.0 if "R2" in cmd.buttons else 0.0) - (1.0 if "L2" in cmd.buttons else 0.0)
    delta = ControlDelta()
    delta.target_delta = (lx * right + (-ly) * up + depth * forward) * speed * dt

    # Right stick drives the two distal wrist joints; Square/Circle roll the last.
    delta.wrist_pitch = -ry
    delta.wrist_yaw = rx
    delta.wrist_roll = ((1.0 if "Circle" in cmd.buttons else 0.0)
                        - (1.0 if "Square" in cmd.buttons else 0.0))

    delta.camera_cycle = ((1 if "R1" in cmd.buttons else 0)
                          - (1 if "L1" in cmd.buttons else 0))
    pan = ((1.0 if "DpadR" in cmd.buttons else 0.0)
           - (1.0 if "DpadL" in cmd.buttons else 0.0))
    tilt = ((1.0 if "DpadU" in cmd.buttons else 0.0)
            - (1.0 if "DpadD" in cmd.buttons else 0.0))
    delta.camera_pan = pan * camera_rate * dt
    delta.camera_tilt = tilt * camera_rate * dt

    if "Cross" in cmd.buttons:
        delta.latch = "grapple"
    elif "Triangle" in cmd.buttons:
        delta.latch = "release"
    return delta


@dataclass
class DelayQueue:
    """FIFO command buffer releasing entries once now - timestamp >= latency."""

    latency: float = 0.0
    entries: deque[InputCommand] = field(default_factory=deque)
    _last_seq: int | None = None

    def __post_init__(self):
        if self.latency < 0:
            raise ValueError("latency must be >= 0")

    def push(self, cmd: InputCommand) -> None:
        if self._last_seq is not None and cmd.seq <= self._last_seq:
            raise OrderingError(
                f"seq {cmd.seq} not greater than last pushed {self._last_seq}")
        self._last_seq = cmd.seq
        self.entries.append(cmd)

    def pop_ready(self, now: float) -> list[InputCommand]:
        if now < 0:
            raise ValueError("now must be >= 0")
        out = []
        while self.entries and now - self.entries[0].timestamp >= self.latency:
            out.append(self.entries.popleft())
        return out

    def __len__(self) -> int:
        return len(self.entries)
