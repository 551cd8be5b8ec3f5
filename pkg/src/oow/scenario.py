"""Scene description files: bodies, fixture/dock poses, cameras, arm setup.

A scenario is a JSON document (schema 1). The shipped default lives in
``data/scenario_default.json``; its SHA-256 over the canonical dump guards
replay against mismatched geometry.
"""
from __future__ import annotations

from dataclasses import dataclass
import hashlib
import json
from pathlib import Path

import numpy as np

from .geom import Pose, quat_from_matrix
from .kinematics import ArmConfig, DHRow, default_arm_config
from .world import Body, BoxShape, Capsule, Sphere

SCHEMA_VERSION = 1
ARM_LINK_RADIUS_DEFAULT = 0.3


def look_at_quat(eye: np.ndarray, target: np.ndarray,
                 up: np.ndarray = np.array([0.0, 0.0, 1.0])) -> np.ndarray:
    """Camera orientation with -z toward target and +y as close to up."""
    fwd = np.asarray(target, float) - np.asarray(eye, float)
    n = np.linalg.norm(fwd)
    if n < 1e-12:
        return np.array([1.0, 0.0, 0.0, 0.0])
    fwd = fwd / n
    right = np.cross(fwd, up)
    rn = np.linalg.norm(right)
    if rn < 1e-9:  # forward parallel to up; pick another reference
        right = np.cross(fwd, np.array([0.0, 1.0, 0.0]))
        rn = np.linalg.norm(right)
    right = right / rn
    cam_up = np.cross(right, fwd)
    rot = np.column_stack([right, cam_up, -fwd])
    return quat_from_matrix(rot)


@dataclass
class CameraSpec:
    pose: Pose
    mount: int | None = None  # link frame index, None = fixed in world

    def to_dict(self) -> dict:
        return {"pose": self.pose.to_dict(), "mount": self.mount}

    @staticmethod
    def from_dict(d: dict) -> "CameraSpec":
        return CameraSpec(Pose.from_dict(d["pose"]), d.get("mount"))


@dataclass
class Scenario:
    name: str
    initial_joints: list[float]
    module_pose: Pose
    module_half_extents: tuple[float, float, float]
    fixture_offset: Pose          # grapple fixture in the module frame
    dock_pose: Pose               # desired module pose when docked
    iss_boxes: list[dict]         # {id, pose: Pose, half_extents}
    obstacles: list[dict]         # {id, position, radius}
    cameras: list[CameraSpec]
    arm_link_radius: float = ARM_LINK_RADIUS_DEFAULT
    dh_rows: list[DHRow] | None = None      # None -> shipped default arm
    max_velocity: list[float] | None = None
    wrist_rate: float | None = None

    def arm_config(self) -> ArmConfig:
        base = default_arm_config()
        rows = self.dh_rows if self.dh_rows is not None else base.dh
        vel = np.array(self.max_velocity) if self.max_velocity is not None else base.max_velocity
        rate = self.wrist_rate if self.wrist_rate is not None else base.wrist_rate
        return ArmConfig(list(rows), vel, rate)

    def fixture_world(self, module_pose: Pose) -> Pose:
        return module_pose.compose(self.fixture_offset)

    def build_bodies(self, include_obstacles: bool = True) -> dict[str, Body]:
        bodies: dict[str, Body] = {}
        bodies["module"] = Body("module", "module",
                                BoxShape(tuple(self.module_half_extents)),
                                self.module_pose.copy())
        for spec in self.iss_boxes:
            pose = spec["pose"]
            bodies[spec["id"]] = Body(spec["id"], "iss",
                                      BoxShape(tuple(spec["half_extents"])),
                                      pose.copy() if isinstance(pose, Pose)
                                      else Pose.from_dict(pose))
        if include_obstacles:
            for spec in self.obstacles:
                bodies[spec["id"]] = Body(
                    spec["id"], "obstacle", Sphere(spec["radius"]),
                    Pose(np.array(spec["position"], dtype=float)))
        return bodies

    def arm_link_bodies(self, frames: list[np.ndarray]) -> dict[str, Body]:
        bodies = {}
        for i in range(len(frames) - 1):
            p0 = tuple(frames[i][:3, 3])
            p1 = tuple(frames[i + 1][:3, 3])
            bodies[f"arm_link_{i + 1}"] = Body(
                f"arm_link_{i + 1}", "arm_link",
                Capsule(self.arm_link_radius, p0, p1))
        return bodies

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "initial_joints": list(self.initial_joints),
            "module": {"pose": self.module_pose.to_dict(),
                       "half_extents": list(self.module_half_extents),
                       "fixture_offset": self.fixture_offset.to_dict()},
            "dock": self.dock_pose.to_dict(),
            "iss": [{"id": b["id"], "pose": b["pose"].to_dict(),
                     "half_extents": list(b["half_extents"])}
                    for b in self.iss_boxes],
            "obstacles": [{"id": o["id"], "position": list(o["position"]),
                           "radius": o["radius"]} for o in self.obstacles],
            "cameras": [c.to_dict() for c in self.cameras],
            "arm_link_radius": self.arm_link_radius,
            "arm": None if self.dh_rows is None else {
                "dh": [[r.theta_offset, r.d, r.a, r.alpha] for r in self.dh_rows],
                "max_velocity": list(self.max_velocity),
                "wrist_rate": self.wrist_rate,
            },
        }

    @staticmethod
    def from_dict(d: dict) -> "Scenario":
        if d.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported scenario schema {d.get('schema')!r}")
        arm = d.get("arm")
        return Scenario(
            name=d["name"],
            initial_joints=[float(v) for v in d["initial_joints"]],
            module_pose=Pose.from_dict(d["module"]["pose"]),
            module_half_extents=tuple(d["module"]["half_extents"]),
            fixture_offset=Pose.from_dict(d["module"]["fixture_offset"]),
            dock_pose=Pose.from_dict(d["dock"]),
            iss_boxes=[{"id": b["id"], "pose": Pose.from_dict(b["pose"]),
                        "half_extents": tuple(b["half_extents"])}
                       for b in d["iss"]],
            obstacles=d["obstacles"],
            cameras=[CameraSpec.from_dict(c) for c in d["cameras"]],
            arm_link_radius=float(d.get("arm_link_radius", ARM_LINK_RADIUS_DEFAULT)),
            dh_rows=None if arm is None else [DHRow(*row) for row in arm["dh"]],
            max_velocity=None if arm is None else arm["max_velocity"],
            wrist_rate=None if arm is None else arm["wrist_rate"],
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def load_scenario(path: str | Path) -> Scenario:
    return Scenario.from_dict(json.loads(Path(path).read_text()))


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n")


def default_scenario() -> Scenario:
    from importlib.resources import files
    return Scenario.from_dict(json.loads(
        files("oow.data").joinpath("scenario_default.json").read_text()))
