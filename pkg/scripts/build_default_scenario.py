"""Regenerate data/scenario_default.json and the example pilot scripts.

Places the research module, dock, obstacles, ISS hull, and the four cameras
around the shipped arm geometry, then verifies with a headless run that the
default pilot can grapple and dock.
"""
from pathlib import Path
import sys

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from oow.engine import PilotScript, PilotStep, run_headless
from oow.geom import Pose
from oow.kinematics import default_arm_config, forward_kinematics
from oow.mission import TrialConfig
from oow.scenario import CameraSpec, Scenario, look_at_quat, save_scenario

DATA = Path(__file__).resolve().parents[1] / "src" / "oow" / "data"

INITIAL_JOINTS = [0.0, 0.25, 0.7, -1.3, 0.5, 0.0, 0.0]


def build() -> Scenario:
    arm = default_arm_config()
    joints = arm.home_state()
    joints.angles[:] = INITIAL_JOINTS
    ee, frames = forward_kinematics(arm.dh, joints)
    print("initial ee:", np.round(ee.position, 3))

    # Module floats ahead of the initial end-effector; its grapple fixture
    # sits on the face turned toward the arm.
    module_center = ee.position + np.array([3.0, 2.0, 0.5])
    fixture_local = Pose(np.array([-1.5, 0.0, 0.0]))
    module_pose = Pose(module_center)

    # Dock adjacent to the "columbus" box, well separated from the module start.
    columbus_center = np.array([6.0, -10.0, 0.0])
    dock_pose = Pose(columbus_center + np.array([0.0, 5.5, 0.0]))

    # Main hull keeps clear of the working plane; columbus carries the dock.
    iss_boxes = [
        {"id": "iss_hull", "pose": Pose(np.array([0.0, -4.0, -8.0])),
         "half_extents": (12.0, 2.0, 2.0)},
        {"id": "columbus", "pose": Pose(columbus_center),
         "half_extents": (2.0, 2.0, 2.0)},
    ]

    # Three debris obstacles; O1 sits right on the grapple-to-dock line so a
    # straight transport is penalized, O2/O3 flank the corridor.
    mid = 0.5 * (module_center + dock_pose.position)
    obstacles = [
        {"id": "O1", "position": [float(mid[0]), float(mid[1]), float(mid[2])],
         "radius": 0.8},
        {"id": "O2", "position": [float(mid[0] - 3.5), float(mid[1] + 2.5), 0.3],
         "radius": 0.8},
        {"id": "O3", "position": [float(mid[0] + 3.5), float(mid[1] - 2.5), -1.5],
         "radius": 0.8},
    ]

    # Cameras: one per boom, one on the end-effector, one fixed at the dock.
    def mounted(frame_idx: int, local_pos, look_target) -> CameraSpec:
        frame = frames[frame_idx]
        world_pos = frame[:3, 3] + frame[:3, :3] @ np.asarray(local_pos, float)
        q_world = look_at_quat(world_pos, look_target)
        q_frame = Pose.from_matrix(frame)
        local = q_frame.inverse().compose(Pose(world_pos, q_world))
        return CameraSpec(local, mount=frame_idx)

    cameras = [
        mounted(3, [-3.55, 0.0, 0.8], module_center),
        mounted(4, [-3.55, 0.0, 0.8], module_center),
        mounted(7, [0.0, 0.0, 0.5], module_center),
        CameraSpec(Pose(dock_pose.position + np.array([4.0, 6.0, 3.0]),
                        look_at_quat(dock_pose.position + np.array([4.0, 6.0, 3.0]),
                                     dock_pose.position))),
    ]

    return Scenario(
        name="default",
        initial_joints=INITIAL_JOINTS,
        module_pose=module_pose,
        module_half_extents=(1.5, 1.5, 1.5),
        fixture_offset=fixture_local,
        dock_pose=dock_pose,
        iss_boxes=iss_boxes,
        obstacles=obstacles,
        cameras=cameras,
    )


def pilots(scn: Scenario):
    arm = scn.arm_config()
    joints = arm.home_state()
    joints.angles[:] = scn.initial_joints
    ee, _ = forward_kinematics(arm.dh, joints)
    fixture = scn.fixture_world(scn.module_pose)
    # ee-to-module-center offset once grappled at the fixture
    carry = scn.module_pose.position - fixture.position
    dock_ee = scn.dock_pose.position - carry

    lift = 5.0  # climb over the debris corridor
    clean = PilotScript([
        PilotStep("waypoint", position=list(fixture.position), tol=0.5),
        PilotStep("latch"),
        PilotStep("waypoint", position=[float(fixture.position[0]),
                                        float(fixture.position[1]),
                                        float(fixture.position[2] + lift)], tol=0.8),
        PilotStep("waypoint", position=[float(dock_ee[0]), float(dock_ee[1]),
                                        float(dock_ee[2] + lift)], tol=0.8),
        PilotStep("waypoint", position=list(dock_ee), tol=0.8),
        PilotStep("dock"),
    ])
    o1 = np.array(scn.obstacles[0]["position"])
    through = PilotScript([
        PilotStep("waypoint", position=list(fixture.position), tol=0.5),
        PilotStep("latch"),
        PilotStep("waypoint", position=list(o1), tol=1.2),
        PilotStep("waypoint", position=list(dock_ee), tol=0.8),
        PilotStep("dock"),
    ])
    return clean, through


def main():
    scn = build()
    clean, through = pilots(scn)
    save_scenario(scn, DATA / "scenario_default.json")
    clean.save(DATA / "pilot_clean.json")
    through.save(DATA / "pilot_through_o1.json")

    for label, pilot, cfg in [
        ("clean/no-confound", clean, TrialConfig(obstacles=False)),
        ("clean/with-obstacles", clean, TrialConfig()),
        ("through-O1", through, TrialConfig()),
        ("clean/latency-1.0", clean, TrialConfig(latency=1.0)),
    ]:
        session = run_headless(scn, cfg, pilot, horizon=400.0)
        end = session.log.events[-1]
        collisions = sum(1 for e in session.log.events if e.kind == "collision")
        print(f"{label:24s} end={end.payload['reason']:8s} t={end.time:7.2f} "
              f"score={end.payload['final_score']:8.2f} collisions={collisions}")


if __name__ == "__main__":
    main()
