"""Deterministic fixed-timestep session engine plus the scripted pilot.

Tick k advances simulated time from k/RATE to (k+1)/RATE; every effect of
tick k (events, snapshot, released commands) is stamped with the tick's end
time. Given (scenario, trial config, input stream) the run is bit
reproducible: the engine holds no wall-clock or RNG state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import json
from pathlib import Path

import numpy as np

from . import mission
from .control import Camera, CameraRig, DelayQueue, InputCommand, map_input
from .geom import Pose
from .kinematics import apply_wrist, forward_kinematics, solve_ik
from .mission import TaskState, TrialConfig, timer_state
from .scenario import Scenario
from .telemetry import EventLog, SessionEvent, start_event
from .world import (AttachmentState, detect_collisions, integrate_free_bodies,
                    pair_key, resolve_contact)

TICK_RATE = 50               # Hz
DT = 1.0 / TICK_RATE
SNAPSHOT_DECIMATION = 2      # broadcast every Nth tick (25 Hz)

SCORED_PAIR_KINDS = {
    frozenset({"arm_link", "obstacle"}), frozenset({"arm_link", "iss"}),
    frozenset({"module", "obstacle"}), frozenset({"module", "iss"}),
}


class ReplayMismatch(RuntimeError):
    """Input log does not match the requested configuration/scenario."""


@dataclass
class Session:
    """Everything a finished run produced."""

    log: EventLog
    inputs: list[InputCommand]
    snapshots: list[dict]
    config: TrialConfig
    scenario_hash: str
    horizon: float = 600.0

    @property
    def final_score(self) -> float:
        end = self.log.events[-1]
        return end.payload["final_score"]


class Engine:
    def __init__(self, scenario: Scenario, config: TrialConfig,
                 log_sink=None, snapshot_decimation: int = SNAPSHOT_DECIMATION):
        self.scenario = scenario
        self.config = config
        arm = scenario.arm_config()
        self.arm = arm
        self.joints = arm.home_state()
        self.joints.angles[:] = scenario.initial_joints
        self.task = TaskState(config=config)
        self.queue = DelayQueue(latency=config.latency)
        self.rig = CameraRig([Camera(spec.pose.copy(), mount=spec.mount)
                              for spec in scenario.cameras])
        self.bodies = scenario.build_bodies(include_obstacles=config.obstacles)
        self.attachment = AttachmentState()
        self.log = EventLog(sink=log_sink)
        self.log.append(start_event(config))
        self.inputs: list[InputCommand] = []
        self.tick_count = 0
        self.time = 0.0
        self._held = InputCommand(0.0, 0)
        self._pending_latch: str | None = None
        self._overlaps: frozenset[tuple[str, str]] = frozenset()
        self.ee_pose, self.frames = forward_kinematics(arm.dh, self.joints)
        self.target = self.ee_pose.position.copy()
        self.bodies.update(scenario.arm_link_bodies(self.frames))
        self._end_reason: str | None = None
        self._decimation = max(1, snapshot_decimation)

    # ------------------------------------------------------------------ input

    def submit(self, cmd: InputCommand) -> None:
        """Queue a decoded command (records it for the input log)."""
        self.queue.push(cmd)
        self.inputs.append(cmd)

    # ------------------------------------------------------------------- tick

    @property
    def done(self) -> bool:
        return self._end_reason is not None

    def camera_world_poses(self) -> list[Pose]:
        return [cam.world_pose(self.frames) for cam in self.rig.cameras]

    def tick(self) -> dict | None:
        """Advance one fixed step; returns a snapshot on broadcast ticks."""
        if self.done:
            return None
        now = (self.tick_count + 1) / TICK_RATE

        for cmd in self.queue.pop_ready(now):
            edges = cmd.buttons - self._held.buttons
            cycle = (1 if "R1" in edges else 0) - (1 if "L1" in edges else 0)
            if cycle:
                self.rig.cycle(cycle)
                self._log(now, "camera_switch", {"index": self.rig.selected})
            if "Cross" in edges:
                self._pending_latch = "grapple"
            elif "Triangle" in edges:
                self._pending_latch = "release"
            self._held = cmd

        held = self._held
        cam_pose = self.rig.cameras[self.rig.selected].world_pose(self.frames)
        delta = map_input(held, self.rig, DT, camera_pose=cam_pose)
        self.target = self.target + delta.target_delta
        cam = self.rig.cameras[self.rig.selected]
        cam.pan += delta.camera_pan
        cam.tilt += delta.camera_tilt

        before = self.joints.angles.copy()
        self.joints = apply_wrist(self.joints, delta.wrist_roll,
                                  delta.wrist_pitch, delta.wrist_yaw,
                                  DT, rate=self.arm.wrist_rate)
        self.joints, _ = solve_ik(self.arm.dh, self.target, self.joints,
                                  max_iter=1, dt=DT)
        # wrist pitch and IK share joint 5; cap the combined per-tick motion
        limit = self.joints.max_velocity * DT
        self.joints.angles = before + np.clip(self.joints.angles - before,
                                              -limit, limit)

        self.ee_pose, self.frames = forward_kinematics(self.arm.dh, self.joints)
        for bid, body in self.scenario.arm_link_bodies(self.frames).items():
            self.bodies[bid].shape = body.shape
        self.attachment.update(self.ee_pose, self.bodies["module"])
        integrate_free_bodies(list(self.bodies.values()), DT)

        contacts = detect_collisions(list(self.bodies.values()), now=now,
                                     previous=self._overlaps)
        for contact in contacts:
            kinds = frozenset({self.bodies[contact.body_a].kind,
                               self.bodies[contact.body_b].kind})
            if contact.episode == "new" and kinds in SCORED_PAIR_KINDS:
                mission.record_collision(self.task)
                self._log(now, "collision",
                          {"body_a": contact.body_a, "body_b": contact.body_b})
            resolve_contact(contact, self.bodies, DT)
        self._overlaps = frozenset(pair_key(c.body_a, c.body_b) for c in contacts)

        self._process_latch(now)

        mission.advance_to(self.task, now)
        self.time = now
        if self.task.phase == "TimedOut":
            self._finish(now, "timeout")
        elif self.task.phase == "Docked":
            self._finish(now, "docked")

        self.tick_count += 1
        if self.tick_count % self._decimation == 0 or self.done:
            return self.snapshot()
        return None

    def _process_latch(self, now: float) -> None:
        latch, self._pending_latch = self._pending_latch, None
        module = self.bodies["module"]
        if latch == "grapple" and self.task.phase == "Approach":
            fixture = self.scenario.fixture_world(module.pose)
            if mission.try_grapple(self.ee_pose, fixture, self.task):
                ev = self.task.grapple_event
                self._log(now, "latch", {})
                self._log(now, "grapple", {"dist": ev.dist, "angle": ev.angle,
                                           "quality": ev.quality})
                self.attachment.attach(self.ee_pose, module)
        elif latch == "release" and self.task.phase == "Grappled":
            if mission.try_dock(module.pose, self.scenario.dock_pose, self.task):
                ev = self.task.dock_event
                self._log(now, "unlatch", {})
                self._log(now, "dock", {"dist": ev.dist, "angle": ev.angle,
                                        "quality": ev.quality})
                self.attachment.detach(module)

    def _log(self, now: float, kind: str, payload: dict) -> None:
        self.log.append(SessionEvent(now, kind, payload))

    def _finish(self, now: float, reason: str) -> None:
        self._log(now, "trial_end",
                  {"reason": reason, "final_score": self.task.score})
        self._end_reason = reason

    def abort(self, reason: str = "aborted") -> None:
        if not self.done:
            self._finish(self.time, reason)

    # --------------------------------------------------------------- snapshot

    def snapshot(self) -> dict:
        cams = self.camera_world_poses()
        return {
            "t": "state",
            "time": self.time,
            "phase": self.task.phase,
            "score": self.task.score,
            "elapsed": self.task.elapsed,
            "timer": timer_state(self.task.elapsed, self.config.time_pressure),
            "joints": [float(q) for q in self.joints.angles],
            "ee": self.ee_pose.to_dict(),
            "target": [float(v) for v in self.target],
            "bodies": {bid: b.pose.to_dict() for bid, b in self.bodies.items()
                       if b.kind != "arm_link"},
            "cameras": [c.to_dict() for c in cams],
            "selected": self.rig.selected,
            "attached": self.attachment.attached,
            "collisions": self.task.collisions,
        }


# ---------------------------------------------------------------- pilot

@dataclass
class PilotStep:
    kind: str                      # waypoint | latch | dock | camera | wait
    position: list[float] | None = None
    tol: float = 0.3
    dwell: float = 0.0
    index: int | None = None       # camera steps
    seconds: float = 0.0           # wait steps


@dataclass
class PilotScript:
    steps: list[PilotStep] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = []
        for s in self.steps:
            d = {"kind": s.kind}
            if s.position is not None:
                d["position"] = list(s.position)
            if s.kind == "waypoint":
                d["tol"] = s.tol
                d["dwell"] = s.dwell
            if s.index is not None:
                d["index"] = s.index
            if s.kind == "wait":
                d["seconds"] = s.seconds
            out.append(d)
        return {"steps": out}

    @staticmethod
    def from_dict(d: dict) -> "PilotScript":
        steps = [PilotStep(kind=s["kind"], position=s.get("position"),
                           tol=s.get("tol", 0.3), dwell=s.get("dwell", 0.0),
                           index=s.get("index"), seconds=s.get("seconds", 0.0))
                 for s in d["steps"]]
        return PilotScript(steps)

    @staticmethod
    def load(path: str | Path) -> "PilotScript":
        return PilotScript.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


class Autopilot:
    """Converts waypoints into camera-frame stick commands, closed loop.

    Edge-triggered buttons (Cross/Triangle/R1) are pulsed: pressed for one
    command, released for the following ones, retried on a fixed cadence.
    """

    RETRY_TICKS = 25  # 0.5 s between latch retries

    def __init__(self, script: PilotScript):
        self.script = script
        self.step_idx = 0
        self._dwell_until = 0.0
        self._last_pulse = -10_000
        self._tick = 0

    def command(self, engine: Engine, seq: int) -> InputCommand:
        self._tick += 1
        now = engine.time
        buttons: set[str] = set()
        lx = ly = 0.0
        depth = 0.0
        while self.step_idx < len(self.script.steps):
            step = self.script.steps[self.step_idx]
            if step.kind == "wait":
                if not self._dwell_until:
                    self._dwell_until = now + step.seconds
                if now >= self._dwell_until:
                    self._advance()
                    continue
                break
            if step.kind == "camera":
                if engine.rig.selected == step.index:
                    self._advance()
                    continue
                if self._pulse():
                    buttons.add("R1")
                break
            if step.kind == "latch":
                if engine.task.phase != "Approach":
                    self._advance()
                    continue
                if self._pulse():
                    buttons.add("Cross")
                break
            if step.kind == "dock":
                if engine.task.phase == "Docked":
                    self._advance()
                    continue
                if self._pulse():
                    buttons.add("Triangle")
                break
            if step.kind == "waypoint":
                goal = np.array(step.position, dtype=float)
                err = goal - engine.ee_pose.position
                dist = float(np.linalg.norm(err))
                if dist <= step.tol:
                    if step.dwell > 0:
                        self.script.steps[self.step_idx] = PilotStep(
                            "wait", seconds=step.dwell)
                        continue
                    self._advance()
                    continue
                lx, ly, depth = self._steer(engine, err, dist)
                break
            raise ValueError(f"unknown pilot step kind {step.kind!r}")
        if depth > 0:
            buttons.add("R2")
        elif depth < 0:
            buttons.add("L2")
        return InputCommand(now, seq, lx=lx, ly=ly, buttons=frozenset(buttons))

    def _advance(self) -> None:
        self.step_idx += 1
        self._dwell_until = 0.0

    def _pulse(self) -> bool:
        if self._tick - self._last_pulse >= self.RETRY_TICKS:
            self._last_pulse = self._tick
            return True
        return False

    def _steer(self, engine: Engine, err: np.ndarray, dist: float):
        cam_pose = engine.rig.cameras[engine.rig.selected].world_pose(engine.frames)
        inv = cam_pose.inverse()
        from .geom import quat_rotate
        d_cam = quat_rotate(inv.orientation, err)
        gain = min(1.0, dist)  # slow down on approach
        scale = max(abs(d_cam[0]), abs(d_cam[1]), abs(d_cam[2]), 1e-9)
        lx = float(np.clip(d_cam[0] / scale, -1, 1)) * gain
        ly = float(np.clip(-d_cam[1] / scale, -1, 1)) * gain
        fwd = -d_cam[2] / scale  # camera forward is -z
        depth = 0.0
        if fwd > 0.3:
            depth = 1.0
        elif fwd < -0.3:
            depth = -1.0
        return lx, ly, depth


# ------------------------------------------------------------- input logs

INPUT_SCHEMA_VERSION = 1


def dump_inputs(session: Session, scenario: Scenario) -> str:
    lines = [json.dumps({"kind": "header", "schema": INPUT_SCHEMA_VERSION,
                         "config": session.config.to_dict(),
                         "scenario_hash": session.scenario_hash,
                         "horizon": session.horizon,
                         "scenario": scenario.to_dict()}, sort_keys=True)]
    for cmd in session.inputs:
        lines.append(json.dumps({
            "kind": "input", "seq": cmd.seq, "ts": cmd.timestamp,
            "axes": {"lx": cmd.lx, "ly": cmd.ly, "rx": cmd.rx, "ry": cmd.ry},
            "buttons": sorted(cmd.buttons)}, sort_keys=True))
    return "\n".join(lines) + "\n"


def parse_inputs(text: str) -> tuple[TrialConfig, Scenario, str, float, list[InputCommand]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty input log")
    header = json.loads(lines[0])
    if header.get("kind") != "header" or header.get("schema") != INPUT_SCHEMA_VERSION:
        raise ValueError("missing or unsupported input log header")
    config = TrialConfig.from_dict(header["config"])
    scenario = Scenario.from_dict(header["scenario"])
    commands = []
    for ln in lines[1:]:
        rec = json.loads(ln)
        if rec.get("kind") != "input":
            raise ValueError(f"unexpected record kind {rec.get('kind')!r}")
        commands.append(InputCommand(rec["ts"], rec["seq"],
                                     lx=rec["axes"]["lx"], ly=rec["axes"]["ly"],
                                     rx=rec["axes"]["rx"], ry=rec["axes"]["ry"],
                                     buttons=frozenset(rec["buttons"])))
    return config, scenario, header["scenario_hash"], header["horizon"], commands


# -------------------------------------------------------------- run modes

def run_headless(scenario: Scenario, config: TrialConfig, pilot: PilotScript,
                 horizon: float = 600.0) -> Session:
    """Run a scripted trial on the simulated clock (no wall-clock coupling)."""
    engine = Engine(scenario, config, snapshot_decimation=1)
    autopilot = Autopilot(PilotScript.from_dict(pilot.to_dict()))  # private copy
    snapshots = []
    seq = 1
    while not engine.done and engine.time < horizon:
        engine.submit(autopilot.command(engine, seq))
        seq += 1
        snap = engine.tick()
        if snap is not None:
            snapshots.append(snap)
    if not engine.done:
        engine.abort("aborted")
        snapshots.append(engine.snapshot())
    return Session(engine.log, engine.inputs, snapshots, config,
                   scenario.digest(), horizon)


def replay(input_log_text: str, config: TrialConfig | None = None,
           scenario: Scenario | None = None) -> Session:
    """Re-execute a recorded input stream under the fixed tick.

    Refuses to run if an explicitly supplied config or scenario disagrees
    with what the log recorded.
    """
    rec_config, rec_scenario, rec_hash, horizon, commands = parse_inputs(input_log_text)
    if config is not None and config.to_dict() != rec_config.to_dict():
        raise ReplayMismatch("supplied config differs from recorded config")
    if scenario is not None and scenario.digest() != rec_hash:
        raise ReplayMismatch("supplied scenario hash differs from recorded run")
    if rec_scenario.digest() != rec_hash:
        raise ReplayMismatch("embedded scenario does not match recorded hash")
    engine = Engine(rec_scenario, rec_config, snapshot_decimation=1)
    snapshots = []
    pending = list(commands)
    while not engine.done and engine.time < horizon:
        # commands re-enter the queue at their recorded issue times
        while pending and pending[0].timestamp <= engine.time:
            engine.submit(pending.pop(0))
        snap = engine.tick()
        if snap is not None:
            snapshots.append(snap)
    if not engine.done:
        engine.abort("aborted")
        snapshots.append(engine.snapshot())
    return Session(engine.log, engine.inputs, snapshots, rec_config, rec_hash,
                   horizon)
