/** Camera-frame steering used by the e2e test and the demo autopilot: the
 * same closed loop a human flies, expressed through Table-1 actions. */
import type {
  Axes, ButtonName, ScenarioDoc, Snapshot, Vec3,
} from "./protocol.js";
import { quatConj, quatRotate, transformPoint } from "./protocol.js";

export interface PilotCommand {
  axes: Axes;
  buttons: Set<ButtonName>;
}

const ZERO_AXES: Axes = { lx: 0, ly: 0, rx: 0, ry: 0 };

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function norm(v: Vec3): number {
  return Math.hypot(v[0], v[1], v[2]);
}

/** Steer toward a world-space end-effector goal through the selected
 * camera's frame; mirrors the control coupling server-side. */
export function steerTo(snap: Snapshot, goal: Vec3): PilotCommand {
  const err = sub(goal, snap.ee.pos);
  const dist = norm(err);
  const cam = snap.cameras[snap.selected];
  const dCam = quatRotate(quatConj(cam.quat), err);
  const gain = Math.min(1, dist);
  const scale = Math.max(Math.abs(dCam[0]), Math.abs(dCam[1]),
    Math.abs(dCam[2]), 1e-9);
  const buttons = new Set<ButtonName>();
  const forward = -dCam[2] / scale; // camera forward is -z
  if (forward > 0.3) buttons.add("R2");
  else if (forward < -0.3) buttons.add("L2");
  return {
    axes: {
      lx: clamp(dCam[0] / scale) * gain,
      ly: clamp(-dCam[1] / scale) * gain,
      rx: 0, ry: 0,
    },
    buttons,
  };
}

function clamp(v: number): number {
  return Math.max(-1, Math.min(1, v));
}

/** Grapple-then-dock mission flown from snapshots alone. */
export class MissionPilot {
  private pulseCooldown = 0;

  constructor(private scenario: ScenarioDoc, private tolerance = 0.5) {}

  command(snap: Snapshot): PilotCommand {
    this.pulseCooldown = Math.max(0, this.pulseCooldown - 1);
    if (snap.phase === "Approach") {
      const fixture = transformPoint(
        snap.bodies["module"], this.scenario.module.fixture_offset.pos);
      const dist = norm(sub(fixture, snap.ee.pos));
      if (dist > this.tolerance) return steerTo(snap, fixture);
      return this.pulse("Cross");
    }
    if (snap.phase === "Grappled") {
      // carry offset: where the ee must sit for the module to reach the dock
      const carry = sub(snap.bodies["module"].pos, snap.ee.pos);
      const goal = sub(this.scenario.dock.pos, carry);
      const moduleToDock = norm(sub(this.scenario.dock.pos,
        snap.bodies["module"].pos));
      if (moduleToDock > 2.0) return steerTo(snap, goal);
      return this.pulse("Triangle");
    }
    return { axes: { ...ZERO_AXES }, buttons: new Set() };
  }

  private pulse(button: ButtonName): PilotCommand {
    const buttons = new Set<ButtonName>();
    if (this.pulseCooldown === 0) {
      buttons.add(button);
      this.pulseCooldown = 25; // retry every half second at 50 Hz
    }
    return { axes: { ...ZERO_AXES }, buttons };
  }
}
