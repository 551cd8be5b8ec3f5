/** Gateway WebSocket message types and helpers (JSON text frames). */

export type Vec3 = [number, number, number];
/** Quaternion in gateway order: [w, x, y, z]. */
export type Quat = [number, number, number, number];

export interface PoseDict {
  pos: Vec3;
  quat: Quat;
}

export type ButtonName =
  | "L1" | "R1" | "L2" | "R2"
  | "Cross" | "Triangle" | "Square" | "Circle"
  | "DpadU" | "DpadD" | "DpadL" | "DpadR";

export interface Axes {
  lx: number;
  ly: number;
  rx: number;
  ry: number;
}

export interface InputMessage {
  t: "input";
  seq: number;
  ts: number;
  axes: Axes;
  buttons: ButtonName[];
}

export interface Snapshot {
  t: "state";
  time: number;
  phase: "Approach" | "Grappled" | "Docked" | "TimedOut";
  score: number;
  elapsed: number;
  timer: "white" | "yellow" | "red" | "expired";
  joints: number[];
  ee: PoseDict;
  target: Vec3;
  bodies: Record<string, PoseDict>;
  cameras: PoseDict[];
  selected: number;
  attached: boolean;
  collisions: number;
}

export interface HelloMessage {
  t: "hello";
  scenario: ScenarioDoc;
  config: { latency: number; time_pressure: boolean; obstacles: boolean };
  tick_rate: number;
}

export interface EventMessage {
  t: "event";
  time: number;
  kind: string;
  [key: string]: unknown;
}

export interface ErrorMessage { t: "error"; msg: string; }
export interface ByeMessage { t: "bye"; reason: string; }

export type ServerMessage =
  | HelloMessage | Snapshot | EventMessage | ErrorMessage | ByeMessage;

export interface ScenarioDoc {
  schema: number;
  name: string;
  initial_joints: number[];
  module: { pose: PoseDict; half_extents: Vec3; fixture_offset: PoseDict };
  dock: PoseDict;
  iss: { id: string; pose: PoseDict; half_extents: Vec3 }[];
  obstacles: { id: string; position: Vec3; radius: number }[];
  cameras: { pose: PoseDict; mount: number | null }[];
  arm_link_radius: number;
}

export function parseServerMessage(raw: string): ServerMessage {
  const msg = JSON.parse(raw);
  if (typeof msg !== "object" || msg === null || typeof msg.t !== "string") {
    throw new Error("malformed server frame");
  }
  switch (msg.t) {
    case "hello": case "state": case "event": case "error": case "bye":
      return msg as ServerMessage;
    default:
      throw new Error(`unknown frame type ${msg.t}`);
  }
}

export function encodeInput(
  seq: number, ts: number, axes: Axes, buttons: Iterable<ButtonName>,
): string {
  const msg: InputMessage = {
    t: "input", seq, ts,
    axes: {
      lx: clampAxis(axes.lx), ly: clampAxis(axes.ly),
      rx: clampAxis(axes.rx), ry: clampAxis(axes.ry),
    },
    buttons: [...buttons].sort(),
  };
  return JSON.stringify(msg);
}

function clampAxis(v: number): number {
  if (!Number.isFinite(v)) return 0;
  return Math.max(-1, Math.min(1, v));
}

// ---- minimal quaternion math (gateway [w,x,y,z] order) ----

export function quatRotate(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  const [vx, vy, vz] = v;
  const cx = y * vz - z * vy;
  const cy = z * vx - x * vz;
  const cz = x * vy - y * vx;
  return [
    vx + 2 * (w * cx + y * cz - z * cy),
    vy + 2 * (w * cy + z * cx - x * cz),
    vz + 2 * (w * cz + x * cy - y * cx),
  ];
}

export function quatConj(q: Quat): Quat {
  return [q[0], -q[1], -q[2], -q[3]];
}

export function transformPoint(pose: PoseDict, local: Vec3): Vec3 {
  const r = quatRotate(pose.quat, local);
  return [pose.pos[0] + r[0], pose.pos[1] + r[1], pose.pos[2] + r[2]];
}
