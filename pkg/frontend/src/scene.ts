/** Local three.js scene built from the scenario document: primitive bodies,
 * an articulated arm rendered as segments between joint frames, and the
 * four rig cameras driven by snapshot poses. */
import * as THREE from "three";

import type { PoseDict, Quat, ScenarioDoc, Snapshot, Vec3 } from "./protocol.js";

function toQuaternion(q: Quat): THREE.Quaternion {
  // gateway order [w,x,y,z] -> three (x,y,z,w)
  return new THREE.Quaternion(q[1], q[2], q[3], q[0]);
}

function applyPose(obj: THREE.Object3D, pose: PoseDict): void {
  obj.position.set(...pose.pos);
  obj.quaternion.copy(toQuaternion(pose.quat));
}

export class CockpitScene {
  readonly scene = new THREE.Scene();
  readonly cameras: THREE.PerspectiveCamera[] = [];
  private bodies = new Map<string, THREE.Object3D>();
  private armSegments: THREE.Mesh[] = [];
  private jointFrames: Vec3[] = [];

  constructor(scenario: ScenarioDoc) {
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.6));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(20, 30, 40);
    this.scene.add(sun);

    const moduleGeom = new THREE.BoxGeometry(
      ...scenario.module.half_extents.map((h) => 2 * h) as Vec3);
    const module = new THREE.Mesh(
      moduleGeom, new THREE.MeshStandardMaterial({ color: 0xb0b6c0 }));
    applyPose(module, scenario.module.pose);
    this.scene.add(module);
    this.bodies.set("module", module);

    for (const box of scenario.iss) {
      const mesh = new THREE.Mesh(
        new THREE.BoxGeometry(...box.half_extents.map((h) => 2 * h) as Vec3),
        new THREE.MeshStandardMaterial({ color: 0x8a8f98 }));
      applyPose(mesh, box.pose);
      this.scene.add(mesh);
      this.bodies.set(box.id, mesh);
    }

    for (const obs of scenario.obstacles) {
      const mesh = new THREE.Mesh(
        new THREE.SphereGeometry(obs.radius, 24, 16),
        new THREE.MeshStandardMaterial({ color: 0x7d6b5a }));
      mesh.position.set(...obs.position);
      this.scene.add(mesh);
      this.bodies.set(obs.id, mesh);
    }

    const dock = new THREE.Mesh(
      new THREE.SphereGeometry(0.25, 12, 8),
      new THREE.MeshStandardMaterial({
        color: 0x37d67a, transparent: true, opacity: 0.8 }));
    applyPose(dock, scenario.dock);
    this.scene.add(dock);
    this.bodies.set("_dock_marker", dock);

    const segments = scenario.initial_joints.length;
    const linkMaterial = new THREE.MeshStandardMaterial({ color: 0xd9dde3 });
    for (let i = 0; i < segments; i++) {
      const mesh = new THREE.Mesh(
        new THREE.CylinderGeometry(scenario.arm_link_radius,
          scenario.arm_link_radius, 1.0, 12), linkMaterial);
      this.scene.add(mesh);
      this.armSegments.push(mesh);
    }

    for (let i = 0; i < 4; i++) {
      const cam = new THREE.PerspectiveCamera(60, 1, 0.1, 500);
      this.cameras.push(cam);
      this.scene.add(cam);
    }
  }

  body(id: string): THREE.Object3D | undefined {
    return this.bodies.get(id);
  }

  /** Move bodies, cameras, and arm segments to the snapshot's poses.
   * Joint frame positions come from the client-side FK mirror. */
  update(snapshot: Snapshot, jointFrames: Vec3[]): void {
    for (const [id, pose] of Object.entries(snapshot.bodies)) {
      const obj = this.bodies.get(id);
      if (obj) applyPose(obj, pose);
    }
    snapshot.cameras.forEach((pose, i) => {
      if (this.cameras[i]) applyPose(this.cameras[i], pose);
    });
    this.jointFrames = jointFrames;
    for (let i = 0; i < this.armSegments.length; i++) {
      const a = jointFrames[i];
      const b = jointFrames[i + 1];
      if (!a || !b) continue;
      this.placeSegment(this.armSegments[i], a, b);
    }
  }

  private placeSegment(mesh: THREE.Mesh, a: Vec3, b: Vec3): void {
    const start = new THREE.Vector3(...a);
    const end = new THREE.Vector3(...b);
    const dir = end.clone().sub(start);
    const length = Math.max(dir.length(), 1e-6);
    mesh.position.copy(start.clone().add(end).multiplyScalar(0.5));
    mesh.scale.set(1, length, 1);
    mesh.quaternion.setFromUnitVectors(
      new THREE.Vector3(0, 1, 0), dir.normalize());
  }
}

/** Forward kinematics mirror so the cockpit can draw the arm from joint
 * angles (classic DH, matching the shipped 7-DoF geometry). */
export interface DHRow { thetaOffset: number; d: number; a: number; alpha: number; }

export const CANADARM2_DH: DHRow[] = [
  { thetaOffset: 0, d: 0, a: 0.38, alpha: -Math.PI / 2 },
  { thetaOffset: 0, d: 0, a: 0.38, alpha: Math.PI / 2 },
  { thetaOffset: 0, d: 0, a: 7.11, alpha: 0 },
  { thetaOffset: 0, d: 0, a: 7.11, alpha: 0 },
  { thetaOffset: 0, d: 0, a: 0.38, alpha: -Math.PI / 2 },
  { thetaOffset: 0, d: 0, a: 0.38, alpha: Math.PI / 2 },
  { thetaOffset: 0, d: 0, a: 0.38, alpha: 0 },
];

export function jointFramePositions(dh: DHRow[], joints: number[]): Vec3[] {
  let t = new THREE.Matrix4();
  const out: Vec3[] = [[0, 0, 0]];
  for (let i = 0; i < dh.length; i++) {
    const { thetaOffset, d, a, alpha } = dh[i];
    const th = (joints[i] ?? 0) + thetaOffset;
    const ct = Math.cos(th), st = Math.sin(th);
    const ca = Math.cos(alpha), sa = Math.sin(alpha);
    const m = new THREE.Matrix4().set(
      ct, -st * ca, st * sa, a * ct,
      st, ct * ca, -ct * sa, a * st,
      0, sa, ca, d,
      0, 0, 0, 1);
    t = t.multiply(m);
    const e = t.elements; // column-major
    out.push([e[12], e[13], e[14]]);
  }
  return out;
}
