/** Browser entry point: four scissored viewports on one canvas, HUD
 * overlays, 50 Hz input pump, and the connection banner. */
import * as THREE from "three";

import { MissionPilot } from "./autopilot.js";
import { CockpitClient } from "./client.js";
import { hudModel, renderHud } from "./hud.js";
import { KeyboardFallback, currentInput } from "./input.js";
import { encodeInput } from "./protocol.js";
import { CANADARM2_DH, CockpitScene, jointFramePositions } from "./scene.js";
import { applySelection, frameStyles, initialLayout } from "./viewports.js";

const params = new URLSearchParams(window.location.search);
const server = params.get("server")
  ?? `ws://${window.location.hostname}:8765`;
const autopilotMode = params.get("autopilot") === "1";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
renderer.setScissorTest(true);

const banner = document.getElementById("banner") as HTMLElement;
const hudEls = {
  timer: document.getElementById("timer") as HTMLElement,
  score: document.getElementById("score") as HTMLElement,
  phase: document.getElementById("phase") as HTMLElement,
  modal: document.getElementById("modal") as HTMLElement,
};
const frames = Array.from(
  document.querySelectorAll<HTMLElement>(".viewport-frame"));

let scene: CockpitScene | null = null;
let layout = initialLayout();
let pilot: MissionPilot | null = null;

const socket = new WebSocket(server);
const client = new CockpitClient(socket, {
  onState: (state, detail) => {
    banner.textContent = state === "live" ? ""
      : `${state}${detail ? `: ${detail}` : ""}`;
    banner.style.display = state === "live" ? "none" : "block";
  },
  onHello: (hello) => {
    scene = new CockpitScene(hello.scenario);
    if (autopilotMode) pilot = new MissionPilot(hello.scenario);
  },
});

const keyboard = new KeyboardFallback();
window.addEventListener("keydown", (ev) => keyboard.keyDown(ev.code));
window.addEventListener("keyup", (ev) => keyboard.keyUp(ev.code));

let seq = 0;
window.setInterval(() => {
  if (client.state !== "live") return;
  const snap = client.latest;
  let input;
  if (pilot && snap) {
    input = pilot.command(snap);
  } else {
    input = currentInput(navigator.getGamepads?.() ?? [], keyboard);
  }
  seq += 1;
  client.send(encodeInput(seq, performance.now() / 1000,
    input.axes, input.buttons));
}, 20);

function resize(): void {
  renderer.setSize(canvas.clientWidth, canvas.clientHeight, false);
}
window.addEventListener("resize", resize);
resize();

function renderLoop(): void {
  requestAnimationFrame(renderLoop);
  const snap = client.latest;
  if (!snap || !scene) return;

  layout = applySelection(layout, snap.selected);
  frameStyles(layout).forEach((style, i) => {
    if (frames[i]) frames[i].style.border = style;
  });
  renderHud(hudModel(snap), hudEls);

  scene.update(snap, jointFramePositions(CANADARM2_DH, snap.joints));
  const w = canvas.width / 2;
  const h = canvas.height / 2;
  const rects: [number, number][] = [[0, h], [w, h], [0, 0], [w, 0]];
  scene.cameras.forEach((camera, i) => {
    const [x, y] = rects[i];
    camera.aspect = w / h;
    camera.updateProjectionMatrix();
    renderer.setViewport(x, y, w, h);
    renderer.setScissor(x, y, w, h);
    renderer.render(scene!.scene, camera);
  });
}
renderLoop();
