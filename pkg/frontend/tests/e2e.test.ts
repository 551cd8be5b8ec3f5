/** End-to-end: spawn the real gateway, fly the grapple-and-dock mission
 * through the WebSocket using the cockpit's own steering and input
 * encoding, in a no-confound scenario. */
import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { MissionPilot } from "../src/autopilot.js";
import { CockpitClient } from "../src/client.js";
import { encodeInput } from "../src/protocol.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const REPO = join(HERE, "..", "..");
const SCENARIO = join(HERE, "fixtures", "e2e_scenario.json");
const PORT = 18000 + Math.floor(Math.random() * 2000);

let server: ChildProcess;

beforeAll(async () => {
  const outDir = mkdtempSync(join(tmpdir(), "oow-e2e-"));
  server = spawn("python3", [
    "-m", "oow.cli", "serve",
    "--scenario", SCENARIO,
    "--no-obstacles",
    "--port", String(PORT),
    "--out", outDir,
  ], { cwd: REPO, env: { ...process.env, PYTHONPATH: join(REPO, "src") } });
  if (process.env.E2E_DEBUG) {
    server.stderr?.on("data", (d) => process.stderr.write(`[gateway] ${d}`));
  }
  await waitForPort(PORT, 15000);
});

afterAll(() => {
  server?.kill();
});

async function waitForPort(port: number, timeoutMs: number): Promise<void> {
  // raw TCP probe: a WebSocket probe would claim the single operator slot
  const net = await import("node:net");
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    const ok = await new Promise<boolean>((resolve) => {
      const sock = net.connect(port, "127.0.0.1");
      sock.on("connect", () => { sock.destroy(); resolve(true); });
      sock.on("error", () => resolve(false));
    });
    if (ok) return;
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("gateway never came up");
}

describe("end-to-end mission", () => {
  it("cockpit pilot grapples and docks through the live gateway", async () => {
    const socket = new WebSocket(`ws://127.0.0.1:${PORT}`);
    const client = new CockpitClient(socket as any);

    await new Promise<void>((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("no hello from gateway")), 10000);
      const poll = setInterval(() => {
        if (client.hello) { clearTimeout(timer); clearInterval(poll); resolve(); }
      }, 20);
    });

    const pilot = new MissionPilot(client.hello!.scenario);
    const phases = new Set<string>();
    let seq = 0;

    const result = await new Promise<string>((resolve, reject) => {
      const guard = setTimeout(
        () => reject(new Error(`mission timed out; saw phases ${[...phases]}`)),
        90_000);
      const pump = setInterval(() => {
        if (client.byeReason) {
          clearTimeout(guard);
          clearInterval(pump);
          resolve(client.byeReason);
          return;
        }
        const snap = client.latest;
        if (!snap || client.state !== "live") return;
        phases.add(snap.phase);
        const cmd = pilot.command(snap);
        seq += 1;
        client.send(encodeInput(seq, Date.now() / 1000, cmd.axes, cmd.buttons));
      }, 20);
    });

    expect(result).toBe("docked");
    expect(phases.has("Approach")).toBe(true);
    expect(phases.has("Grappled")).toBe(true);
    socket.close();
  }, 120_000);
});
