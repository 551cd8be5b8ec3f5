import { describe, expect, it } from "vitest";

import { CockpitClient, SocketLike } from "../src/client.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  private handlers = new Map<string, ((ev: any) => void)[]>();

  addEventListener(type: string, handler: (ev: any) => void): void {
    const list = this.handlers.get(type) ?? [];
    list.push(handler);
    this.handlers.set(type, list);
  }

  emit(type: string, ev: any = {}): void {
    for (const h of this.handlers.get(type) ?? []) h(ev);
  }

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
  }
}

describe("cockpit client", () => {
  it("keeps only the latest snapshot", () => {
    const socket = new FakeSocket();
    const client = new CockpitClient(socket);
    socket.emit("open");
    socket.emit("message", { data: '{"t":"state","time":1}' });
    socket.emit("message", { data: '{"t":"state","time":2}' });
    expect(client.latest?.time).toBe(2);
  });

  it("surfaces operator refusal clearly and closes", () => {
    const socket = new FakeSocket();
    const states: string[] = [];
    const client = new CockpitClient(socket, {
      onState: (s, detail) => states.push(`${s}:${detail ?? ""}`),
    });
    socket.emit("open");
    socket.emit("message",
      { data: '{"t":"error","msg":"session already has an operator"}' });
    expect(client.state).toBe("refused");
    expect(socket.closed).toBe(true);
    expect(states.some((s) => s.includes("operator"))).toBe(true);
  });

  it("mid-trial drop reports a reconnect prompt", () => {
    const socket = new FakeSocket();
    let detail = "";
    const client = new CockpitClient(socket, {
      onState: (_s, d) => { detail = d ?? ""; },
    });
    socket.emit("open");
    socket.emit("close");
    expect(client.state).toBe("dropped");
    expect(detail).toMatch(/reconnect/);
  });

  it("hello carries the scenario for local scene building", () => {
    const socket = new FakeSocket();
    let scenarioName = "";
    new CockpitClient(socket, {
      onHello: (h) => { scenarioName = h.scenario.name; },
    });
    socket.emit("open");
    socket.emit("message", {
      data: JSON.stringify({ t: "hello", scenario: { name: "mini" },
        config: {}, tick_rate: 50 }),
    });
    expect(scenarioName).toBe("mini");
  });

  it("bye ends the session with its reason", () => {
    const socket = new FakeSocket();
    const client = new CockpitClient(socket);
    socket.emit("open");
    socket.emit("message", { data: '{"t":"bye","reason":"docked"}' });
    expect(client.state).toBe("ended");
    expect(client.byeReason).toBe("docked");
  });

  it("tolerates unknown frame types", () => {
    const socket = new FakeSocket();
    const client = new CockpitClient(socket);
    socket.emit("open");
    socket.emit("message", { data: '{"t":"future-frame"}' });
    expect(client.state).toBe("live");
  });
});
