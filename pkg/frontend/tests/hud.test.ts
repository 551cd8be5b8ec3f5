import { describe, expect, it } from "vitest";

import { TIMER_COLORS, formatClock, hudModel } from "../src/hud.js";
import type { Snapshot } from "../src/protocol.js";

function snap(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    t: "state", time: 10, phase: "Approach", score: 300, elapsed: 10,
    timer: "white", joints: [0, 0], ee: { pos: [0, 0, 0], quat: [1, 0, 0, 0] },
    target: [0, 0, 0], bodies: {}, cameras: [], selected: 0,
    attached: false, collisions: 0, ...overrides,
  };
}

describe("hud model", () => {
  it("timer colors follow snapshot state", () => {
    for (const timer of ["white", "yellow", "red", "expired"] as const) {
      const model = hudModel(snap({ timer }));
      expect(model.timerColor).toBe(TIMER_COLORS[timer]);
    }
  });

  it("yellow digits under time pressure warning", () => {
    const model = hudModel(snap({ timer: "yellow", elapsed: 185 }));
    expect(model.timerColor).toBe("#ffd400");
    expect(model.timerText).toBe("3:05");
  });

  it("score is a passthrough of the snapshot", () => {
    expect(hudModel(snap({ score: 1660 })).scoreText).toBe("1660");
    expect(hudModel(snap({ score: -120.4 })).scoreText).toBe("-120");
  });

  it("expiry raises the end-of-trial modal", () => {
    expect(hudModel(snap({ timer: "expired" })).trialOver).toBe(true);
    expect(hudModel(snap({ phase: "Docked" })).trialOver).toBe(true);
    expect(hudModel(snap()).trialOver).toBe(false);
  });

  it("clock formatting", () => {
    expect(formatClock(0)).toBe("0:00");
    expect(formatClock(59.9)).toBe("0:59");
    expect(formatClock(240)).toBe("4:00");
  });
});
