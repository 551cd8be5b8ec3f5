/** Controller mapping: standard gamepad layout plus a keyboard fallback
 * covering every action (documented in the README).
 *
 * Gamepad (standard mapping): left stick moves the end-effector in the
 * selected camera frame, L2/R2 depth, right stick wrist joints 5/6,
 * Square/Circle roll the final joint, L1/R1 cycle cameras, D-pad aims the
 * selected camera, Cross latches, Triangle docks.
 */
import type { Axes, ButtonName } from "./protocol.js";

export interface InputState {
  axes: Axes;
  buttons: Set<ButtonName>;
}

const GAMEPAD_BUTTON_MAP: Record<number, ButtonName> = {
  0: "Cross",
  1: "Circle",
  2: "Square",
  3: "Triangle",
  4: "L1",
  5: "R1",
  6: "L2",
  7: "R2",
  12: "DpadU",
  13: "DpadD",
  14: "DpadL",
  15: "DpadR",
};

/** Minimal structural view of the browser Gamepad object (testable). */
export interface GamepadLike {
  axes: ReadonlyArray<number>;
  buttons: ReadonlyArray<{ pressed: boolean }>;
}

export function readGamepad(pad: GamepadLike): InputState {
  const buttons = new Set<ButtonName>();
  pad.buttons.forEach((b, i) => {
    const name = GAMEPAD_BUTTON_MAP[i];
    if (name && b.pressed) buttons.add(name);
  });
  return {
    axes: {
      lx: pad.axes[0] ?? 0,
      ly: pad.axes[1] ?? 0,
      rx: pad.axes[2] ?? 0,
      ry: pad.axes[3] ?? 0,
    },
    buttons,
  };
}

export const KEY_BINDINGS: Record<string, ButtonName> = {
  KeyQ: "L2",
  KeyE: "R2",
  Digit1: "L1",
  Digit2: "R1",
  Space: "Cross",
  KeyT: "Triangle",
  KeyZ: "Square",
  KeyX: "Circle",
  KeyI: "DpadU",
  KeyK: "DpadD",
  KeyJ: "DpadL",
  KeyL: "DpadR",
};

/** WASD -> left stick, arrow keys -> right stick. */
const AXIS_KEYS: Record<string, [keyof Axes, number]> = {
  KeyA: ["lx", -1],
  KeyD: ["lx", 1],
  KeyW: ["ly", -1],
  KeyS: ["ly", 1],
  ArrowLeft: ["rx", -1],
  ArrowRight: ["rx", 1],
  ArrowUp: ["ry", -1],
  ArrowDown: ["ry", 1],
};

/** Tracks currently held keys and renders them as a controller state. */
export class KeyboardFallback {
  private held = new Set<string>();

  keyDown(code: string): void {
    this.held.add(code);
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  state(): InputState {
    const axes: Axes = { lx: 0, ly: 0, rx: 0, ry: 0 };
    const buttons = new Set<ButtonName>();
    for (const code of this.held) {
      const axis = AXIS_KEYS[code];
      if (axis) axes[axis[0]] += axis[1];
      const button = KEY_BINDINGS[code];
      if (button) buttons.add(button);
    }
    for (const k of ["lx", "ly", "rx", "ry"] as const) {
      axes[k] = Math.max(-1, Math.min(1, axes[k]));
    }
    return { axes, buttons };
  }
}

/** Prefer a connected gamepad; otherwise fall back to the keyboard. */
export function currentInput(
  pads: ReadonlyArray<GamepadLike | null>, keyboard: KeyboardFallback,
): InputState {
  for (const pad of pads) {
    if (pad) return readGamepad(pad);
  }
  return keyboard.state();
}
