/**
 * Keyboard and gamepad mapping to teleoperation input.
 *
 * Held keys form the continuous 6-axis sample (clamped to [-1,1]):
 *   W/S  -> v[1] +/-    A/D -> v[0] -/+    E/Q -> v[2] +/-
 *   ArrowUp/Down -> r[1] (pitch) +/-   ArrowLeft/Right -> r[2] (yaw) +/-
 *   Comma/Period -> r[0] (roll) -/+
 *
 * One-shot keys emit exactly one message per keydown (edge-triggered):
 *   BracketRight/BracketLeft -> gamma +1/-1
 *   Equal/Minus              -> needle jog +1/-1
 *   Space                    -> e-stop     Enter -> enable
 */

import {
  ClientMessage,
  Vec3,
  enableMessage,
  estopMessage,
  gammaMessage,
  inputMessage,
  jogMessage,
} from "./protocol.js";

const AXIS_KEYS: Record<string, { target: "v" | "r"; index: number; sign: 1 | -1 }> = {
  KeyW: { target: "v", index: 1, sign: 1 },
  KeyS: { target: "v", index: 1, sign: -1 },
  KeyD: { target: "v", index: 0, sign: 1 },
  KeyA: { target: "v", index: 0, sign: -1 },
  KeyE: { target: "v", index: 2, sign: 1 },
  KeyQ: { target: "v", index: 2, sign: -1 },
  ArrowUp: { target: "r", index: 1, sign: 1 },
  ArrowDown: { target: "r", index: 1, sign: -1 },
  ArrowLeft: { target: "r", index: 2, sign: 1 },
  ArrowRight: { target: "r", index: 2, sign: -1 },
  Period: { target: "r", index: 0, sign: 1 },
  Comma: { target: "r", index: 0, sign: -1 },
};

const ONESHOT_KEYS: Record<string, () => ClientMessage> = {
  BracketRight: () => gammaMessage(1),
  BracketLeft: () => gammaMessage(-1),
  Equal: () => jogMessage(1),
  Minus: () => jogMessage(-1),
  Space: () => estopMessage(),
  Enter: () => enableMessage(),
};

export interface KeyEventLike {
  code: string;
  repeat?: boolean;
}

/** Tracks held keys and queues edge-triggered one-shot messages. */
export class InputMapper {
  private held = new Set<string>();
  private oneshots: ClientMessage[] = [];

  keyDown(event: KeyEventLike): void {
    if (event.repeat) {
      return; // auto-repeat must not re-fire one-shots
    }
    if (event.code in ONESHOT_KEYS) {
      this.oneshots.push(ONESHOT_KEYS[event.code]());
      return;
    }
    if (event.code in AXIS_KEYS) {
      this.held.add(event.code);
    }
  }

  keyUp(event: KeyEventLike): void {
    this.held.delete(event.code);
  }

  clearHeld(): void {
    this.held.clear();
  }

  /** Continuous sample from the currently held keys (and gamepad axes). */
  axesSample(gamepad?: { v: Vec3; r: Vec3 }): { v: Vec3; r: Vec3 } {
    const v: Vec3 = [0, 0, 0];
    const r: Vec3 = [0, 0, 0];
    for (const code of this.held) {
      const spec = AXIS_KEYS[code];
      if (spec.target === "v") {
        v[spec.index] += spec.sign;
      } else {
        r[spec.index] += spec.sign;
      }
    }
    if (gamepad) {
      for (let i = 0; i < 3; i++) {
        v[i] += gamepad.v[i];
        r[i] += gamepad.r[i];
      }
    }
    return { v, r };
  }

  /** The idle/active input message for this frame (axes clamped). */
  inputMessage(gamepad?: { v: Vec3; r: Vec3 }): ClientMessage {
    const { v, r } = this.axesSample(gamepad);
    return inputMessage(v, r);
  }

  /** Drain queued one-shot messages in press order. */
  takeOneshots(): ClientMessage[] {
    const out = this.oneshots;
    this.oneshots = [];
    return out;
  }

  get anyHeld(): boolean {
    return this.held.size > 0;
  }
}

const DEADZONE = 0.1;

function shaped(value: number): number {
  return Math.abs(value) < DEADZONE ? 0 : value;
}

/** Map a standard-layout gamepad to the 6-axis sample. */
export function gamepadAxes(pad: {
  axes: ReadonlyArray<number>;
}): { v: Vec3; r: Vec3 } {
  const a = pad.axes;
  return {
    // Left stick: lateral / vertical (stick up is negative); right stick:
    // yaw / pitch. Negate before the deadzone so dead axes stay exactly 0.
    v: [shaped(a[0] ?? 0), shaped(-(a[1] ?? 0)), 0],
    r: [0, shaped(-(a[3] ?? 0)), shaped(a[2] ?? 0)],
  };
}
