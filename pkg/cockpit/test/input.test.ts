import { describe, expect, it } from "vitest";

import { InputMapper, gamepadAxes } from "../src/input.js";

describe("keyboard mapping", () => {
  it("no keys held gives the idle sample", () => {
    const mapper = new InputMapper();
    const msg = mapper.inputMessage();
    expect(msg).toEqual({ type: "input", v: [0, 0, 0], r: [0, 0, 0] });
  });

  it("W held maps to v = (0, +1, 0)", () => {
    const mapper = new InputMapper();
    mapper.keyDown({ code: "KeyW" });
    expect(mapper.inputMessage()).toEqual({
      type: "input",
      v: [0, 1, 0],
      r: [0, 0, 0],
    });
    mapper.keyUp({ code: "KeyW" });
    expect(mapper.inputMessage().type === "input" && mapper.anyHeld).toBe(false);
  });

  it("held axis keys combine and clamp", () => {
    const mapper = new InputMapper();
    mapper.keyDown({ code: "KeyD" });
    mapper.keyDown({ code: "KeyS" });
    mapper.keyDown({ code: "ArrowLeft" });
    expect(mapper.inputMessage()).toEqual({
      type: "input",
      v: [1, -1, 0],
      r: [0, 0, 1],
    });
  });

  it("jog key emits exactly one message per keydown", () => {
    const mapper = new InputMapper();
    mapper.keyDown({ code: "Equal" });
    mapper.keyDown({ code: "Equal", repeat: true }); // OS auto-repeat
    mapper.keyDown({ code: "Equal", repeat: true });
    const oneshots = mapper.takeOneshots();
    expect(oneshots).toEqual([{ type: "jog", direction: 1 }]);
    expect(mapper.takeOneshots()).toEqual([]); // drained
    mapper.keyUp({ code: "Equal" });
    mapper.keyDown({ code: "Equal" });
    expect(mapper.takeOneshots()).toEqual([{ type: "jog", direction: 1 }]);
  });

  it("bracket keys map to gamma, space to estop, enter to enable", () => {
    const mapper = new InputMapper();
    mapper.keyDown({ code: "BracketRight" });
    mapper.keyDown({ code: "BracketLeft" });
    mapper.keyDown({ code: "Minus" });
    mapper.keyDown({ code: "Space" });
    mapper.keyDown({ code: "Enter" });
    expect(mapper.takeOneshots()).toEqual([
      { type: "gamma", direction: 1 },
      { type: "gamma", direction: -1 },
      { type: "jog", direction: -1 },
      { type: "estop" },
      { type: "enable" },
    ]);
  });

  it("clearHeld drops stale keys (window blur, reconnect)", () => {
    const mapper = new InputMapper();
    mapper.keyDown({ code: "KeyW" });
    mapper.clearHeld();
    expect(mapper.inputMessage()).toEqual({
      type: "input",
      v: [0, 0, 0],
      r: [0, 0, 0],
    });
  });
});

describe("gamepad mapping", () => {
  it("sticks map through the deadzone", () => {
    expect(gamepadAxes({ axes: [0.05, -0.03, 0.02, -0.04] })).toEqual({
      v: [0, 0, 0],
      r: [0, 0, 0],
    });
    const live = gamepadAxes({ axes: [0.5, -0.8, 0.4, -0.6] });
    expect(live.v[0]).toBeCloseTo(0.5);
    expect(live.v[1]).toBeCloseTo(0.8);
    expect(live.r[2]).toBeCloseTo(0.4);
    expect(live.r[1]).toBeCloseTo(0.6);
  });
});
