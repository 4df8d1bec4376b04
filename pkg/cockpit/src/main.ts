/** Cockpit bootstrap: session + input + rendering + HUD wiring. */

import { parseHeatmapCsv } from "./heatmap.js";
import { InputMapper, gamepadAxes } from "./input.js";
import { SceneDesc, StateMessage, estopMessage, enableMessage } from "./protocol.js";
import { SceneView } from "./render.js";
import { CockpitSession } from "./session.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const params = new URLSearchParams(window.location.search);
const wsUrl = params.get("ws") ?? `ws://${window.location.hostname}:7782`;

const view = new SceneView(el<HTMLCanvasElement>("scene"),
                           el<HTMLCanvasElement>("inset"));
const mapper = new InputMapper();
let scene: SceneDesc | null = null;
let lastState: StateMessage | null = null;

const banner = el<HTMLDivElement>("banner");
const hudGamma = el<HTMLSpanElement>("hud-gamma");
const hudNeedle = el<HTMLSpanElement>("hud-needle");
const hudTip = el<HTMLSpanElement>("hud-tip");
const hudTick = el<HTMLSpanElement>("hud-tick");
const hudEvents = el<HTMLSpanElement>("hud-events");

function faultLocked(state: StateMessage | null): boolean {
  if (!state) {
    return true;
  }
  return state.faults.estop || !state.faults.enabled || state.faults.connection_lost;
}

function updateBanner(): void {
  if (session.status !== "connected") {
    banner.textContent = `DISCONNECTED from ${wsUrl} (retrying)`;
    banner.className = "banner bad";
    return;
  }
  if (!lastState) {
    banner.textContent = "waiting for telemetry";
    banner.className = "banner warn";
    return;
  }
  const f = lastState.faults;
  if (f.estop) {
    banner.textContent = "E-STOP LATCHED - press Enter (or Enable) to re-arm";
    banner.className = "banner bad";
  } else if (f.watchdog_expired) {
    banner.textContent = "WATCHDOG EXPIRED - press Enter (or Enable) to re-arm";
    banner.className = "banner bad";
  } else if (!f.enabled) {
    banner.textContent = "drives disabled";
    banner.className = "banner warn";
  } else {
    banner.textContent = `teleoperation live (${session.hello?.mode})`;
    banner.className = "banner ok";
  }
}

const session = new CockpitSession(wsUrl, {
  onHello: (hello) => {
    scene = hello.scene;
    updateBanner();
  },
  onState: (state) => {
    lastState = state;
    hudGamma.textContent = state.gamma.toFixed(3);
    hudNeedle.textContent = (state.needle_extension * 1e3).toFixed(1) + " mm";
    hudTip.textContent = state.tip_position.map((v) => v.toFixed(3)).join(", ");
    hudTick.textContent = String(state.tick);
    hudEvents.textContent = state.faults.events.join(" ") || "-";
    updateBanner();
  },
  onStatus: () => {
    mapper.clearHeld(); // never keep stale inputs across reconnects
    updateBanner();
  },
  onError: (message) => {
    hudEvents.textContent = message;
  },
});

window.addEventListener("keydown", (ev) => {
  if (ev.code === "Space" || ev.code.startsWith("Arrow")) {
    ev.preventDefault();
  }
  mapper.keyDown(ev);
});
window.addEventListener("keyup", (ev) => mapper.keyUp(ev));
window.addEventListener("blur", () => mapper.clearHeld());

el<HTMLButtonElement>("btn-estop").addEventListener("click", () =>
  session.send(estopMessage()),
);
el<HTMLButtonElement>("btn-enable").addEventListener("click", () =>
  session.send(enableMessage()),
);
el<HTMLInputElement>("heatmap-file").addEventListener("change", async (ev) => {
  const input = ev.target as HTMLInputElement;
  const file = input.files?.[0];
  if (file) {
    view.heatmap = parseHeatmapCsv(await file.text());
  }
});

// Camera orbit with mouse drag.
let dragging = false;
let lastX = 0;
let lastY = 0;
const canvas = el<HTMLCanvasElement>("scene");
canvas.addEventListener("mousedown", (ev) => {
  dragging = true;
  lastX = ev.clientX;
  lastY = ev.clientY;
});
window.addEventListener("mouseup", () => (dragging = false));
window.addEventListener("mousemove", (ev) => {
  if (dragging) {
    view.camera.yaw += (ev.clientX - lastX) * 0.008;
    view.camera.pitch = Math.max(-1.4, Math.min(1.4,
      view.camera.pitch + (ev.clientY - lastY) * 0.008));
    lastX = ev.clientX;
    lastY = ev.clientY;
  }
});
canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  view.camera.distance = Math.max(0.4, Math.min(5,
    view.camera.distance * (ev.deltaY > 0 ? 1.1 : 0.9)));
});

function pollGamepad(): { v: [number, number, number]; r: [number, number, number] } | undefined {
  const pads = navigator.getGamepads ? navigator.getGamepads() : [];
  for (const pad of pads) {
    if (pad && pad.connected) {
      return gamepadAxes(pad);
    }
  }
  return undefined;
}

// Input pump: one-shots immediately, axes at the frame rate (latest-wins on
// the server; the session enforces the 400 Hz protocol cap). While faulted,
// every control is locked except e-stop and enable.
function pump(): void {
  if (session.status === "connected") {
    const locked = faultLocked(lastState);
    for (const oneshot of mapper.takeOneshots()) {
      if (!locked || oneshot.type === "estop" || oneshot.type === "enable") {
        session.send(oneshot);
      }
    }
    if (!locked) {
      session.send(mapper.inputMessage(pollGamepad()));
    }
  } else {
    mapper.takeOneshots();
  }
  view.render(scene, lastState);
  requestAnimationFrame(pump);
}

requestAnimationFrame(pump);
updateBanner();
