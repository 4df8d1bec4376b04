/**
 * Wire protocol shared with the simulator's WebSocket endpoint.
 *
 * Client -> server (one JSON object per message):
 *   {"type":"input","v":[x,y,z],"r":[roll,pitch,yaw]}   axes clamped to [-1,1]
 *   {"type":"gamma","direction":1|-1}
 *   {"type":"jog","direction":1|-1}
 *   {"type":"estop"}
 *   {"type":"enable"}
 *
 * Server -> client: "hello" (scene + mode), "state" (telemetry snapshot),
 * "error". The cockpit renders only what the server reports; it never
 * computes kinematics of its own.
 */

export type Vec3 = [number, number, number];

export interface InputMessage {
  type: "input";
  v: Vec3;
  r: Vec3;
}

export interface GammaMessage {
  type: "gamma";
  direction: 1 | -1;
}

export interface JogMessage {
  type: "jog";
  direction: 1 | -1;
}

export interface EstopMessage {
  type: "estop";
}

export interface EnableMessage {
  type: "enable";
}

export type ClientMessage =
  | InputMessage
  | GammaMessage
  | JogMessage
  | EstopMessage
  | EnableMessage;

export interface CapsuleDesc {
  name: string;
  a: Vec3;
  b: Vec3;
  radius: number;
}

export interface SceneDesc {
  bore: {
    center: Vec3;
    axis: Vec3;
    inner_radius: number;
    length: number;
  } | null;
  table: { center: Vec3; half_extents: Vec3 } | null;
  patient: CapsuleDesc[];
}

export interface HelloMessage {
  type: "hello";
  protocol: number;
  mode: "lockstep" | "realtime";
  tick_rate: number;
  scene: SceneDesc;
  joint_limits: { lower: number[]; upper: number[] };
}

export interface Faults {
  estop: boolean;
  enabled: boolean;
  watchdog_expired: boolean;
  connection_lost: boolean;
  events: string[];
}

export interface StateMessage {
  type: "state";
  tick: number;
  q: number[];
  tip_position: Vec3;
  tip_rotation: [Vec3, Vec3, Vec3];
  gamma: number;
  needle_extension: number;
  faults: Faults;
  links: CapsuleDesc[];
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage = HelloMessage | StateMessage | ErrorMessage;

const clamp = (x: number): number => Math.max(-1, Math.min(1, x));

export function inputMessage(v: Vec3, r: Vec3): InputMessage {
  return {
    type: "input",
    v: [clamp(v[0]), clamp(v[1]), clamp(v[2])],
    r: [clamp(r[0]), clamp(r[1]), clamp(r[2])],
  };
}

export function gammaMessage(direction: 1 | -1): GammaMessage {
  return { type: "gamma", direction };
}

export function jogMessage(direction: 1 | -1): JogMessage {
  return { type: "jog", direction };
}

export function estopMessage(): EstopMessage {
  return { type: "estop" };
}

export function enableMessage(): EnableMessage {
  return { type: "enable" };
}

export function encode(msg: ClientMessage): string {
  return JSON.stringify(msg);
}

function isVec3(x: unknown): x is Vec3 {
  return (
    Array.isArray(x) &&
    x.length === 3 &&
    x.every((v) => typeof v === "number" && Number.isFinite(v))
  );
}

function isClampedVec3(x: unknown): x is Vec3 {
  return isVec3(x) && x.every((v) => v >= -1 && v <= 1);
}

/** Schema check for outgoing messages; throws on any violation. */
export function validateClientMessage(msg: unknown): ClientMessage {
  if (typeof msg !== "object" || msg === null) {
    throw new Error("client message must be an object");
  }
  const m = msg as Record<string, unknown>;
  switch (m.type) {
    case "input": {
      if (!isClampedVec3(m.v) || !isClampedVec3(m.r)) {
        throw new Error("input message needs v and r as 3-vectors in [-1,1]");
      }
      if (Object.keys(m).length !== 3) {
        throw new Error("input message has extra fields");
      }
      return m as unknown as InputMessage;
    }
    case "gamma":
    case "jog": {
      if (m.direction !== 1 && m.direction !== -1) {
        throw new Error(`${m.type} message needs direction +1 or -1`);
      }
      if (Object.keys(m).length !== 2) {
        throw new Error(`${m.type} message has extra fields`);
      }
      return m as unknown as GammaMessage | JogMessage;
    }
    case "estop":
    case "enable": {
      if (Object.keys(m).length !== 1) {
        throw new Error(`${m.type} message has extra fields`);
      }
      return m as unknown as EstopMessage | EnableMessage;
    }
    default:
      throw new Error(`unknown client message type ${String(m.type)}`);
  }
}

/** Parse and discriminate a server message; throws on garbage. */
export function parseServerMessage(raw: string): ServerMessage {
  const doc = JSON.parse(raw) as Record<string, unknown>;
  switch (doc.type) {
    case "hello": {
      if (typeof doc.protocol !== "number" || typeof doc.mode !== "string") {
        throw new Error("malformed hello message");
      }
      return doc as unknown as HelloMessage;
    }
    case "state": {
      if (
        typeof doc.tick !== "number" ||
        !Array.isArray(doc.q) ||
        !isVec3(doc.tip_position)
      ) {
        throw new Error("malformed state message");
      }
      return doc as unknown as StateMessage;
    }
    case "error": {
      return doc as unknown as ErrorMessage;
    }
    default:
      throw new Error(`unknown server message type ${String(doc.type)}`);
  }
}
