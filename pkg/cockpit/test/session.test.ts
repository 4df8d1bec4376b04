import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { inputMessage, jogMessage } from "../src/protocol.js";
import { CockpitSession } from "../src/session.js";

class FakeSocket {
  static instances: FakeSocket[] = [];
  sent: string[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;

  constructor(public url: string) {
    FakeSocket.instances.push(this);
  }

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.onclose?.();
  }

  open(): void {
    this.onopen?.();
  }

  receive(data: string): void {
    this.onmessage?.({ data });
  }
}

const HELLO =
  '{"type":"hello","protocol":1,"mode":"lockstep","tick_rate":400,' +
  '"scene":{"bore":null,"table":null,"patient":[]},' +
  '"joint_limits":{"lower":[0,0,0,0,0,0,0],"upper":[1,1,1,1,1,1,1]}}';

function stateLine(tick: number): string {
  return JSON.stringify({
    type: "state",
    tick,
    q: [0, 0, 0, 0, 0, 0, 0],
    tip_position: [0, 0, 0],
    tip_rotation: [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
    gamma: 1,
    needle_extension: 0,
    faults: { estop: false, enabled: true, watchdog_expired: false,
              connection_lost: false, events: [] },
    links: [],
  });
}

describe("CockpitSession", () => {
  let clock = 0;

  beforeEach(() => {
    vi.useFakeTimers();
    FakeSocket.instances = [];
    clock = 0;
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  const make = () =>
    new CockpitSession(
      "ws://test",
      {},
      (url) => new FakeSocket(url),
      () => clock,
    );

  it("suppresses input while disconnected", () => {
    const session = make();
    expect(session.send(inputMessage([1, 0, 0], [0, 0, 0]))).toBe(false);
    expect(FakeSocket.instances[0].sent.length).toBe(0);
  });

  it("sends after connect and keeps the latest snapshot", () => {
    const session = make();
    const socket = FakeSocket.instances[0];
    socket.open();
    socket.receive(HELLO);
    socket.receive(stateLine(1));
    socket.receive(stateLine(2));
    expect(session.hello?.mode).toBe("lockstep");
    expect(session.latest?.tick).toBe(2);
    expect(session.send(jogMessage(1))).toBe(true);
    expect(socket.sent).toEqual(['{"type":"jog","direction":1}']);
  });

  it("caps axis input at 400 Hz but never drops one-shots", () => {
    const session = make();
    const socket = FakeSocket.instances[0];
    socket.open();
    clock = 0;
    expect(session.send(inputMessage([1, 0, 0], [0, 0, 0]))).toBe(true);
    clock = 1; // under the 2.5 ms period
    expect(session.send(inputMessage([1, 0, 0], [0, 0, 0]))).toBe(false);
    expect(session.send(jogMessage(1))).toBe(true);
    clock = 3;
    expect(session.send(inputMessage([1, 0, 0], [0, 0, 0]))).toBe(true);
    expect(socket.sent.length).toBe(3);
  });

  it("reconnects with backoff and resynchronizes", () => {
    const session = make();
    const first = FakeSocket.instances[0];
    first.open();
    first.receive(stateLine(5));
    first.close();
    expect(session.status).toBe("disconnected");
    expect(session.send(jogMessage(1))).toBe(false);
    vi.advanceTimersByTime(300);
    expect(FakeSocket.instances.length).toBe(2);
    const second = FakeSocket.instances[1];
    second.open();
    second.receive(stateLine(9));
    expect(session.status).toBe("connected");
    expect(session.latest?.tick).toBe(9);
    session.close();
  });

  it("validates outgoing messages", () => {
    const session = make();
    FakeSocket.instances[0].open();
    expect(() =>
      session.send({ type: "input", v: [9, 0, 0], r: [0, 0, 0] } as never),
    ).toThrow();
  });
});
