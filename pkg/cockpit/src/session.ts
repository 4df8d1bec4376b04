/**
 * WebSocket session: connect, reconnect with backoff, latest-snapshot buffer.
 *
 * The session is stateless authority-wise: it only mirrors server state and
 * forwards validated input messages. While disconnected every input is
 * suppressed, and a fresh snapshot resynchronizes the view on reconnect.
 */

import {
  ClientMessage,
  HelloMessage,
  ServerMessage,
  StateMessage,
  encode,
  parseServerMessage,
  validateClientMessage,
} from "./protocol.js";

export type SessionStatus = "connecting" | "connected" | "disconnected";

export interface SessionEvents {
  onStatus?: (status: SessionStatus) => void;
  onHello?: (hello: HelloMessage) => void;
  onState?: (state: StateMessage) => void;
  onError?: (message: string) => void;
}

interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => WebSocketLike;

const MIN_SEND_INTERVAL_MS = 2.5; // 400 Hz cap on input messages

export class CockpitSession {
  readonly url: string;
  status: SessionStatus = "disconnected";
  hello: HelloMessage | null = null;
  latest: StateMessage | null = null;

  private events: SessionEvents;
  private socketFactory: SocketFactory;
  private socket: WebSocketLike | null = null;
  private backoffMs = 250;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private lastInputSentAt = -Infinity;
  private closed = false;
  private now: () => number;

  constructor(
    url: string,
    events: SessionEvents = {},
    socketFactory?: SocketFactory,
    now: () => number = () => performance.now(),
  ) {
    this.url = url;
    this.events = events;
    this.socketFactory =
      socketFactory ?? ((u) => new WebSocket(u) as unknown as WebSocketLike);
    this.now = now;
    this.connect();
  }

  private setStatus(status: SessionStatus): void {
    if (this.status !== status) {
      this.status = status;
      this.events.onStatus?.(status);
    }
  }

  private connect(): void {
    if (this.closed) {
      return;
    }
    this.setStatus("connecting");
    const socket = this.socketFactory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.backoffMs = 250;
      this.setStatus("connected");
    };
    socket.onmessage = (ev) => this.handleMessage(String(ev.data));
    socket.onerror = () => {
      /* the close handler owns reconnection */
    };
    socket.onclose = () => {
      this.socket = null;
      this.setStatus("disconnected");
      this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    if (this.closed || this.reconnectTimer !== null) {
      return;
    }
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, this.backoffMs);
    this.backoffMs = Math.min(this.backoffMs * 2, 5000);
  }

  private handleMessage(raw: string): void {
    let msg: ServerMessage;
    try {
      msg = parseServerMessage(raw);
    } catch (err) {
      this.events.onError?.(String(err));
      return;
    }
    if (msg.type === "hello") {
      this.hello = msg;
      this.events.onHello?.(msg);
    } else if (msg.type === "state") {
      this.latest = msg; // latest-wins buffer; rendering reads it when ready
      this.events.onState?.(msg);
    } else {
      this.events.onError?.(msg.message);
    }
  }

  /**
   * Validate and send; drops silently while disconnected. Axis input is
   * rate-limited to the 400 Hz protocol cap, one-shot commands always pass.
   */
  send(msg: ClientMessage): boolean {
    if (this.status !== "connected" || this.socket === null) {
      return false;
    }
    const validated = validateClientMessage(msg);
    if (validated.type === "input") {
      const t = this.now();
      if (t - this.lastInputSentAt < MIN_SEND_INTERVAL_MS) {
        return false;
      }
      this.lastInputSentAt = t;
    }
    this.socket.send(encode(validated));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
    this.setStatus("disconnected");
  }
}
