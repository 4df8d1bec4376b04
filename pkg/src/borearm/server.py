"""Network services and the composite simulation loop.

Three surfaces, all line-delimited JSON:

* TCP setpoint protocol for the motor controller (one JSON object per line;
  commands set_setpoints / enable / disable / estop / status).
* WebSocket cockpit protocol (state snapshots out; input / jog / gamma /
  estop / enable messages in).
* A plain HTTP static file server for the cockpit bundle.

The SimLoop interleaves the 400 Hz teleop pipeline with the 1 kHz controller
on an integer-microsecond schedule (teleop first at coincidence), so a served
lockstep session and an offline trace replay compute bit-identical states.
The teleop loop always talks to the controller through the message protocol;
in lockstep mode the transport is a loopback TCP connection whose synchronous
acks keep message arrival deterministic.
"""

from __future__ import annotations

import json
import socket
import threading
import time
from functools import partial
from http.server import SimpleHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .controller import ControllerConfig, ControllerSim
from .model import RobotModel
from .scene import Scene
from .teleop import InputSample, TeleopConfig, TeleopSession
from .transmission import actuator_count_bounds

CONTROLLER_PERIOD_US = 1000
TELEOP_PERIOD_US = 2500


def controller_config_for_model(model: RobotModel,
                                base: ControllerConfig | None = None) -> ControllerConfig:
    """Attach per-axis count limits derived from the joint-limit box."""
    base = base or ControllerConfig()
    low7, high7 = actuator_count_bounds(model.mixing, model.limits.lower,
                                        model.limits.upper, model.encoder)
    low = np.concatenate([low7, [0]])
    high = np.concatenate([high7, [0]])
    return ControllerConfig(gains=base.gains, plants=base.plants,
                            timestep_s=base.timestep_s,
                            watchdog_timeout_s=base.watchdog_timeout_s,
                            count_limits=(low, high))


# -- TCP setpoint server ---------------------------------------------------

class SetpointServer:
    """Threaded line-JSON TCP server over a shared ControllerSim.

    Messages apply under the sim lock, strictly between ticks, in arrival
    order; every message gets a one-line JSON reply. Malformed input earns an
    error reply and leaves the state untouched.
    """

    def __init__(self, sim: ControllerSim, lock: threading.Lock,
                 host: str = "127.0.0.1", port: int = 0):
        self.sim = sim
        self.lock = lock
        self._listener = socket.create_server((host, port))
        self.host, self.port = self._listener.getsockname()[:2]
        self._threads = []
        self._closing = False
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def _accept_loop(self):
        while not self._closing:
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            thread = threading.Thread(target=self._serve_client, args=(conn,),
                                      daemon=True)
            thread.start()
            self._threads.append(thread)

    def _serve_client(self, conn: socket.socket):
        with conn:
            reader = conn.makefile("r", encoding="utf-8")
            writer = conn.makefile("w", encoding="utf-8")
            for line in reader:
                if not line.strip():
                    continue
                try:
                    msg = json.loads(line)
                except json.JSONDecodeError as exc:
                    reply = {"ok": False, "error": f"bad JSON: {exc.msg}"}
                else:
                    with self.lock:
                        reply = self.sim.apply(msg)
                try:
                    writer.write(json.dumps(reply, separators=(",", ":")) + "\n")
                    writer.flush()
                except (BrokenPipeError, OSError):
                    return

    def close(self):
        self._closing = True
        try:
            self._listener.close()
        except OSError:
            pass


class ControllerClient:
    """Blocking line-JSON client for the setpoint protocol."""

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._reader = self._sock.makefile("r", encoding="utf-8")
        self._writer = self._sock.makefile("w", encoding="utf-8")

    def send(self, msg: dict) -> dict:
        self._writer.write(json.dumps(msg, separators=(",", ":")) + "\n")
        self._writer.flush()
        line = self._reader.readline()
        if not line:
            raise ConnectionError("controller connection closed")
        return json.loads(line)

    def close(self):
        try:
            self._sock.close()
        except OSError:
            pass


# -- composite simulation loop ----------------------------------------------

class SimLoop:
    """Interleaves teleop ticks (400 Hz) with controller ticks (1 kHz).

    controller_send must deliver a protocol message and return its reply;
    controller_tick advances the controller one period. Both are supplied by
    the caller so the same loop drives a live TCP-backed service and an
    in-process replay.
    """

    def __init__(self, session: TeleopSession, controller_send, controller_tick,
                 controller_period_us: int = CONTROLLER_PERIOD_US,
                 teleop_period_us: int = TELEOP_PERIOD_US):
        self.session = session
        self.controller_send = controller_send
        self.controller_tick = controller_tick
        self.controller_period_us = controller_period_us
        self.teleop_period_us = teleop_period_us
        self.time_us = 0
        self._next_controller = controller_period_us
        self._next_teleop = teleop_period_us
        self.estopped = False
        self.connection_lost = False
        self.last_events: tuple = ()
        self.controller_send({"cmd": "enable"})

    def _send(self, msg: dict) -> dict | None:
        if self.connection_lost:
            return None
        try:
            return self.controller_send(msg)
        except (ConnectionError, OSError):
            self.connection_lost = True
            self.session.freeze()
            return None

    def advance_one_teleop_tick(self, sample: InputSample) -> dict:
        """Run controller ticks due before the next teleop tick, then teleop.

        Returns the telemetry snapshot after the tick.
        """
        while self._next_controller < self._next_teleop:
            self.controller_tick()
            self._next_controller += self.controller_period_us
        self.time_us = self._next_teleop
        self._next_teleop += self.teleop_period_us

        if sample.enable and self.estopped:
            self.estopped = False
            self.session.thaw()
            self._send({"cmd": "enable"})
        result = self.session.tick(sample)
        self.last_events = result.events
        if "estop" in result.events:
            self.estopped = True
            self.session.freeze()
            self._send({"cmd": "estop"})
        elif not self.estopped and not self.connection_lost:
            self._send({"cmd": "set_setpoints", "counts": list(result.setpoints)})
        return self.telemetry()

    def telemetry(self) -> dict:
        status = self._send({"cmd": "status"})
        controller = status.get("status", {}) if status and status.get("ok") else {}
        faults = {
            "estop": bool(controller.get("estop", self.estopped)),
            "enabled": bool(controller.get("enabled", False)),
            "watchdog_expired": bool(controller.get("watchdog_expired", False)),
            "connection_lost": self.connection_lost,
            "events": list(self.last_events),
        }
        snapshot = self.session.telemetry(faults)
        snapshot["time_us"] = self.time_us
        snapshot["controller"] = {k: controller.get(k) for k in
                                  ("positions", "setpoints", "tick")} if controller else {}
        return snapshot


def replay_trace(model: RobotModel, trace, total_ticks: int | None = None,
                 scene: Scene | None = None,
                 teleop_config: TeleopConfig | None = None,
                 controller_config: ControllerConfig | None = None) -> dict:
    """Pure in-process replay of an input trace through the composite loop.

    Ticks without a trace entry run with an idle input sample. Returns the
    final telemetry snapshot (same schema the cockpit sees).
    """
    config = controller_config or controller_config_for_model(model)
    sim = ControllerSim(config)
    session = TeleopSession(model, teleop_config, scene)
    loop = SimLoop(session, sim.apply, sim.tick,
                   controller_period_us=round(config.timestep_s * 1e6))
    by_tick = {tick: sample for tick, sample in trace}
    if total_ticks is None:
        total_ticks = (max(by_tick) + 1) if by_tick else 0
    snapshot = loop.telemetry()
    for t in range(total_ticks):
        snapshot = loop.advance_one_teleop_tick(by_tick.get(t, InputSample.idle()))
    return snapshot


# -- WebSocket cockpit endpoint ---------------------------------------------

def scene_description(scene: Scene | None) -> dict:
    if scene is None:
        return {"bore": None, "table": None, "patient": []}
    doc: dict = {"bore": None, "table": None, "patient": []}
    if scene.bore is not None:
        doc["bore"] = {"center": scene.bore.center.tolist(),
                       "axis": scene.bore.axis.tolist(),
                       "inner_radius": scene.bore.inner_radius,
                       "length": scene.bore.length}
    if scene.table is not None:
        doc["table"] = {"center": scene.table.center.tolist(),
                        "half_extents": scene.table.half_extents.tolist()}
    for cap in scene.patient:
        doc["patient"].append({"name": cap.name, "a": cap.a.tolist(),
                               "b": cap.b.tolist(), "radius": cap.radius})
    return doc


def input_from_ws_message(msg: dict) -> InputSample | None:
    """Map one cockpit message to the input sample it contributes."""
    kind = msg.get("type")
    if kind == "input":
        return InputSample(v=msg.get("v", [0, 0, 0]), r=msg.get("r", [0, 0, 0]))
    if kind == "jog":
        return InputSample(needle_jog=int(msg.get("direction", 0)))
    if kind == "gamma":
        direction = int(msg.get("direction", 0))
        return InputSample(gamma_up=direction > 0, gamma_down=direction < 0)
    if kind == "estop":
        return InputSample(estop=True)
    if kind == "enable":
        return InputSample(enable=True)
    return None


class TeleopService:
    """Hosts the controller TCP server, the teleop loop, and the WS endpoint.

    Modes:
      lockstep — simulated time advances exactly one teleop tick per cockpit
                 message; every message is answered with a state snapshot.
                 Deterministic, replayable, faster than real time.
      realtime — a pacer thread advances the loop at wall-clock 400 Hz with
                 latest-wins axis input; one-shot button messages queue and
                 are consumed one per tick. Telemetry broadcasts at ~30 Hz.
    """

    def __init__(self, model: RobotModel, scene: Scene | None = None,
                 teleop_config: TeleopConfig | None = None,
                 controller_config: ControllerConfig | None = None,
                 host: str = "127.0.0.1", tcp_port: int = 0, ws_port: int = 0,
                 realtime: bool = False):
        self.model = model
        self.scene = scene
        self.realtime = realtime
        self.lock = threading.Lock()   # serializes SimLoop access across WS clients
        self.sim = ControllerSim(controller_config or controller_config_for_model(model))
        self.sim_lock = threading.Lock()
        self.tcp = SetpointServer(self.sim, self.sim_lock, host=host, port=tcp_port)
        self.client = ControllerClient(self.tcp.host, self.tcp.port)

        def controller_tick():
            with self.sim_lock:
                self.sim.tick()

        self.session = TeleopSession(model, teleop_config, scene)
        self.loop = SimLoop(self.session, self.client.send, controller_tick,
                            controller_period_us=round(self.sim.config.timestep_s * 1e6))
        self._ws_server = None
        self._ws_clients: set = set()
        self._latest_axes = InputSample.idle()
        self._oneshots: list[InputSample] = []
        self._stop = threading.Event()
        self._pacer = None
        self.host = host
        self.ws_port = ws_port

    # -- lifecycle --------------------------------------------------------

    def start(self):
        from websockets.sync.server import serve as ws_serve
        self._ws_server = ws_serve(self._handle_ws, self.host, self.ws_port)
        self.ws_port = self._ws_server.socket.getsockname()[1]
        threading.Thread(target=self._ws_server.serve_forever, daemon=True).start()
        if self.realtime:
            self._pacer = threading.Thread(target=self._pace, daemon=True)
            self._pacer.start()
        return self

    def close(self):
        self._stop.set()
        if self._ws_server is not None:
            self._ws_server.shutdown()
        self.tcp.close()
        self.client.close()

    # -- realtime pacing ----------------------------------------------------

    def _pace(self):
        period = TELEOP_PERIOD_US / 1e6
        next_wall = time.monotonic() + period
        while not self._stop.is_set():
            delay = next_wall - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            next_wall += period
            with self.lock:
                sample = self._oneshots.pop(0) if self._oneshots else self._latest_axes
                snapshot = self.loop.advance_one_teleop_tick(sample)
            if self.session.tick_index % 13 == 0:
                self._broadcast(snapshot)

    def _broadcast(self, snapshot: dict):
        payload = json.dumps(snapshot, separators=(",", ":"))
        for ws in list(self._ws_clients):
            try:
                ws.send(payload)
            except Exception:
                self._ws_clients.discard(ws)

    # -- WebSocket handling -------------------------------------------------

    def _handle_ws(self, ws):
        hello = {
            "type": "hello",
            "protocol": 1,
            "mode": "realtime" if self.realtime else "lockstep",
            "tick_rate": 400,
            "scene": scene_description(self.scene),
            "joint_limits": {"lower": self.model.limits.lower.tolist(),
                             "upper": self.model.limits.upper.tolist()},
        }
        ws.send(json.dumps(hello, separators=(",", ":")))
        with self.lock:
            ws.send(json.dumps(self.loop.telemetry(), separators=(",", ":")))
        self._ws_clients.add(ws)
        try:
            for raw in ws:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    ws.send(json.dumps({"type": "error", "message": "bad JSON"}))
                    continue
                sample = input_from_ws_message(msg)
                if sample is None:
                    ws.send(json.dumps({"type": "error",
                                        "message": f"unknown message type {msg.get('type')!r}"}))
                    continue
                if self.realtime:
                    with self.lock:
                        if msg.get("type") == "input":
                            self._latest_axes = sample
                        else:
                            self._oneshots.append(sample)
                else:
                    with self.lock:
                        snapshot = self.loop.advance_one_teleop_tick(sample)
                    ws.send(json.dumps(snapshot, separators=(",", ":")))
        finally:
            self._ws_clients.discard(ws)


def serve_static(directory: Path, host: str = "127.0.0.1", port: int = 0):
    """Serve the cockpit bundle; returns (server, thread)."""
    handler = partial(SimpleHTTPRequestHandler, directory=str(directory))
    httpd = ThreadingHTTPServer((host, port), handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    return httpd, thread
