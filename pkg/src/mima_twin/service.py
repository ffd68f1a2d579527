"""Local socket service exposing the twin to interactive clients.

Clients speak newline-delimited JSON over TCP. Commands:

    {"cmd": "auth", "password": "..."}     pair and take control
    {"cmd": "set_level", "level": "off" | "low" | "medium" | "high"}
    {"cmd": "off"}                         same as set_level off
    {"cmd": "reset"}                       simulated power toggle

Events (one JSON object per line):

    {"ev": "hello", "name": ..., "accel": ...}
    {"ev": "auth_result", "ok": bool, "error"?: "bad_password" | "busy" | ...}
    {"ev": "telemetry", "t": s, "temps": [c,c,c], "battery_mv": n,
     "mode": str, "fault": str}
    {"ev": "mode", "mode": str, "target": c | null}
    {"ev": "fault", "code": str, "t": s}
    {"ev": "ack", "cmd": str}
    {"ev": "error", "message": str}
    {"ev": "shutdown"}

One controlling session at a time: the first successful auth takes
control, later auth attempts get a busy rejection until it disconnects.
Additional sessions observe read-only. Device-bound heartbeats are
generated only while the controlling session's socket is alive, so a
dead client starves the firmware watchdog exactly like a vanished phone.

Telemetry and fault events are relayed from the device's wire frames
(and therefore subject to simulated link faults); the CSV log is written
by the omniscient harness recorder, one row per simulated second.
"""

from __future__ import annotations

import json
import socket
import threading
import time
from queue import Empty, Queue

from . import controller as ctl
from . import protocol as proto
from .scenario import (
    ScenarioConfig,
    ScriptCommand,
    TICKS_PER_SECOND,
    TwinHarness,
)
from .telemetry import format_header, format_record

LEVEL_NAMES = {lvl.name.lower() for lvl in ctl.Level}

UNTHROTTLED_ACCEL = 1e6


class ClientSession:
    """One TCP client: a reader thread plus a locked line writer."""

    _ids = 0

    def __init__(self, conn: socket.socket, service: "TwinService"):
        ClientSession._ids += 1
        self.sid = ClientSession._ids
        conn.settimeout(None)
        self.conn = conn
        self.service = service
        self.alive = True
        self._wlock = threading.Lock()
        self.thread = threading.Thread(target=self._reader, daemon=True)

    def start(self) -> None:
        self.thread.start()

    def send_event(self, event: dict) -> None:
        if not self.alive:
            return
        line = (json.dumps(event) + "\n").encode()
        try:
            with self._wlock:
                self.conn.sendall(line)
        except OSError:
            self.close()

    def close(self) -> None:
        if not self.alive:
            return
        self.alive = False
        try:
            self.conn.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.conn.close()
        self.service._session_closed(self)

    def _reader(self) -> None:
        buf = b""
        try:
            while self.alive:
                chunk = self.conn.recv(4096)
                if not chunk:
                    break
                buf += chunk
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    if line.strip():
                        self._handle_line(line)
        except OSError:
            pass
        finally:
            self.close()

    def _handle_line(self, line: bytes) -> None:
        try:
            msg = json.loads(line)
            if not isinstance(msg, dict):
                raise ValueError("message must be a JSON object")
        except ValueError as exc:
            self.send_event({"ev": "error", "message": f"bad message: {exc}"})
            return
        self.service._client_message(self, msg)


class _ServiceApp:
    """App endpoint bridging client sessions into the harness."""

    def __init__(self, service: "TwinService"):
        self.service = service
        self.pending: Queue[ScriptCommand] = Queue()

    def due_commands(self, t: float) -> list[ScriptCommand]:
        out = []
        while True:
            try:
                out.append(self.pending.get_nowait())
            except Empty:
                return out

    def alive(self, t: float) -> bool:
        controlling = self.service.controlling
        return controlling is not None and controlling.alive

    def on_frame(self, frame: proto.Frame, t: float) -> None:
        self.service._device_frame(frame, t)


class TwinService:
    """Runs one scenario on a background thread and serves clients."""

    def __init__(self, config: ScenarioConfig, address: tuple[str, int] = ("127.0.0.1", 0)):
        self.config = config
        self._listen_addr = address
        self._sessions: list[ClientSession] = []
        self._sessions_lock = threading.Lock()
        self.controlling: ClientSession | None = None
        self._pending_auth: ClientSession | None = None
        self._stop = threading.Event()
        self._app = _ServiceApp(self)
        self.harness = TwinHarness(config, app=self._app)
        self._last_mode: str | None = None
        self._last_target: float | None = None
        self._log_fh = None
        self._server: socket.socket | None = None
        self._threads: list[threading.Thread] = []

    # -- lifecycle ----------------------------------------------------------

    @property
    def address(self) -> tuple[str, int]:
        assert self._server is not None, "service not started"
        return self._server.getsockname()[:2]

    def start(self) -> None:
        if self.config.log_path:
            self._log_fh = open(self.config.log_path, "w")
            self._log_fh.write(format_header())
            self._log_fh.flush()
            self.harness.on_record = self._write_record
        srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        srv.bind(self._listen_addr)
        srv.listen(8)
        srv.settimeout(0.2)  # so the accept loop notices stop() promptly
        self._server = srv
        acceptor = threading.Thread(target=self._accept_loop, daemon=True)
        sim = threading.Thread(target=self._sim_loop, daemon=True)
        self._threads = [acceptor, sim]
        acceptor.start()
        sim.start()

    def stop(self) -> None:
        if self._stop.is_set():
            return
        self._stop.set()
        if self._server is not None:
            try:
                self._server.close()
            except OSError:
                pass
        with self._sessions_lock:
            sessions = list(self._sessions)
        for session in sessions:
            session.send_event({"ev": "shutdown"})
            session.close()
        for thread in self._threads:
            thread.join(timeout=5.0)
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None

    def wait(self, timeout: float | None = None) -> bool:
        """Block until the simulation finishes; True if it did."""
        sim = self._threads[1] if len(self._threads) > 1 else None
        if sim is not None:
            sim.join(timeout)
            return not sim.is_alive()
        return True

    # -- internals ----------------------------------------------------------

    def _write_record(self, record) -> None:
        assert self._log_fh is not None
        self._log_fh.write(format_record(record))
        self._log_fh.flush()

    def _accept_loop(self) -> None:
        assert self._server is not None
        while not self._stop.is_set():
            try:
                conn, _ = self._server.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            session = ClientSession(conn, self)
            with self._sessions_lock:
                self._sessions.append(session)
            session.start()
            session.send_event(
                {
                    "ev": "hello",
                    "name": self.config.name,
                    "accel": 1.0 if self.config.time_mode == "realtime" else self.config.accel,
                }
            )

    def _sim_loop(self) -> None:
        total_ticks = round(self.config.duration_s * TICKS_PER_SECOND)
        accel = 1.0 if self.config.time_mode == "realtime" else self.config.accel
        pace = accel < UNTHROTTLED_ACCEL
        wall_start = time.monotonic()
        while not self._stop.is_set() and self.harness.tick_index < total_ticks:
            self.harness.step()
            if pace:
                target = wall_start + self.harness.sim_time / accel
                delay = target - time.monotonic()
                if delay > 0.0005:
                    time.sleep(delay)
        if not self._stop.is_set():
            self._broadcast({"ev": "shutdown"})

    def _broadcast(self, event: dict) -> None:
        with self._sessions_lock:
            sessions = list(self._sessions)
        for session in sessions:
            session.send_event(event)

    def _session_closed(self, session: ClientSession) -> None:
        with self._sessions_lock:
            if session in self._sessions:
                self._sessions.remove(session)
        if self.controlling is session:
            self.controlling = None  # heartbeats stop; watchdog takes it from here
        if self._pending_auth is session:
            self._pending_auth = None

    def _client_message(self, session: ClientSession, msg: dict) -> None:
        cmd = msg.get("cmd")
        if cmd == "auth":
            password = msg.get("password")
            if not isinstance(password, str) or not 1 <= len(password.encode()) <= 16:
                session.send_event(
                    {"ev": "auth_result", "ok": False, "error": "invalid_password_format"}
                )
                return
            busy = self.controlling is not None and self.controlling.alive and (
                self.controlling is not session
            )
            if busy or (self._pending_auth is not None and self._pending_auth is not session):
                session.send_event({"ev": "auth_result", "ok": False, "error": "busy"})
                return
            self._pending_auth = session
            self._app.pending.put(ScriptCommand(t=0.0, cmd="auth", password=password))
            return

        if cmd in ("set_level", "off", "reset"):
            if self.controlling is not session:
                session.send_event({"ev": "error", "message": "not controlling"})
                return
            if cmd == "set_level":
                level = msg.get("level")
                if level not in LEVEL_NAMES:
                    session.send_event({"ev": "error", "message": f"unknown level {level!r}"})
                    return
                self._app.pending.put(ScriptCommand(t=0.0, cmd="set_level", level=level))
            elif cmd == "off":
                self._app.pending.put(ScriptCommand(t=0.0, cmd="off"))
            else:
                self._app.pending.put(ScriptCommand(t=0.0, cmd="reset"))
            return

        session.send_event({"ev": "error", "message": f"unknown command {cmd!r}"})

    def _device_frame(self, frame: proto.Frame, t: float) -> None:
        ftype = frame.frame_type
        if ftype is proto.FrameType.TELEMETRY:
            tp = proto.parse_telemetry(frame)
            mode = ctl.MODE_FROM_BYTE.get(tp.mode, ctl.Mode.BOOT).value
            fault = ctl.FAULT_FROM_BYTE.get(tp.fault_flags, ctl.FaultCode.NONE).value
            self._broadcast(
                {
                    "ev": "telemetry",
                    "t": t,
                    "temps": list(tp.zone_temps),
                    "battery_mv": tp.battery_millivolts,
                    "mode": mode,
                    "fault": fault,
                }
            )
            if mode != self._last_mode:
                self._last_mode = mode
                self._broadcast({"ev": "mode", "mode": mode, "target": self._last_target})
        elif ftype is proto.FrameType.FAULT_EVT and frame.payload:
            code = ctl.FAULT_FROM_BYTE.get(frame.payload[0], ctl.FaultCode.NONE).value
            self._broadcast({"ev": "fault", "code": code, "t": t})
        elif ftype is proto.FrameType.AUTH_ACK and frame.payload:
            ok = frame.payload[0] == proto.AUTH_OK
            session = self._pending_auth
            self._pending_auth = None
            if session is None or not session.alive:
                return
            if ok:
                self.controlling = session
                session.send_event({"ev": "auth_result", "ok": True})
            else:
                session.send_event({"ev": "auth_result", "ok": False, "error": "bad_password"})
        elif ftype is proto.FrameType.ACK and frame.payload:
            acked = proto.FrameType(frame.payload[0]).name.lower()
            if acked == "set_level":
                # Track the confirmed target for mode events.
                preset = self.harness.ctrl.active_preset
                self._last_target = preset.target_temp
            if self.controlling is not None:
                self.controlling.send_event({"ev": "ack", "cmd": acked})


def serve(config: ScenarioConfig, address: tuple[str, int]) -> None:
    """Run the service until the scenario ends or the process is interrupted."""
    service = TwinService(config, address)
    service.start()
    host, port = service.address
    print(f"twin service listening on {host}:{port} (scenario {config.name!r})", flush=True)
    try:
        while not service.wait(timeout=0.5):
            pass
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
