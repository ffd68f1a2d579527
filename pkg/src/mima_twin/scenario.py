"""Scenario configs and the simulation harness that runs them.

A scenario describes one reproducible experiment: the plant (raw
parameters or calibration targets), the device password, a link fault
profile, a command script standing in for the phone app, and the master
seed. ``run_scenario`` advances everything on one simulated clock:

    plant            10 Hz (0.1 s explicit-Euler steps)
    controller       10 Hz (every plant step)
    heartbeats       1 Hz, app -> device, while the app is alive
    telemetry + log  1 Hz, device -> app

The log always gets exactly one record per simulated second regardless
of link faults: the twin is omniscient and taps the device directly,
while the wire telemetry still travels (and may be lost) for clients.

Everything is deterministic under a fixed seed; real time only enters
through optional pacing sleeps, never through the computation.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from random import Random
from typing import Callable, Protocol

from . import controller as ctl
from . import plant as pm
from . import protocol as proto
from .link import DuplexLink, LinkConfig
from .telemetry import TelemetryRecord, write_log

PLANT_DT = 0.1
TICKS_PER_SECOND = 10
HEARTBEAT_PERIOD_S = 1.0

VALID_COMMANDS = ("auth", "set_level", "off", "reset")
VALID_LEVELS = {lvl.name.lower(): lvl for lvl in ctl.Level}


class ScenarioError(ValueError):
    """Invalid scenario document or unsatisfiable scenario setup."""


@dataclass(frozen=True, slots=True)
class ScriptCommand:
    t: float
    cmd: str
    level: str | None = None
    password: str | None = None


@dataclass(frozen=True, slots=True)
class SensorFault:
    """Derived-temperature tampering for directed safety tests.

    kind 'stuck' pins the zone's derived reading to value; 'offset' adds
    value to it. Active while start_s <= t < end_s.
    """

    zone: int
    start_s: float
    end_s: float
    kind: str = "stuck"
    value: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    seed: int = 0
    duration_s: float = 60.0
    time_mode: str = "accelerated"  # accelerated | realtime
    accel: float = 1_000_000.0
    password: str = "mima1234"
    plant_params: pm.PlantParams | None = None
    calibration: pm.CalibrationTargets | None = field(
        default_factory=pm.CalibrationTargets
    )
    limits: ctl.SafetyLimits = field(default_factory=ctl.SafetyLimits)
    link: LinkConfig = field(default_factory=LinkConfig)
    script: tuple[ScriptCommand, ...] = ()
    sensor_noise: bool = False
    sensor_faults: tuple[SensorFault, ...] = ()
    initial_zone_temps: tuple[float, float, float] | None = None
    log_path: str | None = None

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ScenarioError("duration_s must be > 0")
        if self.time_mode not in ("accelerated", "realtime"):
            raise ScenarioError(f"unknown time_mode {self.time_mode!r}")
        if self.accel < 1.0:
            raise ScenarioError("accel must be >= 1")
        if self.plant_params is None and self.calibration is None:
            raise ScenarioError("scenario needs plant params or calibration targets")
        if not 1 <= len(self.password.encode()) <= 16:
            raise ScenarioError("device password must be 1..16 UTF-8 bytes")
        prev = None
        for entry in self.script:
            if entry.cmd not in VALID_COMMANDS:
                raise ScenarioError(f"unknown script command {entry.cmd!r}")
            if entry.cmd == "set_level" and entry.level not in VALID_LEVELS:
                raise ScenarioError(f"unknown level {entry.level!r}")
            if entry.cmd == "auth" and entry.password is not None:
                if not 1 <= len(entry.password.encode()) <= 16:
                    raise ScenarioError("script auth password must be 1..16 UTF-8 bytes")
            if not 0.0 <= entry.t <= self.duration_s:
                raise ScenarioError(f"script time {entry.t} outside [0, {self.duration_s}]")
            if prev is not None and entry.t <= prev:
                raise ScenarioError("script times must be strictly increasing")
            prev = entry.t
        for fault in self.sensor_faults:
            if fault.zone not in (0, 1, 2):
                raise ScenarioError(f"sensor fault zone must be 0..2, got {fault.zone}")
            if fault.kind not in ("stuck", "offset"):
                raise ScenarioError(f"unknown sensor fault kind {fault.kind!r}")
            if fault.end_s <= fault.start_s:
                raise ScenarioError("sensor fault window must be non-empty")

    def resolve_params(self) -> pm.PlantParams:
        if self.plant_params is not None:
            return self.plant_params
        assert self.calibration is not None
        return pm.calibrate_params(self.calibration)


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    try:
        plant_doc = doc.get("plant", {})
        params = None
        calibration = None
        if "params" in plant_doc:
            params = pm.PlantParams.from_dict(plant_doc["params"])
        elif "calibration" in plant_doc:
            calibration = pm.CalibrationTargets.from_dict(plant_doc["calibration"])
        else:
            calibration = pm.CalibrationTargets()

        limits_doc = doc.get("limits", {})
        limits = ctl.SafetyLimits(
            max_temp=float(limits_doc.get("max_temp", 55.0)),
            max_zone_sd=float(limits_doc.get("max_zone_sd", 2.5)),
            sensor_valid_range=tuple(limits_doc.get("sensor_valid_range", (-10.0, 90.0))),
            watchdog_timeout=float(limits_doc.get("watchdog_timeout", 3.0)),
            low_battery_cutoff_wh=float(limits_doc.get("low_battery_cutoff_wh", 0.0)),
        )
        script = tuple(
            ScriptCommand(
                t=float(e["t"]),
                cmd=str(e["cmd"]),
                level=e.get("level"),
                password=e.get("password"),
            )
            for e in doc.get("script", [])
        )
        faults = tuple(
            SensorFault(
                zone=int(e["zone"]),
                start_s=float(e["start_s"]),
                end_s=float(e["end_s"]),
                kind=str(e.get("kind", "stuck")),
                value=float(e.get("value", 0.0)),
            )
            for e in doc.get("sensor_faults", [])
        )
        init = doc.get("initial_zone_temps")
        return ScenarioConfig(
            name=str(doc.get("name", "scenario")),
            seed=int(doc.get("seed", 0)),
            duration_s=float(doc.get("duration_s", 60.0)),
            time_mode=str(doc.get("time_mode", "accelerated")),
            accel=float(doc.get("accel", 1_000_000.0)),
            password=str(doc.get("password", "mima1234")),
            plant_params=params,
            calibration=calibration,
            limits=limits,
            link=LinkConfig.from_dict(doc.get("link", {})),
            script=script,
            sensor_noise=bool(doc.get("sensor_noise", False)),
            sensor_faults=faults,
            initial_zone_temps=None if init is None else tuple(float(t) for t in init),
            log_path=doc.get("log_path"),
        )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad scenario document: {exc}") from exc


def scenario_to_dict(config: ScenarioConfig) -> dict:
    doc: dict = {
        "name": config.name,
        "seed": config.seed,
        "duration_s": config.duration_s,
        "time_mode": config.time_mode,
        "accel": config.accel,
        "password": config.password,
        "link": config.link.to_dict(),
        "sensor_noise": config.sensor_noise,
    }
    if config.plant_params is not None:
        doc["plant"] = {"params": config.plant_params.to_dict()}
    else:
        assert config.calibration is not None
        doc["plant"] = {"calibration": config.calibration.to_dict()}
    if config.script:
        doc["script"] = [
            {
                "t": e.t,
                "cmd": e.cmd,
                **({"level": e.level} if e.level else {}),
                **({"password": e.password} if e.password else {}),
            }
            for e in config.script
        ]
    if config.sensor_faults:
        doc["sensor_faults"] = [
            {
                "zone": f.zone,
                "start_s": f.start_s,
                "end_s": f.end_s,
                "kind": f.kind,
                "value": f.value,
            }
            for f in config.sensor_faults
        ]
    if config.initial_zone_temps is not None:
        doc["initial_zone_temps"] = list(config.initial_zone_temps)
    if config.log_path is not None:
        doc["log_path"] = config.log_path
    return doc


def load_scenario(path: str | Path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"scenario {path} must be a JSON object")
    return scenario_from_dict(doc)


def save_scenario(config: ScenarioConfig, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(config), fh, indent=2)
        fh.write("\n")


class AppEndpoint(Protocol):
    """The app side of the link, pluggable (script or live service)."""

    def due_commands(self, t: float) -> list[ScriptCommand]: ...

    def alive(self, t: float) -> bool: ...

    def on_frame(self, frame: proto.Frame, t: float) -> None: ...


class ScriptedApp:
    """Replays a scenario script; alive (heartbeating) for the whole run."""

    def __init__(self, script: tuple[ScriptCommand, ...]):
        self._script = sorted(script, key=lambda e: e.t)
        self._next = 0
        self.received: list[tuple[float, proto.Frame]] = []

    def due_commands(self, t: float) -> list[ScriptCommand]:
        due = []
        while self._next < len(self._script) and self._script[self._next].t <= t + 1e-9:
            due.append(self._script[self._next])
            self._next += 1
        return due

    def alive(self, t: float) -> bool:
        return True

    def on_frame(self, frame: proto.Frame, t: float) -> None:
        self.received.append((t, frame))


class TwinHarness:
    """Plant + controller + duplex link advancing on one simulated clock.

    Drive it tick-by-tick with step() for tick-precise assertions, or
    run() to completion for the 1 Hz log.
    """

    def __init__(self, config: ScenarioConfig, app: AppEndpoint | None = None):
        self.config = config
        self.params = config.resolve_params()
        init = config.initial_zone_temps
        self.plant = pm.initial_state(self.params, init)
        self.ctrl = ctl.boot_state()
        self.link = DuplexLink(config.link, seed=config.seed)
        self.app = app if app is not None else ScriptedApp(config.script)
        self._dev_decoder = proto.StreamDecoder()
        self._app_decoder = proto.StreamDecoder()
        self._noise_rng = Random(f"{config.seed}:sensor") if config.sensor_noise else None
        self.records: list[TelemetryRecord] = []
        self.last_reading: pm.SensorReading | None = None
        self.tick_index = 0
        self.on_record: Callable[[TelemetryRecord], None] | None = None

    @property
    def sim_time(self) -> float:
        return self.tick_index / TICKS_PER_SECOND

    def _apply_sensor_faults(self, derived: list[float], t: float) -> None:
        for f in self.config.sensor_faults:
            if f.start_s <= t < f.end_s:
                if f.kind == "stuck":
                    derived[f.zone] = f.value
                else:
                    derived[f.zone] += f.value

    def _send_app_frame(self, frame: proto.Frame, t: float) -> None:
        self.link.app_to_dev.send(proto.encode_frame(frame), t)

    def _dispatch_command(self, entry: ScriptCommand, t: float) -> None:
        if entry.cmd == "auth":
            password = entry.password if entry.password is not None else self.config.password
            self._send_app_frame(proto.make_auth(password), t)
        elif entry.cmd == "set_level":
            level = VALID_LEVELS[entry.level or "off"]
            self._send_app_frame(proto.make_set_level(level.value), t)
        elif entry.cmd == "off":
            self._send_app_frame(proto.make_set_level(ctl.Level.OFF.value), t)
        elif entry.cmd == "reset":
            # The physical power toggle: bypasses the link, clears the UART.
            self.ctrl = ctl.reset_to_boot(self.ctrl)
            self._dev_decoder = proto.StreamDecoder()

    def step(self) -> list[ctl.FaultCode]:
        """Advance one 0.1 s tick; returns fault codes entered this tick."""
        k = self.tick_index
        t = k / TICKS_PER_SECOND

        # App side: deliver due script commands, then the 1 Hz heartbeat.
        for entry in self.app.due_commands(t):
            self._dispatch_command(entry, t)
        if k % TICKS_PER_SECOND == 0 and self.app.alive(t):
            self._send_app_frame(proto.make_heartbeat(), t)

        # Device side: drain the link, apply frames, queue replies.
        data = self.link.app_to_dev.poll(t)
        if data:
            for frame in self._dev_decoder.feed(data):
                self.ctrl, replies = ctl.apply_command(self.ctrl, frame, self.config.password)
                for reply in replies:
                    self.link.dev_to_app.send(proto.encode_frame(reply), t)

        # Sense, regulate, emit fault events.
        reading = pm.sense(self.plant, self.params, self._noise_rng)
        derived = list(reading.derived_temp)
        self._apply_sensor_faults(derived, t)
        derived_t = (derived[0], derived[1], derived[2])
        self.last_reading = replace(reading, derived_temp=derived_t)
        self.ctrl, duties, fault_events = ctl.control_tick(
            self.ctrl, derived_t, self.plant.battery_remaining, self.config.limits, PLANT_DT
        )
        for code in fault_events:
            self.link.dev_to_app.send(
                proto.encode_frame(proto.make_fault(ctl.FAULT_BYTE[code])), t
            )

        # Physics.
        self.plant = pm.step_plant(self.plant, duties, self.params, PLANT_DT)
        self.tick_index = k + 1
        t_end = self.tick_index / TICKS_PER_SECOND

        # 1 Hz telemetry: wire frame for clients, omniscient record for the log.
        if self.tick_index % TICKS_PER_SECOND == 0:
            mv = pm.battery_millivolts(self.plant, self.params)
            payload = proto.TelemetryPayload(
                zone_temps=derived_t,
                battery_millivolts=mv,
                mode=ctl.MODE_BYTE[self.ctrl.mode],
                fault_flags=ctl.FAULT_BYTE[self.ctrl.fault_code],
            )
            self.link.dev_to_app.send(proto.encode_frame(proto.make_telemetry(payload)), t_end)
            record = TelemetryRecord.quantized(
                time_s=t_end,
                derived_temps=derived_t,
                true_temps=self.plant.zone_temps,
                duties=duties,
                batt_wh=self.plant.battery_remaining,
                batt_mv=mv,
                mode=self.ctrl.mode.value,
                fault=self.ctrl.fault_code.value,
            )
            self.records.append(record)
            if self.on_record is not None:
                self.on_record(record)

        # App side receives whatever is due by the end of the tick.
        data = self.link.dev_to_app.poll(t_end)
        if data:
            for frame in self._app_decoder.feed(data):
                self.app.on_frame(frame, t_end)
        return fault_events

    def run(self) -> list[TelemetryRecord]:
        total_ticks = round(self.config.duration_s * TICKS_PER_SECOND)
        pace = self.config.time_mode == "realtime" or self.config.accel < 1e6
        accel = 1.0 if self.config.time_mode == "realtime" else self.config.accel
        wall_start = time.monotonic()
        while self.tick_index < total_ticks:
            self.step()
            if pace:
                target = wall_start + self.sim_time / accel
                delay = target - time.monotonic()
                if delay > 0.0005:
                    time.sleep(delay)
        return self.records


def run_scenario(config: ScenarioConfig, log_path: str | Path | None = None) -> list[TelemetryRecord]:
    """Execute a scenario to completion and return its telemetry log.

    Writes the CSV to log_path (or the scenario's own log_path) when given.
    """
    harness = TwinHarness(config)
    records = harness.run()
    path = log_path if log_path is not None else config.log_path
    if path is not None:
        write_log(path, records)
    return records
