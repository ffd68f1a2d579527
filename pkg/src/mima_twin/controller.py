"""Firmware logic of the pad controller: presets, regulation, safety.

The core is a 10 Hz tick-driven state machine fed with the three derived
sensor temperatures and the battery level. Every tick runs the safety
checks first; any failure latches a Fault that only a simulated power
cycle (reset_to_boot) clears. Regulation is per-zone on/off hysteresis
with a +-0.5 degC band, the minimal law consistent with the measured
sub-degree hold quality.

Safety checks, in priority order (first failure wins, one fault event
per entry):

    sensor range  -> any derived temp outside [-10, 90] degC
    over-temp     -> any derived temp at or above the 55 degC cap
    divergence    -> population SD of the three temps at or above 2.5 degC
    low battery   -> remaining charge at or below the cutoff

The watchdog forces heaters off when app heartbeats stop: the module is
only functional while connected. All transitions are pure functions of
(state, inputs) so identical event sequences give identical trajectories.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace
from enum import Enum

from .protocol import (
    Frame,
    FrameType,
    make_ack,
    make_auth_ack,
    make_fault,
    verify_auth,
)

HYSTERESIS_BAND_C = 0.5
CONTROL_HZ = 10
CONTROL_DT = 1.0 / CONTROL_HZ

Triple = tuple[float, float, float]

DUTIES_OFF: Triple = (0.0, 0.0, 0.0)


class Mode(Enum):
    BOOT = "boot"
    UNPAIRED = "unpaired"
    IDLE = "idle"
    HEATING = "heating"
    FAULT = "fault"
    OFF = "off"


class FaultCode(Enum):
    NONE = "none"
    OVER_TEMP = "over_temp"
    ZONE_DIVERGENCE = "zone_divergence"
    SENSOR_RANGE = "sensor_range"
    LINK_LOST = "link_lost"
    LOW_BATTERY = "low_battery"


# Wire encodings (telemetry mode/fault bytes, FAULT_EVT payload).
MODE_BYTE = {m: i for i, m in enumerate(Mode)}
MODE_FROM_BYTE = {i: m for m, i in MODE_BYTE.items()}
FAULT_BYTE = {f: i for i, f in enumerate(FaultCode)}
FAULT_FROM_BYTE = {i: f for f, i in FAULT_BYTE.items()}


class Level(Enum):
    OFF = 0
    LOW = 1
    MEDIUM = 2
    HIGH = 3


@dataclass(frozen=True, slots=True)
class Preset:
    level: Level
    target_temp: float | None


PRESETS: dict[Level, Preset] = {
    Level.OFF: Preset(Level.OFF, None),
    Level.LOW: Preset(Level.LOW, 40.0),
    Level.MEDIUM: Preset(Level.MEDIUM, 45.0),
    Level.HIGH: Preset(Level.HIGH, 50.0),
}


@dataclass(frozen=True, slots=True)
class SafetyLimits:
    max_temp: float = 55.0
    max_zone_sd: float = 2.5
    sensor_valid_range: tuple[float, float] = (-10.0, 90.0)
    watchdog_timeout: float = 3.0
    # Wh threshold; 0 means "fault only once fully depleted".
    low_battery_cutoff_wh: float = 0.0

    def __post_init__(self) -> None:
        targets = [p.target_temp for p in PRESETS.values() if p.target_temp is not None]
        if self.max_temp <= max(targets):
            raise ValueError("max_temp must exceed every preset target")
        if self.max_zone_sd <= 0:
            raise ValueError("max_zone_sd must be > 0")
        if self.watchdog_timeout <= 0:
            raise ValueError("watchdog_timeout must be > 0")


@dataclass(frozen=True, slots=True)
class ControllerState:
    mode: Mode = Mode.BOOT
    active_preset: Preset = PRESETS[Level.OFF]
    duties: Triple = DUTIES_OFF
    last_heartbeat_age: float = 0.0
    fault_code: FaultCode = FaultCode.NONE
    paired: bool = False


def boot_state() -> ControllerState:
    return ControllerState()


def reset_to_boot(ctrl: ControllerState) -> ControllerState:
    """The physical power toggle: everything forgotten, heaters off."""
    return boot_state()


def power_off(ctrl: ControllerState) -> ControllerState:
    """Switch held off: inert until reset_to_boot."""
    return ControllerState(mode=Mode.OFF)


def safety_check(temps: Triple, battery_wh: float, limits: SafetyLimits) -> FaultCode:
    """First failing check wins; FaultCode.NONE when all pass."""
    lo, hi = limits.sensor_valid_range
    if any(t < lo or t > hi for t in temps):
        return FaultCode.SENSOR_RANGE
    if any(t >= limits.max_temp for t in temps):
        return FaultCode.OVER_TEMP
    if statistics.pstdev(temps) >= limits.max_zone_sd:
        return FaultCode.ZONE_DIVERGENCE
    if battery_wh <= limits.low_battery_cutoff_wh:
        return FaultCode.LOW_BATTERY
    return FaultCode.NONE


def _enter_fault(ctrl: ControllerState, code: FaultCode) -> ControllerState:
    return replace(ctrl, mode=Mode.FAULT, fault_code=code, duties=DUTIES_OFF)


def watchdog_tick(ctrl: ControllerState, dt: float, limits: SafetyLimits) -> ControllerState:
    """Age the heartbeat timer; expiry kills heating, or unpairs an idle link.

    In Heating, a silent app is a safety event: Fault(LINK_LOST). In
    Idle the stale pairing is merely dropped.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if ctrl.mode in (Mode.OFF, Mode.BOOT):
        return ctrl
    age = ctrl.last_heartbeat_age + dt
    ctrl = replace(ctrl, last_heartbeat_age=age)
    if age <= limits.watchdog_timeout:
        return ctrl
    if ctrl.mode is Mode.HEATING:
        return _enter_fault(ctrl, FaultCode.LINK_LOST)
    if ctrl.mode is Mode.IDLE:
        return replace(ctrl, mode=Mode.UNPAIRED, paired=False)
    return ctrl


def _hysteresis(temp: float, target: float, previous: float) -> float:
    if temp < target - HYSTERESIS_BAND_C:
        return 1.0
    if temp > target + HYSTERESIS_BAND_C:
        return 0.0
    return previous


def control_tick(
    ctrl: ControllerState,
    temps: Triple,
    battery_wh: float,
    limits: SafetyLimits,
    dt: float = CONTROL_DT,
) -> tuple[ControllerState, Triple, list[FaultCode]]:
    """One regulation tick: watchdog, safety checks, then hysteresis.

    Returns the new state, the duty commands for the MOS-FETs, and the
    fault codes entered on this tick (at most one; emitted exactly once
    per fault entry, never repeated while latched).
    """
    events: list[FaultCode] = []
    if ctrl.mode is Mode.OFF:
        return ctrl, DUTIES_OFF, events
    if ctrl.mode is Mode.BOOT:
        ctrl = replace(ctrl, mode=Mode.UNPAIRED)

    was_fault = ctrl.mode is Mode.FAULT
    ctrl = watchdog_tick(ctrl, dt, limits)
    if ctrl.mode is Mode.FAULT and not was_fault:
        events.append(ctrl.fault_code)

    if ctrl.mode is not Mode.FAULT:
        code = safety_check(temps, battery_wh, limits)
        if code is not FaultCode.NONE:
            ctrl = _enter_fault(ctrl, code)
            events.append(code)

    if ctrl.mode is Mode.HEATING:
        target = ctrl.active_preset.target_temp
        assert target is not None  # Heating always carries a heat preset
        duties = (
            _hysteresis(temps[0], target, ctrl.duties[0]),
            _hysteresis(temps[1], target, ctrl.duties[1]),
            _hysteresis(temps[2], target, ctrl.duties[2]),
        )
        ctrl = replace(ctrl, duties=duties)
    else:
        duties = DUTIES_OFF
        if ctrl.duties != DUTIES_OFF:
            ctrl = replace(ctrl, duties=DUTIES_OFF)
    return ctrl, duties, events


def apply_command(
    ctrl: ControllerState, frame: Frame, stored_password: str
) -> tuple[ControllerState, list[Frame]]:
    """Handle one app->device frame; returns the new state and replies.

    Only AUTH_REQ is honoured while unpaired; everything else is
    silently dropped. A latched fault rejects SET_LEVEL with a FAULT_EVT
    reminder until the power is cycled. Device-origin frame types
    arriving from the app side (telemetry, acks) are ignored.
    """
    if ctrl.mode is Mode.OFF:
        return ctrl, []

    ftype = frame.frame_type
    if ftype is FrameType.AUTH_REQ:
        if ctrl.mode is Mode.BOOT:
            ctrl = replace(ctrl, mode=Mode.UNPAIRED)
        if not verify_auth(frame, stored_password):
            return ctrl, [make_auth_ack(False)]
        ctrl = replace(ctrl, paired=True, last_heartbeat_age=0.0)
        if ctrl.mode is Mode.UNPAIRED:
            ctrl = replace(ctrl, mode=Mode.IDLE)
        replies = [make_auth_ack(True)]
        if ctrl.mode is Mode.FAULT:
            replies.append(make_fault(FAULT_BYTE[ctrl.fault_code]))
        return ctrl, replies

    if not ctrl.paired:
        return ctrl, []

    if ftype is FrameType.HEARTBEAT:
        return replace(ctrl, last_heartbeat_age=0.0), []

    if ftype is FrameType.SET_LEVEL:
        if ctrl.mode is Mode.FAULT:
            return ctrl, [make_fault(FAULT_BYTE[ctrl.fault_code])]
        if len(frame.payload) != 1 or frame.payload[0] > 3:
            return ctrl, []  # undecodable level byte, drop
        level = Level(frame.payload[0])
        ctrl = replace(ctrl, last_heartbeat_age=0.0, active_preset=PRESETS[level])
        if level is Level.OFF:
            ctrl = replace(ctrl, mode=Mode.IDLE, duties=DUTIES_OFF)
        else:
            ctrl = replace(ctrl, mode=Mode.HEATING)
        return ctrl, [make_ack(FrameType.SET_LEVEL)]

    return ctrl, []
