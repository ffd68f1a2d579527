"""Lumped-parameter model of the three-zone heat pad.

Each zone (left, middle, right) is a single thermal node obeying

    C * dT_i/dt = u_i * P_max - (T_i - T_amb) / R_a - k * sum_{j adj i} (T_i - T_j)

with nearest-neighbour coupling k between adjacent zones. Integration is
fixed-step explicit Euler; stability requires dt * (1/R_a + 2k) / C < 1,
which the calibrated pad satisfies by a factor of ~500 at the canonical
dt of 0.1 s.

Sensing mirrors the real divider circuit: a 10 kOhm NTC bead (beta model,
B = 3950 K) in series with a 10 kOhm fixed resistor into a 10-bit ADC.
``counts_to_temp`` inverts the same model, so sense -> invert is the
identity up to ADC quantisation (about 0.13 degC per count near 50 degC).

The battery is an energy bucket in watt-hours. A depleted bucket forces
all heating power to zero; the constant controller overhead keeps
draining whatever charge remains.

All state transitions are pure: they take a PlantState and return a new
one, so trajectories are bit-identical for identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from random import Random

# Thermistor divider (NTC, 10 k at 25 C, common beta for the part class)
THERMISTOR_R0 = 10_000.0
THERMISTOR_T0_K = 298.15
THERMISTOR_BETA = 3950.0
DIVIDER_R_FIXED = 10_000.0
ADC_MAX = 1023
SENSE_MIN_C = -20.0
SENSE_MAX_C = 120.0

SENSOR_NOISE_HALF_WIDTH_C = 0.1

N_ZONES = 3

Triple = tuple[float, float, float]


class PlantModelError(ValueError):
    """Non-finite or out-of-contract plant state, parameters, or inputs."""


class CalibrationError(ValueError):
    """Raised when no plant parameters can satisfy the calibration targets.

    ``constraint`` names the violated target.
    """

    def __init__(self, constraint: str, message: str):
        super().__init__(message)
        self.constraint = constraint


@dataclass(frozen=True, slots=True)
class PlantParams:
    """Physical constants of the pad, per zone unless noted.

    thermal_resistance is the zone-to-ambient resistance in K/W,
    heat_capacity in J/K, max_power the full-duty heater power in W,
    coupling the inter-zone conductance in W/K. battery_capacity is in
    watt-hours; overhead_power models the always-on controller + radio
    draw. supply_voltage must sit in the 3-cell lithium-polymer window.
    """

    thermal_resistance: float
    heat_capacity: float
    max_power: float
    coupling: float = 0.2
    ambient_temp: float = 30.0
    supply_voltage: float = 12.0
    battery_capacity: float = 26.4
    overhead_power: float = 0.3

    def __post_init__(self) -> None:
        finite = all(
            math.isfinite(v)
            for v in (
                self.thermal_resistance,
                self.heat_capacity,
                self.max_power,
                self.coupling,
                self.ambient_temp,
                self.supply_voltage,
                self.battery_capacity,
                self.overhead_power,
            )
        )
        if not finite:
            raise PlantModelError("plant parameters must be finite")
        if self.thermal_resistance <= 0 or self.heat_capacity <= 0 or self.max_power <= 0:
            raise PlantModelError("thermal parameters must be strictly positive")
        if self.coupling < 0:
            raise PlantModelError("coupling must be >= 0")
        if self.battery_capacity <= 0:
            raise PlantModelError("battery_capacity must be > 0")
        if not 9.0 <= self.supply_voltage <= 12.6:
            raise PlantModelError("supply_voltage outside the 3S Li-Po window [9.0, 12.6] V")
        if self.overhead_power < 0:
            raise PlantModelError("overhead_power must be >= 0")

    def to_dict(self) -> dict:
        return {
            "thermal_resistance": self.thermal_resistance,
            "heat_capacity": self.heat_capacity,
            "max_power": self.max_power,
            "coupling": self.coupling,
            "ambient_temp": self.ambient_temp,
            "supply_voltage": self.supply_voltage,
            "battery_capacity": self.battery_capacity,
            "overhead_power": self.overhead_power,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlantParams":
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True, slots=True)
class PlantState:
    """Ground truth of the simulated pad: zone temps (degC), battery (Wh), elapsed (s)."""

    zone_temps: Triple
    battery_remaining: float
    elapsed: float = 0.0


@dataclass(frozen=True, slots=True)
class SensorReading:
    """One thermistor scan: raw 10-bit counts, inverted temps, saturation flags."""

    adc_counts: tuple[int, int, int]
    derived_temp: Triple
    out_of_range: tuple[bool, bool, bool]


def initial_state(params: PlantParams, zone_temps: Triple | None = None) -> PlantState:
    """Pad at rest: all zones at ambient (unless overridden), battery full."""
    temps = zone_temps if zone_temps is not None else (params.ambient_temp,) * 3
    return PlantState(zone_temps=temps, battery_remaining=params.battery_capacity)


def _effective_powers(state: PlantState, duties: Triple, params: PlantParams) -> Triple:
    # A dead battery cannot push current through the MOS-FETs.
    if state.battery_remaining <= 0.0:
        return (0.0, 0.0, 0.0)
    p = params.max_power
    return (duties[0] * p, duties[1] * p, duties[2] * p)


def step_plant(state: PlantState, duties: Triple, params: PlantParams, dt: float) -> PlantState:
    """Advance the pad by one explicit-Euler step of dt seconds.

    duties are the commanded heater fractions in [0, 1] per zone. Battery
    drain and elapsed time advance together with the temperatures.
    """
    if not 0.0 < dt <= 1.0:
        raise PlantModelError(f"dt must be in (0, 1], got {dt}")
    t0, t1, t2 = state.zone_temps
    if not (math.isfinite(t0) and math.isfinite(t1) and math.isfinite(t2)):
        raise PlantModelError("zone temperatures must be finite")
    for d in duties:
        if not 0.0 <= d <= 1.0:
            raise PlantModelError(f"duty outside [0, 1]: {d}")

    q0, q1, q2 = _effective_powers(state, duties, params)
    amb = params.ambient_temp
    g_amb = 1.0 / params.thermal_resistance
    k = params.coupling
    c = params.heat_capacity

    d0 = (q0 - (t0 - amb) * g_amb - k * (t0 - t1)) * dt / c
    d1 = (q1 - (t1 - amb) * g_amb - k * ((t1 - t0) + (t1 - t2))) * dt / c
    d2 = (q2 - (t2 - amb) * g_amb - k * (t2 - t1)) * dt / c

    drained_wh = (q0 + q1 + q2 + params.overhead_power) * dt / 3600.0
    return PlantState(
        zone_temps=(t0 + d0, t1 + d1, t2 + d2),
        battery_remaining=max(0.0, state.battery_remaining - drained_wh),
        elapsed=state.elapsed + dt,
    )


def battery_step(state: PlantState, duties: Triple, params: PlantParams, dt: float) -> PlantState:
    """Drain the battery for dt seconds of the given duties, temps untouched.

    Drained energy is the effective heating power (zero once depleted)
    plus the controller overhead; the remaining charge floors at zero.
    """
    if dt <= 0:
        raise PlantModelError(f"dt must be > 0, got {dt}")
    q0, q1, q2 = _effective_powers(state, duties, params)
    drained_wh = (q0 + q1 + q2 + params.overhead_power) * dt / 3600.0
    return replace(state, battery_remaining=max(0.0, state.battery_remaining - drained_wh))


def temp_to_resistance(temp_c: float) -> float:
    """Beta-model thermistor resistance in ohms at temp_c."""
    t_k = temp_c + 273.15
    return THERMISTOR_R0 * math.exp(THERMISTOR_BETA * (1.0 / t_k - 1.0 / THERMISTOR_T0_K))


def resistance_to_counts(resistance: float) -> int:
    """10-bit ADC reading of the divider midpoint (fixed resistor on top)."""
    return round(ADC_MAX * DIVIDER_R_FIXED / (DIVIDER_R_FIXED + resistance))


def counts_to_temp(counts: int) -> float:
    """Invert the divider + beta model. Counts are clamped off the rails."""
    n = min(max(counts, 1), ADC_MAX - 1)
    resistance = DIVIDER_R_FIXED * (ADC_MAX - n) / n
    t_k = 1.0 / (1.0 / THERMISTOR_T0_K + math.log(resistance / THERMISTOR_R0) / THERMISTOR_BETA)
    return t_k - 273.15


def sense(state: PlantState, params: PlantParams, noise_rng: Random | None = None) -> SensorReading:
    """Read all three thermistors through the ADC.

    Optional noise_rng adds zero-mean uniform noise of +-0.1 degC to the
    bead temperature before conversion. Temperatures outside the
    supported [-20, 120] degC window saturate the counts and set the
    per-zone out_of_range flag.
    """
    counts: list[int] = []
    derived: list[float] = []
    flags: list[bool] = []
    for t in state.zone_temps:
        if noise_rng is not None:
            t += noise_rng.uniform(-SENSOR_NOISE_HALF_WIDTH_C, SENSOR_NOISE_HALF_WIDTH_C)
        oor = not SENSE_MIN_C <= t <= SENSE_MAX_C
        t_clamped = min(max(t, SENSE_MIN_C), SENSE_MAX_C)
        n = resistance_to_counts(temp_to_resistance(t_clamped))
        counts.append(n)
        derived.append(counts_to_temp(n))
        flags.append(oor)
    return SensorReading(
        adc_counts=(counts[0], counts[1], counts[2]),
        derived_temp=(derived[0], derived[1], derived[2]),
        out_of_range=(flags[0], flags[1], flags[2]),
    )


@dataclass(frozen=True, slots=True)
class CalibrationTargets:
    """Measured behaviours the fitted pad must reproduce.

    rise_time_s: full-duty first crossing of hold_temp_c from ambient.
    endurance_min: continuous hold at hold_temp_c until battery depletion.
    asymptote_ratio sets the full-duty steady-state excess over the hold
    excess (must be > 1 so the hold needs duty < 1).
    """

    rise_time_s: float = 95.0
    hold_temp_c: float = 50.0
    endurance_min: float = 60.0
    ambient_c: float = 30.0
    battery_capacity_wh: float = 26.4
    supply_voltage: float = 12.0
    overhead_power_w: float = 0.3
    asymptote_ratio: float = 1.75
    coupling: float = 0.2

    def to_dict(self) -> dict:
        return {
            "rise_time_s": self.rise_time_s,
            "hold_temp_c": self.hold_temp_c,
            "endurance_min": self.endurance_min,
            "ambient_c": self.ambient_c,
            "battery_capacity_wh": self.battery_capacity_wh,
            "supply_voltage": self.supply_voltage,
            "overhead_power_w": self.overhead_power_w,
            "asymptote_ratio": self.asymptote_ratio,
            "coupling": self.coupling,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationTargets":
        return cls(**{k: float(v) for k, v in d.items()})


def measure_rise_time(params: PlantParams, hold_temp_c: float, dt: float = 0.1) -> float | None:
    """Simulated full-duty rise from ambient; sub-step crossing by interpolation.

    Returns None if the battery depletes (or the asymptote is reached)
    before the first crossing.
    """
    state = initial_state(params)
    duties = (1.0, 1.0, 1.0)
    prev = state.zone_temps[0]
    # Full-duty asymptote bounds how long a crossing can take.
    horizon = 50.0 * params.thermal_resistance * params.heat_capacity
    while state.elapsed < horizon:
        state = step_plant(state, duties, params, dt)
        cur = state.zone_temps[0]
        if cur >= hold_temp_c:
            frac = (hold_temp_c - prev) / (cur - prev)
            return state.elapsed - dt + frac * dt
        if state.battery_remaining <= 0.0:
            return None
        prev = cur
    return None


def measure_endurance(params: PlantParams, hold_temp_c: float, dt: float = 0.5) -> float | None:
    """Minutes until depletion for a full-duty rise followed by a steady hold.

    The hold phase applies the constant duty that balances losses at the
    hold temperature, i.e. the average duty any regulator settles to.
    Returns None only if the battery somehow outlasts 100x the expected
    endurance (non-depleting configurations).
    """
    hold_excess = hold_temp_c - params.ambient_temp
    hold_duty = min(1.0, hold_excess / (params.thermal_resistance * params.max_power))
    state = initial_state(params)
    horizon = 100.0 * 3600.0
    while state.elapsed < horizon:
        rising = state.zone_temps[0] < hold_temp_c
        duty = 1.0 if rising else hold_duty
        state = step_plant(state, (duty, duty, duty), params, dt)
        if state.battery_remaining <= 0.0:
            return state.elapsed / 60.0
    return None


def calibrate_params(targets: CalibrationTargets) -> PlantParams:
    """Fit (R_a, C, max_power) so the simulated pad reproduces the targets.

    The first-order closed form
        T(t) = T_amb + max_power * R_a * (1 - exp(-t / (R_a * C)))
    pins R_a from the endurance power budget and seeds C from the rise
    time; C is then refined against the discrete simulation (rise time is
    exactly linear in C for a first-order plant). Raises CalibrationError
    naming the violated constraint when the targets contradict each other.
    """
    if targets.rise_time_s <= 0:
        raise CalibrationError("rise_time", "rise time must be positive")
    if targets.hold_temp_c <= targets.ambient_c:
        raise CalibrationError("hold_temp", "hold temperature must exceed ambient")
    if targets.endurance_min <= 0:
        raise CalibrationError("endurance", "endurance must be positive")
    if targets.asymptote_ratio <= 1.0:
        raise CalibrationError(
            "asymptote_ratio", "asymptote ratio must exceed 1 so the hold needs duty < 1"
        )

    excess = targets.hold_temp_c - targets.ambient_c
    budget_w = targets.battery_capacity_wh / (targets.endurance_min / 60.0)
    heating_w = budget_w - targets.overhead_power_w
    if heating_w <= 0:
        raise CalibrationError(
            "endurance",
            "endurance target leaves no power budget for heating "
            f"(battery supports only {budget_w:.2f} W total, overhead is "
            f"{targets.overhead_power_w:.2f} W)",
        )

    r_a = N_ZONES * excess / heating_w
    max_power = targets.asymptote_ratio * excess / r_a
    tau = targets.rise_time_s / math.log(targets.asymptote_ratio / (targets.asymptote_ratio - 1.0))
    cap = tau / r_a

    def build(c: float) -> PlantParams:
        return PlantParams(
            thermal_resistance=r_a,
            heat_capacity=c,
            max_power=max_power,
            coupling=targets.coupling,
            ambient_temp=targets.ambient_c,
            supply_voltage=targets.supply_voltage,
            battery_capacity=targets.battery_capacity_wh,
            overhead_power=targets.overhead_power_w,
        )

    # Refine C against the discrete integrator (sub-0.05 s agreement).
    for _ in range(8):
        measured = measure_rise_time(build(cap), targets.hold_temp_c)
        if measured is None:
            raise CalibrationError(
                "endurance",
                "battery depletes during the full-power rise; the endurance "
                "target contradicts the rise-time target",
            )
        if abs(measured - targets.rise_time_s) <= 0.05:
            break
        cap *= targets.rise_time_s / measured

    params = build(cap)

    rise = measure_rise_time(params, targets.hold_temp_c)
    if rise is None or abs(rise - targets.rise_time_s) > 2.0:
        raise CalibrationError(
            "rise_time", f"fitted rise time {rise} s misses target {targets.rise_time_s} s"
        )
    if max_power * r_a <= excess:
        raise CalibrationError("hold_temp", "hold temperature unreachable at duty < 1")
    endurance = measure_endurance(params, targets.hold_temp_c)
    if endurance is None or abs(endurance - targets.endurance_min) > 0.10 * targets.endurance_min:
        raise CalibrationError(
            "endurance",
            f"fitted endurance {endurance} min outside +-10% of target "
            f"{targets.endurance_min} min",
        )
    return params


def battery_millivolts(state: PlantState, params: PlantParams) -> int:
    """Pack voltage reported over telemetry: linear in state of charge
    from the supply voltage at full down to the 9.0 V cutoff at empty."""
    soc = min(max(state.battery_remaining / params.battery_capacity, 0.0), 1.0)
    return round(1000.0 * (9.0 + (params.supply_voltage - 9.0) * soc))
