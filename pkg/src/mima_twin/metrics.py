"""Experiment metrics computed from a telemetry log.

The pad temperature for rise/hold purposes is the mean of the three
derived zone temps (the device's own view, matching how the physical
experiment was instrumented). Rise time interpolates linearly between
the bracketing 1 Hz samples. Hold quality is the mean absolute deviation
from the target over a steady window. Endurance is the time the battery
hits empty (or a low-battery fault), else the log duration.

All computations are pure functions of the log, so identical files give
identical metrics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .telemetry import TelemetryRecord

DEFAULT_STEADY_START_S = 300.0


class MetricsError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class ReportMetrics:
    rise_time_s: float | None
    hold_mad_c: float
    max_temp_c: float
    endurance_min: float
    battery_depleted: bool
    fault_timeline: tuple[tuple[float, str], ...]
    target_c: float
    window: tuple[float, float]
    n_records: int

    def to_dict(self) -> dict:
        return {
            "rise_time_s": self.rise_time_s,
            "hold_mad_c": self.hold_mad_c,
            "max_temp_c": self.max_temp_c,
            "endurance_min": self.endurance_min,
            "battery_depleted": self.battery_depleted,
            "fault_timeline": [[t, code] for t, code in self.fault_timeline],
            "target_c": self.target_c,
            "window": list(self.window),
            "n_records": self.n_records,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _pad_temp(record: TelemetryRecord) -> float:
    return sum(record.derived_temps) / 3.0


def rise_time(records: list[TelemetryRecord], target_c: float) -> float | None:
    """First crossing of target by the pad temperature, sub-sample by
    linear interpolation; None if the log never crosses."""
    prev_t = 0.0
    prev_temp: float | None = None
    for rec in records:
        temp = _pad_temp(rec)
        if temp >= target_c:
            if prev_temp is None or temp == prev_temp:
                return rec.time_s
            frac = (target_c - prev_temp) / (temp - prev_temp)
            return prev_t + frac * (rec.time_s - prev_t)
        prev_t, prev_temp = rec.time_s, temp
    return None


def compute_metrics(
    records: list[TelemetryRecord],
    target_c: float,
    window: tuple[float, float] | None = None,
) -> ReportMetrics:
    """window defaults to [300 s, end of log]; it must overlap the log."""
    if not records:
        raise MetricsError("empty log")
    t_end = records[-1].time_s
    if window is None:
        window = (DEFAULT_STEADY_START_S, t_end)
    w0, w1 = window
    if w1 <= w0:
        raise MetricsError(f"empty steady window [{w0}, {w1}]")
    if w0 > t_end or w1 < records[0].time_s:
        raise MetricsError(
            f"steady window [{w0}, {w1}] outside log range "
            f"[{records[0].time_s}, {t_end}]"
        )

    deviations = [
        abs(_pad_temp(r) - target_c) for r in records if w0 <= r.time_s <= w1
    ]
    if not deviations:
        raise MetricsError(f"no samples inside steady window [{w0}, {w1}]")
    hold_mad = sum(deviations) / len(deviations)

    max_temp = max(max(r.derived_temps + r.true_temps) for r in records)

    depleted = False
    endurance_min = t_end / 60.0
    for rec in records:
        if rec.batt_wh <= 0.0 or rec.fault == "low_battery":
            endurance_min = rec.time_s / 60.0
            depleted = True
            break

    timeline: list[tuple[float, str]] = []
    prev_fault = "none"
    for rec in records:
        if rec.fault != prev_fault:
            timeline.append((rec.time_s, rec.fault))
            prev_fault = rec.fault

    return ReportMetrics(
        rise_time_s=rise_time(records, target_c),
        hold_mad_c=hold_mad,
        max_temp_c=max_temp,
        endurance_min=endurance_min,
        battery_depleted=depleted,
        fault_timeline=tuple(timeline),
        target_c=target_c,
        window=(w0, w1),
        n_records=len(records),
    )


def format_table(metrics: ReportMetrics) -> str:
    rise = "not crossed" if metrics.rise_time_s is None else f"{metrics.rise_time_s:.1f} s"
    lines = [
        f"records            {metrics.n_records}",
        f"target             {metrics.target_c:.1f} C",
        f"rise time          {rise}",
        f"hold MAD [{metrics.window[0]:.0f}, {metrics.window[1]:.0f}] s   "
        f"{metrics.hold_mad_c:.3f} C",
        f"max temperature    {metrics.max_temp_c:.2f} C",
        f"endurance          {metrics.endurance_min:.1f} min"
        + ("" if metrics.battery_depleted else " (not depleted)"),
    ]
    if metrics.fault_timeline:
        faults = ", ".join(f"{t:.0f}s:{code}" for t, code in metrics.fault_timeline)
        lines.append(f"fault timeline     {faults}")
    else:
        lines.append("fault timeline     clean")
    return "\n".join(lines) + "\n"
