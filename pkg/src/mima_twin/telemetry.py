"""The 1 Hz experiment log: records and their CSV serialization.

Each row pairs the device's own view (derived sensor temps, reported
battery millivolts, mode, fault) with the twin's ground truth (true zone
temps, battery watt-hours) plus the duty commands in force.

CSV columns, fixed:

    time_s,t1,t2,t3,true1,true2,true3,d1,d2,d3,batt_wh,batt_mv,mode,fault

Temperatures carry two decimals (the wire resolution), duties three,
battery watt-hours four. Records are built from already-quantized values
so a write/read round-trip reproduces them exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

CSV_HEADER = [
    "time_s",
    "t1",
    "t2",
    "t3",
    "true1",
    "true2",
    "true3",
    "d1",
    "d2",
    "d3",
    "batt_wh",
    "batt_mv",
    "mode",
    "fault",
]


class LogFormatError(ValueError):
    """Malformed telemetry CSV; message carries the offending line number."""


def _q(value: float, decimals: int) -> float:
    """Quantize to the CSV precision so formatting round-trips losslessly."""
    return float(f"{value:.{decimals}f}")


@dataclass(frozen=True, slots=True)
class TelemetryRecord:
    time_s: float
    derived_temps: tuple[float, float, float]
    true_temps: tuple[float, float, float]
    duties: tuple[float, float, float]
    batt_wh: float
    batt_mv: int
    mode: str
    fault: str

    @classmethod
    def quantized(
        cls,
        time_s: float,
        derived_temps: Iterable[float],
        true_temps: Iterable[float],
        duties: Iterable[float],
        batt_wh: float,
        batt_mv: int,
        mode: str,
        fault: str,
    ) -> "TelemetryRecord":
        return cls(
            time_s=_q(time_s, 1),
            derived_temps=tuple(_q(t, 2) for t in derived_temps),  # type: ignore[arg-type]
            true_temps=tuple(_q(t, 2) for t in true_temps),  # type: ignore[arg-type]
            duties=tuple(_q(d, 3) for d in duties),  # type: ignore[arg-type]
            batt_wh=_q(batt_wh, 4),
            batt_mv=int(batt_mv),
            mode=mode,
            fault=fault,
        )

    def to_row(self) -> list[str]:
        return [
            f"{self.time_s:.1f}",
            *(f"{t:.2f}" for t in self.derived_temps),
            *(f"{t:.2f}" for t in self.true_temps),
            *(f"{d:.3f}" for d in self.duties),
            f"{self.batt_wh:.4f}",
            str(self.batt_mv),
            self.mode,
            self.fault,
        ]

    @classmethod
    def from_row(cls, row: list[str]) -> "TelemetryRecord":
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"expected {len(CSV_HEADER)} fields, got {len(row)}")
        return cls(
            time_s=float(row[0]),
            derived_temps=(float(row[1]), float(row[2]), float(row[3])),
            true_temps=(float(row[4]), float(row[5]), float(row[6])),
            duties=(float(row[7]), float(row[8]), float(row[9])),
            batt_wh=float(row[10]),
            batt_mv=int(row[11]),
            mode=row[12],
            fault=row[13],
        )


def format_record(record: TelemetryRecord) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(record.to_row())
    return buf.getvalue()


def format_header() -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(CSV_HEADER)
    return buf.getvalue()


def write_log(path: str | Path, records: Iterable[TelemetryRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in records:
            writer.writerow(record.to_row())


def read_log(path: str | Path) -> list[TelemetryRecord]:
    records: list[TelemetryRecord] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LogFormatError("line 1: empty file, missing header") from None
        if header != CSV_HEADER:
            raise LogFormatError(f"line 1: bad header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                records.append(TelemetryRecord.from_row(row))
            except ValueError as exc:
                raise LogFormatError(f"line {lineno}: {exc}") from None
    return records
