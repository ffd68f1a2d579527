"""Headless entry points: run scenarios, calibrate, report, serve.

Exit codes: 0 success, 1 infeasible calibration or aborted run,
2 usage / IO errors. The listen address for `serve` defaults to the
MIMA_TWIN_ADDR environment variable (host:port), then 127.0.0.1:8777.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .metrics import MetricsError, compute_metrics, format_table
from .plant import CalibrationError, CalibrationTargets, calibrate_params, measure_endurance, measure_rise_time
from .scenario import ScenarioError, load_scenario, run_scenario
from .service import serve
from .telemetry import LogFormatError, read_log

DEFAULT_ADDR = "127.0.0.1:8777"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"address must be host:port, got {text!r}")
    return host, int(port)


def _load(path: str, args: argparse.Namespace):
    config = load_scenario(path)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "accel", None) is not None:
        overrides["accel"] = args.accel
        overrides["time_mode"] = "accelerated"
    if getattr(args, "duration", None) is not None:
        overrides["duration_s"] = args.duration
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def _script_target(config) -> float | None:
    """Target temperature of the last heat-level command in the script."""
    from .controller import PRESETS, Level

    target = None
    for entry in config.script:
        if entry.cmd == "set_level" and entry.level not in (None, "off"):
            target = PRESETS[Level[entry.level.upper()]].target_temp
    return target


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = _load(args.scenario, args)
    except ScenarioError as exc:
        return _fail(str(exc), EXIT_USAGE)
    out = args.out or config.log_path or f"{config.name}.csv"
    try:
        records = run_scenario(config, log_path=out)
    except CalibrationError as exc:
        return _fail(f"calibration failed ({exc.constraint}): {exc}", EXIT_FAILURE)
    except OSError as exc:
        return _fail(f"cannot write log: {exc}", EXIT_USAGE)
    target = _script_target(config)
    summary = f"{config.name}: {len(records)} records -> {out}"
    if target is not None and records:
        window = (min(300.0, records[-1].time_s / 2), records[-1].time_s)
        m = compute_metrics(records, target, window)
        rise = "n/a" if m.rise_time_s is None else f"{m.rise_time_s:.1f}s"
        summary += (
            f" | target {target:.0f}C rise_time={rise}"
            f" hold_mad={m.hold_mad_c:.3f}C max={m.max_temp_c:.2f}C"
        )
        if m.fault_timeline:
            summary += f" faults={[code for _, code in m.fault_timeline]}"
    print(summary)
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    targets = CalibrationTargets(
        rise_time_s=args.rise,
        hold_temp_c=args.hold,
        endurance_min=args.endurance,
        ambient_c=args.ambient,
        battery_capacity_wh=args.capacity,
    )
    try:
        params = calibrate_params(targets)
    except CalibrationError as exc:
        return _fail(f"infeasible targets ({exc.constraint}): {exc}", EXIT_FAILURE)
    verification = {
        "rise_time_s": round(measure_rise_time(params, targets.hold_temp_c), 2),
        "endurance_min": round(measure_endurance(params, targets.hold_temp_c), 2),
        "hold_duty": round(
            (targets.hold_temp_c - targets.ambient_c)
            / (params.thermal_resistance * params.max_power),
            4,
        ),
        "full_duty_asymptote_c": round(
            targets.ambient_c + params.max_power * params.thermal_resistance, 2
        ),
    }
    doc = {"params": params.to_dict(), "targets": targets.to_dict(), "verification": verification}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            return _fail(f"cannot write {args.out}: {exc}", EXIT_USAGE)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        records = read_log(args.log)
    except (OSError, LogFormatError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    window = None
    if args.window_start is not None or args.window_end is not None:
        if args.window_start is None or args.window_end is None:
            return _fail("--window-start and --window-end go together", EXIT_USAGE)
        window = (args.window_start, args.window_end)
    try:
        metrics = compute_metrics(records, args.target, window)
    except MetricsError as exc:
        return _fail(str(exc), EXIT_USAGE)
    print(format_table(metrics), end="")
    if args.json:
        try:
            Path(args.json).write_text(metrics.to_json())
        except OSError as exc:
            return _fail(f"cannot write {args.json}: {exc}", EXIT_USAGE)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        config = _load(args.scenario, args)
        address = _parse_addr(args.addr)
    except (ScenarioError, ValueError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    try:
        serve(config, address)
    except CalibrationError as exc:
        return _fail(f"calibration failed ({exc.constraint}): {exc}", EXIT_FAILURE)
    except OSError as exc:
        return _fail(f"cannot serve on {args.addr}: {exc}", EXIT_USAGE)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mima-twin", description="Digital twin of the three-zone IoT heat pad."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario headless and write its telemetry CSV")
    p_run.add_argument("scenario", help="scenario JSON path")
    p_run.add_argument("--seed", type=int, help="override the scenario seed")
    p_run.add_argument("--accel", type=float, help="override acceleration factor")
    p_run.add_argument("--duration", type=float, help="override duration in seconds")
    p_run.add_argument("--out", help="telemetry CSV output path")
    p_run.set_defaults(func=cmd_run)

    p_cal = sub.add_parser("calibrate", help="fit plant parameters to measured targets")
    p_cal.add_argument("--rise", type=float, default=95.0, help="rise time target, s")
    p_cal.add_argument("--hold", type=float, default=50.0, help="hold temperature, C")
    p_cal.add_argument("--endurance", type=float, default=60.0, help="endurance target, min")
    p_cal.add_argument("--ambient", type=float, default=30.0, help="ambient temperature, C")
    p_cal.add_argument("--capacity", type=float, default=26.4, help="battery capacity, Wh")
    p_cal.add_argument("--out", help="write the parameter file here")
    p_cal.set_defaults(func=cmd_calibrate)

    p_rep = sub.add_parser("report", help="compute metrics from a telemetry CSV")
    p_rep.add_argument("log", help="telemetry CSV path")
    p_rep.add_argument("--target", type=float, default=50.0, help="target temperature, C")
    p_rep.add_argument("--window-start", type=float, help="steady window start, s")
    p_rep.add_argument("--window-end", type=float, help="steady window end, s")
    p_rep.add_argument("--json", help="also write metrics JSON here")
    p_rep.set_defaults(func=cmd_report)

    p_srv = sub.add_parser("serve", help="serve the twin over a local TCP socket")
    p_srv.add_argument("scenario", help="scenario JSON path")
    p_srv.add_argument(
        "--addr",
        default=os.environ.get("MIMA_TWIN_ADDR", DEFAULT_ADDR),
        help="listen address host:port (default $MIMA_TWIN_ADDR or %(default)s)",
    )
    p_srv.add_argument("--seed", type=int, help="override the scenario seed")
    p_srv.add_argument("--accel", type=float, help="override acceleration factor")
    p_srv.add_argument("--duration", type=float, help="override duration in seconds")
    p_srv.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
