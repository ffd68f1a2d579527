#!/usr/bin/env python3
"""Exercise every safety interlock of the twin and tabulate the response.

For each fault path this drives the calibrated pad into the triggering
condition and reports when the firmware latched, which code it raised,
and the hottest true zone temperature seen afterwards.
"""

from mima_twin.controller import Mode
from mima_twin.link import LinkConfig
from mima_twin.plant import CalibrationTargets, calibrate_params
from mima_twin.scenario import ScenarioConfig, ScriptCommand, SensorFault, TwinHarness

SCRIPT = (ScriptCommand(0.0, "auth"), ScriptCommand(0.1, "set_level", level="high"))


def run_case(name: str, **overrides) -> None:
    params = calibrate_params(CalibrationTargets())
    config = ScenarioConfig(
        name=name,
        seed=7,
        plant_params=params,
        calibration=None,
        script=SCRIPT,
        **overrides,
    )
    harness = TwinHarness(config)
    fault_at = None
    hottest = 0.0
    total = round(config.duration_s * 10)
    while harness.tick_index < total:
        harness.step()
        hottest = max(hottest, *harness.plant.zone_temps)
        if fault_at is None and harness.ctrl.mode is Mode.FAULT:
            fault_at = harness.sim_time
    code = harness.ctrl.fault_code.value
    when = "never" if fault_at is None else f"{fault_at:7.1f} s"
    print(f"  {name:24s} fault={code:15s} at {when}   peak true {hottest:5.2f} C")


def main() -> None:
    print("safety interlock study (calibrated pad, High preset):")
    run_case(
        "link loss mid-heat",
        duration_s=40.0,
        link=LinkConfig(disconnect_windows=((20.0, 40.0),)),
    )
    run_case(
        "stuck-hot thermistor",
        duration_s=60.0,
        sensor_faults=(SensorFault(2, 30.0, 60.0, "offset", 6.0),),
    )
    run_case(
        "runaway hot reading",
        duration_s=60.0,
        sensor_faults=(SensorFault(0, 40.0, 60.0, "stuck", 56.0),),
    )
    run_case(
        "thermistor unplugged",
        duration_s=60.0,
        sensor_faults=(SensorFault(1, 25.0, 60.0, "stuck", 120.0),),
    )
    run_case(
        "battery runs out",
        duration_s=4200.0,
    )
    run_case("healthy baseline", duration_s=120.0)


if __name__ == "__main__":
    main()
