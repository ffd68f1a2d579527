"""Digital twin of the MIMA three-zone IoT heat pad.

Simulated thermal plant, firmware safety logic, framed wire protocol,
fault-injectable link, an orchestration service with a JSON socket API,
and a metrics CLI -- calibrated so the measured heating behaviour of the
physical pad is reproducible in simulation.
"""

from .controller import (
    ControllerState,
    FaultCode,
    Level,
    Mode,
    Preset,
    PRESETS,
    SafetyLimits,
    apply_command,
    boot_state,
    control_tick,
    power_off,
    reset_to_boot,
    safety_check,
    watchdog_tick,
)
from .link import DuplexLink, LinkConfig, SimLink
from .metrics import ReportMetrics, compute_metrics
from .plant import (
    CalibrationError,
    CalibrationTargets,
    PlantModelError,
    PlantParams,
    PlantState,
    SensorReading,
    battery_step,
    calibrate_params,
    initial_state,
    sense,
    step_plant,
)
from .protocol import (
    Frame,
    FrameType,
    ProtocolError,
    StreamDecoder,
    TelemetryPayload,
    decode_stream,
    encode_frame,
    make_auth,
    verify_auth,
)
from .scenario import (
    ScenarioConfig,
    ScenarioError,
    ScriptCommand,
    SensorFault,
    TwinHarness,
    load_scenario,
    run_scenario,
    save_scenario,
)
from .service import TwinService, serve
from .telemetry import LogFormatError, TelemetryRecord, read_log, write_log

__version__ = "0.1.0"
