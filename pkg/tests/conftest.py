import io

import pytest

from mima_twin.plant import CalibrationTargets, calibrate_params
from mima_twin.scenario import ScenarioConfig, ScriptCommand, run_scenario
from mima_twin.telemetry import format_header, format_record


def csv_bytes(records) -> bytes:
    out = io.StringIO()
    out.write(format_header())
    for r in records:
        out.write(format_record(r))
    return out.getvalue().encode()


@pytest.fixture(scope="session")
def calibrated_params():
    return calibrate_params(CalibrationTargets())


def canonical_high_config(**overrides) -> ScenarioConfig:
    """Ambient 30 C, auth then High right at the start, defaults elsewhere."""
    base = dict(
        name="canonical-high",
        seed=42,
        duration_s=900.0,
        script=(
            ScriptCommand(0.0, "auth"),
            ScriptCommand(0.1, "set_level", level="high"),
        ),
    )
    base.update(overrides)
    return ScenarioConfig(**base)


@pytest.fixture(scope="session")
def canonical_records():
    """One shared 900 s canonical High run (about half a second of wall time)."""
    return run_scenario(canonical_high_config())
