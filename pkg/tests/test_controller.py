import random
from dataclasses import replace

from hypothesis import given, settings
from hypothesis import strategies as st

from mima_twin.controller import (
    PRESETS,
    ControllerState,
    FaultCode,
    Level,
    Mode,
    Preset,
    SafetyLimits,
    apply_command,
    boot_state,
    control_tick,
    power_off,
    reset_to_boot,
    safety_check,
    watchdog_tick,
)
from mima_twin.protocol import (
    Frame,
    FrameType,
    make_auth,
    make_heartbeat,
    make_set_level,
)

LIMITS = SafetyLimits()
PASSWORD = "mima1234"
BATTERY_OK = 20.0


def paired_idle() -> ControllerState:
    ctrl, _ = apply_command(boot_state(), make_auth(PASSWORD), PASSWORD)
    return ctrl


def heating(level: Level = Level.HIGH) -> ControllerState:
    ctrl, _ = apply_command(paired_idle(), make_set_level(level.value), PASSWORD)
    return ctrl


class TestPresets:
    def test_targets_strictly_increasing_below_cap(self):
        targets = [PRESETS[lvl].target_temp for lvl in (Level.LOW, Level.MEDIUM, Level.HIGH)]
        assert targets == [40.0, 45.0, 50.0]
        assert targets == sorted(targets)
        assert all(t < LIMITS.max_temp for t in targets)
        assert PRESETS[Level.OFF].target_temp is None


class TestSafetyCheck:
    def test_zero_dispersion_ok(self):
        assert safety_check((50.0, 50.0, 50.0), BATTERY_OK, LIMITS) is FaultCode.NONE

    def test_sensor_range_beats_divergence(self):
        assert safety_check((30.0, 30.0, 95.0), BATTERY_OK, LIMITS) is FaultCode.SENSOR_RANGE

    def test_overtemp_beats_divergence(self):
        assert safety_check((50.0, 50.0, 56.0), BATTERY_OK, LIMITS) is FaultCode.OVER_TEMP

    def test_divergence_boundaries_hand_computed(self):
        # pstdev(44,44,50) = 2.828 >= 2.5; pstdev(45,45,50.1) = 2.404 < 2.5
        assert safety_check((44.0, 44.0, 50.0), BATTERY_OK, LIMITS) is FaultCode.ZONE_DIVERGENCE
        assert safety_check((45.0, 45.0, 50.1), BATTERY_OK, LIMITS) is FaultCode.NONE

    def test_small_spread_ok(self):
        # pstdev = 0.163
        assert safety_check((41.0, 41.2, 40.8), BATTERY_OK, LIMITS) is FaultCode.NONE

    def test_low_battery_cutoff(self):
        assert safety_check((40.0, 40.0, 40.0), 0.0, LIMITS) is FaultCode.LOW_BATTERY
        limits = SafetyLimits(low_battery_cutoff_wh=1.0)
        assert safety_check((40.0, 40.0, 40.0), 0.9, limits) is FaultCode.LOW_BATTERY


class TestControlTick:
    def test_hysteresis_per_zone(self):
        ctrl = replace(heating(), duties=(0.0, 1.0, 0.0))
        ctrl, duties, events = control_tick(ctrl, (49.0, 50.8, 50.0), BATTERY_OK, LIMITS)
        assert duties == (1.0, 0.0, 0.0)
        assert events == []

    def test_overtemp_faults_and_zeroes(self):
        ctrl, duties, events = control_tick(heating(), (50.0, 50.0, 56.0), BATTERY_OK, LIMITS)
        assert ctrl.mode is Mode.FAULT
        assert ctrl.fault_code is FaultCode.OVER_TEMP
        assert duties == (0.0, 0.0, 0.0)
        assert events == [FaultCode.OVER_TEMP]

    def test_fault_event_emitted_exactly_once(self):
        ctrl = heating()
        total = []
        for _ in range(50):
            ctrl, duties, events = control_tick(ctrl, (50.0, 50.0, 56.0), BATTERY_OK, LIMITS)
            total += events
            assert duties == (0.0, 0.0, 0.0) or ctrl.mode is Mode.HEATING
        assert total == [FaultCode.OVER_TEMP]

    def test_divergence_fault_within_one_tick(self):
        ctrl, _, events = control_tick(heating(Level.LOW), (40.0, 40.0, 45.5), BATTERY_OK, LIMITS)
        assert ctrl.fault_code is FaultCode.ZONE_DIVERGENCE
        assert events == [FaultCode.ZONE_DIVERGENCE]

    def test_boot_advances_to_unpaired(self):
        ctrl, duties, _ = control_tick(boot_state(), (30.0, 30.0, 30.0), BATTERY_OK, LIMITS)
        assert ctrl.mode is Mode.UNPAIRED
        assert duties == (0.0, 0.0, 0.0)

    def test_off_mode_is_inert(self):
        ctrl = power_off(heating())
        out, duties, events = control_tick(ctrl, (200.0, 200.0, 200.0), 0.0, LIMITS)
        assert out == ctrl
        assert duties == (0.0, 0.0, 0.0)
        assert events == []


class TestWatchdog:
    def test_threshold_crossing_kills_heating(self):
        ctrl = replace(heating(), last_heartbeat_age=2.9)
        ctrl = watchdog_tick(ctrl, 0.2, LIMITS)
        assert ctrl.mode is Mode.FAULT
        assert ctrl.fault_code is FaultCode.LINK_LOST
        assert ctrl.duties == (0.0, 0.0, 0.0)

    def test_heartbeats_every_second_never_fault(self):
        ctrl = heating()
        for _ in range(600):  # 10 simulated minutes
            for _ in range(10):
                ctrl, _, events = control_tick(ctrl, (50.0, 50.0, 50.0), BATTERY_OK, LIMITS)
                assert events == []
            ctrl, _ = apply_command(ctrl, make_heartbeat(), PASSWORD)
            assert ctrl.last_heartbeat_age <= 1.0 + 0.11
        assert ctrl.mode is Mode.HEATING

    def test_idle_starvation_merely_unpairs(self):
        ctrl = paired_idle()
        for _ in range(40):
            ctrl, duties, events = control_tick(ctrl, (30.0, 30.0, 30.0), BATTERY_OK, LIMITS)
            assert duties == (0.0, 0.0, 0.0)
            assert events == []
        assert ctrl.mode is Mode.UNPAIRED
        assert not ctrl.paired


class TestApplyCommand:
    def test_auth_happy_path(self):
        ctrl, replies = apply_command(boot_state(), make_auth(PASSWORD), PASSWORD)
        assert ctrl.paired and ctrl.mode is Mode.IDLE
        assert [r.frame_type for r in replies] == [FrameType.AUTH_ACK]
        assert replies[0].payload == b"\x00"

    def test_wrong_password_rejected(self):
        ctrl, replies = apply_command(boot_state(), make_auth("mima1235"), PASSWORD)
        assert not ctrl.paired and ctrl.mode is Mode.UNPAIRED
        assert replies[0].payload == b"\x01"

    def test_set_level_high_starts_heating_at_50(self):
        ctrl, replies = apply_command(paired_idle(), make_set_level(3), PASSWORD)
        assert ctrl.mode is Mode.HEATING
        assert ctrl.active_preset.target_temp == 50.0
        assert replies[0].frame_type is FrameType.ACK

    def test_set_level_off_returns_to_idle(self):
        ctrl, _ = apply_command(heating(), make_set_level(0), PASSWORD)
        assert ctrl.mode is Mode.IDLE
        assert ctrl.duties == (0.0, 0.0, 0.0)

    def test_unpaired_commands_ignored(self):
        ctrl = boot_state()
        for frame in (make_set_level(3), make_heartbeat(), Frame(FrameType.ACK, b"\x03")):
            out, replies = apply_command(ctrl, frame, PASSWORD)
            assert out == ctrl
            assert replies == []

    def test_latched_fault_rejects_set_level(self):
        ctrl, _, _ = control_tick(heating(), (50.0, 50.0, 56.0), BATTERY_OK, LIMITS)
        out, replies = apply_command(ctrl, make_set_level(1), PASSWORD)
        assert out == ctrl
        assert [r.frame_type for r in replies] == [FrameType.FAULT_EVT]
        assert replies[0].payload[0] == list(FaultCode).index(FaultCode.OVER_TEMP)

    def test_fault_cleared_only_by_reset(self):
        ctrl, _, _ = control_tick(heating(), (50.0, 50.0, 56.0), BATTERY_OK, LIMITS)
        ctrl = reset_to_boot(ctrl)
        assert ctrl == boot_state()
        ctrl, _ = apply_command(ctrl, make_auth(PASSWORD), PASSWORD)
        ctrl, _ = apply_command(ctrl, make_set_level(2), PASSWORD)
        assert ctrl.mode is Mode.HEATING

    def test_device_origin_frames_ignored(self):
        ctrl = heating()
        for ftype in (FrameType.AUTH_ACK, FrameType.TELEMETRY, FrameType.FAULT_EVT):
            out, replies = apply_command(ctrl, Frame(ftype, b"\x00"), PASSWORD)
            assert out == ctrl and replies == []

    def test_reset_is_idempotent(self):
        assert reset_to_boot(boot_state()) == boot_state()
        assert reset_to_boot(heating()).duties == (0.0, 0.0, 0.0)


command_strategy = st.one_of(
    st.builds(Frame, st.sampled_from(list(FrameType)), st.binary(max_size=16)),
    st.builds(lambda: make_heartbeat()),
    st.builds(make_set_level, st.integers(0, 3)),
    st.builds(
        make_auth,
        st.text(min_size=1, max_size=8).filter(
            lambda s: s != PASSWORD and 1 <= len(s.encode()) <= 16
        ),
    ),
)


class TestInvariants:
    @given(st.lists(command_strategy, max_size=30))
    @settings(max_examples=150, deadline=None)
    def test_heating_unreachable_without_auth(self, frames):
        ctrl = boot_state()
        for frame in frames:
            ctrl, replies = apply_command(ctrl, frame, PASSWORD)
            assert not ctrl.paired
            assert ctrl.mode is not Mode.HEATING
            for reply in replies:
                if reply.frame_type is FrameType.AUTH_ACK:
                    assert reply.payload == b"\x01"

    @given(
        frames=st.lists(command_strategy, max_size=20),
        temps=st.lists(
            st.tuples(st.floats(-30, 130), st.floats(-30, 130), st.floats(-30, 130)),
            min_size=1,
            max_size=20,
        ),
        battery=st.floats(0.0, 26.4),
    )
    @settings(max_examples=150, deadline=None)
    def test_duties_zero_whenever_not_heating(self, frames, temps, battery):
        rng = random.Random(1)
        ctrl = boot_state()
        script = [("f", f) for f in frames] + [("t", t) for t in temps]
        rng.shuffle(script)
        for kind, item in script:
            if kind == "f":
                ctrl, _ = apply_command(ctrl, item, PASSWORD)
            else:
                ctrl, duties, _ = control_tick(ctrl, item, battery, LIMITS)
                if ctrl.mode is not Mode.HEATING:
                    assert duties == (0.0, 0.0, 0.0)
            if ctrl.mode is not Mode.HEATING:
                assert ctrl.duties == (0.0, 0.0, 0.0)
            if ctrl.mode is Mode.FAULT:
                assert ctrl.fault_code is not FaultCode.NONE

    def test_state_machine_determinism(self):
        def run():
            ctrl = boot_state()
            trace = []
            ctrl, _ = apply_command(ctrl, make_auth(PASSWORD), PASSWORD)
            ctrl, _ = apply_command(ctrl, make_set_level(3), PASSWORD)
            for i in range(200):
                temp = 49.0 + (i % 30) * 0.1
                ctrl, duties, _ = control_tick(ctrl, (temp, temp + 0.2, temp - 0.2), 10.0, LIMITS)
                if i % 10 == 0:
                    ctrl, _ = apply_command(ctrl, make_heartbeat(), PASSWORD)
                trace.append((ctrl, duties))
            return trace

        assert run() == run()
