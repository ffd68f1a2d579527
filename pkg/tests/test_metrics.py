import pytest

from mima_twin.metrics import MetricsError, compute_metrics, rise_time
from mima_twin.telemetry import TelemetryRecord


def record(t, temp, mode="heating", fault="none", batt=20.0):
    return TelemetryRecord.quantized(
        time_s=t,
        derived_temps=(temp, temp, temp),
        true_temps=(temp, temp, temp),
        duties=(0.0, 0.0, 0.0),
        batt_wh=batt,
        batt_mv=11000,
        mode=mode,
        fault=fault,
    )


def linear_log(start=30.0, end=50.0, seconds=100):
    # rises linearly, then holds at end value for a short tail
    rows = [
        record(float(t), start + (end - start) * t / seconds) for t in range(1, seconds + 1)
    ]
    rows += [record(float(seconds + k), end) for k in range(1, 11)]
    return rows


class TestRiseTime:
    def test_linear_ramp_interpolates_exactly(self):
        assert rise_time(linear_log(), 50.0) == pytest.approx(100.0, abs=1e-9)
        assert rise_time(linear_log(), 40.0) == pytest.approx(50.0, abs=1e-9)

    def test_no_crossing_returns_none(self):
        assert rise_time(linear_log(end=45.0), 50.0) is None

    def test_crossing_at_first_sample(self):
        rows = [record(1.0, 55.0), record(2.0, 56.0)]
        assert rise_time(rows, 50.0) == 1.0


class TestComputeMetrics:
    def test_full_report_on_synthetic_log(self):
        m = compute_metrics(linear_log(), 50.0, window=(101.0, 110.0))
        assert m.rise_time_s == pytest.approx(100.0)
        assert m.hold_mad_c == pytest.approx(0.0, abs=1e-9)
        assert m.max_temp_c == 50.0
        assert not m.battery_depleted
        assert m.fault_timeline == ()

    def test_all_off_run_has_no_rise_and_mad_about_ambient(self):
        rows = [record(float(t), 30.0, mode="idle") for t in range(1, 61)]
        m = compute_metrics(rows, 30.0, window=(1.0, 60.0))
        assert m.rise_time_s == 1.0  # already at ambient target
        m2 = compute_metrics(rows, 50.0, window=(1.0, 60.0))
        assert m2.rise_time_s is None
        assert m2.hold_mad_c == pytest.approx(20.0)

    def test_window_outside_log_is_error(self):
        with pytest.raises(MetricsError):
            compute_metrics(linear_log(), 50.0, window=(500.0, 600.0))
        with pytest.raises(MetricsError):
            compute_metrics(linear_log(), 50.0, window=(50.0, 10.0))

    def test_endurance_from_depletion(self):
        rows = [record(float(t), 50.0, batt=max(0.0, 10.0 - t * 0.1)) for t in range(1, 121)]
        m = compute_metrics(rows, 50.0, window=(1.0, 120.0))
        assert m.battery_depleted
        assert m.endurance_min == pytest.approx(100.0 / 60.0)

    def test_endurance_from_low_battery_fault(self):
        rows = [record(float(t), 50.0) for t in range(1, 50)]
        rows += [record(50.0, 50.0, mode="fault", fault="low_battery")]
        m = compute_metrics(rows, 50.0, window=(1.0, 50.0))
        assert m.battery_depleted
        assert m.endurance_min == pytest.approx(50.0 / 60.0)

    def test_fault_timeline_transitions(self):
        rows = [record(1.0, 40.0), record(2.0, 40.0, mode="fault", fault="over_temp")]
        rows += [record(3.0, 40.0, mode="fault", fault="over_temp")]
        rows += [record(4.0, 30.0, mode="boot", fault="none")]
        m = compute_metrics(rows, 50.0, window=(1.0, 4.0))
        assert m.fault_timeline == ((2.0, "over_temp"), (4.0, "none"))

    def test_metrics_pure_function_of_log(self, tmp_path):
        from mima_twin.telemetry import read_log, write_log

        rows = linear_log()
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_log(p1, rows)
        write_log(p2, rows)
        m1 = compute_metrics(read_log(p1), 50.0, (50.0, 110.0))
        m2 = compute_metrics(read_log(p2), 50.0, (50.0, 110.0))
        assert m1.to_json() == m2.to_json()

    def test_empty_log_is_error(self):
        with pytest.raises(MetricsError):
            compute_metrics([], 50.0)
