import { describe, expect, it } from "vitest";

import type { TelemetryEvent, TwinEvent } from "../src/protocol.js";
import {
  CURVE_CAPACITY,
  controlsEnabled,
  initialSession,
  reduce,
  type SessionAction,
  type UiSessionState,
} from "../src/session.js";

function telemetry(t: number, temp: number, mode = "heating", fault = "none"): TelemetryEvent {
  return { ev: "telemetry", t, temps: [temp, temp, temp], battery_mv: 11800, mode, fault };
}

function feed(state: UiSessionState, events: TwinEvent[], nowMs = 1000): UiSessionState {
  return events.reduce((s, event) => reduce(s, { kind: "event", event, nowMs }), state);
}

function readySession(): UiSessionState {
  let s = reduce(initialSession(), { kind: "connect" });
  s = reduce(s, { kind: "socket_open" });
  return feed(s, [{ ev: "auth_result", ok: true }]);
}

describe("pairing flow", () => {
  it("controls stay disabled until auth succeeds", () => {
    let s = reduce(initialSession(), { kind: "connect" });
    expect(controlsEnabled(s)).toBe(false);
    s = reduce(s, { kind: "socket_open" });
    expect(s.connection).toBe("unauthenticated");
    expect(controlsEnabled(s)).toBe(false);
    s = feed(s, [{ ev: "auth_result", ok: true }]);
    expect(s.connection).toBe("ready");
    expect(controlsEnabled(s)).toBe(true);
  });

  it("wrong password shows a visible rejection and keeps controls locked", () => {
    let s = reduce(initialSession(), { kind: "connect" });
    s = reduce(s, { kind: "socket_open" });
    s = feed(s, [{ ev: "auth_result", ok: false, error: "bad_password" }]);
    expect(s.connection).toBe("unauthenticated");
    expect(s.authError).toBe("bad_password");
    expect(controlsEnabled(s)).toBe(false);
  });

  it("service down leaves a plain disconnected state", () => {
    let s = reduce(initialSession(), { kind: "connect" });
    s = reduce(s, { kind: "socket_closed" });
    expect(s.connection).toBe("disconnected");
  });
});

describe("device-confirmed mode", () => {
  it("selecting a level never changes the displayed mode by itself", () => {
    let s = readySession();
    s = feed(s, [telemetry(1, 30, "idle")]);
    s = reduce(s, { kind: "select_level", level: "high" });
    expect(s.mode).toBe("idle"); // nothing confirmed yet
    s = feed(s, [{ ev: "mode", mode: "heating", target: 50 }]);
    expect(s.mode).toBe("heating");
    expect(s.target).toBe(50);
  });

  it("level selection is ignored while not ready", () => {
    let s = reduce(initialSession(), { kind: "connect" });
    s = reduce(s, { kind: "select_level", level: "high" });
    expect(s.selectedLevel).toBeNull();
  });
});

describe("telemetry rendering", () => {
  it("keeps a monotone curve capped at 900 points", () => {
    let s = readySession();
    for (let t = 1; t <= 1000; t++) {
      s = feed(s, [telemetry(t, 30 + t / 100)]);
    }
    expect(s.curve.length).toBe(CURVE_CAPACITY);
    const times = s.curve.map((p) => p.t);
    expect(times[0]).toBe(101);
    expect([...times].sort((a, b) => a - b)).toEqual(times);
    expect(s.latest?.t).toBe(1000);
  });

  it("pad temperature is the mean of the three zones", () => {
    let s = readySession();
    s = feed(s, [{ ev: "telemetry", t: 1, temps: [40, 45, 50], battery_mv: 1, mode: "heating", fault: "none" }]);
    expect(s.curve[0].padTemp).toBeCloseTo(45);
  });

  it("flags stale data after 3 s without telemetry", () => {
    let s = readySession();
    s = reduce(s, { kind: "event", event: telemetry(1, 40), nowMs: 10_000 });
    s = reduce(s, { kind: "tick", nowMs: 12_900 });
    expect(s.stale).toBe(false);
    s = reduce(s, { kind: "tick", nowMs: 13_100 });
    expect(s.stale).toBe(true);
    s = reduce(s, { kind: "event", event: telemetry(2, 40), nowMs: 13_200 });
    expect(s.stale).toBe(false);
  });
});

describe("fault banner", () => {
  it("raises on a fault event and locks controls until the device is reset", () => {
    let s = readySession();
    s = feed(s, [{ ev: "fault", code: "over_temp", t: 120 }]);
    expect(s.faultBanner).toEqual({ code: "over_temp", t: 120 });
    expect(s.mode).toBe("fault");
    expect(controlsEnabled(s)).toBe(false);

    // acknowledging hides the banner but the latched fault still locks
    s = reduce(s, { kind: "ack_fault" });
    expect(s.faultBanner).toBeNull();
    expect(controlsEnabled(s)).toBe(false);

    // telemetry still carrying the fault must not re-raise the acked banner
    s = feed(s, [telemetry(121, 50, "fault", "over_temp")]);
    expect(s.faultBanner).toBeNull();

    // after a power cycle the device reports a clean mode again
    s = feed(s, [telemetry(125, 40, "unpaired", "none")]);
    s = feed(s, [{ ev: "auth_result", ok: true }, telemetry(126, 40, "idle")]);
    expect(controlsEnabled(s)).toBe(true);

    // and a NEW fault raises a fresh banner
    s = feed(s, [telemetry(130, 50, "fault", "link_lost")]);
    expect(s.faultBanner).toEqual({ code: "link_lost", t: 130 });
  });

  it("telemetry fault codes raise the banner for late joiners", () => {
    let s = readySession();
    s = feed(s, [telemetry(7, 45, "fault", "zone_divergence")]);
    expect(s.faultBanner).toEqual({ code: "zone_divergence", t: 7 });
  });
});
