/**
 * Pure UI session state machine.
 *
 * Everything the screen shows derives from this reducer, which makes the
 * invariants testable without a browser:
 *
 *  - level controls are enabled only when the connection is ready and the
 *    device is not in a latched fault;
 *  - the displayed mode is always device-confirmed (telemetry/mode events),
 *    never the optimistic button click;
 *  - the fault banner stays up from the fault event until acknowledged;
 *  - the curve buffer keeps the last 900 telemetry points;
 *  - telemetry silence longer than 3 s flips the stale indicator.
 */
export const CURVE_CAPACITY = 900;
export const STALE_AFTER_MS = 3000;
export function initialSession() {
    return {
        connection: "disconnected",
        authError: null,
        mode: null,
        target: null,
        latest: null,
        lastTelemetryWallMs: null,
        stale: false,
        selectedLevel: null,
        faultBanner: null,
        ackedFault: null,
        curve: [],
        serviceName: null,
    };
}
/** Level buttons live only on a ready, fault-free connection. */
export function controlsEnabled(state) {
    return state.connection === "ready" && state.mode !== "fault";
}
export function padTemp(event) {
    return (event.temps[0] + event.temps[1] + event.temps[2]) / 3;
}
function raiseBanner(state, code, t) {
    if (state.faultBanner !== null || state.ackedFault === code) {
        return state;
    }
    return { ...state, faultBanner: { code, t } };
}
function applyTelemetry(state, event, nowMs) {
    const point = { t: event.t, padTemp: padTemp(event), temps: event.temps };
    const curve = [...state.curve, point].slice(-CURVE_CAPACITY);
    let next = {
        ...state,
        latest: event,
        lastTelemetryWallMs: nowMs,
        stale: false,
        mode: event.mode,
        curve,
    };
    if (event.fault !== "none") {
        next = raiseBanner(next, event.fault, event.t);
    }
    else if (next.ackedFault !== null) {
        next = { ...next, ackedFault: null }; // fault cleared device-side
    }
    return next;
}
export function reduce(state, action) {
    switch (action.kind) {
        case "connect":
            return { ...initialSession(), connection: "connecting" };
        case "socket_open":
            return { ...state, connection: "unauthenticated", authError: null };
        case "socket_closed":
            return { ...state, connection: "disconnected", stale: false };
        case "select_level":
            // remembered for the button highlight; the mode shown still waits
            // for the device to confirm
            return controlsEnabled(state) ? { ...state, selectedLevel: action.level } : state;
        case "ack_fault":
            return state.faultBanner === null
                ? state
                : { ...state, faultBanner: null, ackedFault: state.faultBanner.code };
        case "tick": {
            const last = state.lastTelemetryWallMs;
            const stale = state.connection === "ready" && last !== null && action.nowMs - last > STALE_AFTER_MS;
            return stale === state.stale ? state : { ...state, stale };
        }
        case "event":
            break;
    }
    const event = action.event;
    switch (event.ev) {
        case "hello":
            return { ...state, serviceName: event.name };
        case "auth_result":
            if (event.ok) {
                return { ...state, connection: "ready", authError: null };
            }
            return { ...state, connection: "unauthenticated", authError: event.error ?? "rejected" };
        case "telemetry":
            return applyTelemetry(state, event, action.nowMs);
        case "mode":
            return { ...state, mode: event.mode, target: event.target };
        case "fault":
            return raiseBanner({ ...state, mode: "fault" }, event.code, event.t);
        case "shutdown":
            return { ...state, connection: "disconnected" };
        case "ack":
        case "error":
            return state;
    }
}
