/**
 * Browser companion app. One WebSocket to the bridge, one pure session
 * reducer, one render pass per state change. The mode shown is always the
 * device-confirmed one from the event stream.
 */
import { encodeCommand, parseEvent } from "../src/protocol.js";
import { controlsEnabled, initialSession, reduce, } from "../src/session.js";
const LEVELS = ["off", "low", "medium", "high"];
const TARGETS = { off: null, low: 40, medium: 45, high: 50 };
let state = initialSession();
let socket = null;
let password = "";
const $ = (id) => document.getElementById(id);
function dispatch(action) {
    state = reduce(state, action);
    render();
}
function sendCommand(command) {
    if (socket && socket.readyState === WebSocket.OPEN) {
        socket.send(encodeCommand(command).trim());
    }
}
function connect() {
    password = $("password").value;
    dispatch({ kind: "connect" });
    socket = new WebSocket(`ws://${location.host}/ws`);
    socket.onopen = () => {
        dispatch({ kind: "socket_open" });
        sendCommand({ cmd: "auth", password });
    };
    socket.onmessage = (msg) => {
        const event = parseEvent(String(msg.data));
        if (event)
            dispatch({ kind: "event", event, nowMs: Date.now() });
    };
    socket.onclose = () => dispatch({ kind: "socket_closed" });
    socket.onerror = () => dispatch({ kind: "socket_closed" });
}
function disconnect() {
    socket?.close();
    socket = null;
}
function powerCycle() {
    // toggle the simulated hardware switch, then pair again
    sendCommand({ cmd: "reset" });
    sendCommand({ cmd: "auth", password });
}
function drawCurve() {
    const canvas = $("curve");
    const ctx = canvas.getContext("2d");
    const { width: w, height: h } = canvas;
    ctx.clearRect(0, 0, w, h);
    const points = state.curve;
    if (points.length < 2)
        return;
    const t0 = points[0].t;
    const t1 = points[points.length - 1].t;
    let lo = Math.min(...points.map((p) => p.padTemp));
    let hi = Math.max(...points.map((p) => p.padTemp));
    if (state.target !== null) {
        lo = Math.min(lo, state.target);
        hi = Math.max(hi, state.target);
    }
    const pad = Math.max(1, (hi - lo) * 0.1);
    lo -= pad;
    hi += pad;
    const x = (t) => ((t - t0) / Math.max(1e-9, t1 - t0)) * (w - 44) + 40;
    const y = (v) => h - 18 - ((v - lo) / (hi - lo)) * (h - 30);
    ctx.strokeStyle = "#2d3748";
    ctx.fillStyle = "#718096";
    ctx.font = "10px system-ui";
    for (const v of [lo + pad, hi - pad]) {
        ctx.beginPath();
        ctx.moveTo(40, y(v));
        ctx.lineTo(w - 4, y(v));
        ctx.stroke();
        ctx.fillText(v.toFixed(1), 4, y(v) + 3);
    }
    ctx.fillText(`${t0.toFixed(0)}s`, 40, h - 4);
    ctx.fillText(`${t1.toFixed(0)}s`, w - 40, h - 4);
    if (state.target !== null) {
        ctx.strokeStyle = "#d69e2e";
        ctx.setLineDash([4, 4]);
        ctx.beginPath();
        ctx.moveTo(40, y(state.target));
        ctx.lineTo(w - 4, y(state.target));
        ctx.stroke();
        ctx.setLineDash([]);
    }
    ctx.strokeStyle = "#63b3ed";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    points.forEach((p, i) => (i === 0 ? ctx.moveTo(x(p.t), y(p.padTemp)) : ctx.lineTo(x(p.t), y(p.padTemp))));
    ctx.stroke();
    ctx.lineWidth = 1;
}
function render() {
    const badge = $("conn");
    badge.textContent = state.stale ? `${state.connection} (stale)` : state.connection;
    badge.className = `badge ${state.connection}${state.stale ? " stale" : ""}`;
    $("service-name").textContent = state.serviceName ?? "–";
    const authMsg = $("auth-msg");
    authMsg.textContent = state.authError ? `pairing rejected: ${state.authError}` : "";
    $("connect").toggleAttribute("disabled", state.connection !== "disconnected");
    $("disconnect").toggleAttribute("disabled", state.connection === "disconnected");
    const enabled = controlsEnabled(state);
    for (const level of LEVELS) {
        const button = $(`level-${level}`);
        button.toggleAttribute("disabled", !enabled);
        button.classList.toggle("selected", state.selectedLevel === level);
    }
    $("reset").toggleAttribute("disabled", state.connection !== "ready");
    $("mode").textContent = state.mode ?? "–";
    $("target").textContent = state.target !== null ? `${state.target.toFixed(0)} °C` : "–";
    const latest = state.latest;
    for (const i of [0, 1, 2]) {
        $(`zone${i}`).textContent = latest ? `${latest.temps[i].toFixed(2)} °C` : "–";
    }
    $("battery").textContent = latest ? `${(latest.battery_mv / 1000).toFixed(2)} V` : "–";
    const banner = $("fault-banner");
    if (state.faultBanner) {
        banner.classList.remove("hidden");
        $("fault-text").textContent =
            `FAULT ${state.faultBanner.code} at t=${state.faultBanner.t.toFixed(0)}s: ` +
                "heaters off; power-cycle to recover";
    }
    else {
        banner.classList.add("hidden");
    }
    drawCurve();
}
function setLevel(level) {
    if (!controlsEnabled(state))
        return;
    dispatch({ kind: "select_level", level });
    sendCommand(level === "off" ? { cmd: "off" } : { cmd: "set_level", level });
}
window.addEventListener("DOMContentLoaded", () => {
    $("connect").addEventListener("click", connect);
    $("disconnect").addEventListener("click", disconnect);
    $("reset").addEventListener("click", powerCycle);
    $("ack-fault").addEventListener("click", () => dispatch({ kind: "ack_fault" }));
    for (const level of LEVELS) {
        $(`level-${level}`).addEventListener("click", () => setLevel(level));
    }
    setInterval(() => dispatch({ kind: "tick", nowMs: Date.now() }), 500);
    render();
});
