/**
 * UI host: serves the static browser app and bridges WebSocket clients to
 * the twin service's TCP socket. The bridge is transport-only -- every
 * line of the service schema passes through verbatim in both directions,
 * and closing either side closes the other (so closing the browser tab
 * starves the firmware watchdog exactly like the phone app dying).
 *
 * Usage: node dist/server.js [--twin host:port] [--listen port]
 * MIMA_TWIN_ADDR overrides the default twin address (127.0.0.1:8777).
 */

import * as fs from "node:fs";
import * as http from "node:http";
import * as net from "node:net";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { WebSocketServer, WebSocket } from "ws";
import { LineSplitter } from "./protocol.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const PUBLIC_DIR = path.join(HERE, "..", "public");

const MIME: Record<string, string> = {
  ".html": "text/html",
  ".js": "text/javascript",
  ".css": "text/css",
  ".svg": "image/svg+xml",
};

function parseArgs(argv: string[]): { twin: { host: string; port: number }; listen: number } {
  const defaults = process.env.MIMA_TWIN_ADDR ?? "127.0.0.1:8777";
  let twin = defaults;
  let listen = 8780;
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--twin" && argv[i + 1]) twin = argv[++i];
    else if (argv[i] === "--listen" && argv[i + 1]) listen = Number(argv[++i]);
  }
  const sep = twin.lastIndexOf(":");
  return {
    twin: { host: twin.slice(0, sep), port: Number(twin.slice(sep + 1)) },
    listen,
  };
}

function serveStatic(req: http.IncomingMessage, res: http.ServerResponse): void {
  const url = (req.url ?? "/").split("?")[0];
  const rel = url === "/" ? "index.html" : url.slice(1);
  const file = path.normalize(path.join(PUBLIC_DIR, rel));
  if (!file.startsWith(PUBLIC_DIR) || !fs.existsSync(file) || fs.statSync(file).isDirectory()) {
    res.writeHead(404).end("not found");
    return;
  }
  res.writeHead(200, { "content-type": MIME[path.extname(file)] ?? "application/octet-stream" });
  fs.createReadStream(file).pipe(res);
}

export function startBridge(
  twin: { host: string; port: number },
  listenPort: number,
): Promise<http.Server> {
  const server = http.createServer(serveStatic);
  const wss = new WebSocketServer({ server, path: "/ws" });

  wss.on("connection", (ws: WebSocket) => {
    const upstream = net.createConnection({ host: twin.host, port: twin.port });
    upstream.setEncoding("utf8");
    const splitter = new LineSplitter();

    upstream.on("data", (chunk: string) => {
      for (const line of splitter.push(chunk)) {
        if (ws.readyState === WebSocket.OPEN) ws.send(line);
      }
    });
    upstream.on("close", () => ws.close());
    upstream.on("error", () => ws.close());

    ws.on("message", (data) => {
      upstream.write(data.toString().trim() + "\n");
    });
    ws.on("close", () => upstream.destroy());
    ws.on("error", () => upstream.destroy());
  });

  return new Promise((resolve) => server.listen(listenPort, () => resolve(server)));
}

const isMain = process.argv[1] && path.resolve(process.argv[1]) === fileURLToPath(import.meta.url);
if (isMain) {
  const { twin, listen } = parseArgs(process.argv.slice(2));
  startBridge(twin, listen).then(() => {
    console.log(`ui on http://127.0.0.1:${listen} -> twin at ${twin.host}:${twin.port}`);
  });
}
