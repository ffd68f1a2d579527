/**
 * Node-side TCP client for the twin service (line-delimited JSON).
 * Used by the WebSocket bridge and by the end-to-end tests.
 */

import * as net from "node:net";
import { LineSplitter, encodeCommand, parseEvent, type TwinCommand, type TwinEvent } from "./protocol.js";

export interface TwinClientHooks {
  onEvent?: (event: TwinEvent) => void;
  onClose?: () => void;
  onError?: (err: Error) => void;
}

export class TwinClient {
  private socket: net.Socket;
  private splitter = new LineSplitter();
  readonly events: TwinEvent[] = [];

  constructor(host: string, port: number, hooks: TwinClientHooks = {}) {
    this.socket = net.createConnection({ host, port });
    this.socket.setEncoding("utf8");
    this.socket.on("data", (chunk: string) => {
      for (const line of this.splitter.push(chunk)) {
        const event = parseEvent(line);
        if (event) {
          this.events.push(event);
          hooks.onEvent?.(event);
        }
      }
    });
    this.socket.on("close", () => hooks.onClose?.());
    this.socket.on("error", (err) => hooks.onError?.(err));
  }

  waitConnected(): Promise<void> {
    return new Promise((resolve, reject) => {
      this.socket.once("connect", resolve);
      this.socket.once("error", reject);
    });
  }

  send(command: TwinCommand): void {
    this.socket.write(encodeCommand(command));
  }

  /** Next event matching the predicate (events already seen count). */
  waitFor(predicate: (event: TwinEvent) => boolean, timeoutMs = 5000): Promise<TwinEvent> {
    const seen = this.events.find(predicate);
    if (seen) return Promise.resolve(seen);
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error(`no matching event within ${timeoutMs} ms`)),
        timeoutMs,
      );
      const poll = setInterval(() => {
        const hit = this.events.find(predicate);
        if (hit) {
          clearTimeout(timer);
          clearInterval(poll);
          resolve(hit);
        }
      }, 5);
    });
  }

  destroy(): void {
    this.socket.destroy(); // hard close: the phone vanishing, not a polite FIN exchange
  }

  end(): void {
    this.socket.end();
  }
}
