/**
 * The twin-service wire schema: newline-delimited JSON, verbatim.
 * Browser-safe (no node imports); shared by the bridge, the UI, and tests.
 */

export type LevelName = "off" | "low" | "medium" | "high";

export type TwinCommand =
  | { cmd: "auth"; password: string }
  | { cmd: "set_level"; level: LevelName }
  | { cmd: "off" }
  | { cmd: "reset" };

export interface TelemetryEvent {
  ev: "telemetry";
  t: number;
  temps: [number, number, number];
  battery_mv: number;
  mode: string;
  fault: string;
}

export type TwinEvent =
  | { ev: "hello"; name: string; accel: number }
  | { ev: "auth_result"; ok: boolean; error?: string }
  | TelemetryEvent
  | { ev: "mode"; mode: string; target: number | null }
  | { ev: "fault"; code: string; t: number }
  | { ev: "ack"; cmd: string }
  | { ev: "error"; message: string }
  | { ev: "shutdown" };

/** Accumulates raw chunks and yields complete JSON lines. */
export class LineSplitter {
  private buffer = "";

  push(chunk: string): string[] {
    this.buffer += chunk;
    const lines = this.buffer.split("\n");
    this.buffer = lines.pop() ?? "";
    return lines.filter((l) => l.trim().length > 0);
  }
}

export function parseEvent(line: string): TwinEvent | null {
  try {
    const obj = JSON.parse(line);
    if (obj && typeof obj === "object" && typeof obj.ev === "string") {
      return obj as TwinEvent;
    }
  } catch {
    /* malformed lines are skipped, per the UI contract */
  }
  return null;
}

export function encodeCommand(command: TwinCommand): string {
  return JSON.stringify(command) + "\n";
}
