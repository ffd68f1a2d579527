/**
 * The twin-service wire schema: newline-delimited JSON, verbatim.
 * Browser-safe (no node imports); shared by the bridge, the UI, and tests.
 */
/** Accumulates raw chunks and yields complete JSON lines. */
export class LineSplitter {
    buffer = "";
    push(chunk) {
        this.buffer += chunk;
        const lines = this.buffer.split("\n");
        this.buffer = lines.pop() ?? "";
        return lines.filter((l) => l.trim().length > 0);
    }
}
export function parseEvent(line) {
    try {
        const obj = JSON.parse(line);
        if (obj && typeof obj === "object" && typeof obj.ev === "string") {
            return obj;
        }
    }
    catch {
        /* malformed lines are skipped, per the UI contract */
    }
    return null;
}
export function encodeCommand(command) {
    return JSON.stringify(command) + "\n";
}
