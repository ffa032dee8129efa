/** Server-sent-events parsing and subscription.
 *
 * The parser is a pure incremental chunk consumer so it can be unit-tested
 * and reused in node; the subscriber streams a fetch response body through
 * it and reconnects with exponential backoff until `done` arrives.
 */

export interface SseMessage {
  event: string;
  data: string;
}

/** Incremental SSE frame parser; feed it arbitrary chunk boundaries. */
export class SseParser {
  private buffer = "";

  /** Consume a chunk; returns completed messages in order. */
  push(chunk: string): SseMessage[] {
    this.buffer += chunk;
    const out: SseMessage[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf("\n\n")) >= 0) {
      const frame = this.buffer.slice(0, idx);
      this.buffer = this.buffer.slice(idx + 2);
      const msg = parseFrame(frame);
      if (msg !== null) out.push(msg);
    }
    return out;
  }
}

function parseFrame(frame: string): SseMessage | null {
  let event = "message";
  const data: string[] = [];
  for (const line of frame.split("\n")) {
    if (line.startsWith(":")) continue; // comment / keepalive
    if (line.startsWith("event:")) event = line.slice(6).trim();
    else if (line.startsWith("data:")) data.push(line.slice(5).trimStart());
  }
  if (data.length === 0) return null;
  return { event, data: data.join("\n") };
}

export interface StreamOptions {
  baseUrl: string;
  token: string;
  runId: string;
  speed: number;
  onMessage: (msg: SseMessage) => void;
  onStatus?: (status: string) => void;
  maxRetries?: number;
}

/** Stream one run's trace; resolves once the server sends `done`. */
export async function streamRun(opts: StreamOptions): Promise<void> {
  const maxRetries = opts.maxRetries ?? 5;
  let attempt = 0;
  for (;;) {
    try {
      const url =
        `${opts.baseUrl}/api/stream/runs/${opts.runId}?speed=${opts.speed}`;
      const resp = await fetch(url, {
        headers: { Authorization: `Bearer ${opts.token}` },
      });
      if (!resp.ok || resp.body === null) {
        throw new Error(`stream failed: HTTP ${resp.status}`);
      }
      opts.onStatus?.("streaming");
      const reader = resp.body.getReader();
      const decoder = new TextDecoder();
      const parser = new SseParser();
      for (;;) {
        const { value, done } = await reader.read();
        if (value !== undefined) {
          for (const msg of parser.push(decoder.decode(value, { stream: true }))) {
            opts.onMessage(msg);
            if (msg.event === "done") {
              opts.onStatus?.("done");
              return;
            }
          }
        }
        if (done) break;
      }
      opts.onStatus?.("disconnected");
      return; // stream ended without done: treat as finished
    } catch (err) {
      attempt += 1;
      if (attempt > maxRetries) throw err;
      const delayMs = Math.min(500 * 2 ** attempt, 10_000);
      opts.onStatus?.(`reconnecting (attempt ${attempt})`);
      await new Promise((resolve) => setTimeout(resolve, delayMs));
    }
  }
}
