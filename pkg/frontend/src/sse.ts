// Server-sent event handling over fetch streaming. A hand-rolled parser keeps
// the framing testable and works identically in the browser and in node.

import type { GatewayEvent } from "./types.js";

export interface SseFrame {
  id?: string;
  event?: string;
  data: string;
}

/** Incremental parser for the text/event-stream framing. */
export class SseParser {
  private buffer = "";

  /** Feed a chunk; returns any frames completed by it. Comments are dropped. */
  push(chunk: string): SseFrame[] {
    this.buffer += chunk;
    const frames: SseFrame[] = [];
    let index: number;
    while ((index = this.buffer.indexOf("\n\n")) >= 0) {
      const block = this.buffer.slice(0, index);
      this.buffer = this.buffer.slice(index + 2);
      const frame = parseBlock(block);
      if (frame !== null) frames.push(frame);
    }
    return frames;
  }
}

function parseBlock(block: string): SseFrame | null {
  const frame: SseFrame = { data: "" };
  const dataLines: string[] = [];
  let sawField = false;
  for (const line of block.split("\n")) {
    if (line === "" || line.startsWith(":")) continue; // comment / keepalive
    const colon = line.indexOf(":");
    const field = colon < 0 ? line : line.slice(0, colon);
    let value = colon < 0 ? "" : line.slice(colon + 1);
    if (value.startsWith(" ")) value = value.slice(1);
    if (field === "id") frame.id = value;
    else if (field === "event") frame.event = value;
    else if (field === "data") dataLines.push(value);
    else continue;
    sawField = true;
  }
  if (!sawField) return null;
  frame.data = dataLines.join("\n");
  return frame;
}

export function frameToEvent(frame: SseFrame): GatewayEvent {
  return {
    seq: Number(frame.id ?? 0),
    kind: frame.event ?? "message",
    payload: frame.data ? JSON.parse(frame.data) : {},
  };
}

export interface StreamHandle {
  /** Resolves when the stream ends or is aborted. */
  done: Promise<void>;
  abort: () => void;
}

/**
 * Open the event stream and deliver each gateway event in order. The caller
 * reconnects with `after` set to the last seen seq to resynchronize.
 */
export function openEventStream(
  url: string,
  onEvent: (event: GatewayEvent) => void,
  onStatus?: (connected: boolean) => void,
): StreamHandle {
  const controller = new AbortController();
  const done = (async () => {
    const resp = await fetch(url, {
      signal: controller.signal,
      headers: { accept: "text/event-stream" },
    });
    if (!resp.ok || resp.body === null) {
      throw new Error(`event stream failed: HTTP ${resp.status}`);
    }
    onStatus?.(true);
    const parser = new SseParser();
    const decoder = new TextDecoder();
    const reader = resp.body.getReader();
    try {
      for (;;) {
        const { done: finished, value } = await reader.read();
        if (finished) break;
        for (const frame of parser.push(decoder.decode(value, { stream: true }))) {
          onEvent(frameToEvent(frame));
        }
      }
    } finally {
      onStatus?.(false);
      reader.releaseLock();
    }
  })();
  return {
    done: done.catch((err) => {
      onStatus?.(false);
      if (controller.signal.aborted) return;
      throw err;
    }),
    abort: () => controller.abort(),
  };
}
