// Engine connection: NDJSON stream reader plus the input POST channel.

import {
  ClientMessage,
  EngineMessage,
  encodeClientMessage,
  parseEngineMessage,
} from "./protocol.js";

export interface SessionInfo {
  screen: [number, number, number, number];
  interval_ms: number;
  max_depth: number;
  step_px: number;
  actions: string[];
  directions: [number, number][];
  targets: [number, number, number, number][];
  virtual_time: boolean;
  source: string;
}

export async function fetchConfig(baseUrl: string): Promise<SessionInfo> {
  const resp = await fetch(`${baseUrl}/session/config`);
  if (!resp.ok) {
    throw new Error(`config fetch failed: ${resp.status}`);
  }
  return (await resp.json()) as SessionInfo;
}

/**
 * Read the session stream, invoking onMessage for every line in order.
 * Resolves when the server closes the stream (session over).
 */
export async function readStream(
  baseUrl: string,
  onMessage: (msg: EngineMessage) => void,
): Promise<void> {
  const resp = await fetch(`${baseUrl}/session/stream`);
  if (!resp.ok || !resp.body) {
    throw new Error(`stream failed: ${resp.status}`);
  }
  const reader = resp.body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  for (;;) {
    const { value, done } = await reader.read();
    if (done) {
      break;
    }
    buffer += decoder.decode(value, { stream: true });
    let nl;
    while ((nl = buffer.indexOf("\n")) >= 0) {
      const line = buffer.slice(0, nl).trim();
      buffer = buffer.slice(nl + 1);
      if (line) {
        onMessage(parseEngineMessage(line));
      }
    }
  }
  const tail = buffer.trim();
  if (tail) {
    onMessage(parseEngineMessage(tail));
  }
}

export async function sendInput(
  baseUrl: string,
  messages: ClientMessage[],
): Promise<number> {
  const body = messages.map(encodeClientMessage).join("\n") + "\n";
  const resp = await fetch(`${baseUrl}/session/input`, {
    method: "POST",
    headers: { "Content-Type": "application/x-ndjson" },
    body,
  });
  if (!resp.ok) {
    throw new Error(`input rejected: ${resp.status}`);
  }
  const reply = (await resp.json()) as { accepted: number };
  return reply.accepted;
}
