// Spacebar -> BlinkIn bridge with refractory suppression mirroring the
// engine's debounce: a held key or a too-quick re-press emits nothing.

import type { BlinkIn } from "./protocol.js";

export class KeyBridge {
  private lastBlinkMs: number | null = null;

  constructor(
    private readonly refractoryMs: number = 200,
    private readonly key: string = " ",
  ) {}

  /** Returns the BlinkIn to send, or null when the press is suppressed. */
  onKeyDown(key: string, repeat: boolean, nowMs: number): BlinkIn | null {
    if (key !== this.key || repeat) {
      return null;
    }
    if (this.lastBlinkMs !== null && nowMs - this.lastBlinkMs < this.refractoryMs) {
      return null;
    }
    this.lastBlinkMs = nowMs;
    return { kind: "BlinkIn", t_ms: Math.round(nowMs) };
  }

  reset(): void {
    this.lastBlinkMs = null;
  }
}
