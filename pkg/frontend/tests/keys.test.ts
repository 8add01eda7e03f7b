import { describe, expect, it } from "vitest";

import { KeyBridge } from "../src/keys.js";

describe("KeyBridge", () => {
  it("emits exactly one BlinkIn per distinct press", () => {
    const bridge = new KeyBridge(200);
    expect(bridge.onKeyDown(" ", false, 1000)).toEqual({ kind: "BlinkIn", t_ms: 1000 });
    expect(bridge.onKeyDown(" ", false, 1500)).toEqual({ kind: "BlinkIn", t_ms: 1500 });
  });

  it("suppresses OS key-repeat events", () => {
    const bridge = new KeyBridge(200);
    expect(bridge.onKeyDown(" ", false, 0)).not.toBeNull();
    expect(bridge.onKeyDown(" ", true, 40)).toBeNull();
    expect(bridge.onKeyDown(" ", true, 80)).toBeNull();
  });

  it("suppresses re-presses inside the refractory window", () => {
    const bridge = new KeyBridge(200);
    expect(bridge.onKeyDown(" ", false, 0)).not.toBeNull();
    expect(bridge.onKeyDown(" ", false, 199)).toBeNull();
    expect(bridge.onKeyDown(" ", false, 200)).not.toBeNull();
  });

  it("ignores other keys", () => {
    const bridge = new KeyBridge(200);
    expect(bridge.onKeyDown("a", false, 0)).toBeNull();
    expect(bridge.onKeyDown("Enter", false, 10)).toBeNull();
  });
});
