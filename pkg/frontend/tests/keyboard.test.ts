import { describe, expect, it } from "vitest";

import { keyToAction, shouldIgnore } from "../src/keyboard.js";

describe("keyToAction", () => {
  it("verdict and submit keys", () => {
    expect(keyToAction("c", 4)).toEqual({ kind: "verdict-correct" });
    expect(keyToAction("x", 4)).toEqual({ kind: "verdict-incorrect" });
    expect(keyToAction("Enter", 4)).toEqual({ kind: "submit" });
  });

  it("digits map to zero-based labels within the schema", () => {
    expect(keyToAction("1", 4)).toEqual({ kind: "pick-label", label: 0 });
    expect(keyToAction("4", 4)).toEqual({ kind: "pick-label", label: 3 });
    expect(keyToAction("5", 4)).toBeNull();
    expect(keyToAction("0", 4)).toBeNull();
  });

  it("navigation keys", () => {
    expect(keyToAction("j", 4)).toEqual({ kind: "move", delta: 1 });
    expect(keyToAction("ArrowDown", 4)).toEqual({ kind: "move", delta: 1 });
    expect(keyToAction("k", 4)).toEqual({ kind: "move", delta: -1 });
    expect(keyToAction("ArrowUp", 4)).toEqual({ kind: "move", delta: -1 });
  });

  it("anything else is ignored", () => {
    expect(keyToAction("q", 4)).toBeNull();
    expect(keyToAction(" ", 4)).toBeNull();
  });
});

describe("shouldIgnore", () => {
  function event(overrides: Partial<KeyboardEvent> & { tagName?: string }): KeyboardEvent {
    const { tagName, ...rest } = overrides;
    return {
      ctrlKey: false,
      metaKey: false,
      altKey: false,
      target: tagName ? { tagName } : null,
      ...rest,
    } as unknown as KeyboardEvent;
  }

  it("skips modifier chords", () => {
    expect(shouldIgnore(event({ ctrlKey: true }))).toBe(true);
    expect(shouldIgnore(event({ metaKey: true }))).toBe(true);
  });

  it("skips typing contexts", () => {
    expect(shouldIgnore(event({ tagName: "INPUT" }))).toBe(true);
    expect(shouldIgnore(event({ tagName: "TEXTAREA" }))).toBe(true);
  });

  it("handles plain keys elsewhere", () => {
    expect(shouldIgnore(event({ tagName: "BODY" }))).toBe(false);
    expect(shouldIgnore(event({}))).toBe(false);
  });
});
