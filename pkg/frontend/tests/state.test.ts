import { describe, expect, it } from "vitest";

import type { OutputMessage, ServerMessage } from "../src/protocol.js";
import { applyMessage, initialState, rowsOf } from "../src/state.js";

const output = (
  name: string,
  timestep: number,
  rows: Record<string, unknown>[],
): OutputMessage => ({ type: "output", name, timestep, rows });

describe("applyMessage", () => {
  it("starts empty and disconnected", () => {
    const s = initialState();
    expect(s.connected).toBe(false);
    expect(s.timestep).toBe(0);
    expect(rowsOf(s, "regionSelection")).toEqual([]);
  });

  it("catalog marks the connection live", () => {
    const s = applyMessage(initialState(), {
      type: "catalog",
      inputs: [],
      outputs: [],
    });
    expect(s.connected).toBe(true);
  });

  it("output frames replace rows wholesale and advance the timestep", () => {
    let s = initialState();
    s = applyMessage(s, output("sel", 1, [{ id: 1 }]));
    s = applyMessage(s, output("sel", 2, [{ id: 2 }]));
    expect(rowsOf(s, "sel")).toEqual([{ id: 2 }]);
    expect(s.timestep).toBe(2);
  });

  it("replaying the same frame is a no-op", () => {
    const frame = output("sel", 3, [{ id: 1 }, { id: 2 }]);
    const once = applyMessage(initialState(), frame);
    const twice = applyMessage(once, frame);
    expect(twice).toEqual(once);
  });

  it("never invents state: the previous state object is untouched", () => {
    const before = applyMessage(initialState(), output("sel", 1, [{ id: 1 }]));
    applyMessage(before, output("sel", 2, [{ id: 2 }]));
    expect(rowsOf(before, "sel")).toEqual([{ id: 1 }]);
    expect(before.timestep).toBe(1);
  });

  it("streamed points without a brush leave the bars empty", () => {
    let s = initialState();
    s = applyMessage(s, output("allTweets", 1, [{ tweetId: 1 }]));
    s = applyMessage(s, output("allTweets", 2, [{ tweetId: 1 }, { tweetId: 2 }]));
    expect(rowsOf(s, "allTweets")).toHaveLength(2);
    expect(rowsOf(s, "hourDistOutput")).toEqual([]);
    expect(rowsOf(s, "regionSelection")).toEqual([]);
  });

  it("rejections count and surface the violation text", () => {
    const s = applyMessage(initialState(), {
      type: "rejected",
      input: "tweetEvent",
      violations: ["tweetEvent: NOT NULL tweetId violated by row (...)"],
    } as ServerMessage);
    expect(s.rejections).toBe(1);
    expect(s.lastNotice).toContain("NOT NULL tweetId");
  });

  it("errors surface without touching rows", () => {
    let s = applyMessage(initialState(), output("sel", 1, [{ id: 1 }]));
    s = applyMessage(s, { type: "error", message: "malformed JSON: x" });
    expect(s.lastNotice).toBe("malformed JSON: x");
    expect(rowsOf(s, "sel")).toEqual([{ id: 1 }]);
  });
});
