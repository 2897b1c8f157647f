import { describe, expect, it } from "vitest";

import {
  encodeInput,
  inputMessage,
  parseServerMessage,
  ProtocolError,
} from "../src/protocol.js";

describe("parseServerMessage", () => {
  it("accepts a catalog frame", () => {
    const msg = parseServerMessage(
      '{"type":"catalog","inputs":[{"name":"t","columns":[]}],"outputs":[]}',
    );
    expect(msg.type).toBe("catalog");
    if (msg.type === "catalog") {
      expect(msg.inputs[0]?.name).toBe("t");
    }
  });

  it("accepts an output frame", () => {
    const msg = parseServerMessage(
      '{"type":"output","name":"sel","timestep":3,"rows":[{"id":1}]}',
    );
    expect(msg).toEqual({
      type: "output",
      name: "sel",
      timestep: 3,
      rows: [{ id: 1 }],
    });
  });

  it("accepts rejected and error frames", () => {
    expect(
      parseServerMessage('{"type":"rejected","input":"t","violations":["x"]}'),
    ).toMatchObject({ type: "rejected", input: "t" });
    expect(parseServerMessage('{"type":"error","message":"nope"}')).toEqual({
      type: "error",
      message: "nope",
    });
  });

  it("rejects non-JSON, non-objects, and unknown types", () => {
    expect(() => parseServerMessage("{oops")).toThrow(ProtocolError);
    expect(() => parseServerMessage("[1,2]")).toThrow(ProtocolError);
    expect(() => parseServerMessage('{"type":"input"}')).toThrow(
      ProtocolError,
    );
  });

  it("rejects frames with missing fields", () => {
    expect(() =>
      parseServerMessage('{"type":"output","name":"sel"}'),
    ).toThrow("output frame");
    expect(() => parseServerMessage('{"type":"catalog"}')).toThrow(
      "catalog frame",
    );
  });
});

describe("encodeInput", () => {
  it("produces the exact wire shape", () => {
    const text = encodeInput(inputMessage("brushEvent", { latMin: 0 }));
    expect(text).toBe('{"type":"input","name":"brushEvent","values":{"latMin":0}}');
  });

  it("round trips through JSON", () => {
    const msg = inputMessage("tweetEvent", { tweetId: 7, lat: 1.5 });
    expect(JSON.parse(encodeInput(msg))).toEqual(msg);
  });
});
