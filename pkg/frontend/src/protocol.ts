// Wire protocol of the engine service: one JSON object per text frame.
// The server speaks catalog/output/rejected/error; the client only ever
// sends input messages.

export interface ColumnSpec {
  name: string;
  type: string;
}

export interface TableSpec {
  name: string;
  columns: ColumnSpec[];
}

export type Row = Record<string, unknown>;

export interface CatalogMessage {
  type: "catalog";
  inputs: TableSpec[];
  outputs: TableSpec[];
}

export interface OutputMessage {
  type: "output";
  name: string;
  timestep: number;
  rows: Row[];
}

export interface RejectedMessage {
  type: "rejected";
  input: string;
  violations: string[];
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage =
  | CatalogMessage
  | OutputMessage
  | RejectedMessage
  | ErrorMessage;

export interface InputMessage {
  type: "input";
  name: string;
  values: Record<string, unknown>;
}

export class ProtocolError extends Error {}

function fail(why: string): never {
  throw new ProtocolError(why);
}

export function parseServerMessage(text: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    fail(`frame is not JSON: ${text.slice(0, 80)}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    fail("frame is not an object");
  }
  const msg = raw as Record<string, unknown>;
  switch (msg.type) {
    case "catalog":
      if (!Array.isArray(msg.inputs) || !Array.isArray(msg.outputs)) {
        fail("catalog frame missing inputs/outputs");
      }
      return msg as unknown as CatalogMessage;
    case "output":
      if (typeof msg.name !== "string" || typeof msg.timestep !== "number" ||
          !Array.isArray(msg.rows)) {
        fail("output frame missing name/timestep/rows");
      }
      return msg as unknown as OutputMessage;
    case "rejected":
      if (typeof msg.input !== "string" || !Array.isArray(msg.violations)) {
        fail("rejected frame missing input/violations");
      }
      return msg as unknown as RejectedMessage;
    case "error":
      if (typeof msg.message !== "string") {
        fail("error frame missing message");
      }
      return msg as unknown as ErrorMessage;
    default:
      fail(`unknown frame type ${String(msg.type)}`);
  }
}

export function inputMessage(
  name: string,
  values: Record<string, unknown>,
): InputMessage {
  return { type: "input", name, values };
}

export function encodeInput(msg: InputMessage): string {
  return JSON.stringify(msg);
}
