// Demo state is a mirror of what the server said, nothing more. Output
// rows replace wholesale per message, so applying a frame twice lands on
// the same state, and no selection is ever recomputed client-side.

import type { CatalogMessage, Row, ServerMessage } from "./protocol.js";

export interface DemoState {
  connected: boolean;
  policy: string;
  streaming: boolean;
  streamRate: number;
  timestep: number;
  catalog: CatalogMessage | null;
  outputs: ReadonlyMap<string, Row[]>;
  rejections: number;
  lastNotice: string | null;
}

export function initialState(policy = "select-all"): DemoState {
  return {
    connected: false,
    policy,
    streaming: false,
    streamRate: 2,
    timestep: 0,
    catalog: null,
    outputs: new Map(),
    rejections: 0,
    lastNotice: null,
  };
}

export function applyMessage(state: DemoState, msg: ServerMessage): DemoState {
  switch (msg.type) {
    case "catalog":
      return { ...state, connected: true, catalog: msg };
    case "output": {
      const outputs = new Map(state.outputs);
      outputs.set(msg.name, msg.rows);
      return {
        ...state,
        outputs,
        timestep: Math.max(state.timestep, msg.timestep),
      };
    }
    case "rejected":
      return {
        ...state,
        rejections: state.rejections + 1,
        lastNotice: `rejected ${msg.input}: ${msg.violations.join("; ")}`,
      };
    case "error":
      return { ...state, lastNotice: msg.message };
  }
}

export function rowsOf(state: DemoState, output: string): Row[] {
  return state.outputs.get(output) ?? [];
}
