// Thin connection wrapper. The socket is injectable so tests can feed
// frames without a server and the node e2e can pass the ws package's
// WebSocket, which mirrors the browser API.

import {
  encodeInput,
  inputMessage,
  parseServerMessage,
  type ServerMessage,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open", listener: () => void): void;
  addEventListener(
    type: "message",
    listener: (event: { data: unknown }) => void,
  ): void;
  addEventListener(type: "close", listener: () => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

const browserFactory: SocketFactory = (url) =>
  new WebSocket(url) as unknown as SocketLike;

export class EngineClient {
  private socket: SocketLike | null = null;
  private listeners: Array<(msg: ServerMessage) => void> = [];
  private closeListeners: Array<() => void> = [];

  constructor(private factory: SocketFactory = browserFactory) {}

  onMessage(listener: (msg: ServerMessage) => void): void {
    this.listeners.push(listener);
  }

  onClose(listener: () => void): void {
    this.closeListeners.push(listener);
  }

  connect(url: string): Promise<void> {
    const socket = this.factory(url);
    this.socket = socket;
    socket.addEventListener("message", (event) => {
      const msg = parseServerMessage(String(event.data));
      for (const listener of this.listeners) listener(msg);
    });
    socket.addEventListener("close", () => {
      this.socket = null;
      for (const listener of this.closeListeners) listener();
    });
    return new Promise((resolve) => {
      socket.addEventListener("open", () => resolve());
    });
  }

  get connected(): boolean {
    return this.socket !== null;
  }

  sendInput(name: string, values: Record<string, unknown>): void {
    if (!this.socket) throw new Error("not connected");
    this.socket.send(encodeInput(inputMessage(name, values)));
  }

  close(): void {
    this.socket?.close();
    this.socket = null;
  }
}
