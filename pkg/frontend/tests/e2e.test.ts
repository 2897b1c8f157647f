// End to end over a real server: spawn `diel serve`, drive the gesture a
// user would make while scripted tweets land, and require (a) the final
// selection the policy promises and (b) a wire stream identical to a
// `diel run` replay of the same six events.

import { execFile, spawn, type ChildProcess } from "node:child_process";
import { mkdtemp, readFile, writeFile } from "node:fs/promises";
import { createServer, type AddressInfo } from "node:net";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { promisify } from "node:util";

import WebSocket from "ws";
import { afterEach, describe, expect, it } from "vitest";

import { BrushTracker, planeScale } from "../src/brush.js";
import {
  EngineClient,
  type SocketFactory,
  type SocketLike,
} from "../src/client.js";
import {
  inputMessage,
  type InputMessage,
  type OutputMessage,
  type ServerMessage,
} from "../src/protocol.js";
import type { Tweet } from "../src/stream.js";

const run = promisify(execFile);
const here = fileURLToPath(new URL(".", import.meta.url));
const FIXTURE_PROGRAM = resolve(
  here, "..", "..", "fixtures", "select-all", "program.diel");
const ALTERNATIVES_PROGRAM = resolve(
  here, "..", "programs", "alternatives.diel");
const TWEET_SCRIPT = resolve(here, "..", "assets", "tweets.json");

const wsFactory: SocketFactory = (url) => {
  const socket = new WebSocket(url);
  socket.on("error", () => {
    // connection refused while the server boots; the retry loop handles it
  });
  return socket as unknown as SocketLike;
};

function sleep(ms: number): Promise<void> {
  return new Promise((r) => setTimeout(r, ms));
}

function freePort(): Promise<number> {
  return new Promise((resolvePort, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const port = (probe.address() as AddressInfo).port;
      probe.close(() => resolvePort(port));
    });
  });
}

async function connectRetry(
  url: string,
  onMessage: (msg: ServerMessage) => void,
): Promise<EngineClient> {
  for (let attempt = 0; attempt < 80; attempt++) {
    const client = new EngineClient(wsFactory);
    client.onMessage(onMessage);
    const opened = await Promise.race([
      client.connect(url).then(() => true),
      sleep(250).then(() => false),
    ]);
    if (opened) return client;
    client.close();
  }
  throw new Error("server never came up");
}

async function until(check: () => boolean, timeoutMs = 10000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!check()) {
    if (Date.now() > deadline) throw new Error("timed out waiting for frames");
    await sleep(25);
  }
}

// The shared scenario: tweet A on screen, brush down and drag, tweet B
// lands mid-gesture, brush up, tweet C lands after. The tracker emits the
// same growing bounding boxes a pointer drag would.
async function gestureEvents(): Promise<InputMessage[]> {
  const script = JSON.parse(await readFile(TWEET_SCRIPT, "utf8")) as Tweet[];
  const [a, b, c] = script;
  const tracker = new BrushTracker(planeScale(100, 100));
  return [
    inputMessage("tweetEvent", { ...a! }),
    tracker.down(20, 80),
    tracker.move(50, 50)!,
    inputMessage("tweetEvent", { ...b! }),
    tracker.up(80, 20),
    inputMessage("tweetEvent", { ...c! }),
  ];
}

async function replayStream(
  program: string,
  events: InputMessage[],
): Promise<Array<[number, string, unknown]>> {
  const dir = await mkdtemp(join(tmpdir(), "diel-demo-"));
  const trace = join(dir, "trace.jsonl");
  await writeFile(
    trace,
    events
      .map((e, i) =>
        JSON.stringify({
          input: e.name,
          values: e.values,
          timestamp: (i + 1) * 1000,
        }),
      )
      .join("\n") + "\n",
  );
  const { stdout } = await run("diel", ["run", program, "--trace", trace]);
  return stdout
    .trim()
    .split("\n")
    .map((line) => {
      const snap = JSON.parse(line) as {
        timestep: number;
        output: string;
        rows: unknown;
      };
      return [snap.timestep, snap.output, snap.rows];
    });
}

describe("demo against a live service", () => {
  let server: ChildProcess | null = null;

  afterEach(async () => {
    if (server) {
      server.kill();
      server = null;
      await sleep(100);
    }
  });

  async function drive(
    program: string,
  ): Promise<{
    frames: OutputMessage[];
    wire: Array<[number, string, unknown]>;
    want: Array<[number, string, unknown]>;
    last: (name: string) => unknown[];
  }> {
    const events = await gestureEvents();
    const want = await replayStream(program, events);

    const port = await freePort();
    server = spawn("diel", ["serve", program, "--port", String(port)], {
      stdio: "ignore",
    });
    const frames: OutputMessage[] = [];
    const client = await connectRetry(
      `ws://127.0.0.1:${port}/ws`,
      (msg) => {
        if (msg.type === "output") frames.push(msg);
      },
    );
    for (const event of events) {
      client.sendInput(event.name, event.values);
    }
    await until(() => frames.length >= want.length);
    client.close();

    const wire = frames.map(
      (f) => [f.timestep, f.name, f.rows] as [number, string, unknown],
    );
    const last = (name: string): unknown[] => {
      const hits = frames.filter((f) => f.name === name);
      return hits.length ? hits[hits.length - 1]!.rows : [];
    };
    return { frames, wire, want, last };
  }

  it("select-everything policy ends with A, B and C selected", async () => {
    const { wire, want, last } = await drive(FIXTURE_PROGRAM);

    const selected = last("regionSelection") as Array<{ tweetId: number }>;
    expect(new Set(selected.map((r) => r.tweetId))).toEqual(new Set([1, 2, 3]));

    // frame-for-frame equality with the offline replay
    expect(wire).toEqual(want);
  });

  it("initial-selection policy keeps only A, and drops the brush", async () => {
    const { wire, want, last } = await drive(ALTERNATIVES_PROGRAM);

    const selected = last("initialSelection") as Array<{ tweetId: number }>;
    expect(selected.map((r) => r.tweetId)).toEqual([1]);
    expect(last("filteredBrush")).toEqual([]);

    expect(wire).toEqual(want);
  });
});
