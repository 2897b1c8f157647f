// Browser entry point: wire the socket, the brush, the scripted stream,
// and the renderer together. All view updates funnel through one render()
// call over the current DemoState.

import { BrushTracker, planeScale } from "./brush.js";
import { EngineClient } from "./client.js";
import { renderScene, SCATTER_SIZE } from "./render.js";
import { applyMessage, initialState, type DemoState } from "./state.js";
import { loadScript, TweetStream } from "./stream.js";

const params = new URLSearchParams(location.search);
const wsUrl = params.get("ws") ?? `ws://${location.hostname}:8000/ws`;
const policy = params.get("policy") ?? "select-all";

let state: DemoState = initialState(policy);
const stage = document.getElementById("stage")!;

function render(): void {
  stage.innerHTML = renderScene(state);
}

function update(next: DemoState): void {
  state = next;
  render();
}

const client = new EngineClient();
client.onMessage((msg) => update(applyMessage(state, msg)));
client.onClose(() => update({ ...state, connected: false }));

const stream = new TweetStream(await loadScript("./assets/tweets.json"),
  (msg) => client.sendInput(msg.name, msg.values));

const streamButton = document.getElementById("stream") as HTMLButtonElement;
const rateInput = document.getElementById("rate") as HTMLInputElement;

streamButton.addEventListener("click", () => {
  if (stream.running) {
    stream.stop();
    update({ ...state, streaming: false });
  } else {
    const rate = Number(rateInput.value) || 2;
    stream.start(rate);
    update({ ...state, streaming: true, streamRate: rate });
  }
});

// the overlay div owns pointer events so brushing works over the svg
const overlay = document.getElementById("overlay")!;
const tracker = new BrushTracker(planeScale(SCATTER_SIZE, SCATTER_SIZE));

function planePoint(event: PointerEvent): [number, number] {
  const rect = overlay.getBoundingClientRect();
  const sx = (event.clientX - rect.left) * (SCATTER_SIZE / rect.width);
  const sy = (event.clientY - rect.top) * (SCATTER_SIZE / rect.height);
  return [sx, sy];
}

overlay.addEventListener("pointerdown", (event) => {
  overlay.setPointerCapture(event.pointerId);
  const [sx, sy] = planePoint(event);
  const msg = tracker.down(sx, sy);
  client.sendInput(msg.name, msg.values);
});

overlay.addEventListener("pointermove", (event) => {
  const [sx, sy] = planePoint(event);
  const msg = tracker.move(sx, sy);
  if (msg) client.sendInput(msg.name, msg.values);
});

overlay.addEventListener("pointerup", (event) => {
  const [sx, sy] = planePoint(event);
  const msg = tracker.up(sx, sy);
  client.sendInput(msg.name, msg.values);
});

await client.connect(wsUrl);
update({ ...state, connected: true });
render();
