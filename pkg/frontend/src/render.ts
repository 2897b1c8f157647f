// Stateless scene renderer: DemoState in, SVG markup out. Rendering the
// same state twice yields the identical string, so replayed frames cannot
// change the view. All geometry lives on the service's 0-100 plane.

import { PLANE_MAX } from "./brush.js";
import { rowsOf, type DemoState } from "./state.js";
import type { Row } from "./protocol.js";

export const SCATTER_SIZE = 420;
export const BARS_WIDTH = 420;
export const BARS_HEIGHT = 180;

const HOURS = 24;

function px(v: number): string {
  return v.toFixed(2);
}

function x(lon: number): number {
  return (lon / PLANE_MAX) * SCATTER_SIZE;
}

function y(lat: number): number {
  return SCATTER_SIZE - (lat / PLANE_MAX) * SCATTER_SIZE;
}

function num(row: Row, key: string): number {
  const v = row[key];
  return typeof v === "number" ? v : NaN;
}

function circle(row: Row, r: number, cls: string): string {
  const cx = x(num(row, "lon"));
  const cy = y(num(row, "lat"));
  return `<circle class="${cls}" cx="${px(cx)}" cy="${px(cy)}" r="${r}"/>`;
}

function boxRect(row: Row, cls: string): string {
  const x0 = x(num(row, "lonMin"));
  const x1 = x(num(row, "lonMax"));
  const y0 = y(num(row, "latMax"));
  const y1 = y(num(row, "latMin"));
  return (
    `<rect class="${cls}" x="${px(x0)}" y="${px(y0)}"` +
    ` width="${px(x1 - x0)}" height="${px(y1 - y0)}"/>`
  );
}

export function renderScatter(state: DemoState): string {
  const parts: string[] = [
    `<svg class="scatter" viewBox="0 0 ${SCATTER_SIZE} ${SCATTER_SIZE}">`,
    `<rect class="plane" width="${SCATTER_SIZE}" height="${SCATTER_SIZE}"/>`,
  ];
  for (const row of rowsOf(state, "brushScentOutput")) {
    parts.push(boxRect(row, "scent"));
  }
  for (const row of rowsOf(state, "filteredBrush")) {
    parts.push(boxRect(row, "brush"));
  }
  for (const row of rowsOf(state, "allTweets")) {
    parts.push(circle(row, 4, "tweet"));
  }
  // selected points come from the server, never from local hit testing
  for (const row of rowsOf(state, "regionSelection")) {
    parts.push(circle(row, 5, "selected"));
  }
  for (const row of rowsOf(state, "initialSelection")) {
    parts.push(circle(row, 5, "selected"));
  }
  parts.push("</svg>");
  return parts.join("");
}

export function renderBars(state: DemoState): string {
  const counts = new Array<number>(HOURS).fill(0);
  for (const row of rowsOf(state, "hourDistOutput")) {
    const hour = num(row, "hour");
    const count = num(row, "tweetCount");
    if (Number.isInteger(hour) && hour >= 0 && hour < HOURS) {
      counts[hour] = count;
    }
  }
  const top = Math.max(1, ...counts);
  const band = BARS_WIDTH / HOURS;
  const parts: string[] = [
    `<svg class="bars" viewBox="0 0 ${BARS_WIDTH} ${BARS_HEIGHT}">`,
  ];
  counts.forEach((count, hour) => {
    if (count <= 0) return;
    const h = (count / top) * (BARS_HEIGHT - 18);
    parts.push(
      `<rect class="bar" x="${px(hour * band + 1)}"` +
        ` y="${px(BARS_HEIGHT - h)}" width="${px(band - 2)}"` +
        ` height="${px(h)}" data-hour="${hour}" data-count="${count}"/>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}

export function renderStatus(state: DemoState): string {
  const bits = [
    state.connected ? `timestep ${state.timestep}` : "disconnected",
    `policy ${state.policy}`,
    state.streaming ? `streaming ${state.streamRate}/s` : "stream off",
  ];
  if (state.rejections > 0) bits.push(`rejected ${state.rejections}`);
  if (state.lastNotice) bits.push(state.lastNotice);
  return bits.join(" | ");
}

export function renderScene(state: DemoState): string {
  return (
    `<div class="scene">${renderScatter(state)}` +
    `${renderBars(state)}<p class="status">${renderStatus(state)}</p></div>`
  );
}
