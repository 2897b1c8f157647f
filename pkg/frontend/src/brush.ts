// Brush gesture -> brushEvent input messages. Pointer positions arrive in
// pixels; the service only understands the data plane, so every event
// carries the current bounding box translated to lat/lon.

import { inputMessage, type InputMessage } from "./protocol.js";

export interface PlaneScale {
  toLat(py: number): number;
  toLon(px: number): number;
}

export const PLANE_MAX = 100;

// y grows downward on screen but lat grows upward on the plane
export function planeScale(width: number, height: number): PlaneScale {
  return {
    toLat: (py) => ((height - py) / height) * PLANE_MAX,
    toLon: (px) => (px / width) * PLANE_MAX,
  };
}

export interface BrushBox {
  latMin: number;
  latMax: number;
  lonMin: number;
  lonMax: number;
}

function box(
  scale: PlaneScale,
  ax: number,
  ay: number,
  bx: number,
  by: number,
): BrushBox {
  const lats = [scale.toLat(ay), scale.toLat(by)];
  const lons = [scale.toLon(ax), scale.toLon(bx)];
  return {
    latMin: Math.min(lats[0]!, lats[1]!),
    latMax: Math.max(lats[0]!, lats[1]!),
    lonMin: Math.min(lons[0]!, lons[1]!),
    lonMax: Math.max(lons[0]!, lons[1]!),
  };
}

export class BrushTracker {
  private anchor: [number, number] | null = null;

  constructor(private scale: PlaneScale) {}

  get active(): boolean {
    return this.anchor !== null;
  }

  down(px: number, py: number): InputMessage {
    this.anchor = [px, py];
    return this.emit("down", px, py);
  }

  /** Returns null for stray moves with no button held. */
  move(px: number, py: number): InputMessage | null {
    if (!this.anchor) return null;
    return this.emit("move", px, py);
  }

  up(px: number, py: number): InputMessage {
    const msg = this.emit("up", px, py);
    this.anchor = null;
    return msg;
  }

  private emit(kind: string, px: number, py: number): InputMessage {
    const [ax, ay] = this.anchor ?? [px, py];
    const b = box(this.scale, ax, ay, px, py);
    return inputMessage("brushEvent", { ...b, mouseEvent: kind });
  }
}
