/** Scene inspector and adversarial-walk strip models. */

import type { SceneView, WalkPoint, WalkResponse } from "./types.js";

export const FAIL_THRESHOLD = 0.5;

export interface BoxOverlay {
  kind: "gt" | "dt";
  rect: [number, number, number, number];
  color: string;
  label: string;
}

export function sceneOverlays(view: SceneView): BoxOverlay[] {
  const out: BoxOverlay[] = [];
  for (const g of view.gt_boxes) {
    const score = g.score === null ? "—" : g.score.toFixed(2);
    out.push({ kind: "gt", rect: g.box, color: "#21a321",
               label: `${g.id} ${g.cls} s=${score}` });
  }
  for (const d of view.detections) {
    out.push({ kind: "dt", rect: d.box, color: "#d22",
               label: `conf=${d.top_confidence.toFixed(2)}` });
  }
  return out;
}

export interface Readout {
  objectId: string;
  cls: string;
  score: number | null;
  robustness: number | null;
  failed: boolean;
}

export function readoutFor(view: SceneView, objectId: string): Readout | null {
  const g = view.gt_boxes.find((b) => b.id === objectId);
  if (!g) return null;
  return {
    objectId, cls: g.cls, score: g.score, robustness: g.robustness,
    failed: g.score !== null && g.score < FAIL_THRESHOLD,
  };
}

export interface WalkStrip {
  points: WalkPoint[];
  zeroIndex: number;
  failIndex: number | null; // first ascending point below the threshold
}

/** Ordered walk strip with the original object at the zero multiplier. */
export function walkStrip(resp: WalkResponse): WalkStrip {
  const points = [...resp.points].sort((a, b) => a.multiplier - b.multiplier);
  let zeroIndex = 0;
  let best = Infinity;
  points.forEach((p, i) => {
    if (Math.abs(p.multiplier) < best) {
      best = Math.abs(p.multiplier);
      zeroIndex = i;
    }
  });
  let failIndex: number | null = null;
  for (let i = zeroIndex; i < points.length; i++) {
    if (points[i]!.score < FAIL_THRESHOLD) {
      failIndex = i;
      break;
    }
  }
  return { points, zeroIndex, failIndex };
}

/** Nearest multiplier for a drag position on the strip (x in 0..1 across
 * the multiplier range). */
export function dragToMultiplier(strip: WalkStrip, x: number): number {
  const ms = strip.points.map((p) => p.multiplier);
  const lo = ms[0]!;
  const hi = ms[ms.length - 1]!;
  const target = lo + Math.max(0, Math.min(1, x)) * (hi - lo);
  let bestM = lo;
  let bestD = Infinity;
  for (const m of ms) {
    const d = Math.abs(m - target);
    if (d < bestD) {
      bestD = d;
      bestM = m;
    }
  }
  return bestM;
}

export interface DecodedImage {
  width: number;
  height: number;
  /** row-major RGB triples scaled to 0..1 */
  pixels: Float32Array;
}

const B64_ALPHABET =
  "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

/** Environment-independent base64 decoder (no atob/Buffer needed). */
export function base64ToBytes(b64: string): Uint8Array {
  const lookup = new Int16Array(128).fill(-1);
  for (let i = 0; i < B64_ALPHABET.length; i++) {
    lookup[B64_ALPHABET.charCodeAt(i)] = i;
  }
  const clean = b64.replace(/=+$/, "");
  const out = new Uint8Array(Math.floor((clean.length * 3) / 4));
  let acc = 0;
  let bits = 0;
  let o = 0;
  for (let i = 0; i < clean.length; i++) {
    const v = lookup[clean.charCodeAt(i)] ?? -1;
    if (v < 0) continue; // whitespace
    acc = (acc << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out[o++] = (acc >> bits) & 0xff;
    }
  }
  return out.subarray(0, o);
}

/** Decode a base64 16-bit binary P6 payload (the API's image format). */
export function decodeP6(b64: string): DecodedImage {
  const bytes = base64ToBytes(b64);
  if (bytes[0] !== 0x50 || bytes[1] !== 0x36) {
    throw new Error("not a P6 payload");
  }
  let i = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (i < bytes.length && isSpace(bytes[i]!)) i++;
    if (bytes[i] === 0x23) { // '#' comment
      while (i < bytes.length && bytes[i] !== 0x0a) i++;
      continue;
    }
    let v = 0;
    while (i < bytes.length && !isSpace(bytes[i]!)) {
      v = v * 10 + (bytes[i]! - 0x30);
      i++;
    }
    fields.push(v);
  }
  i++; // single whitespace after maxval
  const [width, height, maxval] = fields as [number, number, number];
  const n = width * height * 3;
  const pixels = new Float32Array(n);
  if (maxval > 255) {
    for (let k = 0; k < n; k++) {
      pixels[k] = ((bytes[i + 2 * k]! << 8) | bytes[i + 2 * k + 1]!) / maxval;
    }
  } else {
    for (let k = 0; k < n; k++) pixels[k] = bytes[i + k]! / maxval;
  }
  return { width, height, pixels };
}

function isSpace(b: number): boolean {
  return b === 0x20 || b === 0x0a || b === 0x0d || b === 0x09;
}
