import { describe, expect, it } from "vitest";

import {
  decodeP6, dragToMultiplier, readoutFor, sceneOverlays, walkStrip,
} from "../src/scene.js";
import type { SceneView, WalkResponse } from "../src/types.js";
import { fixture } from "./helpers.js";

const scene = fixture<SceneView>("scene.json");
const walk = fixture<WalkResponse & { stored_score: number }>("walk.json");

describe("scene overlays", () => {
  it("renders ground truth green and detections red", () => {
    const overlays = sceneOverlays(scene);
    const gt = overlays.filter((o) => o.kind === "gt");
    const dt = overlays.filter((o) => o.kind === "dt");
    expect(gt.length).toBe(scene.gt_boxes.length);
    expect(dt.length).toBe(scene.detections.length);
    expect(gt[0]!.color).toBe("#21a321");
    if (dt.length) expect(dt[0]!.color).toBe("#d22");
  });

  it("readout flags failures below the threshold", () => {
    const g = scene.gt_boxes[0]!;
    const r = readoutFor(scene, g.id)!;
    expect(r.cls).toBe(g.cls);
    expect(r.failed).toBe(g.score !== null && g.score < 0.5);
    expect(readoutFor(scene, "missing")).toBeNull();
  });
});

describe("walk strip", () => {
  it("orders points by multiplier with the original at zero", () => {
    const strip = walkStrip(walk);
    const ms = strip.points.map((p) => p.multiplier);
    expect([...ms].sort((a, b) => a - b)).toEqual(ms);
    expect(strip.points[strip.zeroIndex]!.multiplier).toBe(0);
  });

  it("zero-multiplier score matches the stored score within 0.05", () => {
    const strip = walkStrip(walk);
    const zero = strip.points[strip.zeroIndex]!;
    expect(Math.abs(zero.score - walk.stored_score)).toBeLessThan(0.05);
  });

  it("drag snapping picks the nearest multiplier", () => {
    const strip = walkStrip(walk);
    expect(dragToMultiplier(strip, 0)).toBe(strip.points[0]!.multiplier);
    expect(dragToMultiplier(strip, 1)).toBe(
      strip.points[strip.points.length - 1]!.multiplier);
  });
});

describe("P6 decoding", () => {
  it("decodes a crafted 16-bit payload exactly", () => {
    // 2x1 image: white pixel then mid-gray
    const header = "P6\n2 1\n65535\n";
    const samples = new Uint8Array([
      0xff, 0xff, 0xff, 0xff, 0xff, 0xff,
      0x80, 0x00, 0x80, 0x00, 0x80, 0x00,
    ]);
    const bytes = new Uint8Array(header.length + samples.length);
    bytes.set(new TextEncoder().encode(header));
    bytes.set(samples, header.length);
    const img = decodeP6(Buffer.from(bytes).toString("base64"));
    expect(img.width).toBe(2);
    expect(img.height).toBe(1);
    expect(img.pixels[0]).toBeCloseTo(1.0);
    expect(img.pixels[3]).toBeCloseTo(0x8000 / 65535);
  });

  it("rejects non-P6 payloads", () => {
    expect(() => decodeP6(Buffer.from("P5\n1 1\n255\n\0").toString("base64")))
      .toThrow();
  });
});
