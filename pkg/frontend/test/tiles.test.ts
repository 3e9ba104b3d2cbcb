import { describe, expect, it } from "vitest";

import {
  gradientArrow, lassoSelect, panRange, pointInPolygon, scoreColor,
  tileCenterData, tileLayout, tilesCovering, tileScore, zoomRange,
} from "../src/tiles.js";
import type { TileGrid } from "../src/types.js";
import { fixture } from "./helpers.js";

const grid = fixture<TileGrid>("tiles.json");

describe("tile layout", () => {
  it("positions every tile inside the viewport", () => {
    const laid = tileLayout(grid, 480, 480);
    expect(laid.length).toBe(grid.tiles.length);
    for (const t of laid) {
      expect(t.x).toBeGreaterThanOrEqual(0);
      expect(t.y).toBeGreaterThanOrEqual(0);
      expect(t.x + t.w).toBeLessThanOrEqual(480 + 1e-9);
      expect(t.y + t.h).toBeLessThanOrEqual(480 + 1e-9);
    }
  });

  it("keeps tile centers inside the view range in data space", () => {
    const [xLo, xHi, yLo, yHi] = grid.view_range;
    for (const tile of grid.tiles) {
      const [cx, cy] = tileCenterData(grid, tile);
      expect(cx).toBeGreaterThan(xLo);
      expect(cx).toBeLessThan(xHi);
      expect(cy).toBeGreaterThan(yLo);
      expect(cy).toBeLessThan(yHi);
    }
  });
});

describe("point in polygon", () => {
  const square: [number, number][] = [[0, 0], [2, 0], [2, 2], [0, 2]];
  it("accepts interior points", () => {
    expect(pointInPolygon(1, 1, square)).toBe(true);
  });
  it("rejects exterior points", () => {
    expect(pointInPolygon(3, 1, square)).toBe(false);
    expect(pointInPolygon(-1, 1, square)).toBe(false);
  });
});

describe("lasso selection", () => {
  it("collects members of covered tiles only", () => {
    const polygon: [number, number][] = [[1, -4.5], [4.5, -4.5], [4.5, 4.5], [1, 4.5]];
    const { tiles, ids } = lassoSelect(grid, polygon);
    expect(tiles.length).toBeGreaterThan(0);
    const expected = new Set(tiles.flatMap((t) => t.members));
    expect(new Set(ids)).toEqual(expected);
    // everything selected lies right of dim:5 = 1 (the planted side)
    for (const tile of tiles) {
      const [cx] = tileCenterData(grid, tile);
      expect(cx).toBeGreaterThan(1);
    }
  });

  it("selects nothing from an empty polygon region", () => {
    const out = lassoSelect(grid, [[40, 40], [41, 40], [41, 41]]);
    expect(out.ids).toEqual([]);
  });
});

describe("covering and encodings", () => {
  it("tilesCovering finds the tiles holding selected ids", () => {
    const someTile = grid.tiles.find((t) => t.count > 0)!;
    const covered = tilesCovering(grid, new Set([someTile.members[0]!]));
    expect(covered.map((t) => `${t.ix}:${t.iy}`)).toContain(
      `${someTile.ix}:${someTile.iy}`);
  });

  it("score colors span red to green", () => {
    expect(scoreColor(0)).toContain("hsl(0");
    expect(scoreColor(1)).toContain("hsl(120");
    expect(scoreColor(null)).toBe("#bbbbbb");
  });

  it("tileScore switches metric", () => {
    const t = grid.tiles.find((t) => t.median_confidence !== null)!;
    expect(tileScore(t, "confidence")).toBe(t.median_confidence);
    expect(tileScore(t, "robustness")).toBe(t.median_robustness);
  });

  it("gradient arrows are unit-capped and flip to the adversarial direction", () => {
    const t = grid.tiles.find((t) => t.mean_gradient !== null);
    if (!t) return;
    const arrow = gradientArrow(t, 10)!;
    expect(Math.hypot(arrow.dx, arrow.dy)).toBeLessThanOrEqual(10 + 1e-9);
    const [gx] = t.mean_gradient!;
    if (Math.abs(gx) > 1e-9) {
      expect(Math.sign(arrow.dx)).toBe(-Math.sign(gx) * Math.sign(1));
    }
  });
});

describe("zoom and pan", () => {
  it("zoom keeps the anchor fixed", () => {
    const next = zoomRange([-4, 4, -4, 4], 0.5, 1, 1);
    expect(next[0]).toBeCloseTo(-1.5);
    expect(next[1]).toBeCloseTo(2.5);
    expect(next[2]).toBeCloseTo(-1.5);
    expect(next[3]).toBeCloseTo(2.5);
  });
  it("pan shifts both bounds", () => {
    expect(panRange([-4, 4, -4, 4], 1, -1)).toEqual([-3, 5, -5, 3]);
  });
});
