/** Tile landscape geometry: layout, visual encodings, lasso hit-testing,
 * and zoom mathematics. Rendering itself lives in mount.ts; everything
 * here is a pure function of API data. */

import type { Metric, Tile, TileGrid } from "./types.js";

export interface LaidTile {
  tile: Tile;
  x: number;
  y: number;
  w: number;
  h: number;
  cx: number;
  cy: number;
}

/** Position tiles in pixel space; y axis points up (data space). */
export function tileLayout(grid: TileGrid, width: number, height: number): LaidTile[] {
  const cw = width / grid.bins;
  const ch = height / grid.bins;
  return grid.tiles.map((tile) => {
    const x = tile.ix * cw;
    const y = height - (tile.iy + 1) * ch;
    return { tile, x, y, w: cw, h: ch, cx: x + cw / 2, cy: y + ch / 2 };
  });
}

/** Data-space coordinates of a tile's center. */
export function tileCenterData(grid: TileGrid, tile: Tile): [number, number] {
  const [xLo, xHi, yLo, yHi] = grid.view_range;
  return [
    xLo + ((tile.ix + 0.5) / grid.bins) * (xHi - xLo),
    yLo + ((tile.iy + 0.5) / grid.bins) * (yHi - yLo),
  ];
}

/** Ray-casting point-in-polygon. */
export function pointInPolygon(px: number, py: number,
                               polygon: [number, number][]): boolean {
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const a = polygon[i]!;
    const b = polygon[j]!;
    const intersects = a[1] > py !== b[1] > py
      && px < ((b[0] - a[0]) * (py - a[1])) / (b[1] - a[1]) + a[0];
    if (intersects) inside = !inside;
  }
  return inside;
}

export interface LassoResult {
  tiles: Tile[];
  ids: string[];
}

/** Tiles whose data-space centers fall inside a lasso polygon, plus the
 * union of their member ids (the selection the rank endpoint receives). */
export function lassoSelect(grid: TileGrid,
                            polygon: [number, number][]): LassoResult {
  const tiles: Tile[] = [];
  const ids = new Set<string>();
  for (const tile of grid.tiles) {
    const [cx, cy] = tileCenterData(grid, tile);
    if (pointInPolygon(cx, cy, polygon)) {
      tiles.push(tile);
      for (const m of tile.members) ids.add(m);
    }
  }
  return { tiles, ids: [...ids].sort() };
}

/** Tiles containing at least one id from a selection (for highlighting). */
export function tilesCovering(grid: TileGrid, ids: Set<string>): Tile[] {
  return grid.tiles.filter((t) => t.members.some((m) => ids.has(m)));
}

/** Score-to-color for the confidence/robustness encodings: red (0) through
 * yellow (0.5) to green (1). Returns a CSS color. */
export function scoreColor(score: number | null): string {
  if (score === null) return "#bbbbbb";
  const s = Math.max(0, Math.min(1, score));
  const hue = 120 * s; // 0 red .. 120 green
  return `hsl(${hue.toFixed(0)}, 80%, 45%)`;
}

export function tileScore(tile: Tile, metric: Metric): number | null {
  if (metric === "robustness") return tile.median_robustness;
  return tile.median_confidence;
}

/** Gradient arrow geometry for a tile, in pixels relative to its center. */
export function gradientArrow(tile: Tile, maxLen: number):
    { dx: number; dy: number } | null {
  if (!tile.mean_gradient) return null;
  const [gx, gy] = tile.mean_gradient;
  const norm = Math.hypot(gx, gy);
  if (norm < 1e-12) return null;
  const len = maxLen * Math.min(1, norm);
  // the adversarial direction is the negated score gradient
  return { dx: (-gx / norm) * len, dy: (-gy / norm) * len };
}

/** Zoom about a data-space center: factor < 1 zooms in. */
export function zoomRange(range: [number, number, number, number],
                          factor: number, cx: number, cy: number):
    [number, number, number, number] {
  const [xLo, xHi, yLo, yHi] = range;
  return [
    cx - (cx - xLo) * factor,
    cx + (xHi - cx) * factor,
    cy - (cy - yLo) * factor,
    cy + (yHi - cy) * factor,
  ];
}

export function panRange(range: [number, number, number, number],
                         dx: number, dy: number):
    [number, number, number, number] {
  const [xLo, xHi, yLo, yHi] = range;
  return [xLo + dx, xHi + dx, yLo + dy, yHi + dy];
}
