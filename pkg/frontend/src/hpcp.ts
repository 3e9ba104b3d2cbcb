/** Hierarchical parallel-coordinates panel logic: dendrogram visibility
 * cuts, dimension bar layout, ranking-driven reordering, and the curved
 * polyline paths shown for hovered bins. */

import type { DimTree, DimensionBar, Ranking, TreeNode } from "./types.js";

export function nodeById(tree: DimTree): Map<number, TreeNode> {
  return new Map(tree.nodes.map((n) => [n.id, n]));
}

/** Node ids visible at a merge-height threshold (the dendrogram cut). */
export function visibleAtThreshold(tree: DimTree, threshold: number): number[] {
  const byId = nodeById(tree);
  const out: number[] = [];
  const walk = (id: number): void => {
    const node = byId.get(id);
    if (!node) return;
    if (!node.children || node.height <= threshold) {
      out.push(id);
      return;
    }
    for (const c of node.children) walk(c);
  };
  walk(tree.root);
  return out;
}

/** Leaf labels under a node, left to right. */
export function leavesUnder(tree: DimTree, id: number): string[] {
  const byId = nodeById(tree);
  const out: string[] = [];
  const walk = (nid: number): void => {
    const node = byId.get(nid);
    if (!node) return;
    if (node.label) out.push(node.label);
    if (node.children) for (const c of node.children) walk(c);
  };
  walk(id);
  return out;
}

/** Order visible dimensions by a ranking (ranked first, then the rest in
 * tree order). */
export function orderByRanking(dims: string[], ranking: Ranking | null): string[] {
  if (!ranking) return dims;
  const rank = new Map(ranking.entries.map(([d, v], i) => [d, i]));
  return [...dims].sort((a, b) =>
    (rank.get(a) ?? 1e9) - (rank.get(b) ?? 1e9));
}

export interface BarRect {
  binIndex: number;
  x0: number;
  x1: number;
  height: number; // 0..1 of the lane height
  background: boolean;
  score: number | null;
  gradientSign: number | null;
}

/** Foreground bars over a gray background area plot, shared bin edges. */
export function barLayout(bar: DimensionBar): BarRect[] {
  const maxCount = Math.max(1, ...bar.counts, ...bar.background_counts);
  const lo = bar.edges[0]!;
  const hi = bar.edges[bar.edges.length - 1]!;
  const span = hi - lo || 1;
  const rects: BarRect[] = [];
  for (let b = 0; b < bar.counts.length; b++) {
    const x0 = (bar.edges[b]! - lo) / span;
    const x1 = (bar.edges[b + 1]! - lo) / span;
    rects.push({
      binIndex: b, x0, x1,
      height: bar.background_counts[b]! / maxCount,
      background: true, score: null, gradientSign: null,
    });
    rects.push({
      binIndex: b, x0, x1,
      height: bar.counts[b]! / maxCount,
      background: false,
      score: bar.median_scores[b] ?? null,
      gradientSign: bar.gradient_signs[b] ?? null,
    });
  }
  return rects;
}

/** Smooth cubic path through per-dimension lane coordinates (the curved
 * polyline for one record across visible dimensions). */
export function polylinePath(points: [number, number][]): string {
  if (points.length === 0) return "";
  const first = points[0]!;
  let d = `M ${first[0]} ${first[1]}`;
  for (let i = 1; i < points.length; i++) {
    const [x0, y0] = points[i - 1]!;
    const [x1, y1] = points[i]!;
    const mx = (x0 + x1) / 2;
    d += ` C ${mx} ${y0}, ${mx} ${y1}, ${x1} ${y1}`;
  }
  return d;
}

/** Ids captured by hovering one bin of a dimension bar. */
export function binMembers(bar: DimensionBar, binIndex: number): string[] {
  return bar.representatives[binIndex] ?? [];
}
