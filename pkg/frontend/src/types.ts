/** Wire types mirroring the workbench API's JSON schemas. */

export interface Summary {
  objects: number;
  detections: number;
  fp: number;
  fn1: number;
  fn2: number;
  adversarials: number;
  splits: Record<string, number>;
}

export interface Histogram {
  metric: string;
  edges: number[];
  counts: number[];
}

export interface Tile {
  ix: number;
  iy: number;
  count: number;
  representative: string | null;
  median_confidence: number | null;
  median_robustness: number | null;
  mean_gradient: [number, number] | null;
  members: string[];
}

export interface TileGrid {
  axis_x: string;
  axis_y: string;
  view_range: [number, number, number, number];
  bins: number;
  in_range: number;
  out_of_range: number;
  tiles: Tile[];
}

export interface DimensionBar {
  dimension: string;
  edges: number[];
  counts: number[];
  background_counts: number[];
  median_scores: (number | null)[];
  gradient_signs: (number | null)[];
  representatives: string[][];
}

export interface TreeNode {
  id: number;
  height: number;
  label: string | null;
  children: [number, number] | null;
}

export interface DimTree {
  root: number;
  nodes: TreeNode[];
}

export interface Ranking {
  entries: [string, number][];
}

export interface GtBox {
  id: string;
  box: [number, number, number, number];
  cls: string;
  score: number | null;
  robustness: number | null;
}

export interface SceneView {
  scene_id: string;
  image_p6: string;
  gt_boxes: GtBox[];
  detections: {
    box: [number, number, number, number];
    scores: Record<string, number>;
    top_confidence: number;
  }[];
}

export interface WalkPoint {
  multiplier: number;
  score: number;
  patch_p6: string;
}

export interface WalkResponse {
  object_id: string;
  points: WalkPoint[];
}

export interface FilterBody {
  intervals?: Record<string, [number, number]>;
  outcomes?: string[];
  preset?: string;
  split?: string;
}

export type Metric = "confidence" | "robustness" | "visual" | "gradient";
