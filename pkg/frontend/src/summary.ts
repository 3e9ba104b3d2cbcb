/** Multi-faceted summary dashboard: counts, metric histograms, and the
 * preset buttons that drive the shared filter. */

import type { FilterBody, Histogram, Summary } from "./types.js";

export interface CountCard {
  key: string;
  label: string;
  value: number;
}

export function countCards(summary: Summary): CountCard[] {
  return [
    { key: "objects", label: "traffic-light objects", value: summary.objects },
    { key: "detections", label: "top-5 detections", value: summary.detections },
    { key: "fp", label: "false positives", value: summary.fp },
    { key: "fn1", label: "FN-I (never seen)", value: summary.fn1 },
    { key: "fn2", label: "FN-II (low confidence)", value: summary.fn2 },
    { key: "adversarials", label: "adversarials", value: summary.adversarials },
  ];
}

export const PRESET_FILTERS: Record<string, FilterBody> = {
  fp: { preset: "fp" },
  fn1: { preset: "fn1" },
  fn2: { preset: "fn2" },
};

export interface HistogramBar {
  x0: number;
  x1: number;
  count: number;
  height: number; // 0..1
}

export function histogramBars(hist: Histogram): HistogramBar[] {
  const max = Math.max(1, ...hist.counts);
  return hist.counts.map((count, i) => ({
    x0: hist.edges[i]!,
    x1: hist.edges[i + 1]!,
    count,
    height: count / max,
  }));
}

/** A brushed interval on a metric histogram becomes a range filter. */
export function brushToFilter(metric: string, lo: number, hi: number): FilterBody {
  return { intervals: { [metric]: [Math.min(lo, hi), Math.max(lo, hi)] } };
}
