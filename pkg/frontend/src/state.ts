/** Shared view state: the single source the coordinated views react to. */

import type { FilterBody, Metric } from "./types.js";

export interface ViewState {
  metric: Metric;
  axisX: string;
  axisY: string;
  viewRange: [number, number, number, number];
  bins: number;
  split: string;
  filters: FilterBody | null;
  selection: string[] | null; // record ids resolved from a lasso or filter
  activeObject: string | null;
}

export const initialState: ViewState = {
  metric: "confidence",
  axisX: "pca:0",
  axisY: "pca:1",
  viewRange: [-4, 4, -4, 4],
  bins: 12,
  split: "train",
  filters: null,
  selection: null,
  activeObject: null,
};

type Listener = (state: ViewState, changed: (keyof ViewState)[]) => void;

export class Store {
  private state: ViewState;
  private listeners: Listener[] = [];

  constructor(state: ViewState = initialState) {
    this.state = { ...state };
  }

  get(): ViewState {
    return this.state;
  }

  update(patch: Partial<ViewState>): void {
    const changed = (Object.keys(patch) as (keyof ViewState)[])
      .filter((k) => this.state[k] !== patch[k]);
    if (!changed.length) return;
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state, changed);
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((f) => f !== fn);
    };
  }
}
