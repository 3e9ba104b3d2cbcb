/** Typed client over the workbench HTTP/JSON API. Every number the UI
 * shows comes from these responses; nothing is recomputed client-side. */

import type {
  DimTree, DimensionBar, FilterBody, Histogram, Ranking, SceneView, Summary,
  TileGrid, WalkResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(`API ${status}: ${message}`);
  }
}

export class ApiClient {
  constructor(private base: string = "",
              private fetchImpl: FetchLike = fetch) {}

  private async get<T>(path: string, params?: Record<string, unknown>): Promise<T> {
    const qs = params
      ? "?" + Object.entries(params)
          .filter(([, v]) => v !== undefined)
          .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`)
          .join("&")
      : "";
    const resp = await this.fetchImpl(`${this.base}${path}${qs}`);
    if (!resp.ok) throw new ApiError(resp.status, path);
    return resp.json() as Promise<T>;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchImpl(`${this.base}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw new ApiError(resp.status, path);
    return resp.json() as Promise<T>;
  }

  summary(): Promise<Summary> {
    return this.get("/summary");
  }

  histogram(metric: string, bins = 20, split?: string): Promise<Histogram> {
    return this.get("/histograms", { metric, bins, split });
  }

  filter(body: FilterBody): Promise<{ ids: string[]; count: number }> {
    return this.post("/filter", body);
  }

  tiles(x: string, y: string, range: [number, number, number, number],
        bins: number, metric = "confidence", split = "train"): Promise<TileGrid> {
    const [x_lo, x_hi, y_lo, y_hi] = range;
    return this.get("/tiles", { x, y, x_lo, x_hi, y_lo, y_hi, bins, metric, split });
  }

  bars(dim: string, bins = 12, metric = "confidence", split = "test"):
      Promise<DimensionBar> {
    return this.get("/bars", { dim, bins, metric, split });
  }

  dimtree(): Promise<DimTree> {
    return this.get("/dimtree");
  }

  rank(ids: string[], split = "train"): Promise<Ranking> {
    return this.post("/rank", { ids, split });
  }

  scene(objectId: string): Promise<SceneView> {
    return this.get(`/scene/${encodeURIComponent(objectId)}`);
  }

  walk(objectId: string, multipliers: number[]): Promise<WalkResponse> {
    return this.post("/walk", { object_id: objectId, multipliers });
  }
}
