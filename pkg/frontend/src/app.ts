/** The controller wiring the four coordinated views over the API.
 *
 * All cross-view behavior lives here: a lasso in the tile landscape
 * resolves to record ids, triggers Rank-To-Interpret, reorders the
 * dimension panel, and highlights the covered tiles; preset buttons apply
 * dashboard filters; choosing a dimension re-lays the landscape; the
 * scene inspector drives the adversarial-walk strip. The DOM layer in
 * mount.ts renders whatever this controller holds.
 */

import { ApiClient } from "./api.js";
import { Store } from "./state.js";
import { lassoSelect, tilesCovering } from "./tiles.js";
import { walkStrip, type WalkStrip } from "./scene.js";
import type {
  DimTree, DimensionBar, Ranking, SceneView, Summary, Tile, TileGrid,
} from "./types.js";

export interface ControllerSnapshot {
  summary: Summary | null;
  grid: TileGrid | null;
  tree: DimTree | null;
  bars: Map<string, DimensionBar>;
  ranking: Ranking | null;
  highlighted: Set<string>; // tile keys "ix:iy"
  selection: string[] | null;
  scene: SceneView | null;
  walk: WalkStrip | null;
}

export const tileKey = (t: Tile): string => `${t.ix}:${t.iy}`;

export class Controller {
  readonly store = new Store();
  private snapshot: ControllerSnapshot = {
    summary: null, grid: null, tree: null, bars: new Map(), ranking: null,
    highlighted: new Set(), selection: null, scene: null, walk: null,
  };
  private epoch = 0; // stale-response guard; bumps on every view change

  constructor(private api: ApiClient) {}

  view(): ControllerSnapshot {
    return this.snapshot;
  }

  async start(): Promise<void> {
    const [summary, tree] = await Promise.all([
      this.api.summary(), this.api.dimtree(),
    ]);
    this.snapshot.summary = summary;
    this.snapshot.tree = tree;
    await this.reloadTiles();
  }

  async reloadTiles(): Promise<void> {
    const s = this.store.get();
    const epoch = ++this.epoch;
    const grid = await this.api.tiles(
      s.axisX, s.axisY, s.viewRange, s.bins,
      s.metric === "robustness" ? "robustness" : "confidence", s.split);
    if (epoch !== this.epoch) return; // a newer request superseded this one
    this.snapshot.grid = grid;
    this.refreshHighlight();
  }

  /** HPCP -> TileScape: use a dimension as an axis. */
  async assignAxis(which: "x" | "y", dim: string): Promise<void> {
    this.store.update(which === "x" ? { axisX: dim } : { axisY: dim });
    await this.reloadTiles();
  }

  async loadBar(dim: string): Promise<DimensionBar> {
    const s = this.store.get();
    const bar = await this.api.bars(
      dim, 12, s.metric === "robustness" ? "robustness" : "confidence",
      s.split);
    this.snapshot.bars.set(dim, bar);
    return bar;
  }

  /** TileScape -> HPCP: lasso a region, rank dimensions for the selection. */
  async lasso(polygon: [number, number][]): Promise<Ranking | null> {
    const grid = this.snapshot.grid;
    if (!grid) return null;
    const { ids } = lassoSelect(grid, polygon);
    if (ids.length === 0 || ids.length >= countMembers(grid)) {
      this.clearSelection();
      return null;
    }
    this.store.update({ selection: ids });
    this.snapshot.selection = ids;
    const ranking = await this.api.rank(ids, this.store.get().split);
    this.snapshot.ranking = ranking;
    this.refreshHighlight();
    return ranking;
  }

  /** Summary preset buttons -> every view. */
  async applyPreset(preset: string): Promise<void> {
    const { ids } = await this.api.filter({ preset,
                                            split: this.store.get().split });
    this.store.update({ selection: ids, filters: { preset } });
    this.snapshot.selection = ids;
    this.refreshHighlight();
  }

  clearSelection(): void {
    this.store.update({ selection: null, filters: null });
    this.snapshot.selection = null;
    this.snapshot.ranking = null;
    this.snapshot.highlighted = new Set();
  }

  private refreshHighlight(): void {
    const { grid } = this.snapshot;
    const sel = this.snapshot.selection;
    if (!grid || !sel) {
      this.snapshot.highlighted = new Set();
      return;
    }
    const covered = tilesCovering(grid, new Set(sel));
    this.snapshot.highlighted = new Set(covered.map(tileKey));
  }

  /** Scene inspector: pick an object, fetch its live detection view. */
  async inspect(objectId: string): Promise<SceneView> {
    this.store.update({ activeObject: objectId });
    const scene = await this.api.scene(objectId);
    this.snapshot.scene = scene;
    this.snapshot.walk = null;
    return scene;
  }

  /** Adversarial-walk strip for the active object. */
  async loadWalk(multipliers: number[]): Promise<WalkStrip> {
    const objectId = this.store.get().activeObject;
    if (!objectId) throw new Error("no active object to walk");
    const resp = await this.api.walk(objectId, multipliers);
    const strip = walkStrip(resp);
    this.snapshot.walk = strip;
    return strip;
  }

  async zoomTo(range: [number, number, number, number]): Promise<void> {
    this.store.update({ viewRange: range });
    await this.reloadTiles();
  }
}

function countMembers(grid: TileGrid): number {
  const all = new Set<string>();
  for (const t of grid.tiles) for (const m of t.members) all.add(m);
  return all.size;
}
