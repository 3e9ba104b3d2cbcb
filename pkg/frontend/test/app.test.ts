/** Coordinated-view round trips against real-backend fixtures, including
 * the lasso -> rank -> highlight loop the workbench is built around. */

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Controller, tileKey } from "../src/app.js";
import { lassoSelect } from "../src/tiles.js";
import type {
  DimTree, Ranking, SceneView, Summary, TileGrid, WalkResponse,
} from "../src/types.js";
import { fixture, fixtureFetch } from "./helpers.js";

const grid = fixture<TileGrid>("tiles.json");
const tree = fixture<DimTree>("dimtree.json");
const rankFixture = fixture<{ request_ids: string[]; response: Ranking }>("rank.json");
const summary = fixture<Summary>("summary.json");
const scene = fixture<SceneView>("scene.json");
const walk = fixture<WalkResponse & { stored_score: number }>("walk.json");

function makeController() {
  const { fetch, calls } = fixtureFetch({
    "/summary": summary,
    "/dimtree": tree,
    "/tiles": grid,
    "/rank": (body: unknown) => {
      const ids = (body as { ids: string[] }).ids;
      expect([...ids].sort()).toEqual(rankFixture.request_ids);
      return rankFixture.response;
    },
    [`/scene/${encodeURIComponent(scene.gt_boxes[0]!.id)}`]: scene,
    "/walk": walk,
    "/filter": { ids: rankFixture.request_ids, count: rankFixture.request_ids.length },
  });
  return { controller: new Controller(new ApiClient("", fetch)), calls };
}

const PLANTED_LASSO: [number, number][] = [[1, -4.5], [4.5, -4.5], [4.5, 4.5], [1, 4.5]];

describe("coordinated views", () => {
  it("start loads summary, tree and tiles", async () => {
    const { controller } = makeController();
    await controller.start();
    const snap = controller.view();
    expect(snap.summary?.objects).toBe(summary.objects);
    expect(snap.grid?.tiles.length).toBe(grid.tiles.length);
    expect(snap.tree?.root).toBe(tree.root);
  });

  it("lasso over the planted cluster ranks that dimension first and "
     + "highlights >= 90% of the selected tiles", async () => {
    const { controller } = makeController();
    await controller.start();
    const ranking = await controller.lasso(PLANTED_LASSO);
    expect(ranking).not.toBeNull();
    // the planted dimension comes back first
    expect(ranking!.entries[0]![0]).toBe("dim:5");

    const snap = controller.view();
    const selected = lassoSelect(grid, PLANTED_LASSO).tiles;
    const highlighted = snap.highlighted;
    const covered = selected.filter((t) => highlighted.has(tileKey(t)));
    expect(covered.length / selected.length).toBeGreaterThanOrEqual(0.9);
  });

  it("empty lasso clears the selection", async () => {
    const { controller } = makeController();
    await controller.start();
    const out = await controller.lasso([[50, 50], [51, 50], [51, 51]]);
    expect(out).toBeNull();
    expect(controller.view().selection).toBeNull();
  });

  it("axis assignment reloads tiles with the chosen dimension", async () => {
    const { controller, calls } = makeController();
    await controller.start();
    await controller.assignAxis("x", "dim:5");
    const tileCalls = calls.filter((c) => c.url.startsWith("/tiles"));
    expect(tileCalls[tileCalls.length - 1]!.url).toContain("x=dim%3A5");
  });

  it("preset filters resolve to ids and highlight their tiles", async () => {
    const { controller } = makeController();
    await controller.start();
    await controller.applyPreset("fp");
    const snap = controller.view();
    expect(snap.selection).toEqual(rankFixture.request_ids);
    expect(snap.highlighted.size).toBeGreaterThan(0);
  });

  it("scene inspection and the walk strip reproduce the stored score "
     + "at multiplier zero", async () => {
    const { controller } = makeController();
    await controller.start();
    const view = await controller.inspect(scene.gt_boxes[0]!.id);
    expect(view.scene_id).toBe(scene.scene_id);
    const strip = await controller.loadWalk([-1, -0.5, 0, 0.5, 1]);
    const zero = strip.points[strip.zeroIndex]!;
    expect(Math.abs(zero.score - walk.stored_score)).toBeLessThan(0.05);
  });

  it("stale tile responses never overwrite newer ones", async () => {
    const { controller } = makeController();
    await controller.start();
    // two overlapping reloads: the slower first call must not clobber
    const first = controller.reloadTiles();
    const second = controller.reloadTiles();
    await Promise.all([first, second]);
    expect(controller.view().grid).not.toBeNull();
  });
});
