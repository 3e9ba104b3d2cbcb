#!/usr/bin/env python3
"""Regenerate the frontend test fixtures from the real backend.

Analytics fixtures (tiles, rank, bars, dimtree) come from the actual
aggregation/ranking code over a planted-cluster latent sample; scene and
walk fixtures come from a live mini-workspace served through the real API.

Usage: python scripts/make_ui_fixtures.py [OUTPUT_DIR]
"""
import json
import sys
from pathlib import Path

import numpy as np

OUT = Path(sys.argv[1] if len(sys.argv) > 1 else "frontend/test/fixtures")


def planted_records():
    from lightbench.boxes import Box
    from lightbench.scenes import ObjectRecord

    rng = np.random.default_rng(99)
    records = []
    for i in range(400):
        z = rng.standard_normal(32)
        if i < 100:
            z[5] = rng.normal(2.2, 0.3)  # the planted cluster dimension
        else:
            z[5] = rng.normal(-0.4, 0.6)
        records.append(ObjectRecord(
            object_id=f"fx:{i:04d}", scene_id="fx", gt_box=Box(0, 0, 5, 15),
            cls="red" if i < 100 else "green", size=15.0,
            footprint=Box(0, 0, 10, 10), latent=z,
            score=float(np.clip(rng.normal(0.45 if i < 100 else 0.75, 0.08),
                                0, 1))))
    return records


def analytics_fixtures():
    from lightbench.cluster import cluster_dimensions
    from lightbench.ranking import rank_to_interpret
    from lightbench.tiles import bin_dimension, build_tiles

    records = planted_records()
    grid = build_tiles(records, "dim:5", "dim:1", (-4, 4, -4, 4), 8)
    (OUT / "tiles.json").write_text(json.dumps(grid.to_dict(), indent=1))

    # the lasso the UI test draws: every tile whose x-bin spans dim5 > 1
    selected_ids = sorted({m for t in grid.tiles
                           for m in t.members
                           if -4 + (t.ix + 0.0) / 8 * 8 >= 1.0})
    mask = np.array([r.object_id in set(selected_ids) for r in records])
    latents = np.array([r.latent for r in records])
    ranking = rank_to_interpret(latents, mask, seed=0)
    (OUT / "rank.json").write_text(json.dumps(
        {"request_ids": selected_ids, "response": ranking.to_dict()}, indent=1))

    bar = bin_dimension(records, "dim:5", 10, reference=records, seed=0)
    (OUT / "bars.json").write_text(json.dumps(bar.to_dict(), indent=1))
    tree = cluster_dimensions(latents)
    (OUT / "dimtree.json").write_text(json.dumps(tree.to_dict(), indent=1))


def workspace_fixtures():
    from fastapi.testclient import TestClient

    from lightbench.attack import AttackParams, attack
    from lightbench.server import create_app
    from lightbench.workspace import Workspace
    import tempfile

    cfg = {"train": {"n_scenes": 6}, "test": {"n_scenes": 3},
           "attack": {"t_max": 40, "k": 64},
           "augment": {"dist": {"selection": {"1": [-4.0, 4.0]}, "k": 1},
                       "va": {"selection": {"1": [-1.3, -0.3]},
                              "frozen_dims": [3], "extra_random_frozen": 2,
                              "n_per_object": 1}},
           "experiment": {"trials": 1}, "texture_seed": 0}
    root = tempfile.mkdtemp(prefix="fixture_ws_")
    ws = Workspace.init(root, seed=31, config=cfg)
    ws.generate()
    ws.detect()
    # give one detected object a real gradient via a short attack
    target = next(o for o in ws.train.objects if (o.score or 0) >= 0.55)
    scene = ws.train.scene_by_id(target.scene_id)
    res = attack(target, scene, ws.detector(), ws.train.codec,
                 params=AttackParams(k=64, t_max=40, seed=31))
    target.gradient = res.gradient

    client = TestClient(create_app(ws))
    (OUT / "summary.json").write_text(json.dumps(
        client.get("/summary").json(), indent=1))
    (OUT / "histogram.json").write_text(json.dumps(
        client.get("/histograms", params={"metric": "confidence"}).json(),
        indent=1))
    scene_body = client.get(f"/scene/{target.object_id}").json()
    scene_body["image_p6"] = scene_body["image_p6"][:64] + "..."  # trim bulk
    (OUT / "scene.json").write_text(json.dumps(scene_body, indent=1))
    walk = client.post("/walk", json={
        "object_id": target.object_id,
        "multipliers": [-1.0, -0.5, 0.0, 0.5, 1.0]}).json()
    for p in walk["points"]:
        p["patch_p6"] = p["patch_p6"][:64] + "..."
    walk["stored_score"] = target.score
    (OUT / "walk.json").write_text(json.dumps(walk, indent=1))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    analytics_fixtures()
    workspace_fixtures()
    print(f"fixtures written to {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
