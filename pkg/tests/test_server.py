"""API surface over a miniature workspace."""

import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from lightbench.server import create_app
from lightbench.workspace import Workspace

MINI_CONFIG = {
    "train": {"n_scenes": 12},
    "test": {"n_scenes": 6},
    "attack": {"t_max": 100},
    "augment": {"dist": {"selection": {"1": [-2.0, 2.0]}, "k": 2},
                "va": {"selection": {"1": [-1.3, -0.3]}, "frozen_dims": [3],
                       "extra_random_frozen": 2, "n_per_object": 1}},
    "experiment": {"trials": 1},
    "texture_seed": 0,
}


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    root = tmp_path_factory.mktemp("api_ws")
    ws = Workspace.init(root, seed=13, config=MINI_CONFIG)
    ws.generate()
    ws.detect()
    return TestClient(create_app(ws))


def test_summary_counts(client):
    r = client.get("/summary")
    assert r.status_code == 200
    body = r.json()
    assert body["objects"] > 0
    assert body["detections"] > 0
    assert body["fn1"] >= 0 and body["fn2"] >= 0


def test_histograms(client):
    r = client.get("/histograms", params={"metric": "confidence"})
    assert r.status_code == 200
    body = r.json()
    assert len(body["edges"]) == len(body["counts"]) + 1


def test_histogram_bad_metric(client):
    assert client.get("/histograms", params={"metric": "sparkle"}).status_code == 422


def test_filter_roundtrip(client):
    r = client.post("/filter", json={"intervals": {"confidence": [0.5, 1.0]}})
    assert r.status_code == 200
    assert r.json()["count"] == len(r.json()["ids"])


def test_filter_contradictory_rejected(client):
    r = client.post("/filter", json={"intervals": {"size": [5, 1]}})
    assert r.status_code == 422


def test_filter_preset(client):
    r = client.post("/filter", json={"preset": "fn1"})
    assert r.status_code == 200


def test_tiles_single_bin(client):
    ws = client.app.state.workspace
    r = client.get("/tiles", params={"x": "pca:0", "y": "pca:1", "bins": 1,
                                     "x_lo": -50, "x_hi": 50, "y_lo": -50,
                                     "y_hi": 50, "split": "train"})
    assert r.status_code == 200
    body = r.json()
    assert len(body["tiles"]) == 1
    assert body["tiles"][0]["count"] == len(ws.train.objects)


def test_tiles_degenerate_range(client):
    r = client.get("/tiles", params={"x": "dim:0", "y": "dim:1",
                                     "x_lo": 1, "x_hi": 1})
    assert r.status_code == 422


def test_bars(client):
    r = client.get("/bars", params={"dim": "dim:1", "bins": 8})
    assert r.status_code == 200
    body = r.json()
    assert len(body["counts"]) == 8
    assert len(body["background_counts"]) == 8


def test_dimtree(client):
    r = client.get("/dimtree")
    assert r.status_code == 200
    labels = [n["label"] for n in r.json()["nodes"] if n["label"]]
    assert "pca:0" in labels and "dim:0" in labels


def test_rank_planted_selection(client):
    ws = client.app.state.workspace
    objects = ws.objects("train")
    ids = [o.object_id for o in objects if o.latent[1] > 0]
    r = client.post("/rank", json={"ids": ids, "split": "train"})
    assert r.status_code == 200
    assert r.json()["entries"][0][0] == "dim:1"


def test_rank_trivial_selection_rejected(client):
    assert client.post("/rank", json={"ids": [], "split": "train"}).status_code == 422


def test_scene_view(client):
    ws = client.app.state.workspace
    obj = ws.train.objects[0]
    r = client.get(f"/scene/{obj.object_id}")
    assert r.status_code == 200
    body = r.json()
    assert body["image_p6"].startswith("UDY")  # base64 of "P6"
    assert any(g["id"] == obj.object_id for g in body["gt_boxes"])


def test_scene_missing(client):
    assert client.get("/scene/nope").status_code == 404


def test_walk_without_gradient_rejected(client):
    ws = client.app.state.workspace
    obj = ws.train.objects[0]
    obj.gradient = None
    r = client.post("/walk", json={"object_id": obj.object_id,
                                   "multipliers": [0.0]})
    assert r.status_code == 422


def test_walk_with_gradient(client):
    ws = client.app.state.workspace
    obj = next(o for o in ws.train.objects if (o.score or 0) > 0.5)
    obj.gradient = np.zeros(32)
    obj.gradient[1] = 1.0
    r = client.post("/walk", json={"object_id": obj.object_id,
                                   "multipliers": [0.0, 0.5]})
    assert r.status_code == 200
    pts = r.json()["points"]
    assert len(pts) == 2
    assert abs(pts[0]["score"] - obj.score) < 0.05


def test_job_lifecycle(client):
    r = client.post("/jobs", json={"kind": "rank",
                                   "params": {"ids": [
                                       o.object_id for o in
                                       client.app.state.workspace.train.objects[:3]]}})
    assert r.status_code == 200
    jid = r.json()["job_id"]
    for _ in range(100):
        status = client.get(f"/jobs/{jid}").json()
        if status["status"] in ("done", "failed"):
            break
        time.sleep(0.05)
    assert status["status"] == "done"
    assert status["result"]["entries"]


def test_job_unknown_kind(client):
    assert client.post("/jobs", json={"kind": "nonsense"}).status_code == 422


def test_job_missing(client):
    assert client.get("/jobs/zzz").status_code == 404
