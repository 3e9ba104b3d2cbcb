"""Workspace lifecycle on a miniature configuration."""

import json

import numpy as np
import pytest

from lightbench.workspace import Workspace, WorkspaceError


MINI_CONFIG = {
    "train": {"n_scenes": 10},
    "test": {"n_scenes": 6,
             "class_dim_overrides": {
                 "red": {"brightness": {"mean": 1.9, "std": 0.35,
                                         "lo": 1.0, "hi": 2.8}}}},
    "attack": {"t_max": 120},
    "augment": {
        "dist": {"selection": {"1": [-2.0, 2.0]}, "k": 2},
        "va": {"selection": {"1": [-1.3, -0.3]}, "frozen_dims": [3],
               "extra_random_frozen": 2, "n_per_object": 1},
    },
    "experiment": {"trials": 2},
    "texture_seed": 0,
}


@pytest.fixture(scope="module")
def mini_ws(tmp_path_factory):
    root = tmp_path_factory.mktemp("ws")
    ws = Workspace.init(root, seed=5, config=MINI_CONFIG)
    ws.generate()
    ws.detect()
    return ws


def test_init_twice_fails(tmp_path):
    Workspace.init(tmp_path / "w", seed=1)
    with pytest.raises(WorkspaceError):
        Workspace.init(tmp_path / "w", seed=1)


def test_generate_idempotent(mini_ws):
    msg = mini_ws.generate()
    assert "exists" in msg


def test_reload_value_identical(mini_ws):
    ws2 = Workspace.open(mini_ws.root)
    assert len(ws2.train.objects) == len(mini_ws.train.objects)
    for a, b in zip(ws2.train.objects, mini_ws.train.objects):
        assert a.object_id == b.object_id
        assert np.array_equal(a.latent, b.latent)
        assert a.score == b.score
        assert a.cls == b.cls
    for sa, sb in zip(ws2.train.scenes, mini_ws.train.scenes):
        assert np.array_equal(sa.pixels, sb.pixels)


def test_summary_counts(mini_ws):
    s = mini_ws.summary()
    assert s["objects"] == len(mini_ws.train.objects) + len(mini_ws.test.objects)
    assert s["fn1"] + s["fn2"] <= s["objects"]
    assert s["detections"] > 0


def test_filter_rows_cover_objects(mini_ws):
    rows = mini_ws.filter_rows()
    object_rows = [r for r in rows if r.kind == "object"]
    assert len(object_rows) == len(mini_ws.objects())
    for r in object_rows:
        assert r.outcome in ("TP", "FN-I", "FN-II", "UNMATCHED")


def test_attack_then_reload(mini_ws):
    msg = mini_ws.attack()
    assert "attacked" in msg
    assert mini_ws.adversarials
    split = mini_ws.manifest["adversarial_split"]
    assert set(split["train"]).isdisjoint(split["test"])
    succ = [r.object_id for r in mini_ws.adversarials if r.status == "success"]
    assert set(split["train"]) | set(split["test"]) == set(succ)

    ws2 = Workspace.open(mini_ws.root)
    assert len(ws2.adversarials) == len(mini_ws.adversarials)
    a = next(r for r in ws2.adversarials if r.status == "success")
    b = next(r for r in mini_ws.adversarials if r.object_id == a.object_id)
    assert np.array_equal(a.z_final, b.z_final)
    assert np.array_equal(a.adversarial_patch.pixels,
                          b.adversarial_patch.pixels)
    # attack is a no-op the second time
    assert "exists" in mini_ws.attack()


def test_experiment_report_written(mini_ws):
    rep = mini_ws.run_experiment_strategy("dist", trials=2, seed=5)
    assert len(rep.trials) == 2
    out = json.loads((mini_ws.root / "reports/experiment-dist.json").read_text())
    assert out["strategy"] == "dist"
    assert (mini_ws.root / "reports/experiment-dist.txt").exists()


def test_single_trial_zero_std(mini_ws):
    rep = mini_ws.run_experiment_strategy("dist", trials=1, seed=9)
    s = rep.summary()
    assert s["trials"]["overall"]["std"] == 0.0


def test_baseline_rows_identical_across_strategies(mini_ws):
    rep1 = mini_ws.run_experiment_strategy("dist", trials=2, seed=5)
    rep2 = mini_ws.run_experiment_strategy("glb-adv", trials=2, seed=5)
    b1 = [(t.ap_overall, t.ap_per_class) for t in rep1.baseline]
    b2 = [(t.ap_overall, t.ap_per_class) for t in rep2.baseline]
    assert b1 == b2


def test_open_missing_workspace(tmp_path):
    with pytest.raises(WorkspaceError):
        Workspace.open(tmp_path / "nope")
