"""Adversarial search semantics: closed-form synthetic detector, budget and
frozen-dimension soundness, replay, determinism, query accounting."""

import numpy as np
import pytest

from lightbench.attack import (AttackParams, _ComposedQuery, adversarial_walk,
                               attack, detector_robustness, object_robustness)
from lightbench.boxes import Box
from lightbench.compose import insert_patch
from lightbench.detectors import DetectorHandle, detection_score, make_heuristic_detector
from lightbench.evaluation import DetectionRecord
from lightbench.scenes import DatasetConfig, DimSpec, generate_dataset


def logistic_brightness_detector(gt_box: Box, footprint: Box) -> DetectorHandle:
    """Pixels-only test double: confidence = sigmoid(8 * b_est + 2), where
    b_est inverts the lamp-value mapping from the brightest central pixel."""

    def query(pixels):
        x0 = int(footprint.x + footprint.w * 0.38)
        x1 = int(footprint.x + footprint.w * 0.62)
        y0 = int(footprint.y + footprint.h * 0.38)
        y1 = int(footprint.y + footprint.h * 0.62)
        v = float(pixels[y0:y1, x0:x1].max())
        b_est = (v - 0.55) / 0.2
        conf = 1.0 / (1.0 + np.exp(-(8.0 * b_est + 2.0)))
        return [DetectionRecord(box=gt_box,
                                scores={"red": conf, "green": 0.0,
                                        "yellow": 0.0, "off": 0.0})]

    return DetectorHandle(kind="synthetic", query=query)


@pytest.fixture(scope="module")
def single_object():
    cfg = DatasetConfig(n_scenes=1, lights_min=1, lights_max=1,
                        max_cars=0, max_signs=0, size_min=44, size_max=44,
                        class_mix={"red": 1.0},
                        class_dim_overrides={
                            "red": {"brightness": DimSpec(0.1, 0.01, 0.05, 0.15)}})
    ds = generate_dataset(cfg, seed=5)
    assert len(ds.objects) == 1
    return ds


def test_attack_crosses_closed_form_threshold(single_object):
    ds = single_object
    obj, scene = ds.objects[0], ds.scenes[0]
    det = logistic_brightness_detector(obj.gt_box, obj.footprint)
    res = attack(obj, scene, det, ds.codec,
                 params=AttackParams(k=128, seed=3))
    assert res.status == "success"
    # sigmoid(8 b + 2) crosses 0.5 at b = -0.25
    assert res.z_final[1] <= -0.2
    others = np.abs(res.epsilon[np.arange(32) != 1])
    assert others.max() < 0.2
    assert res.final_score < 0.5


def test_already_failed_no_queries(single_object):
    ds = single_object
    obj, scene = ds.objects[0], ds.scenes[0]

    def query(pixels):
        return [DetectionRecord(box=obj.gt_box,
                                scores={"red": 0.3, "green": 0, "yellow": 0,
                                        "off": 0})]

    det = DetectorHandle(kind="synthetic", query=query)
    res = attack(obj, scene, det, ds.codec, params=AttackParams(k=64, seed=0))
    assert res.status == "already_failed"
    assert res.epsilon is None
    assert res.robustness is None
    assert res.queries == 1  # only the initial check


def test_frozen_dimension_blocks_attack(single_object):
    ds = single_object
    obj, scene = ds.objects[0], ds.scenes[0]
    det = logistic_brightness_detector(obj.gt_box, obj.footprint)
    res = attack(obj, scene, det, ds.codec,
                 params=AttackParams(k=64, t_max=30, seed=3,
                                     frozen_dims=frozenset({1})))
    assert res.status == "budget_failure"
    assert res.robustness == 1.0
    assert np.all(res.epsilon == 2.0)  # the budget fallback convention


def test_budget_and_frozen_invariants(single_object):
    ds = single_object
    obj, scene = ds.objects[0], ds.scenes[0]
    det = logistic_brightness_detector(obj.gt_box, obj.footprint)
    res = attack(obj, scene, det, ds.codec,
                 params=AttackParams(k=96, seed=11, budget=0.3,
                                     frozen_dims=frozenset({4, 9})))
    if res.status == "success":
        assert np.abs(res.epsilon).max() <= 0.3 + 1e-9
        assert res.epsilon[4] == 0.0 and res.epsilon[9] == 0.0


def test_determinism(single_object):
    ds = single_object
    obj, scene = ds.objects[0], ds.scenes[0]
    det = logistic_brightness_detector(obj.gt_box, obj.footprint)
    p = AttackParams(k=64, seed=21)
    r1 = attack(obj, scene, det, ds.codec, params=p)
    r2 = attack(obj, scene, det, ds.codec, params=p)
    assert r1.status == r2.status
    assert np.array_equal(r1.z_final, r2.z_final)
    assert r1.step_trace == r2.step_trace


def test_query_accounting(single_object):
    ds = single_object
    obj, scene = ds.objects[0], ds.scenes[0]
    det = logistic_brightness_detector(obj.gt_box, obj.footprint)
    res = attack(obj, scene, det, ds.codec, params=AttackParams(k=64, seed=3))
    assert res.queries == 1 + res.steps_used * (64 + 1)


def test_attack_on_heuristic_replays(heuristic, scored_dataset):
    ds = scored_dataset
    target = next(o for o in ds.objects if (o.score or 0) >= 0.6)
    scene = ds.scene_by_id(target.scene_id)
    res = attack(target, scene, heuristic, ds.codec,
                 params=AttackParams(seed=7))
    assert res.status == "success"
    composed = insert_patch(scene.pixels, res.adversarial_patch, target.footprint)
    replay = detection_score(heuristic, composed, target.gt_box)
    assert replay == pytest.approx(res.final_score)
    assert replay < 0.5
    # semantic movement dominates nuisance drift
    eps = np.abs(res.epsilon)
    assert eps[:7].mean() > 3 * eps[7:].mean()


def test_fused_equals_generic(heuristic, scored_dataset):
    ds = scored_dataset
    target = next(o for o in ds.objects if (o.score or 0) >= 0.6)
    scene = ds.scene_by_id(target.scene_id)
    q = _ComposedQuery(scene, target, heuristic, ds.codec)
    rng = np.random.default_rng(0)
    zs = target.latent[None, :] + 0.5 * rng.standard_normal((40, 32))
    fused = q.score_batch(zs)
    manual = np.empty(40)
    for i, z in enumerate(zs):
        patch = ds.codec.decode(z)
        composed = insert_patch(scene.pixels, patch, target.footprint)
        manual[i] = detection_score(heuristic, composed, target.gt_box)
    assert np.array_equal(fused, manual)


# ---- robustness scores ------------------------------------------------------

def test_object_robustness_examples():
    assert object_robustness(np.zeros(32), 2.0, 32) == 0.0
    assert object_robustness(np.full(32, 2.0), 2.0, 32) == pytest.approx(1.0)
    eps = np.zeros(32)
    eps[3] = 2.0
    assert object_robustness(eps, 2.0, 32) == pytest.approx(1 / 32)


def test_object_robustness_validation():
    with pytest.raises(ValueError):
        object_robustness(np.zeros(8), 2.0, 32)
    with pytest.raises(ValueError):
        object_robustness(np.full(32, 3.0), 2.0, 32)


def test_detector_robustness():
    from lightbench.attack import AdversarialResult

    def mk(rb):
        return AdversarialResult(object_id="x", status="success",
                                 z0=np.zeros(2), z_final=np.zeros(2),
                                 epsilon=np.zeros(2), gradient=None,
                                 adversarial_patch=None, final_score=0.4,
                                 steps_used=1, queries=1, robustness=rb)

    assert detector_robustness([mk(1.0), mk(1.0)]) == 1.0
    assert detector_robustness([mk(0.2), mk(0.4)]) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        detector_robustness([])


def test_detector_robustness_matches_recomputation():
    from lightbench.attack import AdversarialResult

    rng = np.random.default_rng(4)
    results = []
    for i in range(10):
        eps = np.clip(rng.normal(0, 0.5, 32), -2, 2)
        results.append(AdversarialResult(
            object_id=str(i), status="success", z0=np.zeros(32),
            z_final=eps, epsilon=eps, gradient=None, adversarial_patch=None,
            final_score=0.4, steps_used=1, queries=1,
            robustness=object_robustness(eps, 2.0, 32)))
    recomputed = np.mean([np.abs(r.epsilon).sum() / (2.0 * 32) for r in results])
    assert detector_robustness(results) == pytest.approx(recomputed)


# ---- adversarial walk -------------------------------------------------------

def test_walk_identity_point(single_object):
    ds = single_object
    obj, scene = ds.objects[0], ds.scenes[0]
    det = logistic_brightness_detector(obj.gt_box, obj.footprint)
    base = detection_score(det, scene.pixels, obj.gt_box)
    grad = np.zeros(32)
    grad[1] = 1.0
    points = adversarial_walk(obj, scene, det, ds.codec, grad, [0.0])
    assert points[0][1] == pytest.approx(base, abs=0.05)


def test_walk_monotone_on_logistic(single_object):
    ds = single_object
    obj, scene = ds.objects[0], ds.scenes[0]
    det = logistic_brightness_detector(obj.gt_box, obj.footprint)
    grad = np.zeros(32)
    grad[1] = 1.0  # score gradient points up the brightness dim
    points = adversarial_walk(obj, scene, det, ds.codec, grad,
                              [0.0, 0.5, 1.0, 1.5, 2.0])
    scores = [s for _, s in points]
    for a, b in zip(scores, scores[1:]):
        assert b <= a + 0.02


def test_walk_identical_multipliers_identical_patches(single_object):
    ds = single_object
    obj, scene = ds.objects[0], ds.scenes[0]
    det = logistic_brightness_detector(obj.gt_box, obj.footprint)
    grad = np.zeros(32)
    grad[1] = 1.0
    points = adversarial_walk(obj, scene, det, ds.codec, grad, [0.7, 0.7, 0.7])
    assert np.array_equal(points[0][0].pixels, points[1][0].pixels)
    assert np.array_equal(points[1][0].pixels, points[2][0].pixels)


def test_walk_zero_gradient_rejected(single_object):
    ds = single_object
    obj, scene = ds.objects[0], ds.scenes[0]
    det = logistic_brightness_detector(obj.gt_box, obj.footprint)
    with pytest.raises(ValueError):
        adversarial_walk(obj, scene, det, ds.codec, np.zeros(32), [0.0])
