"""Dataset-level attack orchestration with per-scene parallelism.

Attacks on distinct objects are independent (each owns its rng stream and
queries a pure detector), so scenes are farmed out to worker processes.
Workers rebuild the codec from its constructor arguments; results come
back in deterministic object order.
"""

from __future__ import annotations

import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .attack import AdversarialResult, AttackParams, attack
from .boxes import Box
from .codec import TrafficLightCodec
from .detectors import DetectorHandle, TrainableDetectorState, make_heuristic_detector, make_trainable_detector
from .latent import LatentStats
from .scenes import Dataset, ObjectRecord, SceneImage


def rebuild_detector(spec: tuple) -> DetectorHandle:
    kind, weights = spec
    if kind == "heuristic":
        return make_heuristic_detector()
    if kind == "trainable":
        return make_trainable_detector(TrainableDetectorState(np.asarray(weights)))
    raise ValueError(f"cannot rebuild detector kind {kind!r}")


def detector_spec(detector: DetectorHandle) -> tuple:
    if detector.kind == "heuristic":
        return ("heuristic", None)
    if detector.kind == "trainable":
        return ("trainable", detector.weights)
    raise ValueError(f"detector kind {detector.kind!r} cannot run in workers")


def _attack_scene(task):
    (pixels, scene_id, scene_seed, objects_data, det_spec,
     codec_args, params) = task
    codec = TrafficLightCodec(codec_args["dim"],
                              LatentStats(codec_args["mean"], codec_args["std"]),
                              codec_args["texture_seed"])
    detector = rebuild_detector(det_spec)
    scene = SceneImage(scene_id, pixels, scene_seed)
    results = []
    for oid, gt, fp, latent in objects_data:
        obj = ObjectRecord(object_id=oid, scene_id=scene_id, gt_box=Box(*gt),
                           cls="", size=gt[3], footprint=Box(*fp),
                           latent=np.asarray(latent))
        results.append(attack(obj, scene, detector, codec, params=params))
    return results


def attack_all(dataset: Dataset, detector: DetectorHandle,
               params: AttackParams | None = None,
               objects: list[ObjectRecord] | None = None,
               max_workers: int | None = None,
               parallel: bool = True,
               progress: bool = False) -> list[AdversarialResult]:
    """Attack every object (or the given subset).

    Built-in detectors parallelize the K probe queries of each step across
    numba threads (objects run in sequence, each attack using all cores);
    other detector kinds fall back to one process per scene.
    """
    params = params or AttackParams()
    objs = objects if objects is not None else dataset.objects
    by_scene: dict[str, list[ObjectRecord]] = {}
    for o in objs:
        by_scene.setdefault(o.scene_id, []).append(o)

    if detector.supports_fused_probes:
        results: list[AdversarialResult] = []
        done = 0
        for scene in dataset.scenes:
            for o in by_scene.get(scene.scene_id, ()):
                results.append(attack(o, scene, detector, dataset.codec,
                                      params=params))
                done += 1
                if progress and done % 50 == 0:
                    print(f"  attacked {done}/{len(objs)} objects", flush=True)
        return results

    codec_args = {"dim": dataset.codec.dim, "mean": dataset.stats.mean,
                  "std": dataset.stats.std,
                  "texture_seed": dataset.codec.texture_seed}
    tasks = []
    for scene in dataset.scenes:
        if scene.scene_id not in by_scene:
            continue
        objects_data = [(o.object_id, o.gt_box.as_tuple(), o.footprint.as_tuple(),
                         o.latent) for o in by_scene[scene.scene_id]]
        tasks.append((scene.pixels, scene.scene_id, scene.seed, objects_data,
                      detector_spec(detector), codec_args, params))

    if not parallel or len(tasks) <= 1:
        out: list[AdversarialResult] = []
        for t in tasks:
            out.extend(_attack_scene(t))
        return out

    # heaviest scenes first to keep the worker tail short
    order = sorted(range(len(tasks)), key=lambda i: -len(tasks[i][3]))
    workers = max_workers or max(os.cpu_count() or 1, 1)
    ctx = mp.get_context("fork")
    chunks: dict[int, list[AdversarialResult]] = {}
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        for idx, chunk in zip(order, pool.map(_attack_scene,
                                              [tasks[i] for i in order],
                                              chunksize=1)):
            chunks[idx] = chunk
    results: list[AdversarialResult] = []
    for i in range(len(tasks)):
        results.extend(chunks[i])
    return results
