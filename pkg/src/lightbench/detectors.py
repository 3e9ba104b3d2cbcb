"""Black-box detectors and the in-scene detection score.

A DetectorHandle is an opaque, pure function from scene pixels to
detections; it never sees latents or ground truth. Two built-in kinds:

  heuristic -- frozen pipeline (saturation/brightness proposals, dark-region
               growth, logistic scoring with fixed constants),
  trainable -- same proposal stage, per-class logistic scorer on a 4x4 grid
               of mean-RGB features, trained by mini-batch gradient descent.

detection_score implements the in-scene score: the maximum top confidence
over detections overlapping the ground-truth box at IoU >= 0.5, else 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as K
from .boxes import Box, iou
from .evaluation import CLASSES, DetectionRecord

N_FEATURES = K.N_GRID_FEATURES  # 48 = 4x4 cells x mean RGB
N_WEIGHTS = N_FEATURES + 1


@dataclass
class DetectorHandle:
    """Opaque query interface: scene pixels -> detections.

    ``weights`` is only populated for the trainable kind; the fused attack
    path uses (kind, weights) to run the same pipeline inside compiled code.
    """

    kind: str
    query: Callable[[np.ndarray], list[DetectionRecord]]
    weights: np.ndarray | None = None

    def detect(self, scene_pixels: np.ndarray) -> list[DetectionRecord]:
        return self.query(scene_pixels)

    @property
    def supports_fused_probes(self) -> bool:
        return self.kind in ("heuristic", "trainable")


def _records_from_arrays(boxes: np.ndarray, scores: np.ndarray, n: int) -> list[DetectionRecord]:
    out = []
    for i in range(n):
        out.append(DetectionRecord(
            box=Box(float(boxes[i, 0]), float(boxes[i, 1]),
                    float(boxes[i, 2]), float(boxes[i, 3])),
            scores={c: float(scores[i, j]) for j, c in enumerate(CLASSES)},
        ))
    return out


def heuristic_detect(scene_pixels: np.ndarray) -> list[DetectionRecord]:
    scene = np.ascontiguousarray(scene_pixels, dtype=np.float32)
    boxes = np.empty((K.MAX_DETECTIONS, 4), np.float64)
    scores = np.empty((K.MAX_DETECTIONS, K.N_CLASSES), np.float64)
    n = K.detect_heuristic_core(scene, boxes, scores)
    return _records_from_arrays(boxes, scores, n)


def make_heuristic_detector() -> DetectorHandle:
    return DetectorHandle(kind="heuristic", query=heuristic_detect)


# ---------------------------------------------------------------------------
# trainable detector

@dataclass
class TrainConfig:
    learning_rate: float = 0.4  # peak; decays linearly to lr_floor
    lr_floor: float = 0.01
    epochs: int = 600
    batch_size: int = 64
    seed: int = 0
    negatives_per_positive: int = 3
    weight_decay: float = 2e-3


@dataclass
class TrainableDetectorState:
    """Per-class logistic regression over grid features."""

    weights: np.ndarray  # (n_classes, N_WEIGHTS)
    config: TrainConfig = field(default_factory=TrainConfig)
    loss_curve: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (len(CLASSES), N_WEIGHTS):
            raise ValueError(f"weights must be {(len(CLASSES), N_WEIGHTS)}")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("non-finite weights")

    @classmethod
    def zeros(cls, config: TrainConfig | None = None) -> "TrainableDetectorState":
        return cls(np.zeros((len(CLASSES), N_WEIGHTS)),
                   config or TrainConfig())


def grid_features(scene_pixels: np.ndarray, box: Box) -> np.ndarray:
    scene = np.ascontiguousarray(scene_pixels, dtype=np.float32)
    out = np.empty(N_FEATURES, np.float64)
    K.grid_features_core(scene, float(box.x), float(box.y),
                         float(box.w), float(box.h), out)
    return out


@dataclass
class LabeledWindow:
    features: np.ndarray
    cls: str | None  # None for background windows


def sample_training_windows(scenes, objects, rng: np.random.Generator,
                            negatives_per_positive: int = 3) -> list[LabeledWindow]:
    """GT windows as positives plus random non-overlapping negatives."""
    by_scene: dict[str, list] = {}
    for o in objects:
        by_scene.setdefault(o.scene_id, []).append(o)
    windows: list[LabeledWindow] = []
    for scene in scenes:
        objs = by_scene.get(scene.scene_id, [])
        H, W = scene.pixels.shape[:2]
        for o in objs:
            windows.append(LabeledWindow(grid_features(scene.pixels, o.gt_box), o.cls))
        n_neg = len(objs) * negatives_per_positive
        tries = 0
        made = 0
        while made < n_neg and tries < n_neg * 30:
            tries += 1
            h = rng.uniform(12, 64)
            w = h / 3.0
            x = rng.uniform(0, W - w - 1)
            y = rng.uniform(0, H - h - 1)
            cand = Box(x, y, w, h)
            if any(iou(cand, o.gt_box) > 0.1 for o in objs):
                continue
            windows.append(LabeledWindow(grid_features(scene.pixels, cand), None))
            made += 1
    return windows


def train_detector(windows: list[LabeledWindow],
                   config: TrainConfig | None = None) -> TrainableDetectorState:
    """Mini-batch gradient descent on per-class binary cross-entropy.

    Features are standardized during optimization; the scaling folds back
    into the 48+1 weights afterwards, so scoring stays a single affine map
    over raw grid features.
    """
    config = config or TrainConfig()
    positives = [w for w in windows if w.cls is not None]
    if not positives:
        raise ValueError("no positive windows to train on")
    F = np.vstack([w.features for w in windows])
    mu = F.mean(axis=0)
    sd = F.std(axis=0)
    sd = np.where(sd < 1e-9, 1.0, sd)
    X = np.hstack([(F - mu) / sd, np.ones((len(windows), 1))])
    Y = np.zeros((len(windows), len(CLASSES)))
    for i, w in enumerate(windows):
        if w.cls is not None:
            Y[i, CLASSES.index(w.cls)] = 1.0
    rng = np.random.default_rng(config.seed)
    weights = np.zeros((len(CLASSES), N_WEIGHTS))
    n = len(windows)
    losses = []
    for epoch in range(config.epochs):
        # linear decay to the floor: the objective is convex, so finishing
        # with small steps lands every run at the same optimum
        lr = (config.learning_rate * (1 - epoch / config.epochs)
              + config.lr_floor)
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb, yb = X[idx], Y[idx]
            z = xb @ weights.T
            p = 1.0 / (1.0 + np.exp(-z))
            eps = 1e-12
            total += float(-np.sum(yb * np.log(p + eps) + (1 - yb) * np.log(1 - p + eps)))
            grad = (p - yb).T @ xb / len(idx) + config.weight_decay * weights
            weights -= lr * grad
        losses.append(total / n)
    # fold the standardization into the affine weights
    folded = np.empty_like(weights)
    folded[:, :N_FEATURES] = weights[:, :N_FEATURES] / sd
    folded[:, N_FEATURES] = weights[:, N_FEATURES] - (weights[:, :N_FEATURES] * (mu / sd)).sum(axis=1)
    return TrainableDetectorState(folded, config, losses)


def trainable_detect(state: TrainableDetectorState,
                     scene_pixels: np.ndarray) -> list[DetectionRecord]:
    scene = np.ascontiguousarray(scene_pixels, dtype=np.float32)
    boxes = np.empty((K.MAX_DETECTIONS, 4), np.float64)
    scores = np.empty((K.MAX_DETECTIONS, K.N_CLASSES), np.float64)
    n = K.detect_trainable_core(scene, state.weights, boxes, scores)
    return _records_from_arrays(boxes, scores, n)


def make_trainable_detector(state: TrainableDetectorState) -> DetectorHandle:
    return DetectorHandle(kind="trainable",
                          query=lambda s: trainable_detect(state, s),
                          weights=state.weights)


# ---------------------------------------------------------------------------

def detection_score(detector: DetectorHandle, scene_pixels: np.ndarray,
                    gt_box: Box) -> float:
    """In-scene score of a ground-truth box under the full pipeline."""
    best = 0.0
    for det in detector.detect(scene_pixels):
        if iou(det.box, gt_box) >= 0.5:
            best = max(best, det.top_confidence)
    return best
