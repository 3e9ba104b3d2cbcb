"""Semantic adversarial search: budget-clipped iterative latent descent
driven by NES gradient estimates of the in-scene detection score.

Per iteration the composed black box

    z -> detection_score(detector, insert(scene, decode(z), footprint), gt_box)

is probed K times, the latent moves against the estimated gradient, the
displacement from the start point is clipped per dimension to the budget,
frozen dimensions are pinned, and the step's own score is checked against
the 0.5 failure threshold. Objects already scoring below 0.5 are never
attacked. If the iteration budget runs out the displacement is recorded at
the full budget on every dimension, so the object's robustness is exactly 1.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .boxes import Box
from .codec import Patch, TrafficLightCodec
from .detectors import DetectorHandle, detection_score
from .latent import N_SEMANTIC, LatentStats
from .nes import gradient_from_scores, sample_directions
from .scenes import ObjectRecord, SceneImage
from .compose import insert_patch

FAIL_THRESHOLD = 0.5
NOOP_ABORT = 10  # consecutive no-movement steps before giving up early
BUDGET_TOL = 1e-9


@dataclass
class AttackParams:
    eta: float = 0.01
    k: int = 512
    delta: float = 0.5
    t_max: int = 500
    budget: float = 2.0  # per-dimension, standardized units
    frozen_dims: frozenset = field(default_factory=frozenset)
    seed: int = 0

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")
        if self.budget <= 0:
            raise ValueError("budget must be > 0")
        self.frozen_dims = frozenset(int(d) for d in self.frozen_dims)


@dataclass
class AdversarialResult:
    object_id: str
    status: str  # success | budget_failure | already_failed
    z0: np.ndarray
    z_final: np.ndarray
    epsilon: np.ndarray | None
    gradient: np.ndarray | None
    adversarial_patch: Patch | None
    final_score: float
    steps_used: int
    queries: int
    robustness: float | None
    step_trace: list = field(default_factory=list)  # (step, score, eps_l1, queries)


def attack_rng(seed: int, object_id: str) -> np.random.Generator:
    """One fixed stream per (seed, object id); stable across processes."""
    return np.random.default_rng(
        np.random.SeedSequence((seed, zlib.crc32(object_id.encode()))))


def object_robustness(epsilon: np.ndarray, budget: float, dim: int) -> float:
    """Normalized minimal-change size: mean |displacement| / budget."""
    epsilon = np.asarray(epsilon, dtype=np.float64)
    if epsilon.shape != (dim,):
        raise ValueError(f"epsilon must have shape ({dim},), got {epsilon.shape}")
    if np.any(np.abs(epsilon) > budget + BUDGET_TOL):
        raise ValueError("displacement exceeds the per-dimension budget")
    return float(np.abs(epsilon).sum() / (budget * dim))


def detector_robustness(results: list[AdversarialResult]) -> float:
    """Mean per-object robustness; callers must exclude already_failed."""
    if not results:
        raise ValueError("no results to average")
    vals = []
    for r in results:
        if r.status == "already_failed" or r.robustness is None:
            raise ValueError(f"result {r.object_id} has no robustness score")
        vals.append(r.robustness)
    return float(np.mean(vals))


class _ComposedQuery:
    """The attack's black box, with a fused fast path for built-in detectors."""

    def __init__(self, scene: SceneImage, obj: ObjectRecord,
                 detector: DetectorHandle, codec: TrafficLightCodec,
                 threads: int | None = None):
        self.detector = detector
        self.codec = codec
        self.gt = obj.gt_box
        self.fp = obj.footprint
        self.base = np.ascontiguousarray(scene.pixels, dtype=np.float32)
        self.queries = 0
        self._fused = detector.supports_fused_probes
        if self._fused:
            import numba

            self._threads = threads if threads else numba.get_num_threads()
            self._works = np.repeat(self.base[None], self._threads, axis=0)
            self._weights = (detector.weights if detector.weights is not None
                             else np.zeros((K.N_CLASSES, K.N_GRID_FEATURES + 1)))
            self._trainable = detector.kind == "trainable"

    def score_batch(self, z_batch: np.ndarray) -> np.ndarray:
        self.queries += len(z_batch)
        raw = self.codec.raw_from_standardized(z_batch)
        if self._fused:
            attrs = np.ascontiguousarray(raw[:, :N_SEMANTIC])
            noise = np.ascontiguousarray(self.codec.noise_images(raw))
            out = np.empty(len(z_batch))
            K.probe_scores_parallel(self.base, self._works, attrs, noise,
                                    float(self.fp.x), float(self.fp.y),
                                    float(self.fp.w), float(self.fp.h),
                                    float(self.gt.x), float(self.gt.y),
                                    float(self.gt.w), float(self.gt.h),
                                    self._trainable, self._weights, out)
            return out
        out = np.empty(len(z_batch))
        for i, z in enumerate(z_batch):
            patch = self.codec.decode(z)
            composed = insert_patch(self.base, patch, self.fp)
            out[i] = detection_score(self.detector, composed, self.gt)
        return out

    def score_one(self, z: np.ndarray) -> float:
        return float(self.score_batch(z[None, :])[0])


def attack(obj: ObjectRecord, scene: SceneImage, detector: DetectorHandle,
           codec: TrafficLightCodec, stats: LatentStats | None = None,
           params: AttackParams | None = None) -> AdversarialResult:
    """Run the adversarial search for one object (Algorithm-1 semantics)."""
    params = params or AttackParams()
    if obj.latent is None or obj.gt_box is None:
        raise ValueError(f"object {obj.object_id} lacks a latent or GT box")
    if stats is not None and stats is not codec.stats:
        # the caller's stats must be the codec's; the latent space is one
        if not (np.array_equal(stats.mean, codec.stats.mean)
                and np.array_equal(stats.std, codec.stats.std)):
            raise ValueError("stats disagree with the codec's latent space")
    dim = codec.dim
    frozen = np.zeros(dim, dtype=bool)
    for d in params.frozen_dims:
        if not 0 <= d < dim:
            raise ValueError(f"frozen dim {d} out of range")
        frozen[d] = True

    q = _ComposedQuery(scene, obj, detector, codec)
    initial = detection_score(detector, scene.pixels, obj.gt_box)
    q.queries += 1
    z0 = np.asarray(obj.latent, dtype=np.float64).copy()

    if initial < FAIL_THRESHOLD:
        return AdversarialResult(
            object_id=obj.object_id, status="already_failed", z0=z0,
            z_final=z0.copy(), epsilon=None, gradient=None,
            adversarial_patch=None, final_score=initial, steps_used=0,
            queries=q.queries, robustness=None)

    rng = attack_rng(params.seed, obj.object_id)
    z = z0.copy()
    grad = None
    trace: list = []
    noop_run = 0
    for t in range(params.t_max):
        sigmas = sample_directions(rng, params.k, dim)
        probe_scores = q.score_batch(z[None, :] + params.delta * sigmas)
        grad = gradient_from_scores(sigmas, probe_scores, params.delta)

        z_next = z - params.eta * grad
        z_next[frozen] = z0[frozen]
        z_next = z0 + np.clip(z_next - z0, -params.budget, params.budget)
        moved = np.max(np.abs(z_next - z)) > 1e-12
        z = z_next
        score = q.score_one(z)
        eps_l1 = float(np.abs(z - z0).sum())
        trace.append((t, float(score), eps_l1, q.queries))
        if score < FAIL_THRESHOLD:
            epsilon = z - z0
            return AdversarialResult(
                object_id=obj.object_id, status="success", z0=z0, z_final=z,
                epsilon=epsilon, gradient=grad,
                adversarial_patch=codec.decode(z), final_score=float(score),
                steps_used=t + 1, queries=q.queries,
                robustness=object_robustness(epsilon, params.budget, dim),
                step_trace=trace)
        noop_run = 0 if moved else noop_run + 1
        if noop_run >= NOOP_ABORT:
            break
    # iteration budget exhausted: record the displacement at the full budget
    # on every dimension (robustness exactly 1)
    epsilon = np.full(dim, params.budget)
    return AdversarialResult(
        object_id=obj.object_id, status="budget_failure", z0=z0, z_final=z,
        epsilon=epsilon, gradient=grad, adversarial_patch=codec.decode(z),
        final_score=float(trace[-1][1]) if trace else initial,
        steps_used=len(trace), queries=q.queries, robustness=1.0,
        step_trace=trace)


def adversarial_walk(obj: ObjectRecord, scene: SceneImage,
                     detector: DetectorHandle, codec: TrafficLightCodec,
                     gradient: np.ndarray,
                     steps: list[float]) -> list[tuple[Patch, float]]:
    """Decode and score points along the unit adversarial direction (the
    negated score gradient): positive multipliers push toward failure.

    Multiplier 0 reproduces the original object.
    """
    gradient = np.asarray(gradient, dtype=np.float64)
    norm = np.linalg.norm(gradient)
    if norm <= 0:
        raise ValueError("gradient must be non-zero")
    ghat = -gradient / norm
    q = _ComposedQuery(scene, obj, detector, codec)
    z0 = np.asarray(obj.latent, dtype=np.float64)
    out = []
    for m in steps:
        z = z0 + m * ghat
        patch = codec.decode(z)
        score = q.score_one(z)
        out.append((patch, float(score)))
    return out
