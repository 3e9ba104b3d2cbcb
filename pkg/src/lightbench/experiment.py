"""Multi-trial fine-tuning experiments over the augmentation strategies.

Each trial trains the small detector from scratch on (train + augmented)
windows with a trial-specific seed, evaluates AP@IoU50 on the natural test
split and (for adversarial strategies) on the frozen adversarial test
half, and compares against a baseline trained on the plain training set
under identical seeds. Reports carry per-trial values, means and stds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .augment import AugmentedSet
from .attack import AdversarialResult
from .boxes import Box
from .evaluation import CLASSES, ap_from_records, match_detections
from .detectors import (TrainConfig, grid_features, LabeledWindow,
                        make_trainable_detector, sample_training_windows,
                        train_detector)
from .scenes import Dataset, ObjectRecord

STRATEGIES = ("baseline", "dist", "glb-adv", "va-adv")


@dataclass
class TrialResult:
    seed: int
    ap_overall: float
    ap_per_class: dict
    ap_adversarial: float | None = None


@dataclass
class ExperimentReport:
    strategy: str
    trials: list[TrialResult]
    baseline: list[TrialResult]
    seeds: list[int]

    def mean_overall(self) -> float:
        return float(np.mean([t.ap_overall for t in self.trials]))

    def mean_adversarial(self) -> float | None:
        vals = [t.ap_adversarial for t in self.trials if t.ap_adversarial is not None]
        return float(np.mean(vals)) if vals else None

    def summary(self) -> dict:
        def agg(trials):
            out = {"overall": [t.ap_overall for t in trials]}
            for c in CLASSES:
                out[c] = [t.ap_per_class.get(c) for t in trials]
            adv = [t.ap_adversarial for t in trials if t.ap_adversarial is not None]
            if adv:
                out["adversarial"] = adv
            return {k: {"mean": float(np.mean([v for v in vs if v is not None]))
                        if any(v is not None for v in vs) else None,
                        "std": float(np.std([v for v in vs if v is not None]))
                        if any(v is not None for v in vs) else None,
                        "values": vs}
                    for k, vs in out.items()}

        return {"strategy": self.strategy, "seeds": self.seeds,
                "trials": agg(self.trials), "baseline": agg(self.baseline)}


@dataclass
class ExperimentInputs:
    """Everything a strategy run needs, assembled by the workspace layer."""

    train: Dataset
    test: Dataset
    augmented: AugmentedSet | None = None
    adv_test: list[AdversarialResult] = field(default_factory=list)
    adv_test_objects: dict = field(default_factory=dict)  # object_id -> ObjectRecord


def composed_scene(dataset: Dataset, scene_id: str,
                   replacements: list[ObjectRecord]) -> np.ndarray:
    """Scene pixels with the given records' patches inserted at their
    footprints (later insertions win; footprints are disjoint by layout)."""
    img = dataset.scene_by_id(scene_id).pixels
    for rec in replacements:
        out = img.copy()
        K.insert_core(img, rec.patch.pixels, rec.footprint.x, rec.footprint.y,
                      rec.footprint.w, rec.footprint.h, out)
        img = out
    return img


def evaluate_detector(handle, scenes_and_objects) -> tuple[float, dict]:
    """Pooled class-blind AP plus per-class APs over (pixels, objects) pairs."""
    pooled = []
    total_gt = 0
    per_class_dt = {c: [] for c in CLASSES}
    per_class_gt = {c: 0 for c in CLASSES}
    for pixels, objects in scenes_and_objects:
        dts = handle.detect(pixels)
        gts = [o.gt_box for o in objects]
        match_detections(gts, dts, 0.5)
        total_gt += len(objects)
        for o in objects:
            per_class_gt[o.cls] += 1
        for dt in dts:
            pooled.append((dt.top_confidence, dt.outcome == "TP"))
        # class-aware pass: detections of class c against GTs of class c
        for c in CLASSES:
            cls_gts = [o.gt_box for o in objects if o.cls == c]
            cls_dts = [dt for dt in dts if dt.top_class == c]
            if cls_dts:
                sub = [type(dt)(box=dt.box, scores=dt.scores) for dt in cls_dts]
                match_detections(cls_gts, sub, 0.5)
                for dt in sub:
                    per_class_dt[c].append((dt.top_confidence, dt.outcome == "TP"))
    overall = ap_from_records(pooled, total_gt) if total_gt else None
    per_class = {}
    for c in CLASSES:
        per_class[c] = (ap_from_records(per_class_dt[c], per_class_gt[c])
                        if per_class_gt[c] > 0 else None)
    return overall, per_class


def adversarial_eval_set(inputs: ExperimentInputs):
    """Test scenes with the adversarial test half inserted; ground truth is
    every object of each touched scene (attacked ones keep their classes)."""
    by_scene: dict[str, list[ObjectRecord]] = {}
    for res in inputs.adv_test:
        if res.status != "success":
            continue
        src = inputs.adv_test_objects[res.object_id]
        rec = ObjectRecord(
            object_id=res.object_id, scene_id=src.scene_id, gt_box=src.gt_box,
            cls=src.cls, size=src.size, footprint=src.footprint,
            latent=np.asarray(res.z_final), patch=res.adversarial_patch)
        by_scene.setdefault(src.scene_id, []).append(rec)
    out = []
    objs_by_scene: dict[str, list[ObjectRecord]] = {}
    for o in inputs.train.objects:
        objs_by_scene.setdefault(o.scene_id, []).append(o)
    for scene_id, replacements in sorted(by_scene.items()):
        pixels = composed_scene(inputs.train, scene_id, replacements)
        replaced = {r.object_id for r in replacements}
        gt_objects = [o for o in objs_by_scene[scene_id] if o.object_id not in replaced]
        gt_objects += replacements
        out.append((pixels, gt_objects))
    return out


def _augmented_windows(inputs: ExperimentInputs) -> list[LabeledWindow]:
    if inputs.augmented is None:
        return []
    by_scene: dict[str, list[ObjectRecord]] = {}
    for rec in inputs.augmented.records:
        by_scene.setdefault(rec.scene_id, []).append(rec)
    windows = []
    for scene_id, recs in sorted(by_scene.items()):
        base = inputs.train.scene_by_id(scene_id).pixels
        for rec in recs:
            out = base.copy()
            K.insert_core(base, rec.patch.pixels, rec.footprint.x,
                          rec.footprint.y, rec.footprint.w, rec.footprint.h, out)
            windows.append(LabeledWindow(grid_features(out, rec.gt_box), rec.cls))
    return windows


def run_experiment(inputs: ExperimentInputs, strategy: str, trials: int = 5,
                   seed: int = 0,
                   train_config: TrainConfig | None = None) -> ExperimentReport:
    """Train/evaluate ``trials`` pairs of (strategy, baseline) detectors."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy != "baseline" and inputs.augmented is None:
        raise ValueError(f"strategy {strategy!r} needs an augmented set")
    base_cfg = train_config or TrainConfig()
    test_set = [(s.pixels, [o for o in inputs.test.objects if o.scene_id == s.scene_id])
                for s in inputs.test.scenes]
    adv_set = adversarial_eval_set(inputs) if inputs.adv_test else []
    aug_windows = _augmented_windows(inputs)

    def train_and_eval(windows, cfg):
        handle = make_trainable_detector(train_detector(windows, cfg))
        overall, per_class = evaluate_detector(handle, test_set)
        adv_ap = evaluate_detector(handle, adv_set)[0] if adv_set else None
        return TrialResult(cfg.seed, overall, per_class, adv_ap)

    trial_rows, baseline_rows, seeds = [], [], []
    for t in range(trials):
        trial_seed = seed + 1000 * t
        seeds.append(trial_seed)
        rng = np.random.default_rng(trial_seed)
        base_windows = sample_training_windows(
            inputs.train.scenes, inputs.train.objects, rng,
            base_cfg.negatives_per_positive)
        # trials see different 85% subsamples of the training windows, the
        # usual way to get honest run-to-run variance out of a
        # deterministic training pipeline
        keep = rng.random(len(base_windows)) < 0.85
        base_windows = [w for w, k in zip(base_windows, keep) if k]
        cfg = TrainConfig(learning_rate=base_cfg.learning_rate,
                          epochs=base_cfg.epochs, batch_size=base_cfg.batch_size,
                          seed=trial_seed,
                          negatives_per_positive=base_cfg.negatives_per_positive,
                          weight_decay=base_cfg.weight_decay)
        baseline_rows.append(train_and_eval(base_windows, cfg))
        if strategy != "baseline":
            trial_rows.append(train_and_eval(base_windows + aug_windows, cfg))
    if strategy == "baseline":
        trial_rows = list(baseline_rows)
    return ExperimentReport(strategy, trial_rows, baseline_rows, seeds)


def render_report_table(report: ExperimentReport) -> str:
    """Aligned-column text table: strategy x {overall, off, green, yellow, red}."""
    s = report.summary()
    cols = ["overall", "off", "green", "yellow", "red"]
    if "adversarial" in s["trials"]:
        cols.append("adversarial")
    lines = []
    header = f"{'strategy':<12}" + "".join(f"{c:>14}" for c in cols)
    lines.append(header)
    lines.append("-" * len(header))
    for name, block in (("baseline", s["baseline"]), (report.strategy, s["trials"])):
        if name == "baseline" and report.strategy == "baseline":
            continue
        cells = []
        for c in cols:
            st = block.get(c)
            if st is None or st["mean"] is None:
                cells.append(f"{'—':>14}")
            else:
                cells.append(f"{st['mean']:>7.3f}±{st['std']:<5.3f}")
        lines.append(f"{name:<12}" + "".join(cells))
    return "\n".join(lines)
