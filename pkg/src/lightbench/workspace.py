"""File-backed workspace: the single source of truth for datasets, detector
runs, adversarial pools, augmentation sets, and experiment reports.

Layout under the root directory:

    manifest.json            configs, seeds, latent stats, PCA model, splits
    records/*.ndjson         object / detection / adversarial streams
    patches/**.ppm           object and adversarial patches (16-bit P6)
    traces/*.ndjson          per-attack step traces
    jobs/ledger.ndjson       append-only job ledger
    reports/*.json|.txt      rankings and experiment reports

Scenes are not stored: they regenerate deterministically from the manifest
configs and seeds. Mutating operations take an exclusive lock; record
files are written to temp files and atomically renamed.
"""

from __future__ import annotations

import json
import os
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import records as rec
from .attack import AdversarialResult, AttackParams
from .augment import AugmentedSet, SelectionSpec, adv_aug_global, adv_aug_va, dist_aug
from .boxes import Box
from .codec import Patch
from .detectors import DetectorHandle, TrainConfig, detection_score, make_heuristic_detector
from .evaluation import FN2_CONFIDENCE, ap_from_records, match_detections
from .experiment import ExperimentInputs, ExperimentReport, render_report_table, run_experiment
from .filters import FilterRow
from .latent import LatentStats
from .pca import PCAModel, fit_pca
from .runner import attack_all
from .scenes import Dataset, DatasetConfig, DimSpec, ObjectRecord, generate_dataset

MANIFEST = "manifest.json"


class WorkspaceError(RuntimeError):
    pass


class WorkspaceLocked(WorkspaceError):
    pass


def default_config() -> dict:
    """The out-of-the-box workbench configuration."""
    return {
        "train": DatasetConfig(n_scenes=390).to_dict(),
        "test": DatasetConfig(
            n_scenes=200,
            class_mix={"red": 0.5, "green": 0.22, "yellow": 0.16, "off": 0.12},
            class_dim_overrides={
                "red": {"brightness": {"mean": 1.9, "std": 0.35,
                                        "lo": 1.0, "hi": 2.8}}},
        ).to_dict(),
        "attack": {"eta": 0.01, "k": 512, "delta": 0.5, "t_max": 500,
                   "budget": 2.0},
        "augment": {
            "dist": {"selection": {"0": [1.0, 3.2], "1": [0.5, 2.8]}, "k": 6},
            "va": {"selection": {"1": [-0.6, 0.2]}, "frozen_dims": [3],
                   "extra_random_frozen": 3, "n_per_object": 6},
        },
        "experiment": {"trials": 5},
        "texture_seed": 0,
    }


@dataclass
class Workspace:
    root: Path
    manifest: dict = field(default_factory=dict)
    train: Dataset | None = None
    test: Dataset | None = None
    adversarials: list[AdversarialResult] = field(default_factory=list)
    notices: list[str] = field(default_factory=list)

    # ---- lifecycle ------------------------------------------------------

    @classmethod
    def init(cls, root, seed: int, config: dict | None = None) -> "Workspace":
        root = Path(root)
        if (root / MANIFEST).exists():
            raise WorkspaceError(f"workspace already initialized at {root}")
        for sub in ("records", "patches", "patches/adv", "traces", "jobs",
                    "reports"):
            (root / sub).mkdir(parents=True, exist_ok=True)
        manifest = {"seed": seed, "config": config or default_config(),
                    "created": time.time(), "datasets": {}, "jobs": 0}
        ws = cls(root=root, manifest=manifest)
        ws._save_manifest()
        return ws

    @classmethod
    def open(cls, root) -> "Workspace":
        root = Path(root)
        mf = root / MANIFEST
        if not mf.exists():
            raise WorkspaceError(f"no workspace at {root}")
        ws = cls(root=root, manifest=json.loads(mf.read_text()))
        ws._load_datasets()
        ws._load_adversarials()
        return ws

    def _save_manifest(self):
        tmp = self.root / (MANIFEST + ".tmp")
        tmp.write_text(json.dumps(self.manifest, indent=2))
        os.replace(tmp, self.root / MANIFEST)

    def lock(self):
        return _Lock(self.root / ".lock")

    # ---- generate -------------------------------------------------------

    def generate(self) -> str:
        if self.manifest["datasets"]:
            return "dataset exists; generate skipped (same manifest seed)"
        seed = self.manifest["seed"]
        cfg = self.manifest["config"]
        with self.lock():
            train_cfg = DatasetConfig.from_dict(cfg["train"])
            test_cfg = DatasetConfig.from_dict(cfg["test"])
            t0 = time.time()
            self.train = generate_dataset(train_cfg, seed,
                                          texture_seed=cfg.get("texture_seed", 0))
            self.test = generate_dataset(test_cfg, seed + 1,
                                         stats=self.train.stats,
                                         texture_seed=cfg.get("texture_seed", 0))
            pca = fit_pca(np.array([o.latent for o in self.train.objects]))
            self.manifest["datasets"] = {
                "train": {"seed": seed, "n_objects": len(self.train.objects),
                          "skipped": self.train.skipped_scenes},
                "test": {"seed": seed + 1, "n_objects": len(self.test.objects),
                         "skipped": self.test.skipped_scenes},
            }
            self.manifest["stats"] = {"mean": self.train.stats.mean.tolist(),
                                      "std": self.train.stats.std.tolist()}
            self.manifest["pca"] = pca.to_dict()
            self._persist_objects()
            self._save_manifest()
            return (f"generated train({len(self.train.objects)} objects) and "
                    f"test({len(self.test.objects)} objects) in "
                    f"{time.time() - t0:.1f}s")

    def _persist_objects(self):
        for split, ds in (("train", self.train), ("test", self.test)):
            rows = []
            for o in ds.objects:
                ppath = f"patches/{o.object_id.replace(':', '_')}.ppm"
                if o.patch is not None:
                    rec.write_p6(self.root / ppath, o.patch.pixels)
                rows.append(rec.object_to_dict(o, ppath))
            rec.write_ndjson(self.root / f"records/objects-{split}.ndjson",
                             "objects", rows)

    def _load_datasets(self):
        if not self.manifest.get("datasets"):
            return
        seed = self.manifest["seed"]
        cfg = self.manifest["config"]
        stats = LatentStats(np.asarray(self.manifest["stats"]["mean"]),
                            np.asarray(self.manifest["stats"]["std"]))
        self.train = generate_dataset(DatasetConfig.from_dict(cfg["train"]), seed,
                                      stats=stats,
                                      texture_seed=cfg.get("texture_seed", 0))
        self.test = generate_dataset(DatasetConfig.from_dict(cfg["test"]), seed + 1,
                                     stats=stats,
                                     texture_seed=cfg.get("texture_seed", 0))
        # re-attach persisted per-object results
        for split, ds in (("train", self.train), ("test", self.test)):
            path = self.root / f"records/objects-{split}.ndjson"
            if not path.exists():
                continue
            rows, notice = rec.read_ndjson(path, "objects")
            if notice:
                self.notices.append(f"objects-{split}: {notice}")
            by_id = {o.object_id: o for o in ds.objects}
            for row in rows:
                o = by_id.get(row["id"])
                if o is None:
                    continue
                o.score = row.get("score")
                if row.get("detection"):
                    o.detection = rec.detection_from_dict(row["detection"])
                if row.get("gradient") is not None:
                    o.gradient = np.asarray(row["gradient"])
                o.robustness = row.get("robustness")

    # ---- detect ---------------------------------------------------------

    def detector(self) -> DetectorHandle:
        return make_heuristic_detector()

    def detect(self) -> str:
        self._require_datasets()
        if (self.root / "records/detections-train.ndjson").exists():
            return "detections exist; detect skipped"
        det = self.detector()
        with self.lock():
            t0 = time.time()
            for split, ds in (("train", self.train), ("test", self.test)):
                rows = []
                by_scene: dict[str, list[ObjectRecord]] = {}
                for o in ds.objects:
                    by_scene.setdefault(o.scene_id, []).append(o)
                for scene in ds.scenes:
                    objs = by_scene.get(scene.scene_id, [])
                    dts = det.detect(scene.pixels)
                    m = match_detections([o.gt_box for o in objs], dts, 0.5)
                    for di, gi in m.tp:
                        objs[gi].detection = dts[di]
                    for o in objs:
                        o.score = detection_score(det, scene.pixels, o.gt_box)
                    for dt in dts:
                        row = rec.detection_to_dict(dt)
                        row["scene_id"] = scene.scene_id
                        if dt.matched_gt is not None:
                            row["matched_gt"] = objs[dt.matched_gt].object_id
                        rows.append(row)
                rec.write_ndjson(self.root / f"records/detections-{split}.ndjson",
                                 "detections", rows)
            self._persist_objects()
            return f"detection pass complete in {time.time() - t0:.1f}s"

    # ---- attack ---------------------------------------------------------

    def attack(self, params: AttackParams | None = None,
               progress: bool = False) -> str:
        self._require_datasets()
        if self.adversarials:
            return "adversarial pool exists; attack skipped"
        if self.train.objects and self.train.objects[0].score is None:
            raise WorkspaceError("run detect before attack")
        acfg = self.manifest["config"].get("attack", {})
        params = params or AttackParams(
            eta=acfg.get("eta", 0.01), k=acfg.get("k", 512),
            delta=acfg.get("delta", 0.5), t_max=acfg.get("t_max", 500),
            budget=acfg.get("budget", 2.0), seed=self.manifest["seed"])
        det = self.detector()
        with self.lock():
            t0 = time.time()
            results = attack_all(self.train, det, params, progress=progress)
            self.adversarials = results
            by_id = {r.object_id: r for r in results}
            for o in self.train.objects:
                r = by_id.get(o.object_id)
                if r is None:
                    continue
                if r.gradient is not None:
                    o.gradient = r.gradient
                o.robustness = r.robustness
            rows = []
            for r in results:
                ppath = None
                if r.adversarial_patch is not None:
                    ppath = f"patches/adv/{r.object_id.replace(':', '_')}.ppm"
                    rec.write_p6(self.root / ppath, r.adversarial_patch.pixels)
                tpath = f"traces/attack-{r.object_id.replace(':', '_')}.ndjson"
                rec.write_ndjson(self.root / tpath, "trace", [
                    {"t": t, "score": s, "eps_l1": e, "queries": q}
                    for t, s, e, q in r.step_trace])
                rows.append(rec.adversarial_to_dict(r, ppath, tpath))
            rec.write_ndjson(self.root / "records/adversarials.ndjson",
                             "adversarials", rows)
            # freeze the adversarial train/test halves
            succ = [r.object_id for r in results if r.status == "success"]
            rng = np.random.default_rng(self.manifest["seed"])
            perm = rng.permutation(len(succ))
            n_test = (len(succ) + 1) // 2
            self.manifest["adversarial_split"] = {
                "test": sorted(succ[i] for i in perm[:n_test]),
                "train": sorted(succ[i] for i in perm[n_test:]),
            }
            self._persist_objects()
            self._save_manifest()
            attacked = [r for r in results if r.status != "already_failed"]
            n_succ = sum(1 for r in attacked if r.status == "success")
            return (f"attacked {len(attacked)} objects, {n_succ} successes "
                    f"({n_succ / max(len(attacked), 1):.1%}) in "
                    f"{time.time() - t0:.1f}s")

    def _load_adversarials(self):
        path = self.root / "records/adversarials.ndjson"
        if not path.exists():
            return
        rows, notice = rec.read_ndjson(path, "adversarials",
                                       validate=rec.validate_adversarial)
        if notice:
            self.notices.append(f"adversarials: {notice}")
        out = []
        for row in rows:
            patch = None
            if row.get("patch"):
                patch = Patch(rec.read_p6(self.root / row["patch"]))
            out.append(rec.adversarial_from_dict(row, patch))
        self.adversarials = out

    def adversarial_halves(self):
        split = self.manifest.get("adversarial_split")
        if not split:
            raise WorkspaceError("no adversarial pool; run attack first")
        by_id = {r.object_id: r for r in self.adversarials}
        return ([by_id[i] for i in split["train"]],
                [by_id[i] for i in split["test"]])

    # ---- analytics helpers ----------------------------------------------

    def pca(self) -> PCAModel:
        if "pca" not in self.manifest:
            raise WorkspaceError("no PCA model; run generate first")
        return PCAModel.from_dict(self.manifest["pca"])

    def objects(self, split: str | None = None) -> list[ObjectRecord]:
        self._require_datasets()
        if split == "train":
            return self.train.objects
        if split == "test":
            return self.test.objects
        return self.train.objects + self.test.objects

    def object_by_id(self, object_id: str) -> tuple[ObjectRecord, Dataset]:
        for ds in (self.train, self.test):
            if ds is None:
                continue
            for o in ds.objects:
                if o.object_id == object_id:
                    return o, ds
        raise KeyError(object_id)

    def filter_rows(self, split: str | None = None) -> list[FilterRow]:
        """The dashboard's record universe: one row per GT object plus one
        per unmatched detection."""
        rows = []
        for ds, name in ((self.train, "train"), (self.test, "test")):
            if ds is None or (split and split != name):
                continue
            det_path = self.root / f"records/detections-{name}.ndjson"
            matched_ids = set()
            if det_path.exists():
                drows, _ = rec.read_ndjson(det_path, "detections")
                for i, d in enumerate(drows):
                    if d.get("matched_gt"):
                        matched_ids.add(d["matched_gt"])
                    else:
                        conf = max(d["scores"].values())
                        rows.append(FilterRow(
                            row_id=f"{name}:dt:{i}", kind="detection",
                            size=0.0, iou=d.get("iou", 0.0), confidence=conf,
                            robustness=None,
                            outcome="FP" if conf > FN2_CONFIDENCE else "UNMATCHED"))
            for o in ds.objects:
                conf = o.score if o.score is not None else 0.0
                if o.score is None:
                    outcome = "UNMATCHED"
                elif o.score >= FN2_CONFIDENCE:
                    outcome = "TP"
                elif o.detection is not None or o.score > 0:
                    outcome = "FN-II"
                else:
                    outcome = "FN-I"
                rows.append(FilterRow(
                    row_id=o.object_id, kind="object", size=o.size,
                    iou=o.detection.iou if o.detection else 0.0,
                    confidence=conf, robustness=o.robustness, outcome=outcome))
        return rows

    def summary(self) -> dict:
        rows = self.filter_rows()
        objects = [r for r in rows if r.kind == "object"]
        detections_path = self.root / "records/detections-train.ndjson"
        n_det = 0
        for name in ("train", "test"):
            p = self.root / f"records/detections-{name}.ndjson"
            if p.exists():
                n_det += len(rec.read_ndjson(p, "detections")[0])
        return {
            "objects": len(objects),
            "detections": n_det,
            "fp": sum(1 for r in rows if r.outcome == "FP"),
            "fn1": sum(1 for r in objects if r.outcome == "FN-I"),
            "fn2": sum(1 for r in objects if r.outcome == "FN-II"),
            "adversarials": sum(1 for a in self.adversarials
                                if a.status == "success"),
            "splits": {"train": len(self.train.objects) if self.train else 0,
                       "test": len(self.test.objects) if self.test else 0},
        }

    # ---- augmentation & experiments --------------------------------------

    def _selection_from_config(self, d: dict) -> SelectionSpec:
        return SelectionSpec({int(k): (float(v[0]), float(v[1]))
                              for k, v in d.items()})

    def build_augmented(self, strategy: str, seed: int | None = None) -> AugmentedSet:
        self._require_datasets()
        seed = self.manifest["seed"] if seed is None else seed
        cfg = self.manifest["config"].get("augment", {})
        if strategy == "dist":
            dist_cfg = cfg.get("dist", {})
            sel = self._selection_from_config(dist_cfg.get("selection", {}))
            return dist_aug(sel, self.train, k=dist_cfg.get("k", 5), seed=seed)
        objs = {o.object_id: o for o in self.train.objects}
        adv_train, _ = self.adversarial_halves()
        if strategy == "glb-adv":
            return adv_aug_global(adv_train, objs, self.train)
        if strategy == "va-adv":
            va_cfg = cfg.get("va", {})
            sel = self._selection_from_config(va_cfg.get("selection", {}))
            acfg = self.manifest["config"].get("attack", {})
            params = AttackParams(
                eta=acfg.get("eta", 0.01), k=acfg.get("k", 512),
                delta=acfg.get("delta", 0.5), t_max=acfg.get("t_max", 500),
                budget=acfg.get("budget", 2.0), seed=seed + 77)
            va = adv_aug_va(sel, self.train, self.detector(),
                            frozen_dims=set(va_cfg.get("frozen_dims", [])),
                            extra_random_frozen=va_cfg.get("extra_random_frozen", 3),
                            n_per_object=va_cfg.get("n_per_object", 5),
                            params=params, seed=seed)
            glb = adv_aug_global(adv_train, objs, self.train)
            va.records = va.records + glb.records
            va.provenance.update(glb.provenance)
            return va
        raise WorkspaceError(f"unknown augmentation strategy {strategy!r}")

    def experiment_inputs(self, strategy: str,
                          seed: int | None = None) -> ExperimentInputs:
        augmented = None if strategy == "baseline" else self.build_augmented(strategy, seed)
        adv_test = []
        objs = {o.object_id: o for o in self.train.objects}
        if strategy in ("glb-adv", "va-adv"):
            _, adv_test = self.adversarial_halves()
        return ExperimentInputs(train=self.train, test=self.test,
                                augmented=augmented, adv_test=adv_test,
                                adv_test_objects=objs)

    def run_experiment_strategy(self, strategy: str, trials: int | None = None,
                                seed: int | None = None) -> ExperimentReport:
        seed = self.manifest["seed"] if seed is None else seed
        trials = trials or self.manifest["config"].get("experiment", {}).get("trials", 5)
        inputs = self.experiment_inputs(strategy, seed)
        report = run_experiment(inputs, strategy, trials=trials, seed=seed)
        out = self.root / f"reports/experiment-{strategy}.json"
        out.write_text(json.dumps(report.summary(), indent=2))
        (self.root / f"reports/experiment-{strategy}.txt").write_text(
            render_report_table(report) + "\n")
        return report

    def _require_datasets(self):
        if self.train is None or self.test is None:
            raise WorkspaceError("workspace has no datasets; run generate")


class _Lock:
    """Exclusive advisory lock: one mutating job per workspace."""

    def __init__(self, path: Path):
        self.path = path
        self.fd = None

    def __enter__(self):
        import fcntl

        self.fd = open(self.path, "w")
        try:
            fcntl.flock(self.fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError as e:
            self.fd.close()
            raise WorkspaceLocked(
                f"another mutating job holds the workspace lock ({self.path})"
            ) from e
        return self

    def __exit__(self, *exc):
        import fcntl

        fcntl.flock(self.fd, fcntl.LOCK_UN)
        self.fd.close()
