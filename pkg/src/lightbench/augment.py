"""Insight-guided data augmentation strategies.

Three generators, each producing ObjectRecords with full provenance:

  dist_aug        -- uniform latent resampling of constrained dimensions
                     inside a selected region of training objects,
  adv_aug_global  -- the training half of the adversarial pool, re-labeled
                     with the source objects' classes,
  adv_aug_va      -- fresh attacks on a selected region with chosen plus
                     randomly drawn frozen dimensions for diversity.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .attack import AdversarialResult, AttackParams, attack
from .boxes import Box
from .codec import CLAMP_STD
from .scenes import Dataset, ObjectRecord, _gt_box_from_raw, render_raw
from .latent import standardize, destandardize


@dataclass
class SelectionSpec:
    """Closed per-dimension ranges in standardized units."""

    ranges: dict[int, tuple[float, float]]
    source: str = "train"  # train | adversarial

    def __post_init__(self):
        if not self.ranges:
            raise ValueError("selection must constrain at least one dimension")
        for d, (lo, hi) in self.ranges.items():
            if lo > hi:
                raise ValueError(f"empty range for dim {d}: [{lo}, {hi}]")
            if abs(lo) > CLAMP_STD or abs(hi) > CLAMP_STD:
                raise ValueError(f"range for dim {d} outside +/-{CLAMP_STD}")

    def contains(self, z: np.ndarray) -> bool:
        return all(lo <= z[d] <= hi for d, (lo, hi) in self.ranges.items())

    def describe(self) -> str:
        return " & ".join(f"dim{d} in [{lo}, {hi}]"
                          for d, (lo, hi) in sorted(self.ranges.items()))


@dataclass
class AugmentedSet:
    strategy: str
    records: list[ObjectRecord]
    provenance: dict[str, dict] = field(default_factory=dict)
    shortfall: int = 0  # requested minus produced (failed attacks etc.)

    def __len__(self):
        return len(self.records)


def retrieve(objects: list[ObjectRecord], selection: SelectionSpec) -> list[ObjectRecord]:
    return [o for o in objects if selection.contains(o.latent)]


def dist_aug(selection: SelectionSpec, dataset: Dataset, k: int = 5,
             seed: int = 0) -> AugmentedSet:
    """Uniformly resample the constrained dimensions of selected objects."""
    if k < 1:
        raise ValueError("k must be >= 1")
    sources = retrieve(dataset.objects, selection)
    if not sources:
        raise ValueError(f"selection retrieved no objects: {selection.describe()}")
    rng = np.random.default_rng(seed)
    records, prov = [], {}
    for src in sources:
        for j in range(k):
            z = src.latent.copy()
            for d, (lo, hi) in selection.ranges.items():
                z[d] = rng.uniform(lo, hi)
            raw = destandardize(np.clip(z, -CLAMP_STD, CLAMP_STD), dataset.stats)
            patch = render_raw(dataset.codec, raw)
            gt_box = _gt_box_from_raw(raw, src.footprint)
            oid = f"aug:dist:{src.object_id}:{j}"
            rec = ObjectRecord(
                object_id=oid, scene_id=src.scene_id, gt_box=gt_box,
                cls=dataset.codec.classify(z), size=float(gt_box.h),
                footprint=src.footprint, latent=z, patch=patch)
            records.append(rec)
            prov[oid] = {"strategy": "dist", "source": src.object_id,
                         "latent": z.tolist()}
    return AugmentedSet("dist", records, prov)


def adv_aug_global(pool: list[AdversarialResult],
                   objects_by_id: dict[str, ObjectRecord],
                   dataset: Dataset) -> AugmentedSet:
    """Wrap the training-half adversarial pool as labeled training records."""
    if not pool:
        raise ValueError("adversarial pool is empty")
    records, prov = [], {}
    for res in pool:
        if res.status != "success":
            continue
        src = objects_by_id[res.object_id]
        z = np.asarray(res.z_final)
        raw = destandardize(np.clip(z, -CLAMP_STD, CLAMP_STD), dataset.stats)
        gt_box = _gt_box_from_raw(raw, src.footprint)
        oid = f"aug:glb:{src.object_id}"
        rec = ObjectRecord(
            object_id=oid, scene_id=src.scene_id, gt_box=gt_box,
            cls=src.cls, size=float(gt_box.h), footprint=src.footprint,
            latent=z.copy(), patch=res.adversarial_patch)
        records.append(rec)
        prov[oid] = {"strategy": "glb-adv", "source": src.object_id,
                     "latent": z.tolist()}
    if not records:
        raise ValueError("adversarial pool contains no successes")
    return AugmentedSet("glb-adv", records, prov)


def adv_aug_va(selection: SelectionSpec, dataset: Dataset, detector,
               frozen_dims: set[int], extra_random_frozen: int,
               n_per_object: int, params: AttackParams,
               seed: int = 0) -> AugmentedSet:
    """Generate fresh adversarials inside a selected region, freezing the
    chosen dimensions plus extra randomly drawn ones per attack."""
    sources = retrieve(dataset.objects, selection)
    if not sources:
        raise ValueError(f"selection retrieved no objects: {selection.describe()}")
    records, prov = [], {}
    requested = 0
    for src in sources:
        scene = dataset.scene_by_id(src.scene_id)
        for j in range(n_per_object):
            requested += 1
            rng = np.random.default_rng((seed, j, zlib.crc32(src.object_id.encode())))
            frozen = set(frozen_dims)
            candidates = [d for d in range(dataset.codec.dim) if d not in frozen]
            if extra_random_frozen > 0:
                extra = rng.choice(len(candidates), size=extra_random_frozen,
                                   replace=False)
                frozen |= {candidates[int(e)] for e in extra}
            p = AttackParams(eta=params.eta, k=params.k, delta=params.delta,
                             t_max=params.t_max, budget=params.budget,
                             frozen_dims=frozenset(frozen),
                             seed=params.seed + j * 7919)
            res = attack(src, scene, detector, dataset.codec, params=p)
            if res.status != "success":
                continue
            raw = destandardize(np.clip(res.z_final, -CLAMP_STD, CLAMP_STD),
                                dataset.stats)
            gt_box = _gt_box_from_raw(raw, src.footprint)
            oid = f"aug:va-adv:{src.object_id}:{j}"
            rec = ObjectRecord(
                object_id=oid, scene_id=src.scene_id, gt_box=gt_box,
                cls=src.cls, size=float(gt_box.h), footprint=src.footprint,
                latent=np.asarray(res.z_final).copy(),
                patch=res.adversarial_patch)
            records.append(rec)
            prov[oid] = {"strategy": "va-adv", "source": src.object_id,
                         "frozen": sorted(frozen),
                         "latent": res.z_final.tolist()}
    return AugmentedSet("va-adv", records, prov,
                        shortfall=requested - len(records))
