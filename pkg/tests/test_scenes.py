import numpy as np
import pytest
from scipy.stats import ks_2samp

from lightbench.scenes import DatasetConfig, DimSpec, classify_raw, generate_dataset


def test_same_seed_byte_identical():
    cfg = DatasetConfig(n_scenes=6)
    a = generate_dataset(cfg, seed=11)
    b = generate_dataset(cfg, seed=11)
    assert len(a.scenes) == len(b.scenes)
    for sa, sb in zip(a.scenes, b.scenes):
        assert sa.scene_id == sb.scene_id
        assert np.array_equal(sa.pixels, sb.pixels)
    for oa, ob in zip(a.objects, b.objects):
        assert oa.object_id == ob.object_id
        assert np.array_equal(oa.latent, ob.latent)


def test_different_seed_differs():
    cfg = DatasetConfig(n_scenes=3)
    a = generate_dataset(cfg, seed=1)
    b = generate_dataset(cfg, seed=2)
    assert not np.array_equal(a.scenes[0].pixels, b.scenes[0].pixels)


def test_zero_lights_config():
    ds = generate_dataset(DatasetConfig(n_scenes=4, lights_min=0, lights_max=0),
                          seed=5)
    assert ds.objects == []
    assert len(ds.scenes) == 4


def test_brightness_shift_split_ks():
    train = generate_dataset(DatasetConfig(n_scenes=60), seed=3)
    shift = DatasetConfig(n_scenes=60, class_dim_overrides={
        "red": {"brightness": DimSpec(1.5, 0.3, 0.8, 2.4)}})
    test = generate_dataset(shift, seed=4, stats=train.stats)
    tr = np.array([o.latent[1] for o in train.objects if o.cls == "red"])
    te = np.array([o.latent[1] for o in test.objects if o.cls == "red"])
    assert ks_2samp(tr, te).statistic > 0.5


def test_class_consistent_with_latent(small_dataset):
    from lightbench.latent import destandardize

    for o in small_dataset.objects:
        raw = destandardize(o.latent, small_dataset.stats)
        assert classify_raw(raw) == o.cls


def test_gt_box_inside_footprint(small_dataset):
    for o in small_dataset.objects:
        assert o.gt_box.x >= o.footprint.x - 1e-6
        assert o.gt_box.y >= o.footprint.y - 1e-6
        assert o.gt_box.x2 <= o.footprint.x2 + 1e-6
        assert o.gt_box.y2 <= o.footprint.y2 + 1e-6
        assert o.size == pytest.approx(o.gt_box.h)


def test_footprints_disjoint(small_dataset):
    from lightbench.boxes import iou

    by_scene = {}
    for o in small_dataset.objects:
        by_scene.setdefault(o.scene_id, []).append(o)
    for objs in by_scene.values():
        for i in range(len(objs)):
            for j in range(i + 1, len(objs)):
                assert iou(objs[i].footprint, objs[j].footprint) == 0.0


def test_latents_standardized(small_dataset):
    lat = np.array([o.latent for o in small_dataset.objects])
    assert np.abs(lat.mean(axis=0)).max() < 0.2
    assert np.abs(lat.std(axis=0) - 1).max() < 0.2
