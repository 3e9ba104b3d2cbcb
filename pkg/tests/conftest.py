import numpy as np
import pytest

from lightbench.codec import TrafficLightCodec
from lightbench.detectors import make_heuristic_detector, detection_score
from lightbench.scenes import DatasetConfig, generate_dataset


@pytest.fixture(scope="session")
def codec():
    return TrafficLightCodec()


@pytest.fixture(scope="session")
def small_dataset():
    """A handful of scenes shared by unit tests (fast: ~1s to build)."""
    return generate_dataset(DatasetConfig(n_scenes=24), seed=7)


@pytest.fixture(scope="session")
def heuristic():
    return make_heuristic_detector()


@pytest.fixture(scope="session")
def scored_dataset(small_dataset, heuristic):
    """small_dataset with detection scores filled in."""
    ds = small_dataset
    by_scene = {}
    for o in ds.objects:
        by_scene.setdefault(o.scene_id, []).append(o)
    for s in ds.scenes:
        for o in by_scene.get(s.scene_id, []):
            o.score = detection_score(heuristic, s.pixels, o.gt_box)
    return ds
