import numpy as np
import pytest

from lightbench.attack import AdversarialResult
from lightbench.augment import SelectionSpec, dist_aug
from lightbench.codec import Patch
from lightbench.detectors import TrainConfig
from lightbench.experiment import (ExperimentInputs, adversarial_eval_set,
                                   render_report_table, run_experiment)
from lightbench.scenes import DatasetConfig, generate_dataset


@pytest.fixture(scope="module")
def mini_inputs():
    train = generate_dataset(DatasetConfig(n_scenes=10), seed=3)
    test = generate_dataset(DatasetConfig(n_scenes=6), seed=4, stats=train.stats)
    aug = dist_aug(SelectionSpec({1: (-4.0, 4.0)}), train, k=1, seed=0)
    return ExperimentInputs(train=train, test=test, augmented=aug)


FAST = TrainConfig(epochs=60)


def test_single_trial_std_zero(mini_inputs):
    rep = run_experiment(mini_inputs, "dist", trials=1, seed=0,
                         train_config=FAST)
    assert len(rep.trials) == 1
    assert rep.summary()["trials"]["overall"]["std"] == 0.0


def test_reproducible(mini_inputs):
    r1 = run_experiment(mini_inputs, "dist", trials=2, seed=5, train_config=FAST)
    r2 = run_experiment(mini_inputs, "dist", trials=2, seed=5, train_config=FAST)
    assert [t.ap_overall for t in r1.trials] == [t.ap_overall for t in r2.trials]
    assert [t.ap_overall for t in r1.baseline] == [t.ap_overall for t in r2.baseline]


def test_baseline_strategy_mirrors_baseline(mini_inputs):
    rep = run_experiment(ExperimentInputs(train=mini_inputs.train,
                                          test=mini_inputs.test),
                         "baseline", trials=1, seed=2, train_config=FAST)
    assert [t.ap_overall for t in rep.trials] == [t.ap_overall for t in rep.baseline]


def test_non_baseline_requires_augmented(mini_inputs):
    with pytest.raises(ValueError):
        run_experiment(ExperimentInputs(train=mini_inputs.train,
                                        test=mini_inputs.test),
                       "glb-adv", trials=1, seed=0)


def test_unknown_strategy(mini_inputs):
    with pytest.raises(ValueError):
        run_experiment(mini_inputs, "super-aug", trials=1, seed=0)


def test_adversarial_eval_set_replaces_objects(mini_inputs):
    train = mini_inputs.train
    obj = train.objects[0]
    res = AdversarialResult(
        object_id=obj.object_id, status="success", z0=obj.latent,
        z_final=obj.latent, epsilon=np.zeros(32), gradient=None,
        adversarial_patch=Patch(np.full((64, 64, 3), 0.25, np.float32)),
        final_score=0.4, steps_used=1, queries=1, robustness=0.1)
    inputs = ExperimentInputs(train=train, test=mini_inputs.test,
                              adv_test=[res],
                              adv_test_objects={obj.object_id: obj})
    sets = adversarial_eval_set(inputs)
    assert len(sets) == 1
    pixels, gt_objects = sets[0]
    ids = [o.object_id for o in gt_objects]
    assert obj.object_id in ids
    scene_objs = [o for o in train.objects if o.scene_id == obj.scene_id]
    assert len(gt_objects) == len(scene_objs)
    # the adversarial patch actually landed in the composed scene
    base = train.scene_by_id(obj.scene_id).pixels
    assert not np.array_equal(pixels, base)


def test_report_table_renders(mini_inputs):
    rep = run_experiment(mini_inputs, "dist", trials=2, seed=1,
                         train_config=FAST)
    table = render_report_table(rep)
    assert "baseline" in table and "dist" in table
    assert "overall" in table
