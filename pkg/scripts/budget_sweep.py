#!/usr/bin/env python3
"""Attack-budget sweep: how success rate and mean robustness respond to the
per-dimension budget. Runs on a reduced dataset so it finishes over coffee.

Usage: python scripts/budget_sweep.py [N_SCENES]
"""
import sys
import time

import numpy as np

from lightbench.attack import AttackParams, detector_robustness
from lightbench.detectors import make_heuristic_detector
from lightbench.runner import attack_all
from lightbench.scenes import DatasetConfig, generate_dataset


def main():
    n_scenes = int(sys.argv[1]) if len(sys.argv) > 1 else 40
    ds = generate_dataset(DatasetConfig(n_scenes=n_scenes), seed=23)
    det = make_heuristic_detector()
    print(f"{n_scenes} scenes, {len(ds.objects)} objects")
    print(f"{'budget':>8} {'attacked':>9} {'success':>8} {'robustness':>11} "
          f"{'mean steps':>11} {'seconds':>8}")
    for budget in (0.5, 1.0, 1.5, 2.0, 3.0):
        t0 = time.time()
        results = attack_all(ds, det, AttackParams(budget=budget, seed=23))
        attacked = [r for r in results if r.status != "already_failed"]
        succ = [r for r in attacked if r.status == "success"]
        steps = np.mean([r.steps_used for r in attacked]) if attacked else 0
        rb = detector_robustness(attacked) if attacked else float("nan")
        print(f"{budget:>8.1f} {len(attacked):>9d} "
              f"{len(succ) / max(len(attacked), 1):>7.1%} {rb:>11.4f} "
              f"{steps:>11.1f} {time.time() - t0:>8.0f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
