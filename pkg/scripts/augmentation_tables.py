#!/usr/bin/env python3
"""Run the three augmentation strategies against an existing workspace and
print the per-strategy result tables.

Usage: python scripts/augmentation_tables.py WORKSPACE_DIR [TRIALS]
"""
import sys

from lightbench.experiment import render_report_table
from lightbench.workspace import Workspace


def main():
    if len(sys.argv) < 2:
        print(__doc__)
        return 1
    ws = Workspace.open(sys.argv[1])
    trials = int(sys.argv[2]) if len(sys.argv) > 2 else 5
    for strategy in ("dist", "glb-adv", "va-adv"):
        report = ws.run_experiment_strategy(strategy, trials=trials, seed=42)
        print(f"\n=== {strategy} ===")
        print(render_report_table(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
