#!/usr/bin/env python3
"""Build the default workbench workspace end to end: generate the synthetic
world, run detection, attack every detected object, and print the summary.

Usage: python scripts/build_workspace.py WORKSPACE_DIR [SEED]
"""
import sys
import time

from lightbench.workspace import Workspace


def main():
    if len(sys.argv) < 2:
        print(__doc__)
        return 1
    root = sys.argv[1]
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 7
    t0 = time.time()
    ws = Workspace.init(root, seed=seed)
    print(ws.generate())
    print(ws.detect())
    print(ws.attack(progress=True))
    print(f"total {time.time() - t0:.0f}s")
    for k, v in ws.summary().items():
        print(f"  {k}: {v}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
