"""Command-line interface.

    lightbench init       --workspace DIR [--seed N] [--config FILE]
    lightbench generate   --workspace DIR
    lightbench detect     --workspace DIR
    lightbench attack     --workspace DIR [--progress]
    lightbench rank       --workspace DIR [--config FILE]
    lightbench augment    --workspace DIR [--strategy dist|glb-adv|va-adv]
    lightbench experiment --workspace DIR [--strategy ...] [--trials N]
    lightbench serve      --workspace DIR [--port P]
    lightbench report     --workspace DIR

Exit codes: 0 success, 1 validation error, 2 internal fault.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INTERNAL = 2


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--workspace", required=True, help="workspace directory")
    p.add_argument("--seed", type=int, default=None, help="seed override")
    p.add_argument("--config", type=Path, default=None, help="JSON config file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lightbench",
                                 description="detector-robustness workbench")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in ("init", "generate", "detect", "attack", "rank", "augment",
                 "experiment", "serve", "report"):
        p = sub.add_parser(verb)
        _add_common(p)
        if verb == "attack":
            p.add_argument("--progress", action="store_true")
        if verb in ("augment", "experiment"):
            p.add_argument("--strategy", default=None,
                           choices=["dist", "glb-adv", "va-adv", "baseline"])
        if verb == "experiment":
            p.add_argument("--trials", type=int, default=None)
        if verb == "serve":
            p.add_argument("--port", type=int, default=8787)
            p.add_argument("--host", default="127.0.0.1")
    return ap


def _load_config(path: Path | None) -> dict | None:
    if path is None:
        return None
    return json.loads(Path(path).read_text())


def _open_workspace(args):
    from .workspace import Workspace

    return Workspace.open(args.workspace)


def run(args) -> int:
    from .workspace import Workspace, WorkspaceError

    if args.verb == "init":
        seed = args.seed if args.seed is not None else 0
        Workspace.init(args.workspace, seed, _load_config(args.config))
        print(f"initialized workspace at {args.workspace} (seed {seed})")
        return EXIT_OK

    ws = _open_workspace(args)
    if args.verb == "generate":
        print(ws.generate())
        return EXIT_OK
    if args.verb == "detect":
        print(ws.detect())
        return EXIT_OK
    if args.verb == "attack":
        print(ws.attack(progress=getattr(args, "progress", False)))
        return EXIT_OK
    if args.verb == "rank":
        from .ranking import rank_to_interpret

        cfg = _load_config(args.config) or {}
        objects = ws.objects("train")
        if "selection_ids" in cfg:
            ids = set(cfg["selection_ids"])
            mask = np.array([o.object_id in ids for o in objects])
        else:
            # default probe: lowest-scoring quartile of detected objects
            scores = np.array([o.score if o.score is not None else 0.0
                               for o in objects])
            mask = scores < np.percentile(scores, 25)
        if mask.sum() == 0 or mask.all():
            print("rank: selection is empty or universal", file=sys.stderr)
            return EXIT_VALIDATION
        latents = np.array([o.latent for o in objects])
        ranking = rank_to_interpret(latents, mask,
                                    seed=args.seed if args.seed is not None else 0)
        out = ws.root / "reports/ranking.json"
        out.write_text(json.dumps(ranking.to_dict(), indent=2))
        top = ", ".join(f"{d}={v:.3f}" for d, v in ranking.entries[:5])
        print(f"top dimensions: {top}")
        print(f"ranking written to {out}")
        return EXIT_OK
    if args.verb == "augment":
        strategy = args.strategy or "dist"
        aug = ws.build_augmented(strategy, args.seed)
        print(f"augment[{strategy}]: {len(aug.records)} records "
              f"(shortfall {aug.shortfall})")
        return EXIT_OK
    if args.verb == "experiment":
        strategy = args.strategy or "dist"
        rep = ws.run_experiment_strategy(strategy, args.trials, args.seed)
        from .experiment import render_report_table

        print(render_report_table(rep))
        return EXIT_OK
    if args.verb == "serve":
        from .server import serve

        print(f"serving workspace {ws.root} on {args.host}:{args.port}")
        serve(ws, host=args.host, port=args.port)
        return EXIT_OK
    if args.verb == "report":
        summary = ws.summary()
        print("workspace summary")
        for k, v in summary.items():
            print(f"  {k}: {v}")
        if ws.adversarials:
            from .attack import detector_robustness

            attacked = [r for r in ws.adversarials
                        if r.status != "already_failed"]
            succ = [r for r in attacked if r.status == "success"]
            print(f"  attack success rate: {len(succ)}/{len(attacked)} "
                  f"({len(succ) / max(len(attacked), 1):.1%})")
            print(f"  detector robustness: {detector_robustness(attacked):.4f}")
        for rp in sorted(ws.root.glob("reports/experiment-*.txt")):
            print(f"\n{rp.stem}:")
            print(rp.read_text())
        return EXIT_OK
    raise AssertionError(f"unhandled verb {args.verb}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; the contract wants 1
        return EXIT_VALIDATION if e.code not in (0, None) else EXIT_OK
    try:
        return run(args)
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as e:  # noqa: BLE001 - CLI boundary
        from .workspace import WorkspaceError

        if isinstance(e, WorkspaceError):
            print(f"error: {e}", file=sys.stderr)
            return EXIT_VALIDATION
        import traceback

        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
