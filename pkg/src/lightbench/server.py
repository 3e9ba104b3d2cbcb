"""HTTP/JSON API over a workspace, backing the browser client.

All read endpoints are pure functions of the workspace state; mutations go
through the job queue. Every quantity served here is recomputable offline
from the record stores.
"""

from __future__ import annotations

import base64
import io
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .attack import adversarial_walk
from .boxes import Box
from .cluster import cluster_dimensions
from .filters import RecordFilter, filter_outcomes, PRESETS
from .jobs import JobRunner
from .ranking import rank_to_interpret
from .records import P6_MAXVAL
from .tiles import bin_dimension, build_tiles
from .workspace import Workspace, WorkspaceLocked


def _p6_bytes(pixels: np.ndarray) -> bytes:
    arr = np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0)
    raw = np.floor(arr * P6_MAXVAL + 0.5).astype(">u2")
    buf = io.BytesIO()
    buf.write(f"P6\n{arr.shape[1]} {arr.shape[0]}\n{P6_MAXVAL}\n".encode())
    buf.write(raw.tobytes())
    return buf.getvalue()


def _p6_b64(pixels: np.ndarray) -> str:
    return base64.b64encode(_p6_bytes(pixels)).decode()


class FilterBody(BaseModel):
    intervals: dict[str, tuple[float, float]] = Field(default_factory=dict)
    outcomes: list[str] | None = None
    preset: str | None = None
    split: str | None = None


class RankBody(BaseModel):
    ids: list[str]
    split: str = "train"
    seed: int = 0


class WalkBody(BaseModel):
    object_id: str
    multipliers: list[float]


class JobBody(BaseModel):
    kind: str
    params: dict = Field(default_factory=dict)


def create_app(workspace: Workspace) -> FastAPI:
    app = FastAPI(title="lightbench workbench", version="0.1.0")
    runner = JobRunner(workspace.root / "jobs/ledger.ndjson")
    app.state.workspace = workspace
    app.state.runner = runner

    def ws() -> Workspace:
        return app.state.workspace

    @app.get("/summary")
    def summary():
        return ws().summary()

    @app.get("/histograms")
    def histograms(metric: Literal["iou", "confidence", "robustness", "size"],
                   bins: int = 20, split: str | None = None):
        rows = ws().filter_rows(split)
        vals = [getattr(r, metric) for r in rows
                if r.kind == "object" and getattr(r, metric) is not None]
        if not vals:
            return {"metric": metric, "edges": [], "counts": []}
        lo, hi = (0.0, 1.0) if metric != "size" else (float(min(vals)), float(max(vals)) + 1e-9)
        counts, edges = np.histogram(vals, bins=bins, range=(lo, hi))
        return {"metric": metric, "edges": edges.tolist(),
                "counts": counts.tolist()}

    @app.post("/filter")
    def filter_records(body: FilterBody):
        try:
            if body.preset:
                if body.preset not in PRESETS:
                    raise ValueError(f"unknown preset {body.preset!r}")
                flt = PRESETS[body.preset]()
            else:
                flt = RecordFilter(
                    intervals={k: tuple(v) for k, v in body.intervals.items()},
                    outcomes=set(body.outcomes) if body.outcomes else None)
        except ValueError as e:
            raise HTTPException(422, str(e))
        rows = filter_outcomes(ws().filter_rows(body.split), flt)
        return {"ids": [r.row_id for r in rows], "count": len(rows)}

    @app.get("/tiles")
    def tiles(x: str = "pca:0", y: str = "pca:1",
              x_lo: float = -4, x_hi: float = 4, y_lo: float = -4,
              y_hi: float = 4, bins: int = 12,
              metric: str = "confidence", split: str = "train"):
        try:
            grid = build_tiles(ws().objects(split), x, y,
                               (x_lo, x_hi, y_lo, y_hi), bins,
                               pca=ws().pca(), metric=metric)
        except ValueError as e:
            raise HTTPException(422, str(e))
        return grid.to_dict()

    @app.get("/bars")
    def bars(dim: str, bins: int = 12, metric: str = "confidence",
             split: str = "test", seed: int = 0):
        try:
            bar = bin_dimension(ws().objects(split), dim, bins,
                                reference=ws().objects("train"),
                                pca=ws().pca(), metric=metric, seed=seed)
        except (ValueError, IndexError) as e:
            raise HTTPException(422, str(e))
        return bar.to_dict()

    @app.get("/dimtree")
    def dimtree():
        latents = np.array([o.latent for o in ws().objects("train")])
        return cluster_dimensions(latents).to_dict()

    @app.post("/rank")
    def rank(body: RankBody):
        objects = ws().objects(body.split)
        ids = set(body.ids)
        mask = np.array([o.object_id in ids for o in objects])
        if mask.sum() == 0 or mask.all():
            raise HTTPException(422, "selection must be neither empty nor universal")
        latents = np.array([o.latent for o in objects])
        return rank_to_interpret(latents, mask, seed=body.seed).to_dict()

    @app.get("/scene/{object_id}")
    def scene(object_id: str):
        try:
            obj, ds = ws().object_by_id(object_id)
        except KeyError:
            raise HTTPException(404, f"no object {object_id}")
        sc = ds.scene_by_id(obj.scene_id)
        gts = [o for o in ds.objects if o.scene_id == obj.scene_id]
        dts = ws().detector().detect(sc.pixels)
        return {
            "scene_id": obj.scene_id,
            "image_p6": _p6_b64(sc.pixels),
            "gt_boxes": [{"id": o.object_id, "box": o.gt_box.as_tuple(),
                          "cls": o.cls, "score": o.score,
                          "robustness": o.robustness} for o in gts],
            "detections": [{"box": d.box.as_tuple(), "scores": d.scores,
                            "top_confidence": d.top_confidence} for d in dts],
        }

    @app.post("/walk")
    def walk(body: WalkBody):
        try:
            obj, ds = ws().object_by_id(body.object_id)
        except KeyError:
            raise HTTPException(404, f"no object {body.object_id}")
        if obj.gradient is None:
            raise HTTPException(422, f"object {body.object_id} has no stored gradient")
        sc = ds.scene_by_id(obj.scene_id)
        points = adversarial_walk(obj, sc, ws().detector(), ds.codec,
                                  obj.gradient, body.multipliers)
        return {"object_id": body.object_id,
                "points": [{"multiplier": m, "score": s,
                            "patch_p6": _p6_b64(p.pixels)}
                           for m, (p, s) in zip(body.multipliers, points)]}

    def _job_fn(kind: str, params: dict):
        w = ws()
        if kind == "generate":
            return {"message": w.generate()}
        if kind == "detect":
            return {"message": w.detect()}
        if kind == "attack_all":
            return {"message": w.attack()}
        if kind == "rank":
            objects = w.objects(params.get("split", "train"))
            ids = set(params["ids"])
            mask = np.array([o.object_id in ids for o in objects])
            latents = np.array([o.latent for o in objects])
            return rank_to_interpret(latents, mask,
                                     seed=params.get("seed", 0)).to_dict()
        if kind == "augment":
            aug = w.build_augmented(params.get("strategy", "dist"),
                                    params.get("seed"))
            return {"strategy": aug.strategy, "records": len(aug.records),
                    "shortfall": aug.shortfall}
        if kind == "experiment":
            rep = w.run_experiment_strategy(
                params.get("strategy", "dist"), params.get("trials"),
                params.get("seed"))
            return rep.summary()
        raise ValueError(f"unknown job kind {kind!r}")

    @app.post("/jobs")
    def submit_job(body: JobBody):
        try:
            job = app.state.runner.submit(
                body.kind, body.params,
                lambda j: _job_fn(body.kind, body.params))
        except ValueError as e:
            raise HTTPException(422, str(e))
        return {"job_id": job.job_id, "status": job.status}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        job = app.state.runner.get(job_id)
        if job is None:
            raise HTTPException(404, f"no job {job_id}")
        return job.to_dict()

    @app.post("/augment")
    def augment(body: JobBody):
        return submit_job(JobBody(kind="augment", params=body.params))

    @app.post("/experiment")
    def experiment(body: JobBody):
        return submit_job(JobBody(kind="experiment", params=body.params))

    @app.exception_handler(WorkspaceLocked)
    def locked_handler(request, exc):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=409, content={"detail": str(exc)})

    return app


def serve(workspace: Workspace, host: str = "127.0.0.1", port: int = 8787):
    import uvicorn

    uvicorn.run(create_app(workspace), host=host, port=port, log_level="warning")
