"""On-disk record formats: 16-bit binary P6 images and newline-delimited
JSON record streams with a schema-version header line.

Patches are written as maxval-65535 P6 portable pixmaps; decode output is
already snapped to that grid, so save/load is value-exact. NDJSON streams
start with one header object and carry one record per line; loading stops
cleanly at a truncated final line and reports it.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .boxes import Box
from .codec import Patch
from .evaluation import DetectionRecord
from .scenes import ObjectRecord
from .attack import AdversarialResult

P6_MAXVAL = 65535
SCHEMA_VERSION = 1


class RecordFormatError(ValueError):
    pass


def write_p6(path, pixels: np.ndarray):
    """16-bit binary P6 (big-endian samples), channel values from [0, 1]."""
    arr = np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0)
    raw = np.floor(arr * P6_MAXVAL + 0.5).astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P6\n{arr.shape[1]} {arr.shape[0]}\n{P6_MAXVAL}\n".encode())
        f.write(raw.tobytes())


def read_p6(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P6"):
        raise RecordFormatError(f"{path}: not a binary P6 file")
    # header: magic, width, height, maxval, separated by whitespace/comments
    fields = []
    i = 2
    while len(fields) < 3:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace():
            j += 1
        fields.append(int(data[i:j]))
        i = j
    i += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != P6_MAXVAL:
        raise RecordFormatError(f"{path}: expected maxval {P6_MAXVAL}, got {maxval}")
    raw = np.frombuffer(data, dtype=">u2", offset=i, count=w * h * 3)
    return (raw.reshape(h, w, 3).astype(np.float32) / P6_MAXVAL)


def _box(b: Box | None):
    return None if b is None else [b.x, b.y, b.w, b.h]


def _unbox(v) -> Box | None:
    return None if v is None else Box(*v)


def detection_to_dict(d: DetectionRecord) -> dict:
    return {"box": _box(d.box), "scores": d.scores, "matched_gt": d.matched_gt,
            "iou": d.iou, "outcome": d.outcome}


def detection_from_dict(v: dict) -> DetectionRecord:
    return DetectionRecord(box=_unbox(v["box"]), scores=dict(v["scores"]),
                           matched_gt=v.get("matched_gt"), iou=v.get("iou", 0.0),
                           outcome=v.get("outcome", "UNMATCHED"))


def object_to_dict(o: ObjectRecord, patch_path: str | None) -> dict:
    return {
        "id": o.object_id, "scene_id": o.scene_id, "cls": o.cls,
        "size": o.size, "gt_box": _box(o.gt_box), "footprint": _box(o.footprint),
        "latent": np.asarray(o.latent).tolist(), "patch": patch_path,
        "score": o.score,
        "detection": detection_to_dict(o.detection) if o.detection else None,
        "gradient": np.asarray(o.gradient).tolist() if o.gradient is not None else None,
        "robustness": o.robustness,
    }


def object_from_dict(v: dict, patch: Patch | None) -> ObjectRecord:
    return ObjectRecord(
        object_id=v["id"], scene_id=v["scene_id"], cls=v["cls"], size=v["size"],
        gt_box=_unbox(v["gt_box"]), footprint=_unbox(v["footprint"]),
        latent=np.asarray(v["latent"]), patch=patch, score=v.get("score"),
        detection=detection_from_dict(v["detection"]) if v.get("detection") else None,
        gradient=np.asarray(v["gradient"]) if v.get("gradient") is not None else None,
        robustness=v.get("robustness"),
    )


def adversarial_to_dict(r: AdversarialResult, patch_path: str | None,
                        trace_path: str | None) -> dict:
    return {
        "object_id": r.object_id, "status": r.status,
        "z0": np.asarray(r.z0).tolist(),
        "z_final": np.asarray(r.z_final).tolist(),
        "epsilon": np.asarray(r.epsilon).tolist() if r.epsilon is not None else None,
        "gradient": np.asarray(r.gradient).tolist() if r.gradient is not None else None,
        "final_score": r.final_score, "steps_used": r.steps_used,
        "queries": r.queries, "robustness": r.robustness,
        "patch": patch_path, "trace": trace_path,
    }


def adversarial_from_dict(v: dict, patch: Patch | None) -> AdversarialResult:
    return AdversarialResult(
        object_id=v["object_id"], status=v["status"],
        z0=np.asarray(v["z0"]), z_final=np.asarray(v["z_final"]),
        epsilon=np.asarray(v["epsilon"]) if v.get("epsilon") is not None else None,
        gradient=np.asarray(v["gradient"]) if v.get("gradient") is not None else None,
        adversarial_patch=patch, final_score=v["final_score"],
        steps_used=v["steps_used"], queries=v.get("queries", 0),
        robustness=v.get("robustness"), step_trace=[])


def validate_adversarial(v: dict, line_no: int):
    if v["status"] == "success":
        if not v["final_score"] < 0.5:
            raise RecordFormatError(
                f"line {line_no}: success record with final_score "
                f"{v['final_score']} >= 0.5")
        eps = v.get("epsilon")
        if eps is None:
            raise RecordFormatError(f"line {line_no}: success record without epsilon")
    if v["status"] == "budget_failure" and v.get("robustness") != 1.0:
        raise RecordFormatError(
            f"line {line_no}: budget_failure must have robustness 1.0")


def write_ndjson(path, kind: str, rows: list[dict]):
    """Atomic write: temp file then rename; header line carries the schema."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as f:
        f.write(json.dumps({"schema": f"lightbench/{kind}",
                            "version": SCHEMA_VERSION}) + "\n")
        for row in rows:
            f.write(json.dumps(row) + "\n")
    os.replace(tmp, path)


def read_ndjson(path, kind: str, validate=None):
    """Rows plus a truncation notice (None when the file ended cleanly)."""
    rows = []
    truncated = None
    with open(path) as f:
        text = f.read()
    lines = text.split("\n")
    if text.endswith("\n"):
        lines = lines[:-1]
        complete = len(lines)
    else:
        complete = len(lines) - 1  # final line has no newline: suspect
    if not lines:
        raise RecordFormatError(f"{path}: empty record stream")
    header = json.loads(lines[0])
    if header.get("schema") != f"lightbench/{kind}":
        raise RecordFormatError(
            f"{path}: schema {header.get('schema')!r}, want lightbench/{kind}")
    if header.get("version") != SCHEMA_VERSION:
        raise RecordFormatError(
            f"{path}: schema version {header.get('version')} != {SCHEMA_VERSION}")
    for i, line in enumerate(lines[1:], start=2):
        if i > complete:
            truncated = f"line {i}: incomplete final record ignored"
            break
        try:
            row = json.loads(line)
        except json.JSONDecodeError:
            if i == len(lines):
                truncated = f"line {i}: unparseable final record ignored"
                break
            raise RecordFormatError(f"{path}: line {i}: invalid JSON")
        if validate is not None:
            validate(row, i)
        rows.append(row)
    return rows, truncated
