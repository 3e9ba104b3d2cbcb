"""Job ledger and background execution for workspace mutations.

Jobs move queued -> running -> done|failed; every transition appends to
the ledger file. The service runs one mutating job at a time (the
workspace lock enforces it); reads stay unrestricted.
"""

from __future__ import annotations

import json
import threading
import time
import traceback
import uuid
from dataclasses import dataclass, field
from pathlib import Path

JOB_KINDS = ("generate", "detect", "attack_all", "rank", "augment", "experiment")


@dataclass
class Job:
    job_id: str
    kind: str
    params: dict
    status: str = "queued"
    progress: int = 0
    result: dict | None = None
    error: str | None = None
    created: float = field(default_factory=time.time)
    finished: float | None = None

    def to_dict(self) -> dict:
        return {"job_id": self.job_id, "kind": self.kind, "params": self.params,
                "status": self.status, "progress": self.progress,
                "result": self.result, "error": self.error,
                "created": self.created, "finished": self.finished}


class JobRunner:
    """In-process job registry with an append-only on-disk ledger."""

    def __init__(self, ledger_path: Path):
        self.ledger_path = Path(ledger_path)
        self.jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def _append_ledger(self, job: Job):
        with open(self.ledger_path, "a") as f:
            f.write(json.dumps(job.to_dict()) + "\n")

    def submit(self, kind: str, params: dict, fn) -> Job:
        if kind not in JOB_KINDS:
            raise ValueError(f"unknown job kind {kind!r}")
        job = Job(job_id=uuid.uuid4().hex[:12], kind=kind, params=params)
        with self._lock:
            self.jobs[job.job_id] = job
        self._append_ledger(job)

        def run():
            job.status = "running"
            try:
                job.result = fn(job)
                job.status = "done"
            except Exception as e:  # noqa: BLE001 - job isolation boundary
                job.status = "failed"
                job.error = f"{type(e).__name__}: {e}"
                job.result = {"traceback": traceback.format_exc(limit=8)}
            job.finished = time.time()
            self._append_ledger(job)

        thread = threading.Thread(target=run, daemon=True)
        thread.start()
        job._thread = thread
        return job

    def get(self, job_id: str) -> Job | None:
        return self.jobs.get(job_id)

    def wait(self, job_id: str, timeout: float = 600.0) -> Job:
        job = self.jobs[job_id]
        job._thread.join(timeout)
        return job
