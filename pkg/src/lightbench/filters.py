"""Conjunctive range filtering over extracted performance records.

A filterable row is the flattened per-object/per-detection view the
dashboard works over: object size (0 for detections with no ground truth),
IoU, confidence, robustness, and an outcome label. Presets encode the
dashboard's FP / FN-I / FN-II taxonomy:

  FP    -- detection with no matched ground truth and confidence > 0.5
  FN-I  -- ground truth never overlapped by any detection
  FN-II -- ground truth seen only below the 0.5 confidence threshold
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

NUMERIC_FIELDS = ("size", "iou", "confidence", "robustness")
OUTCOMES = ("TP", "FP", "FN-I", "FN-II", "UNMATCHED")


@dataclass
class FilterRow:
    """One row of the dashboard's record universe."""

    row_id: str
    kind: str  # "object" or "detection"
    size: float = 0.0
    iou: float = 0.0
    confidence: float = 0.0
    robustness: float | None = None
    outcome: str = "UNMATCHED"


@dataclass
class RecordFilter:
    """Conjunction of closed numeric intervals and an outcome set."""

    intervals: dict[str, tuple[float, float]] = field(default_factory=dict)
    outcomes: set[str] | None = None

    def __post_init__(self):
        for name, (lo, hi) in self.intervals.items():
            if name not in NUMERIC_FIELDS:
                raise ValueError(f"unknown filter field {name!r}")
            if lo > hi:
                raise ValueError(f"contradictory interval for {name}: [{lo}, {hi}]")
        if self.outcomes is not None:
            bad = set(self.outcomes) - set(OUTCOMES)
            if bad:
                raise ValueError(f"unknown outcome labels: {sorted(bad)}")

    def matches(self, row: FilterRow) -> bool:
        for name, (lo, hi) in self.intervals.items():
            value = getattr(row, name)
            if value is None or not lo <= value <= hi:
                return False
        if self.outcomes is not None and row.outcome not in self.outcomes:
            return False
        return True


def filter_outcomes(rows: Iterable[FilterRow], flt: RecordFilter) -> list[FilterRow]:
    """Rows satisfying every filter condition (empty filter = identity)."""
    return [r for r in rows if flt.matches(r)]


def preset_fp() -> RecordFilter:
    """High-confidence detections with no ground truth (the mislabel probe)."""
    return RecordFilter(
        intervals={"confidence": (0.5 + 1e-12, 1.0)}, outcomes={"FP"}
    )


def preset_fn1() -> RecordFilter:
    return RecordFilter(outcomes={"FN-I"})


def preset_fn2() -> RecordFilter:
    return RecordFilter(outcomes={"FN-II"})


PRESETS = {"fp": preset_fp, "fn1": preset_fn1, "fn2": preset_fn2}
