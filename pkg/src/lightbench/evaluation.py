"""Detection-accuracy metrics: matching, precision/recall, AP, mAP.

Matching is greedy by descending confidence with a highest-IoU tie-break
(then lowest ground-truth index), the standard detector-evaluation
convention. Unmatched ground truths split into two miss categories:

  FN-I  -- never overlapped (at the IoU threshold) by any detection,
  FN-II -- overlapped only by detections with top confidence < 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .boxes import Box, iou

CLASSES = ("red", "green", "yellow", "off")

#: confidence threshold separating FN-II ("seen but not trusted") from FN-I
FN2_CONFIDENCE = 0.5


@dataclass
class DetectionRecord:
    """One detector prediction with per-class confidences."""

    box: Box
    scores: dict[str, float]
    matched_gt: int | None = None
    iou: float = 0.0
    outcome: str = "UNMATCHED"

    @property
    def top_confidence(self) -> float:
        return max(self.scores.values())

    @property
    def top_class(self) -> str:
        return max(self.scores, key=self.scores.get)


@dataclass
class MatchResult:
    tp: list[tuple[int, int]] = field(default_factory=list)  # (dt idx, gt idx)
    fp: list[int] = field(default_factory=list)
    fn1: list[int] = field(default_factory=list)
    fn2: list[int] = field(default_factory=list)

    @property
    def counts(self) -> tuple[int, int, int]:
        """(TP, FP, FN) with FN = |fn1| + |fn2|."""
        return len(self.tp), len(self.fp), len(self.fn1) + len(self.fn2)


def match_detections(
    gts: list[Box], dts: list[DetectionRecord], iou_threshold: float = 0.5
) -> MatchResult:
    """Greedily match detections to ground truths.

    Detections are processed in descending top_confidence; each claims the
    unclaimed GT with the highest IoU >= threshold, else becomes an FP.
    Mutates the detections' matched_gt/iou/outcome fields in place.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    result = MatchResult()
    order = sorted(range(len(dts)), key=lambda i: (-dts[i].top_confidence, i))
    claimed: set[int] = set()
    overlapped = [False] * len(gts)  # any detection reached the IoU threshold
    for di in order:
        dt = dts[di]
        best_gi, best_iou = None, 0.0
        for gi, gt in enumerate(gts):
            v = iou(dt.box, gt)
            if v >= iou_threshold:
                overlapped[gi] = True
                if gi not in claimed and v > best_iou:
                    best_gi, best_iou = gi, v
        if best_gi is None:
            dt.matched_gt = None
            dt.iou = 0.0
            dt.outcome = "FP"
            result.fp.append(di)
        else:
            claimed.add(best_gi)
            dt.matched_gt = best_gi
            dt.iou = best_iou
            dt.outcome = "TP"
            result.tp.append((di, best_gi))
    for gi in range(len(gts)):
        if gi in claimed:
            continue
        if overlapped[gi]:
            result.fn2.append(gi)
        else:
            result.fn1.append(gi)
    return result


def precision_recall(m: MatchResult) -> tuple[float, float]:
    """precision = TP/(TP+FP), recall = TP/(TP+FN); empty denominators give 1.0."""
    tp, fp, fn = m.counts
    precision = tp / (tp + fp) if (tp + fp) > 0 else 1.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 1.0
    return precision, recall


def average_precision(outcomes: list[bool], total_gt: int) -> float:
    """All-point interpolated AP from ranked detection outcomes.

    ``outcomes`` is TP/FP per detection, already sorted by descending
    confidence. Applies the monotone precision envelope and integrates
    precision over recall.
    """
    if total_gt <= 0:
        raise ValueError("AP undefined: zero ground-truth objects")
    if not outcomes:
        return 0.0
    tp_cum = 0
    recalls = [0.0]
    precisions = [1.0]
    for i, is_tp in enumerate(outcomes):
        if is_tp:
            tp_cum += 1
        recalls.append(tp_cum / total_gt)
        precisions.append(tp_cum / (i + 1))
    # monotone envelope: precision at recall r = max precision at recall >= r
    for i in range(len(precisions) - 2, -1, -1):
        precisions[i] = max(precisions[i], precisions[i + 1])
    ap = 0.0
    for i in range(1, len(recalls)):
        ap += (recalls[i] - recalls[i - 1]) * precisions[i]
    return ap


def ap_from_records(
    dts: list[tuple[float, bool]], total_gt: int
) -> float:
    """AP from (confidence, is_tp) pairs in any order."""
    ranked = sorted(dts, key=lambda t: -t[0])
    return average_precision([tp for _, tp in ranked], total_gt)


def mean_ap(per_class_ap: dict[str, float | None]) -> tuple[float, list[str]]:
    """Unweighted mean over defined APs; returns (mAP, excluded classes)."""
    defined = {c: v for c, v in per_class_ap.items() if v is not None}
    excluded = sorted(set(per_class_ap) - set(defined))
    if not defined:
        raise ValueError("mAP undefined: no class has a defined AP")
    return sum(defined.values()) / len(defined), excluded
