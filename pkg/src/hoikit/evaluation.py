"""Triplet-matching evaluation: per-class AP, mAP, and detection-style metrics.

Matching is greedy one-to-one in descending score order with IoU > 0.5 on
both boxes. Two scenarios govern occluded ground-truth objects: scenario 1
requires the predicted object box to be exactly empty ([0, 0, 0, 0]);
scenario 2 ignores the object box. Average precision uses all-point
interpolation (precision envelope) with score ties kept in stable input
order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .scenes import EMPTY_BOX, HOITriplet

IOU_THRESHOLD = 0.5


def is_empty_box(box) -> bool:
    return all(float(v) == 0.0 for v in box)


def iou(a, b) -> float:
    """Intersection over union of two boxes; two empty boxes give 0."""
    ax1, ay1, ax2, ay2 = [float(v) for v in a]
    bx1, by1, bx2, by2 = [float(v) for v in b]
    if ax1 > ax2 or ay1 > ay2 or bx1 > bx2 or by1 > by2:
        raise InvalidInputError(f"malformed box: {a} vs {b}")
    ix = max(0.0, min(ax2, bx2) - max(ax1, bx1))
    iy = max(0.0, min(ay2, by2) - max(ay1, by1))
    inter = ix * iy
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


@dataclass
class PredictionRecord:
    """One predicted triplet tagged with its source scene."""

    scene_id: str
    triplet: HOITriplet


@dataclass
class GroundTruthRecord:
    scene_id: str
    triplet: HOITriplet


@dataclass
class MatchRecord:
    prediction_id: int
    score: float
    is_tp: bool
    matched_gt: int | None = None

    @property
    def label(self) -> str:
        return "TP" if self.is_tp else "FP"


def match_triplets(
    preds: list[HOITriplet],
    gts: list[HOITriplet],
    scenario: int,
) -> list[MatchRecord]:
    """Greedy one-to-one matching of same-class triplets within one scene.

    ``preds`` must already be sorted by descending score. A prediction is a
    true positive when the human boxes overlap with IoU > 0.5 and the
    object-box rule for the scenario passes; each ground truth matches at
    most once. Among eligible ground truths the one with the highest
    human-box IoU wins (ties to the lowest index).
    """
    if scenario not in (1, 2):
        raise InvalidInputError(f"scenario must be 1 or 2, got {scenario}")
    taken = [False] * len(gts)
    records = []
    for pid, pred in enumerate(preds):
        best_gt, best_iou = None, 0.0
        for gi, gt in enumerate(gts):
            if taken[gi] or gt.interaction_class != pred.interaction_class:
                continue
            h_iou = iou(pred.human_box, gt.human_box)
            if h_iou <= IOU_THRESHOLD:
                continue
            if gt.object_occluded or is_empty_box(gt.object_box):
                if scenario == 1 and not is_empty_box(pred.object_box):
                    continue
                # scenario 2: the occluded object is ignored
            else:
                if iou(pred.object_box, gt.object_box) <= IOU_THRESHOLD:
                    continue
            if h_iou > best_iou:
                best_gt, best_iou = gi, h_iou
        if best_gt is not None:
            taken[best_gt] = True
            records.append(MatchRecord(pid, pred.score, True, best_gt))
        else:
            records.append(MatchRecord(pid, pred.score, False))
    return records


def average_precision(records: list[MatchRecord], npos: int) -> float:
    """Area under the precision-recall curve with the precision envelope.

    ``records`` must be in descending score order (stable tie order). With
    npos = 0 there is nothing to recover and the result is 0; callers exclude
    such classes from mAP.
    """
    if npos <= 0:
        return 0.0
    if not records:
        return 0.0
    tp = np.array([r.is_tp for r in records], dtype=np.float64)
    cum_tp = np.cumsum(tp)
    cum_fp = np.cumsum(1.0 - tp)
    recall = cum_tp / npos
    precision = cum_tp / (cum_tp + cum_fp)
    # precision envelope: max precision attainable at recall >= r
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    ap = 0.0
    prev_recall = 0.0
    for r, p in zip(recall, envelope):
        if r > prev_recall:
            ap += (r - prev_recall) * p
            prev_recall = r
    return float(ap)


@dataclass
class EvalReport:
    scenario: int
    per_class_ap: dict[int, float]
    per_class_npos: dict[int, int]
    map: float
    recall: float
    precision: float
    f1: float
    n_scenes: int
    pr_curves: dict[int, tuple[list[float], list[float]]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def summary_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "map": self.map,
            "recall": self.recall,
            "precision": self.precision,
            "f1": self.f1,
            "n_scenes": self.n_scenes,
            "per_class": {
                str(c): {"ap": self.per_class_ap[c], "npos": self.per_class_npos[c]}
                for c in sorted(self.per_class_ap)
            },
            "warnings": self.warnings,
        }


def _dedupe_human_boxes(entries: list[tuple[tuple, float]]) -> list[tuple[tuple, float]]:
    """Collapse exact duplicate boxes, keeping the highest score."""
    best: dict[tuple, float] = {}
    for box, score in entries:
        if box not in best or score > best[box]:
            best[box] = score
    return sorted(best.items(), key=lambda kv: -kv[1])


def _human_detection_counts(
    preds: list[PredictionRecord], gts: list[GroundTruthRecord]
) -> tuple[int, int, int]:
    """(matched, n_pred, n_gt) for human boxes only, matched per scene at IoU > 0.5."""
    scene_ids = sorted({g.scene_id for g in gts} | {p.scene_id for p in preds})
    matched = n_pred = n_gt = 0
    for sid in scene_ids:
        gt_boxes = sorted({tuple(g.triplet.human_box) for g in gts if g.scene_id == sid})
        pred_boxes = _dedupe_human_boxes(
            [
                (tuple(p.triplet.human_box), p.triplet.score)
                for p in preds
                if p.scene_id == sid
            ]
        )
        n_gt += len(gt_boxes)
        n_pred += len(pred_boxes)
        taken = [False] * len(gt_boxes)
        for box, _score in pred_boxes:
            best, best_iou = None, IOU_THRESHOLD
            for gi, gt_box in enumerate(gt_boxes):
                if taken[gi]:
                    continue
                v = iou(box, gt_box)
                if v > best_iou:
                    best, best_iou = gi, v
            if best is not None:
                taken[best] = True
                matched += 1
    return matched, n_pred, n_gt


def evaluate(
    preds: list[PredictionRecord],
    gts: list[GroundTruthRecord],
    scenario: int,
    class_filter: list[int] | None = None,
) -> EvalReport:
    """Full protocol: per-class AP over scenes, mAP, and human-box detection metrics.

    Classes with zero positives are excluded from mAP. ``class_filter``
    optionally restricts the evaluated interaction classes.
    """
    warnings = []
    if not gts:
        warnings.append("empty ground-truth set: no classes evaluated")
    classes = sorted(
        {g.triplet.interaction_class for g in gts}
        | {p.triplet.interaction_class for p in preds}
    )
    if class_filter:
        classes = [c for c in classes if c in class_filter]

    per_class_ap: dict[int, float] = {}
    per_class_npos: dict[int, int] = {}
    pr_curves: dict[int, tuple[list[float], list[float]]] = {}
    scene_ids = sorted({g.scene_id for g in gts} | {p.scene_id for p in preds})

    for cls in classes:
        npos = sum(1 for g in gts if g.triplet.interaction_class == cls)
        per_class_npos[cls] = npos
        # Rank by (-score, input order); matching per scene in the same order.
        cls_records: list[tuple[float, int, MatchRecord]] = []
        for sid in scene_ids:
            indexed = [
                (i, p.triplet)
                for i, p in enumerate(preds)
                if p.scene_id == sid and p.triplet.interaction_class == cls
            ]
            indexed.sort(key=lambda kv: (-kv[1].score, kv[0]))
            sg = [
                g.triplet
                for g in gts
                if g.scene_id == sid and g.triplet.interaction_class == cls
            ]
            for (input_idx, _), rec in zip(
                indexed, match_triplets([t for _, t in indexed], sg, scenario)
            ):
                cls_records.append((rec.score, input_idx, rec))
        cls_records.sort(key=lambda kv: (-kv[0], kv[1]))
        ranked = [rec for _, _, rec in cls_records]
        per_class_ap[cls] = average_precision(ranked, npos)
        tp = np.cumsum([r.is_tp for r in ranked]) if ranked else np.array([])
        if len(tp) and npos > 0:
            recalls = (tp / npos).tolist()
            precisions = (tp / np.arange(1, len(tp) + 1)).tolist()
        else:
            recalls, precisions = [], []
        pr_curves[cls] = (recalls, precisions)

    evaluated = [c for c in classes if per_class_npos.get(c, 0) > 0]
    mean_ap = float(np.mean([per_class_ap[c] for c in evaluated])) if evaluated else 0.0

    matched, n_pred, n_gt = _human_detection_counts(preds, gts)
    recall = matched / n_gt if n_gt else 0.0
    precision = matched / n_pred if n_pred else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0

    return EvalReport(
        scenario=scenario,
        per_class_ap=per_class_ap,
        per_class_npos=per_class_npos,
        map=mean_ap,
        recall=recall,
        precision=precision,
        f1=f1,
        n_scenes=len(scene_ids),
        pr_curves=pr_curves,
        warnings=warnings,
    )


# --- report emission -----------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{float(v):.10g}"


def report_csv(report: EvalReport, class_names: dict[int, str] | None = None) -> str:
    """Per-class rows plus a summary row, fixed column order."""
    lines = ["class,ap,npos"]
    for cls in sorted(report.per_class_ap):
        name = (class_names or {}).get(cls, str(cls))
        lines.append(f"{name},{_fmt(report.per_class_ap[cls])},{report.per_class_npos[cls]}")
    lines.append(f"mAP,{_fmt(report.map)},")
    lines.append(f"recall,{_fmt(report.recall)},")
    lines.append(f"precision,{_fmt(report.precision)},")
    lines.append(f"f1,{_fmt(report.f1)},")
    return "\n".join(lines) + "\n"


def pr_curve_csv(report: EvalReport, cls: int) -> str:
    recalls, precisions = report.pr_curves.get(cls, ([], []))
    lines = ["recall,precision"]
    for r, p in zip(recalls, precisions):
        lines.append(f"{_fmt(r)},{_fmt(p)}")
    return "\n".join(lines) + "\n"
