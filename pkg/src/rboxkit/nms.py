"""Rotated NMS and Soft-NMS over scored detections.

Both routines are single-class: callers split by class first (helpers for
that live here too). Ties on equal scores always break toward the lower
original index, so results are deterministic.
"""

import math
from dataclasses import dataclass

from .errors import ValidationError
from .geom import AABB, Quad, hbb_iou, rotated_iou

R_NMS_DEFAULT_IOU = 0.1
SOFT_NMS_DEFAULT_IOU = 0.3
SOFT_NMS_SCORE_FLOOR = 0.001


@dataclass(frozen=True)
class ScoredDetection:
    """A detection: quad, class id, confidence."""

    quad: Quad
    class_id: int
    score: float

    def __post_init__(self):
        if self.class_id < 0:
            raise ValidationError("class_id must be >= 0")
        s = float(self.score)
        if not (math.isfinite(s) and 0.0 <= s <= 1.0):
            raise ValidationError(f"score {self.score} outside [0, 1]")
        object.__setattr__(self, "score", s)


def _score_order(scores) -> list:
    return sorted(range(len(scores)), key=lambda i: (-scores[i], i))


def r_nms(dets, iou_thresh: float = R_NMS_DEFAULT_IOU) -> list:
    """Greedy rotated NMS; returns kept indices in descending-score order.

    Repeatedly keeps the highest-scoring remaining detection and suppresses
    everything with rotated IoU strictly above iou_thresh. Single class:
    group per class before calling.
    """
    quads = [d.quad if isinstance(d, ScoredDetection) else d[0] for d in dets]
    scores = [
        d.score if isinstance(d, ScoredDetection) else float(d[1])
        for d in dets
    ]
    for s in scores:
        if not math.isfinite(s):
            raise ValidationError("detection scores must be finite")
    order = _score_order(scores)
    kept = []
    alive = [True] * len(dets)
    for i in order:
        if not alive[i]:
            continue
        kept.append(i)
        qi = quads[i]
        for j in order:
            if alive[j] and j != i:
                if rotated_iou(qi, quads[j]) > iou_thresh:
                    alive[j] = False
    return kept


def nms_per_class(dets, iou_thresh: float = R_NMS_DEFAULT_IOU) -> list:
    """r_nms applied independently per class_id; kept indices, sorted."""
    by_class = {}
    for i, d in enumerate(dets):
        by_class.setdefault(d.class_id, []).append(i)
    kept = []
    for cls in sorted(by_class):
        idx = by_class[cls]
        sub = [dets[i] for i in idx]
        kept.extend(idx[i] for i in r_nms(sub, iou_thresh))
    return sorted(kept)


def soft_nms(boxes, scores, iou_thresh: float = SOFT_NMS_DEFAULT_IOU,
             score_floor: float = SOFT_NMS_SCORE_FLOOR,
             method: str = "linear", sigma: float = 0.5):
    """Soft-NMS over axis-aligned boxes; returns (indices, rescored).

    Linear variant: each selected box decays every remaining box with
    hbb_iou above iou_thresh by (1 - iou). Gaussian variant decays all
    remaining boxes by exp(-iou^2 / sigma). Boxes whose final score falls
    below score_floor are dropped. Scores never increase; output order is
    the selection order (descending rescored score, ties by input index).
    """
    if method not in ("linear", "gaussian"):
        raise ValidationError(f"unknown soft-NMS method {method!r}")
    boxes = [b if isinstance(b, AABB) else AABB(*b) for b in boxes]
    cur = [float(s) for s in scores]
    if len(boxes) != len(cur):
        raise ValidationError("boxes and scores length mismatch")
    remaining = list(range(len(boxes)))
    out_idx = []
    out_scores = []
    while remaining:
        best = min(remaining, key=lambda i: (-cur[i], i))
        remaining.remove(best)
        out_idx.append(best)
        out_scores.append(cur[best])
        for j in remaining:
            iou = hbb_iou(boxes[best], boxes[j])
            if method == "linear":
                if iou > iou_thresh:
                    cur[j] *= 1.0 - iou
            else:
                cur[j] *= math.exp(-(iou * iou) / sigma)
    keep = [k for k, s in zip(out_idx, out_scores) if s >= score_floor]
    kept_scores = [s for s in out_scores if s >= score_floor]
    return keep, kept_scores
