"""DOTA-protocol detection evaluation: AP/mAP, average recall, PR curves.

AP follows the PASCAL VOC convention (11-point interpolation by default,
all-point envelope behind a flag). Matching is greedy per detection in
descending score order, one-to-one per ground truth; difficult ground
truths absorb matches without counting as TP or FP. OBB overlaps are
computed between the minimum enclosing rectangles of the quads (detections
are refined to rectangles before scoring); HBB overlaps use plain
axis-aligned IoU.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ValidationError
from .geom import hbb_iou, min_area_rect, quad_to_aabb, rotated_iou, rrect_to_quad

DEFAULT_AR_GRID = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))

# slack when comparing recalls/IoUs against grid thresholds, so that values
# meant to hit a threshold exactly are not lost to representation noise
GRID_EPS = 1e-12


def voc_ap(pr_points, eleven_point: bool = True) -> float:
    """Average precision from (recall, precision) points.

    eleven_point: mean over recall thresholds {0, 0.1, ..., 1} of the best
    precision at recall >= threshold. Otherwise the area under the
    monotone-interpolated precision envelope. Empty input gives 0.
    """
    if not len(pr_points):
        return 0.0
    rec = np.asarray([p[0] for p in pr_points], dtype=np.float64)
    prec = np.asarray([p[1] for p in pr_points], dtype=np.float64)
    if np.any(np.diff(rec) < 0.0):
        raise ValidationError("recalls must be nondecreasing")
    if eleven_point:
        total = 0.0
        for i in range(11):
            t = round(0.1 * i, 1)
            mask = rec >= t - GRID_EPS
            total += float(prec[mask].max()) if np.any(mask) else 0.0
        return total / 11.0
    mrec = np.concatenate(([0.0], rec, [1.0]))
    mpre = np.concatenate(([0.0], prec, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    idx = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[idx + 1] - mrec[idx]) * mpre[idx + 1]))


@dataclass
class EvalResult:
    """Evaluation summary: per-class AP, their mean, average recall, curves."""

    per_class_ap: dict
    mean_ap: float
    avg_recall: float
    pr_curves: dict
    ar_curve: list
    per_class_num_gt: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_class_ap": dict(self.per_class_ap),
            "per_class_num_gt": dict(self.per_class_num_gt),
            "mAP": self.mean_ap,
            "AR": self.avg_recall,
            "ar_curve": [[t, r] for t, r in self.ar_curve],
        }


def _refine_quad(quad):
    """Minimum enclosing rectangle of a quad, as a quad."""
    return rrect_to_quad(min_area_rect(quad))


def _det_geometry(record, task):
    if task == "obb":
        if record.quad is None:
            raise DataError(f"OBB evaluation needs quads (image {record.image_id})")
        return _refine_quad(record.quad)
    if record.box is None:
        raise DataError(f"HBB evaluation needs boxes (image {record.image_id})")
    return record.box


def _gt_geometry(record, task):
    return _refine_quad(record.quad) if task == "obb" else quad_to_aabb(record.quad)


def _overlap(task):
    return rotated_iou if task == "obb" else hbb_iou


def evaluate(dets, gts, task: str = "obb", iou_thresh: float = 0.5,
             eleven_point: bool = True, classnames=None,
             ar_grid=DEFAULT_AR_GRID) -> EvalResult:
    """Score detections against ground truth.

    dets: {class_name: [DetRecord, ...]} across all images
    gts:  {image_id: [GtRecord, ...]}

    The class vocabulary defaults to the categories present in the ground
    truth; detection classes outside it raise DataError. Classes with no
    non-difficult ground truth are skipped. The AR field treats all
    detections, pooled over classes, as proposals on ar_grid.
    """
    if task not in ("obb", "hbb"):
        raise ValidationError(f"unknown task {task!r}")
    if classnames is None:
        classnames = sorted({r.category for recs in gts.values() for r in recs})
    unknown = sorted(set(dets) - set(classnames))
    if unknown:
        raise DataError(f"detections carry unknown categories: {unknown}")

    iou_fn = _overlap(task)
    gt_geom = {
        img: [(_gt_geometry(r, task), r.difficult) for r in recs]
        for img, recs in gts.items()
    }
    gt_cat = {img: [r.category for r in recs] for img, recs in gts.items()}

    per_class_ap = {}
    per_class_num_gt = {}
    pr_curves = {}
    for cls in classnames:
        cls_gt = {}
        npos = 0
        for img, recs in gts.items():
            idx = [j for j, c in enumerate(gt_cat[img]) if c == cls]
            if idx:
                cls_gt[img] = idx
                npos += sum(1 for j in idx if not recs[j].difficult)
        per_class_num_gt[cls] = npos
        if npos == 0:
            continue

        records = list(dets.get(cls, []))
        order = sorted(range(len(records)), key=lambda i: (-records[i].score, i))
        matched = {img: [False] * len(idx) for img, idx in cls_gt.items()}
        tp = np.zeros(len(records))
        fp = np.zeros(len(records))
        for rank, i in enumerate(order):
            det = records[i]
            geom = _det_geometry(det, task)
            best_ov = -1.0
            best_j = -1
            for j, gt_idx in enumerate(cls_gt.get(det.image_id, [])):
                ov = iou_fn(geom, gt_geom[det.image_id][gt_idx][0])
                if ov > best_ov:
                    best_ov = ov
                    best_j = j
            if best_ov >= iou_thresh:
                gt_idx = cls_gt[det.image_id][best_j]
                if gt_geom[det.image_id][gt_idx][1]:
                    continue  # difficult: neither TP nor FP
                if not matched[det.image_id][best_j]:
                    matched[det.image_id][best_j] = True
                    tp[rank] = 1.0
                else:
                    fp[rank] = 1.0
            else:
                fp[rank] = 1.0

        cum_tp = np.cumsum(tp)
        cum_fp = np.cumsum(fp)
        scored = cum_tp + cum_fp > 0
        recall = cum_tp / npos
        precision = np.where(scored, cum_tp / np.maximum(cum_tp + cum_fp, 1), 0.0)
        points = list(zip(recall.tolist(), precision.tolist()))
        pr_curves[cls] = points
        per_class_ap[cls] = voc_ap(points, eleven_point)

    mean_ap = (
        math.fsum(per_class_ap.values()) / len(per_class_ap)
        if per_class_ap else 0.0
    )

    proposals = {}
    for recs in dets.values():
        for r in recs:
            proposals.setdefault(r.image_id, []).append(_det_geometry(r, task))
    gt_for_ar = {
        img: [g for g, diff in geoms if not diff]
        for img, geoms in gt_geom.items()
    }
    total_gt = sum(len(v) for v in gt_for_ar.values())
    if total_gt:
        ar, ar_curve = _recall_over_grid(proposals, gt_for_ar, iou_fn, ar_grid)
    else:
        ar, ar_curve = 0.0, [(float(t), 0.0) for t in ar_grid]

    return EvalResult(per_class_ap, mean_ap, ar, pr_curves, ar_curve,
                      per_class_num_gt)


def _recall_over_grid(proposals, gt_geoms, iou_fn, grid):
    """Greedy one-to-one matching; recall at each IoU threshold in grid.

    A single greedy pass in descending IoU order serves all thresholds:
    decisions for pairs above any threshold are unaffected by pairs below.
    """
    matched_ious = []
    total = 0
    for img, gt_list in gt_geoms.items():
        total += len(gt_list)
        props = proposals.get(img, [])
        if not props or not gt_list:
            continue
        pairs = []
        for pi, p in enumerate(props):
            for gi, g in enumerate(gt_list):
                ov = iou_fn(p, g)
                if ov > 0.0:
                    pairs.append((ov, pi, gi))
        pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
        used_p = set()
        used_g = set()
        for ov, pi, gi in pairs:
            if pi in used_p or gi in used_g:
                continue
            used_p.add(pi)
            used_g.add(gi)
            matched_ious.append(ov)
    matched = np.asarray(matched_ious, dtype=np.float64)
    curve = []
    for t in grid:
        rec = float(np.count_nonzero(matched >= t - GRID_EPS)) / total
        curve.append((float(t), rec))
    ar = math.fsum(r for _, r in curve) / len(curve)
    return ar, curve


def average_recall(proposals, gts, iou_grid=DEFAULT_AR_GRID):
    """Category-agnostic proposal recall averaged over an IoU grid.

    proposals: {image_id: [Quad, ...]}; gts: {image_id: [GtRecord or Quad]}.
    Difficult ground truths are excluded. Raises DataError when there are
    no ground truths to recall. Returns (AR, [(threshold, recall), ...]).
    """
    gt_geoms = {}
    for img, recs in gts.items():
        keep = []
        for r in recs:
            if hasattr(r, "quad"):
                if not r.difficult:
                    keep.append(r.quad)
            else:
                keep.append(r)
        gt_geoms[img] = keep
    total = sum(len(v) for v in gt_geoms.values())
    if total == 0:
        raise DataError("no ground-truth boxes to compute recall against")
    prop_geoms = {img: list(ps) for img, ps in proposals.items()}
    return _recall_over_grid(prop_geoms, gt_geoms, rotated_iou, iou_grid)
