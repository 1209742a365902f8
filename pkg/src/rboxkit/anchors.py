"""Anchor machinery: shape clustering, grid generation, IoU labeling.

Shape clustering follows the YOLOv2 practice of k-means++ under the
1 - IoU distance of concentric axis-aligned boxes, so priors depend only
on ground-truth widths and heights. Anchors are laid out over pyramid
levels P2..P6 with four fixed orientations per location.
"""

import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from . import kernels
from .codec import encode_obb
from .errors import DataError, ValidationError
from .geom import RRect, rrect_to_quad

LEVEL_STRIDES = {2: 4, 3: 8, 4: 16, 5: 32, 6: 64}
ORIENTATIONS = (0.0, 45.0, 90.0, 135.0)
DEFAULT_NUM_PRIORS = 18

PRIORS_HEADER = "# rboxkit-priors v1"


def shape_iou(w1: float, h1: float, w2: float, h2: float) -> float:
    """IoU of two axis-aligned boxes placed concentric."""
    inter = min(w1, w2) * min(h1, h2)
    union = w1 * h1 + w2 * h2 - inter
    return inter / union


def _shape_dist_matrix(shapes: np.ndarray, priors: np.ndarray) -> np.ndarray:
    """(n, k) matrix of 1 - IoU distances."""
    w = shapes[:, 0][:, None]
    h = shapes[:, 1][:, None]
    pw = priors[:, 0][None, :]
    ph = priors[:, 1][None, :]
    inter = np.minimum(w, pw) * np.minimum(h, ph)
    union = w * h + pw * ph - inter
    return 1.0 - inter / union


def kmeans_iou(gt_shapes, k: int, seed: int = 0, max_iter: int = 100):
    """Cluster (w, h) box shapes with k-means++ under the IoU distance.

    Shapes are canonically sorted before seeding, so the result depends
    only on the multiset of inputs and the seed, never on input order.
    Centroid updates take the component-wise median of the members and are
    only accepted when they do not increase the cluster's summed distance,
    which keeps the mean cost nonincreasing across iterations (asserted).
    Empty clusters are re-seeded from the point farthest from its prior.

    Returns (priors, cost): a (k, 2) array sorted by (w, h), and the mean
    1 - IoU distance to the assigned priors.
    """
    shapes = np.asarray(gt_shapes, dtype=np.float64).reshape(-1, 2)
    n = shapes.shape[0]
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > n:
        raise DataError(f"k={k} exceeds the {n} available shapes")
    if not np.all(np.isfinite(shapes)) or np.any(shapes <= 0.0):
        raise ValidationError("shapes must be finite and positive")

    order = np.lexsort((shapes[:, 1], shapes[:, 0]))
    shapes = shapes[order]
    rng = np.random.Generator(np.random.PCG64(seed))

    # k-means++ seeding on squared distances
    priors = np.empty((k, 2))
    priors[0] = shapes[rng.integers(n)]
    dmin = _shape_dist_matrix(shapes, priors[:1]).min(axis=1)
    for j in range(1, k):
        weights = dmin * dmin
        total = float(weights.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=weights / total))
        priors[j] = shapes[idx]
        dmin = np.minimum(dmin, _shape_dist_matrix(shapes, priors[j:j + 1])[:, 0])

    prev_cost = math.inf
    prev_assign = None
    for _ in range(max_iter):
        dist = _shape_dist_matrix(shapes, priors)
        assign = dist.argmin(axis=1)
        dmin = dist[np.arange(n), assign]
        cost = math.fsum(dmin.tolist()) / n
        assert cost <= prev_cost + 1e-12, "k-means cost increased"
        prev_cost = cost

        moved = False
        for j in range(k):
            members = shapes[assign == j]
            if members.shape[0] == 0:
                continue
            cand = np.array([np.median(members[:, 0]), np.median(members[:, 1])])
            old_sum = float(_shape_dist_matrix(members, priors[j:j + 1]).sum())
            new_sum = float(_shape_dist_matrix(members, cand[None, :]).sum())
            if new_sum <= old_sum and not np.array_equal(cand, priors[j]):
                priors[j] = cand
                moved = True
        reseeded = False
        for j in range(k):
            if not np.any(assign == j):
                priors[j] = shapes[int(np.argmax(dmin))]
                dmin = np.minimum(
                    dmin, _shape_dist_matrix(shapes, priors[j:j + 1])[:, 0]
                )
                reseeded = True
        if (not moved and not reseeded and prev_assign is not None
                and np.array_equal(assign, prev_assign)):
            break
        prev_assign = assign

    dist = _shape_dist_matrix(shapes, priors)
    cost = math.fsum(dist.min(axis=1).tolist()) / n
    out_order = np.lexsort((priors[:, 1], priors[:, 0]))
    return priors[out_order], cost


def save_priors(path, priors) -> None:
    """Write a priors file ("w h" per line) atomically."""
    priors = np.asarray(priors, dtype=np.float64).reshape(-1, 2)
    lines = [PRIORS_HEADER]
    lines.extend(f"{w:.10g} {h:.10g}" for w, h in priors)
    text = "\n".join(lines) + "\n"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_priors(path) -> np.ndarray:
    """Read a priors file written by save_priors."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != PRIORS_HEADER:
        raise DataError(f"{path}: missing '{PRIORS_HEADER}' header")
    out = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise DataError(f"{path}: malformed priors line {ln!r}")
        out.append((float(parts[0]), float(parts[1])))
    return np.asarray(out, dtype=np.float64)


@dataclass(frozen=True)
class Anchor:
    """A reference box: geometry plus its pyramid level and orientation."""

    rrect: RRect
    level: int
    orientation: float


def assign_priors_to_levels(priors, levels) -> list:
    """Level index per prior: nearest area to (stride * 8)^2, ties lower."""
    priors = np.asarray(priors, dtype=np.float64).reshape(-1, 2)
    levels = sorted(levels)
    out = []
    for w, h in priors:
        area = w * h
        best = min(
            levels,
            key=lambda lv: (abs(area - (LEVEL_STRIDES[lv] * 8.0) ** 2), lv),
        )
        out.append(best)
    return out


def generate_anchors(image_w: float, image_h: float, priors,
                     levels=(2, 3, 4, 5, 6)) -> list:
    """Anchors at every stride-spaced cell center, one per prior/orientation.

    Each prior lives on a single level (assign_priors_to_levels); every
    grid location on that level gets the prior at all four orientations,
    so the per-location anchor count summed over levels is 4 * len(priors).
    """
    if image_w <= 0 or image_h <= 0:
        raise ValidationError("image dimensions must be positive")
    priors = np.asarray(priors, dtype=np.float64).reshape(-1, 2)
    if priors.shape[0] == 0:
        raise ValidationError("at least one prior is required")
    for lv in levels:
        if lv not in LEVEL_STRIDES:
            raise ValidationError(f"unsupported pyramid level {lv}")
    owner = assign_priors_to_levels(priors, levels)
    anchors = []
    for lv in sorted(levels):
        stride = LEVEL_STRIDES[lv]
        nx = max(1, math.ceil(image_w / stride))
        ny = max(1, math.ceil(image_h / stride))
        lv_priors = [p for p, o in zip(priors, owner) if o == lv]
        for iy in range(ny):
            cy = (iy + 0.5) * stride
            for ix in range(nx):
                cx = (ix + 0.5) * stride
                for w, h in lv_priors:
                    for ang in ORIENTATIONS:
                        anchors.append(
                            Anchor(RRect(cx, cy, w, h, ang), lv, ang)
                        )
    return anchors


@dataclass(frozen=True)
class AnchorLabel:
    """Training label for one anchor.

    state is "positive", "negative" or "ignore"; positives carry the index
    of their matched ground truth and the encoded regression target.
    """

    state: str
    gt_index: int | None = None
    target: np.ndarray | None = None


def label_anchors(anchors, gts, pos_thresh: float = 0.7,
                  neg_thresh: float = 0.3) -> list:
    """IoU-based anchor labels against ground-truth quads.

    An anchor is positive when its best rotated IoU reaches pos_thresh, or
    when it is the argmax-IoU anchor of some ground truth (so every ground
    truth with any nonzero-IoU anchor gets at least one positive). Anchors
    below neg_thresh are negative; the rest are ignored. Positive targets
    are encoded against the anchor with corner alignment.
    """
    if not 0.0 <= neg_thresh < pos_thresh <= 1.0:
        raise ValidationError("need 0 <= neg_thresh < pos_thresh <= 1")
    rrects = [a.rrect if isinstance(a, Anchor) else a for a in anchors]
    n = len(rrects)
    m = len(gts)
    if n == 0:
        return []
    if m == 0:
        return [AnchorLabel("negative") for _ in range(n)]
    anchor_corners = np.stack([rrect_to_quad(r).corners for r in rrects])
    gt_corners = np.stack([g.corners for g in gts])
    iou = kernels.iou_matrix(anchor_corners, gt_corners)
    best_iou = iou.max(axis=1)
    best_gt = iou.argmax(axis=1)

    positive = best_iou >= pos_thresh
    for g in range(m):
        col = iou[:, g]
        if float(col.max()) > 0.0:
            positive[int(col.argmax())] = True

    labels = []
    for i in range(n):
        if positive[i]:
            g = int(best_gt[i])
            target = encode_obb(rrects[i], gts[g], align_corners=True)
            labels.append(AnchorLabel("positive", g, target))
        elif best_iou[i] < neg_thresh:
            labels.append(AnchorLabel("negative"))
        else:
            labels.append(AnchorLabel("ignore"))
    return labels
