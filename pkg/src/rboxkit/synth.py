"""Seeded synthetic scenes: ground truth plus noisy detections.

Scenes are packs of non-overlapping rotated rectangles; detections are the
ground truth perturbed by corner jitter, a score model, drops and spurious
false positives. Everything is driven by numpy's PCG64 generator, so a
fixed seed reproduces output byte for byte.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from .dotaio import (DetRecord, GtRecord, serialize_annotations,
                     serialize_detections, write_text_atomic)
from .errors import PackingError, ValidationError
from .geom import Quad, RRect, quad_to_aabb, rrect_to_quad
from .kernels import intersect_area

DEFAULT_CLASSES = ("plane", "ship", "small-vehicle")


@dataclass(frozen=True)
class NoiseModel:
    """Detection corruption knobs, all off by default except the score jitter."""

    corner_sigma: float = 0.0
    score_sigma: float = 0.1
    drop_rate: float = 0.0
    fp_rate: float = 0.0
    difficult_rate: float = 0.0


def _rng(seed):
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(int(seed)))


def _random_rrect(rng, image_w, image_h, size_range):
    lo, hi = size_range
    w = float(rng.uniform(lo, hi))
    h = float(rng.uniform(lo, hi))
    margin = 0.5 * math.hypot(w, h)
    if 2.0 * margin >= image_w or 2.0 * margin >= image_h:
        return None
    cx = float(rng.uniform(margin, image_w - margin))
    cy = float(rng.uniform(margin, image_h - margin))
    angle = float(rng.uniform(0.0, 180.0))
    return RRect(cx, cy, w, h, angle)


def synth_scene(image_id: str, seed, n_objects: int,
                image_size=(1024, 1024), classes=DEFAULT_CLASSES,
                noise: NoiseModel = NoiseModel(),
                size_range=(20.0, 120.0), max_tries: int = 200):
    """One synthetic image: (gt records, {class: [det records]}).

    Ground-truth rectangles never overlap (zero intersection area);
    placement that fails max_tries times raises PackingError.
    """
    if n_objects < 0:
        raise ValidationError("n_objects must be >= 0")
    rng = _rng(seed)
    image_w, image_h = image_size
    gts = []
    placed = []
    for _ in range(n_objects):
        quad = None
        for _ in range(max_tries):
            r = _random_rrect(rng, image_w, image_h, size_range)
            if r is None:
                continue
            cand = rrect_to_quad(r)
            if all(intersect_area(cand.corners, p.corners) == 0.0
                   for p in placed):
                quad = cand
                break
        if quad is None:
            raise PackingError(
                f"could not place object {len(placed) + 1} of {n_objects} "
                f"in a {image_w}x{image_h} image after {max_tries} tries"
            )
        placed.append(quad)
        category = classes[int(rng.integers(len(classes)))]
        difficult = bool(rng.random() < noise.difficult_rate)
        gts.append(GtRecord(quad, category, difficult))

    dets = {}
    for gt in gts:
        drop = rng.random() < noise.drop_rate
        jitter = rng.normal(0.0, 1.0, (4, 2)) * noise.corner_sigma
        score_noise = abs(float(rng.normal(0.0, 1.0))) * noise.score_sigma
        if drop:
            continue
        corners = gt.quad.corners + jitter
        try:
            quad = Quad(corners)
        except ValidationError:
            quad = gt.quad  # jitter broke convexity; fall back unperturbed
        score = min(1.0, max(0.05, 1.0 - score_noise))
        dets.setdefault(gt.category, []).append(
            DetRecord(image_id, score, quad=quad)
        )

    n_fp = int(rng.binomial(max(n_objects, 1), min(max(noise.fp_rate, 0.0), 1.0)))
    for _ in range(n_fp):
        r = None
        while r is None:
            r = _random_rrect(rng, image_w, image_h, size_range)
        category = classes[int(rng.integers(len(classes)))]
        score = float(rng.uniform(0.05, 0.6))
        dets.setdefault(category, []).append(
            DetRecord(image_id, score, quad=rrect_to_quad(r))
        )
    return gts, dets


def synth_corpus(gt_dir, det_dir, seed: int, n_images: int, n_objects: int,
                 image_size=(1024, 1024), classes=DEFAULT_CLASSES,
                 noise: NoiseModel = NoiseModel(), task: str = "obb",
                 size_range=(20.0, 120.0)) -> list:
    """Write an annotation dir and a per-class detection dir; returns image ids.

    Per-image seeds derive from SeedSequence((seed, index)), so corpora are
    reproducible image by image. task="hbb" writes axis-aligned detection
    rows (the bounding boxes of the perturbed quads).
    """
    if task not in ("obb", "hbb"):
        raise ValidationError(f"unknown task {task!r}")
    os.makedirs(gt_dir, exist_ok=True)
    os.makedirs(det_dir, exist_ok=True)
    image_ids = []
    all_dets = {}
    for i in range(n_images):
        image_id = f"synth_{i:04d}"
        image_ids.append(image_id)
        gts, dets = synth_scene(
            image_id, np.random.SeedSequence((seed, i)), n_objects,
            image_size, classes, noise, size_range,
        )
        write_text_atomic(
            os.path.join(gt_dir, f"{image_id}.txt"),
            serialize_annotations(gts, metadata={"imagesource": "synthetic"}),
        )
        for cls, recs in dets.items():
            all_dets.setdefault(cls, []).extend(recs)
    for cls in sorted(all_dets):
        recs = all_dets[cls]
        if task == "hbb":
            recs = [
                DetRecord(r.image_id, r.score, box=quad_to_aabb(r.quad))
                for r in recs
            ]
        write_text_atomic(
            os.path.join(det_dir, f"{cls}.txt"), serialize_detections(recs)
        )
    return image_ids
