"""rboxkit: the non-neural layer of a rotated-box detection pipeline.

Convex-quad geometry and rotated IoU, corner-offset regression codecs,
multi-task and angle-rectangularity losses with analytic gradients,
IoU-metric anchor clustering, rotated/Soft NMS, and DOTA-convention
evaluation with a synthetic-scene fixture generator.
"""

__version__ = "0.1.0"

from .anchors import (Anchor, AnchorLabel, generate_anchors, kmeans_iou,
                      label_anchors, load_priors, save_priors)
from .codec import cyclic_align, decode_obb, encode_obb, shift_corners
from .dotaio import (DetRecord, GtRecord, parse_annotations,
                     parse_detections, serialize_annotations,
                     serialize_detections)
from .errors import (DataError, DegenerateGeometryError, PackingError,
                     ParseError, RboxError, SingularLossError,
                     ValidationError)
from .evaluate import EvalResult, average_recall, evaluate, voc_ap
from .geom import (AABB, Quad, RRect, axis_align, convex_intersect, hbb_iou,
                   interior_angles, min_area_rect, quad_area, quad_to_aabb,
                   aabb_to_quad, rotated_iou, rrect_to_quad)
from .kernels import backend_name
from .losses import (RoiSample, RpnBatch, angle_loss, grad_check, roi_loss,
                     rpn_loss, smooth_l1)
from .nms import ScoredDetection, nms_per_class, r_nms, soft_nms
from .synth import NoiseModel, synth_corpus, synth_scene

__all__ = [
    "AABB", "Anchor", "AnchorLabel", "DataError", "DegenerateGeometryError",
    "DetRecord", "EvalResult", "GtRecord", "NoiseModel", "PackingError",
    "ParseError", "Quad", "RRect", "RboxError", "RoiSample", "RpnBatch",
    "ScoredDetection", "SingularLossError", "ValidationError",
    "aabb_to_quad", "angle_loss", "average_recall", "axis_align",
    "backend_name", "convex_intersect", "cyclic_align", "decode_obb",
    "encode_obb", "evaluate", "generate_anchors", "grad_check", "hbb_iou",
    "interior_angles", "kmeans_iou", "label_anchors", "load_priors",
    "min_area_rect", "nms_per_class", "parse_annotations",
    "parse_detections", "quad_area", "quad_to_aabb", "r_nms", "roi_loss",
    "rotated_iou", "rpn_loss", "rrect_to_quad", "save_priors",
    "serialize_annotations", "serialize_detections", "shift_corners",
    "smooth_l1", "soft_nms", "synth_corpus", "synth_scene", "voc_ap",
]
