"""Detection losses with analytic gradients.

Covers the proposal-stage multi-task loss (objectness log-loss plus masked
smooth-L1 corner regression), the ROI-stage joint loss (classification,
horizontal-box and oriented-box regression, angle-rectangularity penalty)
and the three angle-loss variants. Angles are handled in degrees end to
end; tangents convert to radians internally.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularLossError, ValidationError
from .geom import Quad, interior_angles

PROB_CLAMP = 1e-12
ANGLE_VARIANTS = ("tangent_l1", "smooth_l1", "l2")

# distance (degrees) from the tangent pole at |theta - 90| = 90 below which
# the tangent variant refuses to evaluate instead of returning huge values
TAN_POLE_GUARD = 1e-9

# angle deviations below a nanodegree are floating-point noise, not shape:
# they contribute exactly zero so rectangles have loss 0, not ~1e-26
ANGLE_SNAP = 1e-9


def smooth_l1(x):
    """Smooth-L1 value and derivative, elementwise.

    0.5 x^2 inside |x| < 1, |x| - 0.5 outside; the derivative is x inside
    and sign(x) outside. Scalars in, scalars out.
    """
    arr = np.asarray(x, dtype=np.float64)
    ax = np.abs(arr)
    small = ax < 1.0
    value = np.where(small, 0.5 * arr * arr, ax - 0.5)
    deriv = np.where(small, arr, np.sign(arr))
    if arr.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


def _clamp_probs(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


@dataclass
class RpnBatch:
    """One proposal-network mini-batch.

    scores: predicted objectness per anchor, in (0, 1)
    labels: ground-truth binary labels (1 = object)
    pred / target: per-anchor (4, 2) corner offsets
    n_obj / n_reg: normalizers (mini-batch size, anchor locations)
    lam: balance between classification and regression, default 10
    """

    scores: np.ndarray
    labels: np.ndarray
    pred: np.ndarray
    target: np.ndarray
    n_obj: int
    n_reg: int
    lam: float = 10.0

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.labels = np.asarray(self.labels)
        self.pred = np.asarray(self.pred, dtype=np.float64)
        self.target = np.asarray(self.target, dtype=np.float64)
        n = self.scores.shape[0]
        if n == 0:
            raise ValidationError("empty RPN batch")
        if self.labels.shape != (n,):
            raise ValidationError("labels shape must match scores")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise ValidationError("labels must be 0 or 1")
        if self.pred.shape != (n, 4, 2) or self.target.shape != (n, 4, 2):
            raise ValidationError("pred/target must have shape (n, 4, 2)")
        if not (np.all(np.isfinite(self.scores))
                and np.all(np.isfinite(self.pred))
                and np.all(np.isfinite(self.target))):
            raise ValidationError("RPN batch contains non-finite values")
        if self.n_obj < 1 or self.n_reg < 1:
            raise ValidationError("normalizers must be positive")


def rpn_loss(batch: RpnBatch):
    """Proposal multi-task loss and its gradients.

    loss = (1/n_obj) sum_i -label_i log p_i
         + lam (1/n_reg) sum_i label_i sum_coords smooth_l1(pred - target)

    Regression only counts for positive anchors. Returns
    (loss, d_scores (n,), d_pred (n, 4, 2)). Per-anchor terms are reduced
    with math.fsum, so the result does not depend on anchor order.
    """
    lbl = batch.labels.astype(np.float64)
    pc = _clamp_probs(batch.scores)
    cls_terms = -lbl * np.log(pc)
    loss_cls = math.fsum(cls_terms.tolist()) / batch.n_obj

    diff = batch.pred - batch.target
    vals, ders = smooth_l1(diff)
    reg_terms = lbl * vals.reshape(len(lbl), -1).sum(axis=1)
    loss_reg = batch.lam * math.fsum(reg_terms.tolist()) / batch.n_reg

    in_range = (batch.scores >= PROB_CLAMP) & (batch.scores <= 1.0 - PROB_CLAMP)
    d_scores = np.where(in_range, -lbl / pc, 0.0) / batch.n_obj
    d_pred = (batch.lam / batch.n_reg) * lbl[:, None, None] * ders
    return loss_cls + loss_reg, d_scores, d_pred


def _angle_gradients(q: Quad):
    """Interior angles (degrees) and their gradients w.r.t. the corners.

    Returns (angles (4,), grad (4, 4, 2)) where grad[l] is d angle_l / d
    corners. Propagated through arccos; cosines within 1e-12 of +/-1 are
    nudged inside the domain to keep the factor finite.
    """
    c = q.corners
    angles = interior_angles(q)  # validates side lengths
    grad = np.zeros((4, 4, 2))
    for i in range(4):
        ip = (i - 1) % 4
        inx = (i + 1) % 4
        a = c[ip] - c[i]
        b = c[inx] - c[i]
        p = float(np.hypot(a[0], a[1]))
        n = float(np.hypot(b[0], b[1]))
        cosv = float(np.dot(a, b) / (p * n))
        if cosv > 1.0 - 1e-12:
            cosv = 1.0 - 1e-12
        elif cosv < -1.0 + 1e-12:
            cosv = -1.0 + 1e-12
        scale = -math.degrees(1.0) / math.sqrt(1.0 - cosv * cosv)
        d_a = (b / (p * n) - cosv * a / (p * p)) * scale
        d_b = (a / (p * n) - cosv * b / (n * n)) * scale
        grad[i, ip] += d_a
        grad[i, inx] += d_b
        grad[i, i] -= d_a + d_b
    return angles, grad


def angle_loss(q: Quad, variant: str = "l2"):
    """Rectangularity penalty on the first three interior angles.

    With x_l = angle_l - 90 (degrees, l over the first three corners; the
    fourth angle is determined by the others):

    * tangent_l1: sum |tan(x_l)|
    * smooth_l1:  sum smooth_l1(|x_l|)
    * l2:         sum x_l^2

    Returns (loss, gradient w.r.t. corners, shape (4, 2)). All variants are
    zero exactly on rectangles: deviations under ANGLE_SNAP degrees count
    as right angles. The tangent variant raises SingularLossError at
    |x_l| = 90 instead of returning infinity.
    """
    if variant not in ANGLE_VARIANTS:
        raise ValidationError(
            f"unknown angle loss variant {variant!r}; expected one of "
            f"{ANGLE_VARIANTS}"
        )
    angles, agrad = _angle_gradients(q)
    x = angles[:3] - 90.0
    grad = np.zeros((4, 2))
    loss = 0.0
    for l in range(3):
        xl = float(x[l])
        if abs(xl) < ANGLE_SNAP:
            continue
        if variant == "tangent_l1":
            if 90.0 - abs(xl) <= TAN_POLE_GUARD:
                raise SingularLossError(
                    f"tangent angle loss singular at angle {angles[l]:.9g} deg"
                )
            xr = math.radians(xl)
            t = math.tan(xr)
            loss += abs(t)
            outer = math.copysign(1.0, t) / (math.cos(xr) ** 2) * (math.pi / 180.0)
            if t == 0.0:
                outer = 0.0
        elif variant == "smooth_l1":
            v, d = smooth_l1(xl)
            loss += v
            outer = d
        else:  # l2
            loss += xl * xl
            outer = 2.0 * xl
        grad += outer * agrad[l]
    return loss, grad


@dataclass
class RoiSample:
    """One ROI-stage training sample for the joint four-term loss.

    class_probs: distribution over K+1 categories (index 0 = background)
    true_class: u in 0..K
    hbb_pred / hbb_true: horizontal-box offsets {xmin, ymin, w, h}
    obb_pred / obb_true: oriented-box corner offsets, (4, 2)
    quad_corners: predicted quad corners feeding the angle term
    lam: localization balance, default 1
    angle_variant: which rectangularity penalty to use
    hbb_only: drop the OBB and angle terms (horizontal benchmark mode)
    """

    class_probs: np.ndarray
    true_class: int
    hbb_pred: np.ndarray = field(default_factory=lambda: np.zeros(4))
    hbb_true: np.ndarray = field(default_factory=lambda: np.zeros(4))
    obb_pred: np.ndarray = field(default_factory=lambda: np.zeros((4, 2)))
    obb_true: np.ndarray = field(default_factory=lambda: np.zeros((4, 2)))
    quad_corners: np.ndarray | None = None
    lam: float = 1.0
    angle_variant: str = "l2"
    hbb_only: bool = False

    def __post_init__(self):
        self.class_probs = np.asarray(self.class_probs, dtype=np.float64)
        if self.class_probs.ndim != 1 or self.class_probs.shape[0] < 2:
            raise ValidationError("class_probs must cover K+1 >= 2 categories")
        if abs(float(self.class_probs.sum()) - 1.0) > 1e-9:
            raise ValidationError("class probabilities must sum to 1")
        k_max = self.class_probs.shape[0] - 1
        if not 0 <= self.true_class <= k_max:
            raise ValidationError(
                f"true class {self.true_class} outside 0..{k_max}"
            )
        self.hbb_pred = np.asarray(self.hbb_pred, dtype=np.float64)
        self.hbb_true = np.asarray(self.hbb_true, dtype=np.float64)
        self.obb_pred = np.asarray(self.obb_pred, dtype=np.float64)
        self.obb_true = np.asarray(self.obb_true, dtype=np.float64)
        if self.hbb_pred.shape != (4,) or self.hbb_true.shape != (4,):
            raise ValidationError("HBB offsets must have shape (4,)")
        if self.obb_pred.shape != (4, 2) or self.obb_true.shape != (4, 2):
            raise ValidationError("OBB offsets must have shape (4, 2)")
        needs_quad = self.true_class >= 1 and not self.hbb_only
        if needs_quad and self.quad_corners is None:
            raise ValidationError("foreground OBB samples need quad_corners")


def _roi_loss_core(class_probs, true_class, hbb_pred, hbb_true, obb_pred,
                   obb_true, quad_corners, lam, angle_variant, hbb_only):
    """Unvalidated joint-loss evaluation shared by roi_loss and grad checks."""
    p = np.asarray(class_probs, dtype=np.float64)
    pc = _clamp_probs(p)
    loss = -math.log(pc[true_class])
    d_probs = np.zeros_like(p)
    if PROB_CLAMP <= p[true_class] <= 1.0 - PROB_CLAMP:
        d_probs[true_class] = -1.0 / pc[true_class]

    d_hbb = np.zeros(4)
    d_obb = np.zeros((4, 2))
    d_corners = np.zeros((4, 2))
    if true_class >= 1:
        vals, ders = smooth_l1(np.asarray(hbb_pred) - np.asarray(hbb_true))
        loss += lam * float(np.sum(vals))
        d_hbb = lam * ders
        if not hbb_only:
            vals, ders = smooth_l1(np.asarray(obb_pred) - np.asarray(obb_true))
            loss += lam * float(np.sum(vals))
            d_obb = lam * ders
            a_loss, a_grad = angle_loss(Quad(quad_corners), angle_variant)
            loss += lam * a_loss
            d_corners = lam * a_grad
    return loss, {
        "class_probs": d_probs,
        "hbb": d_hbb,
        "obb": d_obb,
        "corners": d_corners,
    }


def roi_loss(sample: RoiSample):
    """Joint ROI loss: classification plus masked localization terms.

    loss = -log p_u
         + lam [u >= 1] (smooth-L1 HBB + smooth-L1 OBB + angle penalty)

    Background samples (u = 0) keep only the classification term; in
    hbb_only mode the OBB and angle terms are dropped for foreground too.
    Returns (loss, grads) with grads keyed by input name.
    """
    return _roi_loss_core(
        sample.class_probs, sample.true_class, sample.hbb_pred,
        sample.hbb_true, sample.obb_pred, sample.obb_true,
        sample.quad_corners, sample.lam, sample.angle_variant,
        sample.hbb_only,
    )


def grad_check(f, point: np.ndarray, h: float = 1e-5) -> float:
    """Max relative mismatch between analytic and central-difference grads.

    f maps a flat point to (value, gradient). Per coordinate the error is
    |analytic - central_difference| / max(1, |analytic|); the max over
    coordinates is returned. Raises on non-finite evaluations.
    """
    x = np.asarray(point, dtype=np.float64).copy()
    _, grad = f(x)
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise ValidationError("analytic gradient is not finite")
    worst = 0.0
    for i in range(x.size):
        xi = x[i]
        x[i] = xi + h
        fp = f(x)[0]
        x[i] = xi - h
        fm = f(x)[0]
        x[i] = xi
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValidationError("loss evaluated to a non-finite value")
        fd = (fp - fm) / (2.0 * h)
        err = abs(float(grad[i]) - fd) / max(1.0, abs(float(grad[i])))
        if err > worst:
            worst = err
    return worst
