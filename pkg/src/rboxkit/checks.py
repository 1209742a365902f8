"""Randomized gradient verification for every loss in the package.

Each sampler draws points away from the losses' non-smooth loci (the
smooth-L1 transition at |x| = 1, the |tan| kink at 90 degrees and its pole
at 0/180) so central differences are meaningful. The suite is the engine
behind `rboxkit gradcheck`.
"""

import numpy as np

from .errors import ValidationError
from .geom import Quad, RRect, interior_angles, rrect_to_quad
from .losses import (RpnBatch, _roi_loss_core, angle_loss, grad_check,
                     rpn_loss, smooth_l1)

ALL_LOSSES = (
    "smooth_l1",
    "rpn",
    "roi",
    "angle:tangent_l1",
    "angle:smooth_l1",
    "angle:l2",
)

# sampled |angle - 90| stays inside this band, clear of both the kink at 0
# and the smooth-L1 transition at 1 degree
ANGLE_DEV_BANDS = ((0.2, 0.85), (1.15, 40.0))


def _smooth_offsets(rng, n):
    """Regression offsets clear of the smooth-L1 transition at |x| = 1."""
    out = np.empty(n)
    for i in range(n):
        if rng.random() < 0.5:
            mag = rng.uniform(0.05, 0.9)
        else:
            mag = rng.uniform(1.1, 2.5)
        out[i] = mag if rng.random() < 0.5 else -mag
    return out


def sample_angle_quad(rng, max_attempts: int = 1000) -> Quad:
    """Near-rectangular quad whose first three angles sit in the safe bands."""
    for _ in range(max_attempts):
        w = rng.uniform(2.0, 10.0)
        h = rng.uniform(2.0, 10.0)
        base = rrect_to_quad(
            RRect(rng.uniform(-5, 5), rng.uniform(-5, 5), w, h,
                  rng.uniform(0.0, 180.0))
        )
        jitter = rng.uniform(-1.0, 1.0, (4, 2)) * 0.08 * min(w, h)
        try:
            quad = Quad(base.corners + jitter)
        except ValidationError:
            continue
        devs = np.abs(interior_angles(quad)[:3] - 90.0)
        ok = all(
            any(lo <= d <= hi for lo, hi in ANGLE_DEV_BANDS) for d in devs
        )
        if ok:
            return quad
    raise RuntimeError("angle-quad sampler exhausted its attempts")


def _check_smooth_l1(rng, h):
    point = _smooth_offsets(rng, 4)

    def f(x):
        vals, ders = smooth_l1(x)
        return float(np.sum(vals)), ders

    return grad_check(f, point, h)


def _check_rpn(rng, h):
    n = 6
    labels = np.zeros(n, dtype=int)
    labels[: rng.integers(1, n)] = 1
    labels = labels[rng.permutation(n)]
    scores = rng.uniform(0.05, 0.95, n)
    target = rng.normal(0.0, 0.5, (n, 4, 2))
    pred = target + _smooth_offsets(rng, n * 8).reshape(n, 4, 2)
    lam = 10.0
    point = np.concatenate([scores, pred.reshape(-1)])

    def f(x):
        s = x[:n]
        p = x[n:].reshape(n, 4, 2)
        loss, d_s, d_p = rpn_loss(RpnBatch(s, labels, p, target, n, n, lam))
        return loss, np.concatenate([d_s, d_p.reshape(-1)])

    return grad_check(f, point, h)


def _check_roi(rng, h):
    k = 3
    probs = rng.uniform(0.1, 1.0, k + 1)
    probs = probs / probs.sum()
    u = int(rng.integers(1, k + 1))
    hbb_true = rng.normal(0.0, 0.5, 4)
    hbb_pred = hbb_true + _smooth_offsets(rng, 4)
    obb_true = rng.normal(0.0, 0.5, (4, 2))
    obb_pred = obb_true + _smooth_offsets(rng, 8).reshape(4, 2)
    corners = sample_angle_quad(rng).corners
    point = np.concatenate(
        [probs, hbb_pred, obb_pred.reshape(-1), corners.reshape(-1)]
    )

    def f(x):
        p = x[: k + 1]
        hp = x[k + 1: k + 5]
        op = x[k + 5: k + 13].reshape(4, 2)
        c = x[k + 13:].reshape(4, 2)
        loss, grads = _roi_loss_core(
            p, u, hp, hbb_true, op, obb_true, c, 1.0, "l2", False
        )
        return loss, np.concatenate([
            grads["class_probs"], grads["hbb"],
            grads["obb"].reshape(-1), grads["corners"].reshape(-1),
        ])

    return grad_check(f, point, h)


def _check_angle(rng, h, variant):
    corners = sample_angle_quad(rng).corners
    point = corners.reshape(-1)

    def f(x):
        loss, grad = angle_loss(Quad(x.reshape(4, 2)), variant)
        return loss, grad.reshape(-1)

    return grad_check(f, point, h)


def run_gradcheck_suite(losses=ALL_LOSSES, trials: int = 100, seed: int = 0,
                        h: float = 1e-5) -> dict:
    """Max relative gradient error per loss over seeded random trials."""
    results = {}
    for name in losses:
        if name not in ALL_LOSSES:
            raise ValidationError(
                f"unknown loss {name!r}; expected one of {ALL_LOSSES}"
            )
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((seed, ALL_LOSSES.index(name))))
        )
        worst = 0.0
        for _ in range(trials):
            if name == "smooth_l1":
                err = _check_smooth_l1(rng, h)
            elif name == "rpn":
                err = _check_rpn(rng, h)
            elif name == "roi":
                err = _check_roi(rng, h)
            else:
                err = _check_angle(rng, h, name.split(":", 1)[1])
            worst = max(worst, err)
        results[name] = worst
    return results
