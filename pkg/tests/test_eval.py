import numpy as np
import pytest

from oracles import random_convex_quad
from rboxkit.dotaio import DetRecord, GtRecord
from rboxkit.errors import DataError, ValidationError
from rboxkit.evaluate import (DEFAULT_AR_GRID, average_recall, evaluate,
                              voc_ap)
from rboxkit.geom import Quad, quad_to_aabb

SQ10 = Quad([[0, 0], [10, 0], [10, 10], [0, 10]])


def _gt(quad, cat="plane", difficult=False):
    return GtRecord(quad, cat, difficult)


def _det(image, score, quad):
    return DetRecord(image, score, quad=quad)


def _shift(quad, dx, dy=0.0):
    return Quad(quad.corners + [dx, dy])


class TestVocAp:
    def test_perfect_detector(self):
        assert voc_ap([(0.5, 1.0), (1.0, 1.0)]) == 1.0

    def test_empty(self):
        assert voc_ap([]) == 0.0

    def test_hand_fixture_eleven_point(self):
        points = [(0.5, 1.0), (0.5, 0.5), (1.0, 2 / 3)]
        assert voc_ap(points) == pytest.approx(28 / 33, abs=1e-12)

    def test_hand_fixture_all_point(self):
        points = [(0.5, 1.0), (0.5, 0.5), (1.0, 2 / 3)]
        # envelope: precision 1 up to recall 0.5, then 2/3 up to 1.0
        assert voc_ap(points, eleven_point=False) == pytest.approx(
            0.5 * 1.0 + 0.5 * (2 / 3), abs=1e-12)

    def test_decreasing_recall_rejected(self):
        with pytest.raises(ValidationError):
            voc_ap([(0.5, 1.0), (0.4, 1.0)])

    def test_eleven_point_vs_all_point_bound(self):
        rng = np.random.Generator(np.random.PCG64(81))
        for _ in range(200):
            n = int(rng.integers(1, 40))
            flags = rng.random(n) < 0.5
            npos = max(int(flags.sum()), 1)
            tp = np.cumsum(flags)
            fp = np.cumsum(~flags)
            rec = tp / npos
            prec = tp / np.maximum(tp + fp, 1)
            pts = list(zip(rec.tolist(), prec.tolist()))
            ap11 = voc_ap(pts, eleven_point=True)
            ap_all = voc_ap(pts, eleven_point=False)
            assert 0.0 <= ap11 <= 1.0
            assert ap11 <= ap_all + 1 / 11 + 1e-12


class TestEvaluate:
    def _scene(self):
        gts = {
            "im1": [_gt(SQ10), _gt(_shift(SQ10, 50))],
            "im2": [_gt(_shift(SQ10, 100), cat="ship")],
        }
        return gts

    def test_perfect_detections_map_one(self):
        gts = self._scene()
        dets = {
            "plane": [_det("im1", 1.0, SQ10), _det("im1", 1.0, _shift(SQ10, 50))],
            "ship": [_det("im2", 1.0, _shift(SQ10, 100))],
        }
        result = evaluate(dets, gts, task="obb")
        assert result.mean_ap == 1.0
        assert result.per_class_ap == {"plane": 1.0, "ship": 1.0}
        assert result.avg_recall == 1.0

    def test_no_detections_map_zero(self):
        result = evaluate({}, self._scene(), task="obb")
        assert result.mean_ap == 0.0
        assert result.avg_recall == 0.0

    def test_hand_fixture_ap(self):
        # 2 GTs; detections at scores .9 (TP), .8 (FP), .7 (TP)
        gts = {"im1": [_gt(SQ10), _gt(_shift(SQ10, 50))]}
        dets = {"plane": [
            _det("im1", 0.9, SQ10),
            _det("im1", 0.8, _shift(SQ10, 200)),
            _det("im1", 0.7, _shift(SQ10, 50)),
        ]}
        result = evaluate(dets, gts, task="obb")
        assert result.per_class_ap["plane"] == pytest.approx(28 / 33, abs=1e-9)

    def test_duplicate_match_is_fp(self):
        gts = {"im1": [_gt(SQ10)]}
        dets = {"plane": [_det("im1", 0.9, SQ10), _det("im1", 0.8, SQ10)]}
        result = evaluate(dets, gts, task="obb")
        # PR: (1, 1), then duplicate FP at recall 1 -> AP stays 1 at 11pt
        assert result.per_class_ap["plane"] == 1.0
        curve = result.pr_curves["plane"]
        assert curve[-1] == (1.0, 0.5)

    def test_difficult_gt_neither_tp_nor_fp(self):
        gts = {"im1": [_gt(SQ10, difficult=True), _gt(_shift(SQ10, 50))]}
        dets = {"plane": [
            _det("im1", 0.9, SQ10),           # matches difficult: ignored
            _det("im1", 0.8, _shift(SQ10, 50)),
        ]}
        result = evaluate(dets, gts, task="obb")
        assert result.per_class_num_gt["plane"] == 1
        assert result.per_class_ap["plane"] == 1.0

    def test_unknown_category_rejected(self):
        gts = self._scene()
        dets = {"car": [_det("im1", 0.9, SQ10)]}
        with pytest.raises(DataError) as exc:
            evaluate(dets, gts)
        assert "car" in str(exc.value)

    def test_order_invariance_with_distinct_scores(self):
        rng = np.random.Generator(np.random.PCG64(82))
        gts = {"im1": [_gt(random_convex_quad(rng, center_scale=40.0))
                       for _ in range(6)]}
        dets = []
        for g in gts["im1"]:
            dets.append(_det("im1", round(float(rng.uniform(0.1, 1)), 6),
                             Quad(g.quad.corners + rng.uniform(-0.5, 0.5, 2))))
        base = evaluate({"plane": dets}, gts).per_class_ap["plane"]
        for _ in range(4):
            perm = list(rng.permutation(len(dets)))
            shuffled = [dets[i] for i in perm]
            assert evaluate({"plane": shuffled}, gts).per_class_ap["plane"] == base

    def test_adding_tp_never_decreases_ap(self):
        gts = {"im1": [_gt(SQ10), _gt(_shift(SQ10, 50)), _gt(_shift(SQ10, 100))]}
        dets = [_det("im1", 0.9, SQ10), _det("im1", 0.5, _shift(SQ10, 200))]
        before = evaluate({"plane": dets}, gts).per_class_ap["plane"]
        for score in (0.95, 0.7, 0.3):
            extra = dets + [_det("im1", score, _shift(SQ10, 50))]
            after = evaluate({"plane": extra}, gts).per_class_ap["plane"]
            assert after >= before - 1e-12

    def test_prepending_top_fp_never_increases_ap(self):
        gts = {"im1": [_gt(SQ10), _gt(_shift(SQ10, 50))]}
        dets = [_det("im1", 0.9, SQ10), _det("im1", 0.7, _shift(SQ10, 50))]
        before = evaluate({"plane": dets}, gts).per_class_ap["plane"]
        worse = dets + [_det("im1", 0.99, _shift(SQ10, 200))]
        after = evaluate({"plane": worse}, gts).per_class_ap["plane"]
        assert after <= before + 1e-12

    def test_hbb_task(self):
        gts = {"im1": [_gt(SQ10)]}
        dets = {"plane": [DetRecord("im1", 0.9, box=quad_to_aabb(SQ10))]}
        result = evaluate(dets, gts, task="hbb")
        assert result.mean_ap == 1.0

    def test_obb_refines_to_min_area_rect(self):
        # a slightly non-rectangular quad still matches its own MAR exactly
        gt_quad = Quad([[0, 0], [10, 0.3], [10, 10], [0, 9.7]])
        gts = {"im1": [_gt(gt_quad)]}
        dets = {"plane": [_det("im1", 0.9, gt_quad)]}
        assert evaluate(dets, gts, task="obb").mean_ap == 1.0

    def test_mean_ap_is_mean_of_class_aps(self):
        gts = self._scene()
        dets = {
            "plane": [_det("im1", 1.0, SQ10), _det("im1", 0.9, _shift(SQ10, 50))],
            # ship undetected
        }
        result = evaluate(dets, gts)
        assert result.mean_ap == pytest.approx(
            sum(result.per_class_ap.values()) / len(result.per_class_ap))
        assert result.per_class_ap["ship"] == 0.0


class TestAverageRecall:
    def test_identical_proposals(self):
        gts = {"im1": [_gt(SQ10), _gt(_shift(SQ10, 50))]}
        props = {"im1": [SQ10, _shift(SQ10, 50)]}
        ar, curve = average_recall(props, gts)
        assert ar == 1.0
        assert all(r == 1.0 for _, r in curve)

    def test_empty_proposals(self):
        gts = {"im1": [_gt(SQ10)]}
        ar, curve = average_recall({}, gts)
        assert ar == 0.0

    def test_iou_070_fixture(self):
        # proposal overlaps gt at exactly IoU 0.7: recall 1 up to t=0.7
        gt = SQ10
        prop = Quad([[0, 0], [10, 0], [10, 7], [0, 7]])  # 70/100
        ar, curve = average_recall({"im1": [prop]}, {"im1": [_gt(gt)]})
        assert ar == 0.5
        for t, r in curve:
            assert r == (1.0 if t <= 0.7 else 0.0)

    def test_zero_gts_rejected(self):
        with pytest.raises(DataError):
            average_recall({"im1": [SQ10]}, {"im1": []})

    def test_difficult_excluded(self):
        gts = {"im1": [_gt(SQ10, difficult=True), _gt(_shift(SQ10, 50))]}
        ar, _ = average_recall({"im1": [_shift(SQ10, 50)]}, gts)
        assert ar == 1.0

    def test_one_to_one_matching(self):
        # two proposals on one gt: only one counts; second gt unmatched
        gts = {"im1": [_gt(SQ10), _gt(_shift(SQ10, 50))]}
        props = {"im1": [SQ10, SQ10]}
        ar, _ = average_recall(props, gts)
        assert ar == 0.5

    def test_default_grid(self):
        assert DEFAULT_AR_GRID == tuple(
            pytest.approx(0.5 + 0.05 * i) for i in range(10))
        assert len(DEFAULT_AR_GRID) == 10
