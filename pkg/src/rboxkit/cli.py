"""Command-line front end.

Subcommands: iou, nms, cluster, evaluate, gradcheck, synth. Reports go to
stdout, diagnostics to stderr. Exit codes: 0 success, 1 usage error,
2 data error, 3 acceptance failure (gradcheck above tolerance). Randomized
commands print their seed so runs can be audited and reproduced.
"""

import argparse
import json
import os
import sys

from . import __version__
from .anchors import DEFAULT_NUM_PRIORS, kmeans_iou, save_priors
from .checks import ALL_LOSSES, run_gradcheck_suite
from .dotaio import (parse_detections, read_annotation_dir,
                     read_detection_dir, serialize_detections,
                     write_text_atomic, DetRecord)
from .errors import DataError, RboxError, ValidationError
from .evaluate import evaluate
from .geom import Quad, aabb_to_quad, min_area_rect, rotated_iou
from .nms import R_NMS_DEFAULT_IOU, SOFT_NMS_DEFAULT_IOU, r_nms, soft_nms
from .synth import NoiseModel, synth_corpus

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ACCEPT = 3


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage failures exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rboxkit", description=__doc__)
    p.add_argument("--version", action="version", version=f"rboxkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("iou", help="rotated IoU per quad pair")
    sp.add_argument("pairs", help="text file: 16 numbers per line (two quads)")

    sp = sub.add_parser("nms", help="suppress a detection file (R-NMS or Soft-NMS)")
    sp.add_argument("detfile", help="per-class detection file (OBB or HBB rows)")
    sp.add_argument("-o", "--out", required=True, help="filtered output file")
    sp.add_argument("--iou-thresh", type=float, default=None,
                    help="suppression threshold (default 0.1, or 0.3 with --soft)")
    sp.add_argument("--soft", action="store_true",
                    help="Soft-NMS rescoring (HBB rows only)")
    sp.add_argument("--method", choices=("linear", "gaussian"), default="linear",
                    help="Soft-NMS decay (default linear)")
    sp.add_argument("--sigma", type=float, default=0.5,
                    help="Gaussian Soft-NMS sigma")
    sp.add_argument("--score-floor", type=float, default=0.001,
                    help="drop rescored detections below this score")

    sp = sub.add_parser("cluster", help="k-means++ IoU clustering of GT shapes")
    sp.add_argument("annotations", help="directory of annotation files")
    sp.add_argument("-o", "--out", required=True, help="priors file to write")
    sp.add_argument("--k", type=int, default=DEFAULT_NUM_PRIORS,
                    help="number of priors (default 18)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-iter", type=int, default=100)

    sp = sub.add_parser("evaluate", help="DOTA-protocol mAP/AR evaluation")
    sp.add_argument("--dets", required=True, help="per-class detection dir")
    sp.add_argument("--gts", required=True, help="annotation dir")
    sp.add_argument("--task", choices=("obb", "hbb"), default="obb")
    sp.add_argument("--iou", type=float, default=0.5)
    sp.add_argument("--ap-mode", choices=("11pt", "all"), default="11pt")
    sp.add_argument("--pr-dir", default=None,
                    help="also write per-class PR-curve data files here")

    sp = sub.add_parser("gradcheck", help="verify analytic loss gradients")
    sp.add_argument("--loss", default="all",
                    help="all, or comma list of: " + ", ".join(ALL_LOSSES))
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-5)

    sp = sub.add_parser("synth", help="generate a synthetic annotation+detection corpus")
    sp.add_argument("--gt-dir", required=True)
    sp.add_argument("--det-dir", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--images", type=int, default=4)
    sp.add_argument("--objects", type=int, default=8)
    sp.add_argument("--image-size", type=int, default=1024)
    sp.add_argument("--classes", default=",".join(("plane", "ship", "small-vehicle")))
    sp.add_argument("--task", choices=("obb", "hbb"), default="obb")
    sp.add_argument("--corner-sigma", type=float, default=0.0)
    sp.add_argument("--score-sigma", type=float, default=0.1)
    sp.add_argument("--drop-rate", type=float, default=0.0)
    sp.add_argument("--fp-rate", type=float, default=0.0)
    sp.add_argument("--difficult-rate", type=float, default=0.0)
    return p


def _cmd_iou(args) -> int:
    # streamed line by line: pair files can be arbitrarily large
    with open(args.pairs, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) != 16:
                raise DataError(
                    f"{args.pairs}: line {lineno}: expected 16 numbers, "
                    f"got {len(tokens)}"
                )
            try:
                vals = [float(t) for t in tokens]
            except ValueError:
                raise DataError(f"{args.pairs}: line {lineno}: non-numeric field")
            try:
                a = Quad.from_flat(vals[:8])
                b = Quad.from_flat(vals[8:])
            except ValidationError as exc:
                raise DataError(f"{args.pairs}: line {lineno}: {exc}")
            print(f"{rotated_iou(a, b):.6f}")
    return EXIT_OK


def _sniff_task(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            tokens = raw.split()
            if not tokens:
                continue
            if len(tokens) == 10:
                return "obb"
            if len(tokens) == 6:
                return "hbb"
            raise DataError(
                f"{path}: cannot infer task from a {len(tokens)}-field row"
            )
    return "obb"  # empty file: either task works


def _cmd_nms(args) -> int:
    task = _sniff_task(args.detfile)
    if args.soft and task != "hbb":
        raise DataError("--soft applies to HBB detection rows only")
    thresh = args.iou_thresh
    if thresh is None:
        thresh = SOFT_NMS_DEFAULT_IOU if args.soft else R_NMS_DEFAULT_IOU
    with open(args.detfile, "r", encoding="utf-8") as fh:
        records = parse_detections(fh.read(), task, source=args.detfile)

    by_image = {}
    for i, r in enumerate(records):
        by_image.setdefault(r.image_id, []).append(i)

    kept_records = []
    for image_id in sorted(by_image):
        idx = by_image[image_id]
        subset = [records[i] for i in idx]
        if args.soft:
            boxes = [r.box for r in subset]
            scores = [r.score for r in subset]
            keep, rescored = soft_nms(
                boxes, scores, iou_thresh=thresh,
                score_floor=args.score_floor, method=args.method,
                sigma=args.sigma,
            )
            for k, s in zip(keep, rescored):
                r = subset[k]
                kept_records.append(DetRecord(r.image_id, s, box=r.box))
        else:
            quads = [r.quad if r.quad is not None else aabb_to_quad(r.box)
                     for r in subset]
            scores = [r.score for r in subset]
            keep = r_nms(list(zip(quads, scores)), iou_thresh=thresh)
            kept_records.extend(subset[k] for k in keep)

    write_text_atomic(args.out, serialize_detections(kept_records))
    mode = f"soft-nms({args.method})" if args.soft else "r-nms"
    print(f"# rboxkit nms: mode={mode} iou_thresh={thresh:g} "
          f"kept={len(kept_records)}/{len(records)}")
    return EXIT_OK


def _cmd_cluster(args) -> int:
    annotations = read_annotation_dir(args.annotations)
    shapes = []
    for recs in annotations.values():
        for r in recs:
            rect = min_area_rect(r.quad)
            shapes.append((rect.w, rect.h))
    if len(shapes) < args.k:
        raise DataError(
            f"need at least k={args.k} ground-truth boxes, found {len(shapes)}"
        )
    priors, cost = kmeans_iou(shapes, args.k, seed=args.seed,
                              max_iter=args.max_iter)
    save_priors(args.out, priors)
    print(f"# rboxkit cluster: seed={args.seed}")
    print(f"boxes: {len(shapes)}")
    print(f"k: {args.k}")
    print(f"cost: {cost:.6f}")
    print(f"priors: {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    gts = read_annotation_dir(args.gts)
    dets = read_detection_dir(args.dets, args.task)
    result = evaluate(dets, gts, task=args.task, iou_thresh=args.iou,
                      eleven_point=(args.ap_mode == "11pt"))
    report = {
        "task": args.task,
        "iou_thresh": args.iou,
        "ap_mode": args.ap_mode,
    }
    report.update(result.to_dict())
    print(json.dumps(report, indent=2, sort_keys=False))
    if args.pr_dir:
        os.makedirs(args.pr_dir, exist_ok=True)
        for cls, points in result.pr_curves.items():
            body = "".join(f"{r:.6f} {p:.6f}\n" for r, p in points)
            write_text_atomic(os.path.join(args.pr_dir, f"{cls}.pr.txt"), body)
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    if args.loss == "all":
        losses = ALL_LOSSES
    else:
        losses = tuple(s.strip() for s in args.loss.split(",") if s.strip())
    print(f"# rboxkit gradcheck: seed={args.seed} trials={args.trials} "
          f"tol={args.tol:g}")
    if args.trials <= 0:
        print("warning: 0 trials requested; vacuous pass", file=sys.stderr)
        return EXIT_OK
    results = run_gradcheck_suite(losses, trials=args.trials, seed=args.seed)
    ok = True
    for name, err in results.items():
        status = "pass" if err < args.tol else "FAIL"
        ok = ok and err < args.tol
        print(f"{name}: max_rel_err={err:.3e} {status}")
    return EXIT_OK if ok else EXIT_ACCEPT


def _cmd_synth(args) -> int:
    classes = tuple(c for c in args.classes.split(",") if c)
    if not classes:
        raise DataError("at least one class name is required")
    noise = NoiseModel(
        corner_sigma=args.corner_sigma,
        score_sigma=args.score_sigma,
        drop_rate=args.drop_rate,
        fp_rate=args.fp_rate,
        difficult_rate=args.difficult_rate,
    )
    image_ids = synth_corpus(
        args.gt_dir, args.det_dir, args.seed, args.images, args.objects,
        image_size=(args.image_size, args.image_size), classes=classes,
        noise=noise, task=args.task,
    )
    print(f"# rboxkit synth: seed={args.seed}")
    print(f"images: {len(image_ids)}")
    print(f"objects_per_image: {args.objects}")
    print(f"gt_dir: {args.gt_dir}")
    print(f"det_dir: {args.det_dir}")
    return EXIT_OK


_COMMANDS = {
    "iou": _cmd_iou,
    "nms": _cmd_nms,
    "cluster": _cmd_cluster,
    "evaluate": _cmd_evaluate,
    "gradcheck": _cmd_gradcheck,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except OSError as exc:
        print(f"rboxkit: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RboxError as exc:
        print(f"rboxkit: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
