"""Benchmark the compiled geometry kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--n 200] [--dets 400] [--repeat 3]

Times three workloads on identical inputs: single-pair IoU calls, a full
n x n IoU matrix, and greedy rotated NMS over a detection set. Also
cross-checks that both backends return identical values.
"""

import argparse
import sys
import time

import numpy as np

from rboxkit import _pykernels
from rboxkit.geom import RRect, rrect_to_quad

try:
    from rboxkit import _ckernels
except ImportError:
    _ckernels = None


def random_quads(rng, n, spread=40.0):
    quads = np.empty((n, 4, 2))
    for i in range(n):
        r = RRect(rng.uniform(-spread, spread), rng.uniform(-spread, spread),
                  rng.uniform(1.0, 8.0), rng.uniform(1.0, 8.0),
                  rng.uniform(0.0, 180.0))
        quads[i] = rrect_to_quad(r).corners
    return quads


def bench(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def nms_workload(backend, quads, scores, thresh=0.1):
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    alive = [True] * len(scores)
    kept = []
    for i in order:
        if not alive[i]:
            continue
        kept.append(i)
        for j in order:
            if alive[j] and j != i:
                if backend.iou(quads[i], quads[j]) > thresh:
                    alive[j] = False
    return kept


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200, help="quads for the IoU matrix")
    ap.add_argument("--dets", type=int, default=400, help="detections for NMS")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.Generator(np.random.PCG64(args.seed))
    quads = random_quads(rng, args.n)
    dets = random_quads(rng, args.dets, spread=25.0)
    det_scores = rng.uniform(0, 1, args.dets).tolist()
    pairs = [(quads[rng.integers(args.n)], quads[rng.integers(args.n)])
             for _ in range(2000)]

    backends = [("python", _pykernels)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    else:
        print("compiled backend not built; run `python setup.py build_ext "
              "--inplace` to compare", file=sys.stderr)

    results = {}
    for name, impl in backends:
        t_pairs = bench(lambda: [impl.iou(a, b) for a, b in pairs], args.repeat)
        t_matrix = bench(lambda: impl.iou_matrix(quads, quads), args.repeat)
        t_nms = bench(lambda: nms_workload(impl, dets, det_scores), args.repeat)
        results[name] = (t_pairs, t_matrix, t_nms)

    if _ckernels is not None:
        py = np.asarray(_pykernels.iou_matrix(quads[:40], quads[:40]))
        cy = np.asarray(_ckernels.iou_matrix(quads[:40], quads[:40]))
        assert np.array_equal(py, cy), "backend results diverged"
        print("cross-check: backends agree bitwise on a 40x40 IoU matrix\n")

    workloads = ("2000 pair IoU calls", f"{args.n}x{args.n} IoU matrix",
                 f"greedy R-NMS over {args.dets} detections")
    print(f"{'workload':<34} {'python':>10} {'cython':>10} {'speedup':>9}")
    for k, label in enumerate(workloads):
        py_t = results["python"][k]
        if "cython" in results:
            cy_t = results["cython"][k]
            print(f"{label:<34} {py_t * 1e3:>8.1f}ms {cy_t * 1e3:>8.1f}ms "
                  f"{py_t / cy_t:>8.1f}x")
        else:
            print(f"{label:<34} {py_t * 1e3:>8.1f}ms {'-':>10} {'-':>9}")


if __name__ == "__main__":
    main()
