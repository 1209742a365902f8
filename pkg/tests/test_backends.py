"""Cross-checks between the compiled and pure-Python kernel backends."""

import os
import subprocess
import sys

import numpy as np
import pytest

from oracles import random_quad_pair
from rboxkit import _pykernels
from rboxkit.kernels import backend_name

try:
    from rboxkit import _ckernels
except ImportError:
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None,
                               reason="compiled kernels not built")


def test_backend_name_reports_something_sensible():
    assert backend_name() in ("cython", "python")


@needs_ext
def test_backends_agree_bitwise_on_iou():
    rng = np.random.Generator(np.random.PCG64(91))
    for _ in range(500):
        a, b = random_quad_pair(rng)
        assert _pykernels.iou(a.corners, b.corners) == \
            _ckernels.iou(a.corners, b.corners)


@needs_ext
def test_backends_agree_on_clip_polygons():
    rng = np.random.Generator(np.random.PCG64(92))
    for _ in range(200):
        a, b = random_quad_pair(rng)
        py = _pykernels.clip_quads(a.corners, b.corners)
        cy = _ckernels.clip_quads(a.corners, b.corners)
        assert len(py) == len(cy)
        for (px, pyy), (cx, cyy) in zip(py, cy):
            assert px == cx and pyy == cyy


@needs_ext
def test_backends_agree_on_intersect_area():
    rng = np.random.Generator(np.random.PCG64(93))
    for _ in range(300):
        a, b = random_quad_pair(rng)
        assert _pykernels.intersect_area(a.corners, b.corners) == \
            _ckernels.intersect_area(a.corners, b.corners)


@needs_ext
def test_iou_matrix_matches_pure():
    rng = np.random.Generator(np.random.PCG64(94))
    quads_a = np.stack([random_quad_pair(rng)[0].corners for _ in range(12)])
    quads_b = np.stack([random_quad_pair(rng)[1].corners for _ in range(9)])
    py = np.asarray(_pykernels.iou_matrix(quads_a, quads_b))
    cy = np.asarray(_ckernels.iou_matrix(quads_a, quads_b))
    assert np.array_equal(py, cy)


def test_env_var_forces_pure_backend():
    env = dict(os.environ, RBOXKIT_PURE="1")
    proc = subprocess.run(
        [sys.executable, "-c",
         "from rboxkit.kernels import backend_name; print(backend_name())"],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "python"
