"""Cross-backend agreement between the numba kernels and their numpy fallbacks."""

import os
import subprocess
import sys

import numpy as np
import pytest

from facerf.synthscene import EXPR_CENTERS, EXPR_SIGMAS, mean_scene

numba_impl = pytest.importorskip("facerf.kernels.numba_impl")
from facerf.kernels import numpy_impl  # noqa: E402


@pytest.fixture(scope="module")
def scene_args():
    scene = mean_scene()
    rng = np.random.default_rng(17)
    z_exp = rng.uniform(-1, 1, 20)
    return scene.pack(), EXPR_CENTERS, EXPR_SIGMAS, scene.expr_amps, z_exp


def test_sdf_backends_agree(scene_args):
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1.5, 1.5, (500, 3))
    a = numpy_impl.sdf_points(pts, *scene_args)
    b = numba_impl.sdf_points(pts, *scene_args)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-14)


def test_trace_backends_agree(scene_args):
    rng = np.random.default_rng(2)
    n = 300
    origins = np.zeros((n, 3))
    origins[:, 2] = 2.7
    dirs = np.stack([rng.uniform(-0.35, 0.35, n), rng.uniform(-0.35, 0.35, n),
                     -np.ones(n)], axis=1)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    ta, sa = numpy_impl.trace_rays(origins, dirs, 1.0, 4.6, *scene_args)
    tb, sb = numba_impl.trace_rays(origins, dirs, 1.0, 4.6, *scene_args)
    np.testing.assert_array_equal(sa, sb)
    hit = sa == 1
    assert hit.any() and (~hit).any()
    np.testing.assert_allclose(ta[hit], tb[hit], atol=1e-9)


def test_field_backends_agree(scene_args):
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1.0, 1.0, (400, 3))
    dirs = rng.normal(size=(400, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    light = np.array([0.3, 0.5, 0.81])
    light /= np.linalg.norm(light)
    lrgb = np.array([1.0, 0.9, 0.8])
    argb = np.array([0.3, 0.3, 0.35])
    ra, sa = numpy_impl.field_eval(pts, dirs, *scene_args, light, lrgb, argb, 300.0, 0.0015)
    rb, sb = numba_impl.field_eval(pts, dirs, *scene_args, light, lrgb, argb, 300.0, 0.0015)
    np.testing.assert_allclose(sa, sb, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(ra, rb, rtol=1e-12, atol=1e-12)


def test_composite_backends_agree():
    rng = np.random.default_rng(4)
    r, k = 200, 32
    ts = np.sort(rng.uniform(1.0, 4.5, (r, k)), axis=1)
    rgbs = rng.uniform(0, 1, (r, k, 3))
    sigmas = rng.uniform(0, 50, (r, k))
    outs_a = numpy_impl.composite_rays(ts, rgbs, sigmas, 4.6)
    outs_b = numba_impl.composite_rays(ts, rgbs, sigmas, 4.6)
    for a, b in zip(outs_a, outs_b):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, FACERF_KERNELS="numpy")
    out = subprocess.run(
        [sys.executable, "-c", "from facerf import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_env_flag_rejects_unknown_backend():
    env = dict(os.environ, FACERF_KERNELS="cuda")
    out = subprocess.run(
        [sys.executable, "-c", "import facerf.kernels"],
        env=env, capture_output=True, text=True)
    assert out.returncode != 0
