import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinphase import _kernels_py, kernels
from spinphase.angular import threej_float

compiled = pytest.importorskip("spinphase._kernels")


@st.composite
def threej_args(draw):
    tj1 = draw(st.integers(0, 30))
    tj2 = draw(st.integers(0, 30))
    tm1 = draw(st.sampled_from(range(-tj1, tj1 + 1, 2)))
    tm2 = draw(st.sampled_from(range(-tj2, tj2 + 1, 2)))
    return tj1, tj2, tm1, tm2


@given(threej_args())
def test_threej_series_matches_exact(args):
    tj1, tj2, tm1, tm2 = args
    t0, vals = _kernels_py.threej_series(*args)
    for i, v in enumerate(vals):
        assert v == pytest.approx(threej_float(tj1, tj2, t0 + 2 * i, tm1, tm2, -tm1 - tm2), abs=1e-13)


@given(threej_args())
def test_threej_backends_agree(args):
    t0p, vp = _kernels_py.threej_series(*args)
    t0c, vc = compiled.threej_series(*args)
    assert t0p == t0c
    np.testing.assert_allclose(vc, vp, rtol=0, atol=1e-15)


def random_operand(rng, jmax, eta):
    jm = [(j, m) for j in range(abs(eta), jmax + 1) for m in range(-j, j + 1)]
    keep = rng.random(len(jm)) < 0.7
    jm = [p for p, k in zip(jm, keep) if k] or [jm[0]]
    j = np.array([p[0] for p in jm])
    m = np.array([p[1] for p in jm])
    c = rng.normal(size=len(jm)) + 1j * rng.normal(size=len(jm))
    return j, m, c


@pytest.mark.parametrize("seed", range(6))
def test_multiply_backends_agree(seed):
    rng = np.random.default_rng(seed)
    eta1, eta2 = int(rng.integers(-2, 3)), int(rng.integers(-2, 3))
    j1, m1, c1 = random_operand(rng, 7, eta1)
    j2, m2, c2 = random_operand(rng, 6, eta2)
    for cap in (-1, 5):
        a = _kernels_py.multiply_kernel(j1, m1, c1, eta1, j2, m2, c2, eta2, cap)
        b = compiled.multiply_kernel(j1, m1, c1, eta1, j2, m2, c2, eta2, cap)
        assert a.shape == b.shape
        np.testing.assert_allclose(b, a, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max()))


def test_multiply_empty():
    e = np.zeros(0, dtype=int)
    for mod in (_kernels_py, compiled):
        assert mod.multiply_kernel(e, e, e.astype(complex), 0, np.array([0]), np.array([0]),
                                   np.array([1.0 + 0j]), 0, -1).size == 0


def test_default_backend_is_compiled():
    if os.environ.get("SPINPHASE_PURE_PYTHON") == "1":
        assert kernels.BACKEND == "python"
    else:
        assert kernels.BACKEND == "cython"


def test_env_forces_fallback():
    env = dict(os.environ, SPINPHASE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from spinphase import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
