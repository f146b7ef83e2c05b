"""The numba kernels and the numpy fallback must agree on every entry point."""

import numpy as np
import pytest

from qdlc import _kernels

pytestmark = pytest.mark.skipif(_kernels.numba_kernels is None, reason="numba not importable")

fast, slow = _kernels.numba_kernels, _kernels.numpy_kernels


def test_fwht(rng):
    for n in range(0, 11):
        v = rng.normal(size=1 << n)
        np.testing.assert_allclose(fast.fwht(v), slow.fwht(v), atol=1e-10)


def test_fwht_against_hadamard_matrix(rng):
    h = np.array([[1.0]])
    for _ in range(4):
        h = np.kron(h, [[1, 1], [1, -1]])
    v = rng.normal(size=16)
    np.testing.assert_allclose(slow.fwht(v), h @ v, atol=1e-12)


@pytest.mark.parametrize("cmask", [0, 0b100000])
def test_mux1q(rng, cmask):
    nq = 6
    state = rng.normal(size=64) + 1j * rng.normal(size=64)
    selectors = np.array([1, 3], dtype=np.int64)
    mats = rng.normal(size=(4, 2, 2)) + 1j * rng.normal(size=(4, 2, 2))
    a = fast.mux1q(state.copy(), nq, 4, selectors, mats, cmask, cmask)
    b = slow.mux1q(state.copy(), nq, 4, selectors, mats, cmask, cmask)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_scatter(rng):
    s = rng.normal(size=128) + 0j
    perm = rng.permutation(128).astype(np.int64)
    np.testing.assert_array_equal(fast.scatter(s, perm), slow.scatter(s, perm))


@pytest.mark.parametrize("stop", [-1.0, 0.05])
def test_walsh_prefix_errors(rng, stop):
    g = rng.uniform(-1, 1, 64)
    c = slow.fwht(g) / 8
    ks = np.argsort(-np.abs(c), kind="stable").astype(np.int64)
    np.testing.assert_allclose(fast.walsh_prefix_errors(c[ks], ks, g, stop),
                               slow.walsh_prefix_errors(c[ks], ks, g, stop), atol=1e-12)


def test_full_prefix_reconstructs_exactly(rng):
    g = rng.uniform(-1, 1, 32)
    c = slow.fwht(g) / np.sqrt(32)
    ks = np.arange(32, dtype=np.int64)
    assert slow.walsh_prefix_errors(c, ks, g, -1.0)[-1] < 1e-12


def test_env_flag_selects_numpy_path():
    import os
    import subprocess
    import sys

    code = "from qdlc import _kernels; print(_kernels.active.name)"
    env = dict(os.environ, QDLC_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env.pop("QDLC_DISABLE_NUMBA")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numba"
