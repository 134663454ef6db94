"""The compiled and the NumPy blade kernels must agree bit for bit (up to rounding)."""
import os
import subprocess
import sys

import numpy as np
import pytest

from twistorlab import _fallback, kernels


def _rand(size, rng):
    return rng.normal(size=size) + 1j * rng.normal(size=size)


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_compiled_matches_fallback(m, rng):
    from twistorlab import _kernels

    size = 4**m
    for _ in range(5):
        x, y = _rand(size, rng), _rand(size, rng)
        assert np.allclose(_kernels.geometric_product(x, y), _fallback.geometric_product(x, y), atol=1e-12)
        assert np.allclose(_kernels.outer_product(x, y), _fallback.outer_product(x, y), atol=1e-12)


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
def test_compiled_accepts_strided_and_real_input(rng):
    from twistorlab import _kernels

    x = _rand(32, rng)[::2]
    y = rng.normal(size=16)
    want = _fallback.geometric_product(x, y.astype(complex))
    assert np.allclose(_kernels.geometric_product(x, y), want, atol=1e-12)
    with pytest.raises(ValueError):
        _kernels.outer_product(x, y[:4])


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
def test_compiled_sparse_rows_skipped_correctly(rng):
    from twistorlab import _kernels

    x = np.zeros(64, dtype=complex)
    x[[0, 5, 63]] = [1.0, 2j, -0.5]
    y = _rand(64, rng)
    assert np.allclose(_kernels.geometric_product(x, y), _fallback.geometric_product(x, y), atol=1e-12)


def test_reorder_parity_matches_bruteforce():
    def brute(a, b):
        ia = [i for i in range(8) if a >> i & 1]
        ib = [i for i in range(8) if b >> i & 1]
        return sum(1 for p in ia for q in ib if p > q) & 1

    for a in range(64):
        for b in range(64):
            assert _fallback.reorder_parity(a, b) == brute(a, b)


def test_pure_env_selects_fallback():
    env = dict(os.environ, TWISTORLAB_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "import twistorlab.kernels as k; print(k.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_fallback_identities(rng):
    # e_i^2 = -1 and associativity through the fallback directly
    size = 16
    e1 = np.zeros(size, complex)
    e1[1] = 1
    assert np.allclose(_fallback.geometric_product(e1, e1)[0], -1)
    x, y, z = (_rand(size, rng) for _ in range(3))
    gp = _fallback.geometric_product
    assert np.allclose(gp(gp(x, y), z), gp(x, gp(y, z)), atol=1e-12)
