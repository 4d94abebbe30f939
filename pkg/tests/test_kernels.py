import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrf import _kernels

pytestmark = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def test_kron_accumulate_paths_agree(rng):
    left = rng.normal(size=(5, 3, 3)) + 1j * rng.normal(size=(5, 3, 3))
    right = rng.normal(size=(5, 4, 4)) + 1j * rng.normal(size=(5, 4, 4))
    direct = sum(np.kron(left[m], right[m]) for m in range(5))
    assert np.allclose(_kernels.kron_accumulate_np(left, right), direct, atol=1e-13)
    assert np.allclose(_kernels.kron_accumulate_nb(left, right), direct, atol=1e-13)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6))
def test_aacom_and_witness_paths_agree(seed, di, dj):
    g = np.random.default_rng(seed)
    pi = (g.random((di, dj)) < 0.6).astype(float)
    mi = g.normal(size=(di, di)) + 1j * g.normal(size=(di, di))
    mj = g.normal(size=(dj, dj)) + 1j * g.normal(size=(dj, dj))
    assert np.allclose(_kernels.aacom_np(pi, mi, mj), _kernels.aacom_nb(pi, mi, mj), atol=1e-14)
    a = _kernels.unit_witness_np(pi)
    b = _kernels.unit_witness_nb(pi)
    assert a[0] == b[0] and tuple(a[1:]) == tuple(b[1:])


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=5), st.lists(st.integers(-5, 5), min_size=1, max_size=5),
       st.lists(st.integers(-5, 5), min_size=1, max_size=5), st.sampled_from([0, 3, 7]))
def test_kernel_triples_paths_agree(va, vb, vc, mod):
    args = [np.array(v, dtype=np.int64) for v in (va, vb, vc)]
    a = _kernels.kernel_triples_np(*args, mod)
    b = _kernels.kernel_triples_nb(*args, mod)
    assert np.array_equal(a, b)


def test_use_numba_switch():
    with _kernels.use_numba(False):
        assert _kernels.backend() == "numpy"
    with _kernels.use_numba(True):
        assert _kernels.backend() == "numba"


def test_env_flag_selects_numpy():
    env = dict(os.environ, QRF_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from qrf import _kernels; print(_kernels.backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_numpy_backend_end_to_end():
    from qrf.analysis import run_example
    from qrf.frames import _build_perspective
    from qrf.physical import build_physical_space

    with _kernels.use_numba(False):
        _build_perspective.cache_clear()
        build_physical_space.cache_clear()
        assert run_example("translation").passed
    _build_perspective.cache_clear()
    build_physical_space.cache_clear()
