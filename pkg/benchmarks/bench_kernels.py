"""Compare the numba and numpy paths of the hot kernels.

Run with ``python benchmarks/bench_kernels.py``. Each kernel is warmed up
once (this triggers numba compilation) and then timed over several repeats.
"""

import time

import numpy as np

from qrf import _kernels
from qrf.analysis import packaged_model
from qrf.frames import _disentangler_frame
from qrf.relobs import _pi_matrix


def timeit(fn, repeats):
    fn()
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def main():
    rng = np.random.default_rng(0)
    z8 = packaged_model("z8")
    windowed = packaged_model("windowed")
    big_pi = (rng.random((24, 40)) < 0.6).astype(float)
    mi = rng.normal(size=(24, 24)) + 1j * rng.normal(size=(24, 24))
    mj = rng.normal(size=(40, 40)) + 1j * rng.normal(size=(40, 40))
    vals = np.arange(-20, 21)

    cases = [
        ("disentangler Z_8 (512x512)", lambda: _disentangler_frame(z8, "C", 0, +1), 20),
        ("witness scan windowed B", lambda: _kernels.unit_witness(_pi_matrix(windowed, "B", "0")), 200),
        ("witness scan 24x40", lambda: _kernels.unit_witness(big_pi), 20),
        ("aacom 24x40", lambda: _kernels.aacom(big_pi, mi, mj), 10),
        ("kernel triples 41^3", lambda: _kernels.kernel_triples(vals, vals, vals, None), 50),
    ]
    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy path is available")
    print(f"{'kernel':32s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>9s}")
    for name, fn, reps in cases:
        with _kernels.use_numba(False):
            t_np = timeit(fn, reps)
        with _kernels.use_numba(True):
            t_nb = timeit(fn, reps)
        print(f"{name:32s} {t_np * 1e3:12.3f} {t_nb * 1e3:12.3f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
