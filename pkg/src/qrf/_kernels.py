"""Hot inner loops, each with a numba path and a pure-numpy twin.

The numba path is used when numba imports and ``QRF_DISABLE_NUMBA`` is not
set to a truthy value at import time. ``use_numba`` switches the backend
explicitly (the benchmark and the parity tests use it). Both paths return
bit-for-bit comparable results up to floating-point summation order.
"""

from __future__ import annotations

import contextlib
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def _env_disabled() -> bool:
    return os.environ.get("QRF_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


_USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def backend() -> str:
    return "numba" if _USE_NUMBA else "numpy"


@contextlib.contextmanager
def use_numba(flag: bool):
    """Temporarily select the numba (True) or numpy (False) backend."""
    global _USE_NUMBA
    old = _USE_NUMBA
    _USE_NUMBA = bool(flag) and HAVE_NUMBA
    try:
        yield
    finally:
        _USE_NUMBA = old


# --- numpy reference implementations -------------------------------------


def kron_accumulate_np(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    m, p, _ = left.shape
    q = right.shape[1]
    return np.einsum("mab,mcd->acbd", left, right).reshape(p * q, p * q)


def aacom_np(pi: np.ndarray, mi: np.ndarray, mj: np.ndarray) -> np.ndarray:
    di, dj = pi.shape
    # t[a,b,a',b'] = pi(a,b) pi(a',b') (pi(a',b) - pi(a,b'))
    t = pi[:, :, None, None] * pi[None, None, :, :] * (pi.T[None, :, :, None] - pi[:, None, None, :])
    c = mi[:, None, :, None] * mj[None, :, None, :] * t
    return c.reshape(di * dj, di * dj)


def unit_witness_np(pi: np.ndarray) -> tuple[float, int, int, int, int]:
    t = pi[:, :, None, None] * pi[None, None, :, :] * (pi.T[None, :, :, None] - pi[:, None, None, :])
    # reorder to (a, a', b, b') so the flat argmax is lexicographic in that order
    t = np.abs(t).transpose(0, 2, 1, 3)
    if t.size == 0:
        return 0.0, -1, -1, -1, -1
    idx = int(np.argmax(t))
    a, ap, b, bp = np.unravel_index(idx, t.shape)
    return float(t[a, ap, b, bp]), int(a), int(ap), int(b), int(bp)


def kernel_triples_np(va: np.ndarray, vb: np.ndarray, vc: np.ndarray, modulus: int) -> np.ndarray:
    s = va[:, None, None] + vb[None, :, None] + vc[None, None, :]
    if modulus > 0:
        s = np.mod(s, modulus)
    return np.argwhere(s == 0).astype(np.int64)


# --- numba implementations -----------------------------------------------


@njit(cache=True)
def kron_accumulate_nb(left, right):
    m, p, _ = left.shape
    q = right.shape[1]
    out = np.zeros((p * q, p * q), dtype=np.complex128)
    for k in range(m):
        for a in range(p):
            for b in range(p):
                lab = left[k, a, b]
                if lab == 0:
                    continue
                for c in range(q):
                    row = a * q + c
                    for d in range(q):
                        out[row, b * q + d] += lab * right[k, c, d]
    return out


@njit(cache=True)
def aacom_nb(pi, mi, mj):
    di, dj = pi.shape
    out = np.zeros((di * dj, di * dj), dtype=np.complex128)
    for a in range(di):
        for b in range(dj):
            if pi[a, b] == 0:
                continue
            for ap in range(di):
                for bp in range(dj):
                    w = pi[a, b] * pi[ap, bp] * (pi[ap, b] - pi[a, bp])
                    if w != 0:
                        out[a * dj + b, ap * dj + bp] = mi[a, ap] * mj[b, bp] * w
    return out


@njit(cache=True)
def unit_witness_nb(pi):
    di, dj = pi.shape
    best = 0.0
    ba, bap, bb, bbp = -1, -1, -1, -1
    if di > 0 and dj > 0:
        ba, bap, bb, bbp = 0, 0, 0, 0
    for a in range(di):
        for ap in range(di):
            for b in range(dj):
                for bp in range(dj):
                    w = abs(pi[a, b] * pi[ap, bp] * (pi[ap, b] - pi[a, bp]))
                    if w > best:
                        best = w
                        ba, bap, bb, bbp = a, ap, b, bp
    return best, ba, bap, bb, bbp


@njit(cache=True)
def kernel_triples_nb(va, vb, vc, modulus):
    count = 0
    for a in range(va.shape[0]):
        for b in range(vb.shape[0]):
            for c in range(vc.shape[0]):
                s = va[a] + vb[b] + vc[c]
                if modulus > 0:
                    s = s % modulus
                if s == 0:
                    count += 1
    out = np.empty((count, 3), dtype=np.int64)
    n = 0
    for a in range(va.shape[0]):
        for b in range(vb.shape[0]):
            for c in range(vc.shape[0]):
                s = va[a] + vb[b] + vc[c]
                if modulus > 0:
                    s = s % modulus
                if s == 0:
                    out[n, 0] = a
                    out[n, 1] = b
                    out[n, 2] = c
                    n += 1
    return out


# --- dispatch ------------------------------------------------------------


def kron_accumulate(left, right) -> np.ndarray:
    """``sum_m kron(left[m], right[m])`` for stacks of square matrices."""
    left = np.ascontiguousarray(left, dtype=np.complex128)
    right = np.ascontiguousarray(right, dtype=np.complex128)
    if _USE_NUMBA:
        return kron_accumulate_nb(left, right)
    return kron_accumulate_np(left, right)


def aacom(pi, mi, mj) -> np.ndarray:
    """Commutator of compressed local operators from the elementwise formula."""
    pi = np.ascontiguousarray(pi, dtype=np.float64)
    mi = np.ascontiguousarray(mi, dtype=np.complex128)
    mj = np.ascontiguousarray(mj, dtype=np.complex128)
    if _USE_NUMBA:
        return aacom_nb(pi, mi, mj)
    return aacom_np(pi, mi, mj)


def unit_witness(pi) -> tuple[float, int, int, int, int]:
    """Largest commutator entry over all matrix-unit pairs and its (a, a', b, b')."""
    pi = np.ascontiguousarray(pi, dtype=np.float64)
    if _USE_NUMBA:
        best, a, ap, b, bp = unit_witness_nb(pi)
        return float(best), int(a), int(ap), int(b), int(bp)
    return unit_witness_np(pi)


def kernel_triples(va, vb, vc, modulus: int | None) -> np.ndarray:
    """Level-index triples (a, b, c) with va[a]+vb[b]+vc[c] == 0 (mod modulus), lex order."""
    va = np.ascontiguousarray(va, dtype=np.int64)
    vb = np.ascontiguousarray(vb, dtype=np.int64)
    vc = np.ascontiguousarray(vc, dtype=np.int64)
    mod = int(modulus or 0)
    if _USE_NUMBA:
        return kernel_triples_nb(va, vb, vc, mod)
    return kernel_triples_np(va, vb, vc, mod)
