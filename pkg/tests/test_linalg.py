import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrf.errors import DimensionError, NormalizationError, SizeError, SpaceMismatchError, SymmetryError
from qrf.linalg import (
    BipartitionShape,
    LabeledOperator,
    entropy_from_schmidt,
    herm_eig,
    partial_trace,
    schmidt_coefficients,
    tensor_product,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def test_tensor_identity_and_basis_bookkeeping():
    assert np.array_equal(tensor_product(np.eye(2), np.eye(3)), np.eye(6))
    out = tensor_product(np.array([1, 0]), np.array([0, 1]))
    assert np.array_equal(out[:, 0], [0, 1, 0, 0])


def test_sz_sz_spectrum_against_direct_eigendecomposition():
    w, _ = herm_eig(tensor_product(SZ, SZ))
    assert np.allclose(w, [-1, -1, 1, 1])
    assert np.allclose(np.sort(np.linalg.eigvalsh(np.diag([1, -1, -1, 1]))), w)


def test_size_guard(monkeypatch):
    monkeypatch.setenv("QRF_MAX_DIM", "15")
    with pytest.raises(SizeError):
        tensor_product(np.eye(2), np.eye(2))
    monkeypatch.setenv("QRF_MAX_DIM", "16")
    tensor_product(np.eye(2), np.eye(2))


def test_nonfinite_rejected():
    with pytest.raises(DimensionError):
        tensor_product(np.array([[np.nan]]), np.eye(1))


def test_partial_trace_examples():
    ket00 = np.zeros(4)
    ket00[0] = 1
    rho = np.outer(ket00, ket00)
    assert np.allclose(partial_trace(rho, BipartitionShape(2, 2), "left"), np.diag([1, 0]))
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(partial_trace(np.outer(phi, phi), BipartitionShape(2, 2)), np.eye(2) / 2)


def test_partial_trace_random_against_direct_summation(rng):
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    red = partial_trace(rho, BipartitionShape(2, 3), "left")
    direct = np.array([[sum(rho[i * 3 + k, j * 3 + k] for k in range(3)) for j in range(2)] for i in range(2)])
    assert np.allclose(red, direct, atol=1e-14)
    assert abs(np.trace(red) - 1) <= 1e-12
    red_r = partial_trace(rho, BipartitionShape(2, 3), "right")
    assert abs(np.trace(red_r) - 1) <= 1e-12


def test_partial_trace_shape_mismatch():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(5), BipartitionShape(2, 3))


def test_schmidt_examples():
    plus = np.array([1, 1]) / np.sqrt(2)
    assert np.allclose(schmidt_coefficients(np.kron([1, 0], plus), BipartitionShape(2, 2)), [1, 0])
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(schmidt_coefficients(phi, BipartitionShape(2, 2)), [1 / np.sqrt(2)] * 2)
    w = np.array([1, 1, 1, 0]) / np.sqrt(3)
    sq = schmidt_coefficients(w, BipartitionShape(2, 2)) ** 2
    assert np.allclose(sq, [(3 + np.sqrt(5)) / 6, (3 - np.sqrt(5)) / 6], atol=1e-14)


def test_schmidt_requires_unit_vector():
    with pytest.raises(NormalizationError):
        schmidt_coefficients(np.array([1.0, 1.0, 0, 0]), BipartitionShape(2, 2))


def test_entropy_examples():
    assert entropy_from_schmidt([1.0]) == 0.0
    assert abs(entropy_from_schmidt([2**-0.5] * 2) - np.log(2)) < 1e-15
    assert abs(entropy_from_schmidt([3**-0.5] * 3) - np.log(3)) < 1e-15
    assert entropy_from_schmidt([1.0, 1e-9]) == 0.0


def test_herm_eig_examples(rng):
    w, _ = herm_eig(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(w, [1, 2, 3])
    w, _ = herm_eig(SX)
    assert np.allclose(w, [-1, 1])
    h = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = h + h.conj().T
    w, v = herm_eig(h)
    assert np.max(np.abs(h @ v - v * w)) <= 1e-9
    assert np.max(np.abs(v.conj().T @ v - np.eye(8))) <= 1e-9


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(SymmetryError):
        herm_eig(np.array([[0, 1], [0, 0]]))


def test_labeled_operator_space_tags():
    a = LabeledOperator(np.eye(2), "kin")
    b = LabeledOperator(np.eye(2), "phys")
    assert np.array_equal((a @ a).matrix, np.eye(2))
    with pytest.raises(SpaceMismatchError):
        a @ b
    with pytest.raises(SpaceMismatchError):
        a + b
    with pytest.raises(ValueError):
        a.matrix[0, 0] = 3


def _mat(seed, r, c):
    g = np.random.default_rng(seed)
    return g.normal(size=(r, c)) + 1j * g.normal(size=(r, c))


@given(st.integers(0, 2**32 - 1), st.lists(st.integers(1, 8), min_size=6, max_size=6))
def test_tensor_associativity(seed, dims):
    a, b, c = _mat(seed, *dims[:2]), _mat(seed + 1, *dims[2:4]), _mat(seed + 2, *dims[4:])
    lhs = tensor_product(tensor_product(a, b), c)
    rhs = tensor_product(a, tensor_product(b, c))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 5))
def test_partial_trace_of_product(seed, dl, dr):
    g = np.random.default_rng(seed)

    def dens(d):
        a = g.normal(size=(d, d)) + 1j * g.normal(size=(d, d))
        r = a @ a.conj().T
        return r / np.trace(r)

    rl, rr = dens(dl), dens(dr)
    shape = BipartitionShape(dl, dr)
    assert np.max(np.abs(partial_trace(np.kron(rl, rr), shape, "left") - rl)) <= 1e-12
    assert np.max(np.abs(partial_trace(np.kron(rl, rr), shape, "right") - rr)) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6))
def test_schmidt_squares_sum_to_one(seed, dl, dr):
    v = _mat(seed, dl * dr, 1)[:, 0]
    v /= np.linalg.norm(v)
    s = schmidt_coefficients(v, BipartitionShape(dl, dr))
    assert abs(np.sum(s**2) - 1) <= 1e-10
    assert np.all(np.diff(s) <= 1e-15)


@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_eigenvalues_invariant_under_unitary_conjugation(seed, d):
    h = _mat(seed, d, d)
    h = h + h.conj().T
    q, _ = np.linalg.qr(_mat(seed + 7, d, d))
    w1, _ = herm_eig(h)
    w2, _ = herm_eig(q @ h @ q.conj().T)
    assert np.max(np.abs(w1 - w2)) <= 1e-8
