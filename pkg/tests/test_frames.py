import numpy as np
import pytest
from hypothesis import given, strategies as st

from qrf.analysis import packaged_packet, z8_operator_transport
from qrf.errors import OverlapError, PreconditionError
from qrf.frames import (
    admissible_epsilons,
    build_perspective,
    canonical_commutator_diagnostic,
    change_frame,
    dft_matrix,
    disentangler,
    frame_permutation,
    moment_operator,
    orientation_state,
    povm_effect,
    reduce_schrodinger,
    sector_leak,
)
from qrf.linalg import schmidt_coefficients, BipartitionShape
from qrf.model import build_model, local_diag
from qrf.physical import build_physical_space, parse_coefficients, physical_state_from_coeffs, random_physical_state

from strategies import cyclic_models, small_models


def _qubit_model():
    return build_model(
        {"A": [(-1, "0"), (1, "0")], "B": [(0, "0")], "C": [(0, "0")]}, orientation_group_size=5
    )


def test_orientation_state_examples():
    m = _qubit_model()
    assert np.array_equal(orientation_state(m, "A", "0", 0), [1, 1])
    for g in range(5):
        assert np.array_equal(orientation_state(m, "B", "0", g), [1])


def test_orientation_state_rejects_bad_element(models):
    with pytest.raises(PreconditionError):
        orientation_state(models["z8"], "C", "0", 8)


def test_z8_orientation_states_are_fourier_dual(models):
    m = models["z8"]
    cols = np.stack([orientation_state(m, "C", "0", g) for g in range(8)], axis=1)
    assert np.max(np.abs(cols / np.sqrt(8) - dft_matrix(8))) <= 1e-14
    assert np.max(np.abs(cols.conj().T @ cols / 8 - np.eye(8))) <= 1e-14


@given(cyclic_models())
def test_orientation_covariance(model):
    n = model.orientation_group_size
    for k in "ABC":
        shift = np.exp(-2j * np.pi / n * local_diag(model, k).diagonal())
        for d in model.subsystem(k).sectors:
            for g in range(n - 1):
                nxt = orientation_state(model, k, d, g + 1)
                assert np.max(np.abs(nxt - shift * orientation_state(model, k, d, g))) <= 1e-12


@pytest.mark.parametrize("name", ["qutrit", "windowed", "z8"])
def test_povm_resolves_identity(models, name):
    m = models[name]
    for k in "ABC":
        effs = [povm_effect(m, k, g).matrix for g in range(m.orientation_group_size)]
        assert np.max(np.abs(sum(effs) - np.eye(m.subsystem(k).dimension))) <= 1e-13
        for e in effs:
            assert np.min(np.linalg.eigvalsh(e)) >= -1e-13


def test_povm_examples(models):
    m = models["z8"]
    for g in range(8):
        assert abs(np.trace(povm_effect(m, "A", g).matrix) - 1.0) <= 1e-14
    trivial = build_model({x: [(0, "0")] for x in "ABC"}, orientation_group_size=1)
    assert np.array_equal(povm_effect(trivial, "A", 0).matrix, np.eye(1))
    q = _qubit_model()
    assert np.max(np.abs(sum(povm_effect(q, "A", g).matrix for g in range(5)) - np.eye(2))) <= 1e-14


def test_moment_operators(models):
    m = models["z8"]
    assert np.max(np.abs(moment_operator(m, "C", 0).matrix - np.eye(8))) <= 1e-14
    o1 = moment_operator(m, "C", 1).matrix
    assert np.max(np.abs(o1 - o1.conj().T)) <= 1e-14
    assert np.allclose(np.diag(o1), 2 * np.pi * 28 / 64, atol=1e-14)
    with pytest.raises(PreconditionError):
        moment_operator(m, "C", -1)


def test_canonical_commutator_diagnostic(models):
    m = models["z8"]
    g = 2 * np.pi * np.arange(8) / 8
    o1 = sum(gm * np.outer(v, v.conj()) / 8 for gm, v in zip(g, (orientation_state(m, "C", "0", k) for k in range(8))))
    c = np.diag(np.arange(8.0))
    assert np.max(np.abs(canonical_commutator_diagnostic(m, "C") - (o1 @ c - c @ o1))) <= 1e-12


def _to_frame(model, k, kin_vec):
    return kin_vec[frame_permutation(model, k)]


def test_reduce_schrodinger_examples(models, spaces):
    m, sp = models["qutrit"], spaces["qutrit"]
    psi = physical_state_from_coeffs(sp, "C", "+", {(-1, "0", 1, "0"): 1.0})
    for g in range(m.orientation_group_size):
        out = reduce_schrodinger(sp, psi, "C", "+", g)
        assert np.array_equal(out, [0, 1, 0, 0])  # |0_A 1_B>
        assert not np.any(reduce_schrodinger(sp, psi, "C", "-", g))


@pytest.mark.parametrize("name", ["qutrit", "z8"])
def test_schrodinger_reconstruction(models, spaces, rng, name):
    m, sp = models[name], spaces[name]
    psi = random_physical_state(sp, rng)
    if name == "z8":
        psi = physical_state_from_coeffs(sp, "C", "0", parse_coefficients(packaged_packet("gauss"), m))
    n = m.orientation_group_size
    total = 0
    for d in m.subsystem("C").sectors:
        for g in range(n):
            total = total + np.kron(orientation_state(m, "C", d, g), reduce_schrodinger(sp, psi, "C", d, g)) / n
    assert np.max(np.abs(total - _to_frame(m, "C", sp.to_kin(psi.amplitudes)))) <= 1e-10


@pytest.mark.parametrize("name", ["qutrit", "windowed", "z8"])
def test_schrodinger_heisenberg_equivalence(models, spaces, rng, name):
    m, sp = models[name], spaces[name]
    for k in "ABC":
        for d in m.subsystem(k).sectors:
            try:
                persp = build_perspective(sp, k, d)
            except PreconditionError:
                continue
            psi = random_physical_state(sp, rng)
            kept = [a * m.subsystem(persp.pair_labels[1]).dimension + b for a, b in persp.pair_index]
            for g in (0, 1, m.orientation_group_size - 1):
                s = np.array([ci + cj for ci, _, cj, _ in persp.reduced_basis_tags])
                phase = np.exp(-1j * s * 2 * np.pi * g / m.orientation_group_size)
                schr = reduce_schrodinger(sp, psi, k, d, g)[kept]
                assert np.max(np.abs(schr - phase * persp.reduce(psi))) <= 1e-10


@pytest.mark.parametrize("name,k", [("qutrit", "C"), ("qutrit", "A"), ("z8", "C"), ("windowed", "C"), ("windowed", "B")])
def test_disentangler_factors_out_frame(models, spaces, rng, name, k):
    m, sp = models[name], spaces[name]
    t = disentangler(m, k, admissible_epsilons(m, k)[0]).matrix
    dk = m.subsystem(k).dimension
    for d in m.subsystem(k).sectors:
        for _ in range(5):
            psi = random_physical_state(sp, rng, sector=(k, d))
            out = _to_frame(m, k, t @ sp.to_kin(psi.amplitudes))
            sv = schmidt_coefficients(out / np.linalg.norm(out), BipartitionShape(dk, m.kin_dim // dk))
            assert sv[1] <= 1e-10


def test_disentangler_rejects_bad_epsilon(models):
    with pytest.raises(PreconditionError):
        disentangler(models["qutrit"], "C", 1)
    with pytest.raises(PreconditionError):
        disentangler(models["windowed"], "C", 3)


def test_perspective_examples(models, spaces):
    q = build_perspective(spaces["qutrit"], "C", "+")
    assert q.reduced_dim == 3
    assert {(ci, cj) for ci, _, cj, _ in q.reduced_basis_tags} == {(-1, 1), (1, -1), (-1, -1)}
    z = build_perspective(spaces["z8"], "C")
    assert z.reduced_dim == 64
    assert {(ci, cj) for ci, _, cj, _ in z.reduced_basis_tags} == {(a, b) for a in range(8) for b in range(8)}
    empty = build_physical_space(build_model({x: [(1, "0")] for x in "ABC"}))
    assert build_perspective(empty, "A").reduced_dim == 0


@pytest.mark.parametrize("name", ["qutrit", "windowed", "z8"])
def test_perspective_invariants(models, spaces, name):
    m, sp = models[name], spaces[name]
    for k in "ABC":
        for d in m.subsystem(k).sectors:
            p = build_perspective(sp, k, d)
            proj = sp.sector_projector(k, d)
            assert np.max(np.abs(p.embed_matrix @ p.reduce_matrix - proj)) <= 1e-10
            assert np.max(np.abs(p.reduce_matrix @ p.embed_matrix - np.eye(p.reduced_dim))) <= 1e-10


@pytest.mark.parametrize("name", ["qutrit", "windowed", "z8"])
def test_gauge_independence(models, spaces, rng, name):
    m, sp = models[name], spaces[name]
    for k in "ABC":
        eps = admissible_epsilons(m, k)
        for d in m.subsystem(k).sectors:
            ref = build_perspective(sp, k, d)
            alt = build_perspective(sp, k, d, epsilon=eps[-1], m=m.orientation_group_size - 1)
            psi = random_physical_state(sp, rng)
            assert np.max(np.abs(ref.reduce(psi) - alt.reduce(psi))) <= 1e-10


@given(small_models(labels=("0", "1")), st.integers(0, 2**32 - 1))
def test_round_trip_property(model, seed):
    sp = build_physical_space(model)
    if sp.dim == 0:
        return
    rng = np.random.default_rng(seed)
    psi = random_physical_state(sp, rng).amplitudes
    for k in "ABC":
        for d in model.subsystem(k).sectors:
            p = build_perspective(sp, k, d)
            want = sp.sector_projector(k, d) @ psi
            assert np.linalg.norm(p.embed(p.reduce(psi)) - want) <= 1e-10


def test_change_frame_identity(spaces, rng):
    p = build_perspective(spaces["z8"], "C")
    v = rng.normal(size=64) + 0j
    assert np.array_equal(change_frame(spaces["z8"], p, p, v), v)


def test_change_frame_z8_product_oracle(models, spaces, rng):
    sp = spaces["z8"]
    src, dst = build_perspective(sp, "C"), build_perspective(sp, "B")
    fa = rng.normal(size=8) + 1j * rng.normal(size=8)
    fb = rng.normal(size=8) + 1j * rng.normal(size=8)
    vec = np.array([fa[a] * fb[b] for a, _, b, _ in src.reduced_basis_tags])
    got = change_frame(sp, src, dst, vec)
    want = np.array([fa[a] * fb[(-a - c) % 8] for a, _, c, _ in dst.reduced_basis_tags])
    assert np.max(np.abs(got - want)) <= 1e-10
    back = change_frame(sp, dst, src, got)
    assert np.max(np.abs(back - vec)) <= 1e-10


def test_change_frame_qutrit_overlap(models, spaces, rng):
    sp = spaces["qutrit"]
    src, dst = build_perspective(sp, "C", "+"), build_perspective(sp, "A")
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    v /= np.linalg.norm(v)
    out = change_frame(sp, src, dst, v)
    assert abs(np.linalg.norm(out) - 1) <= 1e-10
    assert sector_leak(sp, dst.embed(out), "C", "+") <= 1e-12
    assert np.max(np.abs(change_frame(sp, dst, src, out) - v)) <= 1e-10


def test_change_frame_overlap_error(spaces):
    sp = spaces["qutrit"]
    src, dst = build_perspective(sp, "A"), build_perspective(sp, "C", "+")
    w = src.reduce(sp.sector_projector("C", "-") @ np.ones(sp.dim))
    with pytest.raises(OverlapError) as info:
        change_frame(sp, src, dst, w)
    assert info.value.leaked_norm > 1e-10


def test_z8_operator_transport(spaces):
    errs = z8_operator_transport(spaces["z8"])
    assert set(errs) == {"q_B", "p_B", "q_C"}
    assert max(errs.values()) <= 1e-9
