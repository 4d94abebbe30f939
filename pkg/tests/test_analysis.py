import numpy as np
import pytest

from qrf.analysis import (
    EXAMPLES,
    check,
    compare_frames,
    native_entanglement,
    native_split,
    packaged_packet,
    run_example,
    state_from_document,
    transported_entanglement,
)
from qrf.errors import ModelValidationError, NoNativeFactorizationError, OverlapError
from qrf.frames import build_perspective
from qrf.model import build_model
from qrf.physical import build_physical_space, parse_coefficients, physical_state_from_coeffs, random_physical_state

# Entropy (nats) of the packaged Gaussian packet in frame B; computed by the
# relabeling oracle in test_gaussian_entropy_oracle and frozen here.
GAUSS_B_ENTROPY = 0.54791456146953


def _oracle_entropy_b(coeffs):
    """Frame-B matrix M[p_A, p_C] = psi_C(p_A, -p_A - p_C mod 8), entropy by SVD."""
    psi = np.zeros((8, 8), dtype=complex)
    for (a, _, b, _), v in coeffs.items():
        psi[a, b] = v
    psi /= np.linalg.norm(psi)
    mat = np.array([[psi[a, (-a - c) % 8] for c in range(8)] for a in range(8)])
    s = np.linalg.svd(mat, compute_uv=False) ** 2
    s = s[s > 1e-300]
    return float(-(s * np.log(s)).sum())


def _z8_state(models, spaces, packet):
    coeffs = parse_coefficients(packaged_packet(packet), models["z8"])
    return coeffs, physical_state_from_coeffs(spaces["z8"], "C", "0", coeffs)


def test_gaussian_entropy_oracle(models, spaces):
    coeffs, psi = _z8_state(models, spaces, "gauss")
    sp = spaces["z8"]
    pb = build_perspective(sp, "B")
    _, ent = native_entanglement(pb, pb.reduce(psi))
    assert abs(ent - _oracle_entropy_b(coeffs)) <= 1e-12
    assert abs(ent - GAUSS_B_ENTROPY) <= 1e-12
    pc = build_perspective(sp, "C")
    _, ent_c = native_entanglement(pc, pc.reduce(psi))
    assert ent_c <= 1e-10


def test_character_state_stays_product(models, spaces):
    coeffs, psi = _z8_state(models, spaces, "character")
    ent = {}
    for k in "ABC":
        p = build_perspective(spaces["z8"], k)
        ent[k] = native_entanglement(p, p.reduce(psi))[1]
    assert ent["C"] <= 1e-10 and ent["B"] <= 1e-10
    assert _oracle_entropy_b(coeffs) <= 1e-10
    # from A the Gaussian factor on A is spread over B and C
    assert ent["A"] > 0.1


def test_product_state_schmidt(spaces, rng):
    sp = spaces["z8"]
    p = build_perspective(sp, "C")
    fa, fb = rng.normal(size=8), rng.normal(size=8) + 1j * rng.normal(size=8)
    vec = np.array([fa[a] * fb[b] for a, _, b, _ in p.reduced_basis_tags])
    schmidt, ent = native_entanglement(p, vec)
    assert ent <= 1e-10 and abs(schmidt[0] - 1) <= 1e-10


def test_no_native_split(spaces):
    sp = spaces["windowed"]
    with pytest.raises(NoNativeFactorizationError, match="transported"):
        native_split(build_perspective(sp, "B"))
    with pytest.raises(NoNativeFactorizationError):
        native_split(build_perspective(spaces["qutrit"], "C", "+"))


@pytest.mark.parametrize("dst", ["A", "B"])
def test_transport_preserves_entropy(spaces, rng, dst):
    sp = spaces["z8"]
    src = build_perspective(sp, "C")
    target = build_perspective(sp, dst)
    for _ in range(10):
        psi = random_physical_state(sp, rng)
        _, ent = native_entanglement(src, src.reduce(psi))
        res = transported_entanglement(sp, src, target, psi)
        assert abs(res.entropy - ent) <= 1e-10
        assert 0 <= res.entropy <= np.log(8) + 1e-9


def test_transport_from_windowed_c(spaces, rng):
    sp = spaces["windowed"]
    src = build_perspective(sp, "C")
    psi = random_physical_state(sp, rng)
    _, ent = native_entanglement(src, src.reduce(psi))
    for k in "AB":
        res = transported_entanglement(sp, src, build_perspective(sp, k), psi)
        assert abs(res.entropy - ent) <= 1e-10


def test_transport_overlap_error(rng):
    m = build_model(
        {
            "A": [(0, "x"), (1, "x"), (0, "y"), (1, "y")],
            "B": [(0, "0"), (1, "0")],
            "C": [(-2, "0"), (-1, "0"), (0, "0")],
        }
    )
    sp = build_physical_space(m)
    src, dst = build_perspective(sp, "C"), build_perspective(sp, "A", "x")
    psi = random_physical_state(sp, rng)
    with pytest.raises(OverlapError) as info:
        transported_entanglement(sp, src, dst, psi)
    assert info.value.leaked_norm > 0.1


def test_qutrit_has_no_transport(spaces, rng):
    sp = spaces["qutrit"]
    rep = compare_frames(sp, random_physical_state(sp, rng), "random")
    assert rep.transported == []
    assert any("unavailable" in n for n in rep.notes)
    assert all(not e["factorizable"] and e["entropy"] is None for e in rep.frames)


def test_compare_frames_invariants(spaces, rng):
    sp = spaces["z8"]
    rep = compare_frames(sp, random_physical_state(sp, rng), "random")
    assert rep.passed
    for e in rep.frames:
        assert (e["entropy"] is not None) == e["factorizable"]
        if e["entropy"] is not None:
            assert -1e-12 <= e["entropy"] <= np.log(min(e["shape"])) + 1e-9
    assert len(rep.transported) == 6


def test_reports_are_gauge_invariant(spaces, models):
    from qrf import frames

    sp = spaces["z8"]
    _, psi = _z8_state(models, spaces, "gauss")
    base = compare_frames(sp, psi, "g").to_dict()
    orig = frames.build_perspective

    def shifted(space, k, d_k=None, epsilon=None, m=0):
        return orig(space, k, d_k, epsilon=3, m=5)

    import qrf.analysis as an

    an.build_perspective = shifted
    try:
        other = compare_frames(sp, psi, "g").to_dict()
    finally:
        an.build_perspective = orig
    for a, b in zip(base["frames"], other["frames"]):
        assert abs(a["entropy"] - b["entropy"]) <= 1e-10
    for a, b in zip(base["transported"], other["transported"]):
        assert abs(a["entropy"] - b["entropy"]) <= 1e-10


@pytest.mark.parametrize("name", EXAMPLES)
def test_examples_pass(name):
    rep = run_example(name)
    assert rep.passed, [a.to_dict() for a in rep.failed()]
    d = rep.to_dict()
    assert {"model_id", "state_id", "frames", "transported", "assertions", "notes"} <= set(d)


def test_example_details():
    q = run_example("qutrit").to_dict()
    assert q["h_phys_eigenvalues"] == {"+": pytest.approx([-1, 0, 0], abs=1e-12), "-": pytest.approx([-1, 0, 0], abs=1e-12)}
    assert all(not q["factorizability"][k]["holds"] for k in "C")
    t = run_example("translation").to_dict()
    b = next(e for e in t["frames"] if e["frame"] == "B")
    assert b["entropy"] == pytest.approx(GAUSS_B_ENTROPY, abs=1e-12)
    w = run_example("windowed").to_dict()
    assert [w["factorizability"][k]["holds"] for k in "ABC"] == [False, False, True]
    assert w["factorizability"]["B"]["counterexample"] == 1


def test_unknown_example():
    with pytest.raises(ModelValidationError):
        run_example("nope")


def test_state_from_document_defaults(spaces):
    psi = state_from_document(spaces["qutrit"], {"coefficients": [{"ci": "-1/2", "di": "0", "cj": "1/2", "dj": "0", "re": 1}]})
    assert set(np.flatnonzero(psi.amplitudes)) <= set(spaces["qutrit"].sector_positions("C", "+"))
    with pytest.raises(ModelValidationError):
        state_from_document(spaces["qutrit"], {"frame": "D", "coefficients": []})


def test_check_relations():
    assert check("x", 1.0, "<=", 1.0).passed
    assert not check("x", 1.0, ">=", 2.0).passed
    assert check("x", 3, "==", 3.0).to_dict() == {"name": "x", "pass": True, "value": 3.0, "tolerance": 3.0, "relation": "=="}
    with pytest.raises(ValueError):
        check("x", 1, "<", 2)
