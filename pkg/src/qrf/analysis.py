"""Frame-dependent entanglement reports and the packaged worked examples.

The single entanglement measure reported is the von Neumann entropy (in
nats) of the reduced state across a bipartition of the reduced space:
either the native i|j split a frame inherits from the kinematical tensor
product, or the image of another frame's native split under the frame-change
map.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import ModelValidationError, NoNativeFactorizationError, NormalizationError, OverlapError
from .frames import (
    FramePerspective,
    LEAK_TOL,
    build_perspective,
    cyclic_position,
    cyclic_reflection,
    dft_matrix,
    reduced_local_operator,
    sector_leak,
    transport_operator,
)
from .linalg import BipartitionShape, entropy_from_schmidt, herm_eig, max_abs, schmidt_coefficients
from .model import LABELS, CompositeModel, load_model
from .physical import (
    PhysicalSpace,
    PhysicalState,
    build_physical_space,
    parse_coefficients,
    physical_state_from_coeffs,
    projector_factorizes,
)
from .relobs import commutator_witness_search, theorem1_witness, theorem2_commutator_norm
from .spectra import check_factorizability

EXAMPLES = ("qutrit", "translation", "windowed")
ENTROPY_SLACK = 1e-9


# --- packaged data -----------------------------------------------------------


def packaged_model_text(name: str) -> str:
    res = resources.files("qrf") / "data" / "models" / f"{name}.toml"
    if not res.is_file():
        raise ModelValidationError(f"no packaged model named {name!r}")
    return res.read_text(encoding="utf-8")


def packaged_model(name: str) -> CompositeModel:
    return load_model(packaged_model_text(name), model_id=name)


def packaged_packet(name: str) -> dict:
    res = resources.files("qrf") / "data" / "packets" / f"{name}.json"
    if not res.is_file():
        raise ModelValidationError(f"no packaged state named {name!r}")
    return json.loads(res.read_text(encoding="utf-8"))


def state_from_document(space: PhysicalSpace, doc, frame: str | None = None, sector: str | None = None) -> PhysicalState:
    """Physical state from a coefficient JSON document.

    The frame and sector come from the arguments, else from ``"frame"`` /
    ``"sector"`` keys of the document, else frame C and its first sector.
    """
    model = space.model
    meta = doc if isinstance(doc, dict) else {}
    k = frame or meta.get("frame") or "C"
    if k not in LABELS:
        raise ModelValidationError(f"state frame must be one of A, B, C, got {k!r}")
    d = sector or meta.get("sector") or model.subsystem(k).sectors[0]
    return physical_state_from_coeffs(space, k, str(d), parse_coefficients(doc, model))


# --- entanglement ---------------------------------------------------------


@dataclass(frozen=True)
class NativeSplit:
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    position: dict

    @property
    def shape(self) -> BipartitionShape:
        return BipartitionShape(len(self.rows), len(self.cols))


def native_split(persp: FramePerspective) -> NativeSplit:
    """Row/column level indices of the inherited i|j split of a reduced space."""
    rep = check_factorizability(persp.model, persp.frame)
    if not rep.holds:
        raise NoNativeFactorizationError(
            f"frame {persp.frame} does not inherit the {''.join(persp.pair_labels)} tensor split "
            f"(counterexample value {rep.counterexample}); use transported_entanglement"
        )
    rows = tuple(sorted({a for a, _ in persp.pair_index}))
    cols = tuple(sorted({b for _, b in persp.pair_index}))
    if len(rows) * len(cols) != persp.reduced_dim:
        raise NoNativeFactorizationError(f"reduced basis of frame {persp.frame} is not a product set")
    ri = {a: n for n, a in enumerate(rows)}
    ci = {b: n for n, b in enumerate(cols)}
    position = {(a, b): (ri[a], ci[b]) for a, b in persp.pair_index}
    return NativeSplit(rows, cols, position)


def _normalized(vec: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(vec)
    if n == 0:
        raise NormalizationError("reduced state is zero; the physical state has no weight in this sector")
    return vec / n


def native_entanglement(persp: FramePerspective, psi_reduced) -> tuple[np.ndarray, float]:
    """Schmidt coefficients and entropy across the frame's native i|j split."""
    split = native_split(persp)
    vec = _normalized(np.asarray(psi_reduced, dtype=np.complex128).reshape(-1))
    mat = np.zeros((len(split.rows), len(split.cols)), dtype=np.complex128)
    for n, pair in enumerate(persp.pair_index):
        mat[split.position[pair]] = vec[n]
    schmidt = schmidt_coefficients(mat.reshape(-1), split.shape)
    return schmidt, entropy_from_schmidt(schmidt)


@dataclass(frozen=True)
class TransportResult:
    entropy: float
    schmidt: np.ndarray
    shape: BipartitionShape


def transported_entanglement(
    space: PhysicalSpace, src: FramePerspective, dst: FramePerspective, psi_phys
) -> TransportResult:
    """Entropy of ``dst``'s reduced state across the image of ``src``'s native split.

    The target split is spanned by ``v_ab = Lambda e_ab`` for the product
    basis ``e_ab`` of the source frame; the target state is reduced directly
    from the physical state.
    """
    amp = psi_phys.amplitudes if isinstance(psi_phys, PhysicalState) else np.asarray(psi_phys, dtype=np.complex128)
    split = native_split(src)
    phys = src.embed_matrix @ (src.reduce_matrix @ amp)
    norm = float(np.linalg.norm(phys))
    if norm == 0:
        raise NormalizationError(f"state has no weight in sector {src.sector!r} of frame {src.frame}")
    leak = sector_leak(space, phys, dst.frame, dst.sector)
    if leak > LEAK_TOL * max(1.0, norm):
        raise OverlapError(
            f"sector {src.sector!r} of {src.frame} leaks norm {leak:.3e} outside sector {dst.sector!r} of {dst.frame}",
            leaked_norm=leak,
        )
    lam = dst.reduce_matrix @ src.embed_matrix
    target = _normalized(dst.reduce_matrix @ phys)
    mat = np.zeros((len(split.rows), len(split.cols)), dtype=np.complex128)
    for n, pair in enumerate(src.pair_index):
        mat[split.position[pair]] = np.vdot(lam[:, n], target)
    schmidt = schmidt_coefficients(mat.reshape(-1), split.shape)
    return TransportResult(entropy_from_schmidt(schmidt), schmidt, split.shape)


# --- reports ----------------------------------------------------------------


@dataclass
class Assertion:
    name: str
    passed: bool
    value: float
    tolerance: float
    relation: str

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": bool(self.passed),
            "value": float(self.value),
            "tolerance": float(self.tolerance),
            "relation": self.relation,
        }


def check(name: str, value: float, relation: str, tolerance: float) -> Assertion:
    """Assertion ``value <relation> tolerance`` with relation in ``<=``, ``>=``, ``==``."""
    value = float(value)
    if relation == "<=":
        ok = value <= tolerance
    elif relation == ">=":
        ok = value >= tolerance
    elif relation == "==":
        ok = value == tolerance
    else:
        raise ValueError(relation)
    return Assertion(name, ok, value, tolerance, relation)


@dataclass
class FrameComparisonReport:
    model_id: str
    state_id: str
    frames: list = field(default_factory=list)
    transported: list = field(default_factory=list)
    assertions: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def failed(self) -> list:
        return [a for a in self.assertions if not a.passed]

    def to_dict(self) -> dict:
        out = {
            "model_id": self.model_id,
            "state_id": self.state_id,
            "frames": self.frames,
            "transported": self.transported,
            "assertions": [a.to_dict() for a in self.assertions],
            "notes": self.notes,
        }
        out.update(self.extra)
        return out


def _floats(xs) -> list[float]:
    return [float(x) for x in xs]


def compare_frames(space: PhysicalSpace, psi: PhysicalState, state_id: str) -> FrameComparisonReport:
    """Native entropies in every frame/sector the state occupies, plus all transports."""
    model = space.model
    report = FrameComparisonReport(model.model_id, state_id)
    persps = []
    for k in LABELS:
        for d in model.subsystem(k).sectors:
            persp = build_perspective(space, k, d)
            red = persp.reduce(psi)
            weight = float(np.linalg.norm(red) ** 2)
            if weight <= 1e-12:
                continue
            entry = {"frame": k, "sector": d, "weight": weight, "reduced_dim": persp.reduced_dim}
            try:
                schmidt, ent = native_entanglement(persp, red)
                shape = native_split(persp).shape
                entry.update(
                    factorizable=True,
                    shape=[shape.dim_left, shape.dim_right],
                    entropy=ent,
                    schmidt=_floats(schmidt),
                )
                report.assertions.append(
                    check(f"entropy_bound[{k},{d}]", ent - np.log(min(shape.dim_left, shape.dim_right)), "<=", ENTROPY_SLACK)
                )
                persps.append((persp, ent))
            except NoNativeFactorizationError:
                entry.update(factorizable=False, shape=None, entropy=None, schmidt=[])
            report.frames.append(entry)
    for src, src_ent in persps:
        for k in LABELS:
            if k == src.frame:
                continue
            for d in model.subsystem(k).sectors:
                dst = build_perspective(space, k, d)
                if np.linalg.norm(dst.reduce(psi)) ** 2 <= 1e-12:
                    continue
                try:
                    res = transported_entanglement(space, src, dst, psi)
                except OverlapError as exc:
                    report.notes.append(f"transport {src.frame}->{k} skipped: {exc}")
                    continue
                report.transported.append(
                    {
                        "from": src.frame,
                        "from_sector": src.sector,
                        "to": k,
                        "to_sector": d,
                        "shape": [res.shape.dim_left, res.shape.dim_right],
                        "entropy": res.entropy,
                        "source_entropy": src_ent,
                        "schmidt": _floats(res.schmidt),
                    }
                )
                report.assertions.append(
                    check(f"transport_invariance[{src.frame}->{k}]", abs(res.entropy - src_ent), "<=", 1e-10)
                )
    if not persps:
        report.notes.append("no frame inherits a native tensor split; transported analysis unavailable")
    return report


# --- worked examples ----------------------------------------------------------


def z8_operator_transport(space: PhysicalSpace) -> dict[str, float]:
    """Max deviation of the A->B transported canonical operators from their predicted images.

    In A's view q_B, p_B, q_C act on H_B (x) H_C; in B's view the images
    must be -q_A, -(p_A + p_C) and q_C - q_A (all mod N) on H_A (x) H_C.
    """
    n = space.model.cyclic_modulus
    if n is None:
        raise ModelValidationError("operator transport needs a cyclic model")
    src = build_perspective(space, "A")
    dst = build_perspective(space, "B")
    q = cyclic_position(n)
    refl = cyclic_reflection(n)
    p = np.diag(np.arange(n).astype(np.complex128))

    got_q = transport_operator(space, src, dst, reduced_local_operator(src, "B", q))
    want_q = reduced_local_operator(dst, "A", refl @ q @ refl)
    got_p = transport_operator(space, src, dst, reduced_local_operator(src, "B", p))
    want_p = np.diag([complex((-ca - cc) % n) for ca, _, cc, _ in dst.reduced_basis_tags])

    got_qc = transport_operator(space, src, dst, reduced_local_operator(src, "C", q))
    f2 = np.kron(dft_matrix(n), dft_matrix(n))
    xs = np.arange(n)
    diff = np.mod(xs[None, :] - xs[:, None], n).reshape(-1).astype(np.complex128)  # (x_C - x_A), A slow
    want_qc_full = f2 @ np.diag(diff) @ f2.conj().T
    kept = [a * n + b for a, b in dst.pair_index]
    want_qc = want_qc_full[np.ix_(kept, kept)]
    return {
        "q_B": max_abs(got_q - want_q),
        "p_B": max_abs(got_p - want_p),
        "q_C": max_abs(got_qc - want_qc),
    }


def _random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def _factorizability_block(report: FrameComparisonReport, model: CompositeModel) -> dict:
    out = {}
    for k in LABELS:
        rep = check_factorizability(model, k)
        oracle = all(projector_factorizes(model, k, d) for d in model.subsystem(k).sectors)
        out[k] = dict(rep.to_dict(), projector_oracle=oracle)
        report.assertions.append(check(f"oracle_agrees[{k}]", float(rep.holds == oracle), "==", 1.0))
    return out


def _entropy_of(report: FrameComparisonReport, frame: str) -> float:
    return next(e["entropy"] for e in report.frames if e["frame"] == frame and e["factorizable"])


def _example_qutrit(seed: int) -> FrameComparisonReport:
    model = packaged_model("qutrit")
    space = build_physical_space(model)
    keys = {(-1, "0", 1, "0"): 1.0, (1, "0", -1, "0"): 1.0, (-1, "0", -1, "0"): 1.0}
    psi = physical_state_from_coeffs(space, "C", "+", keys)
    report = compare_frames(space, psi, "uniform-C+")
    report.extra["factorizability"] = _factorizability_block(report, model)
    ca = np.diag(model.subsystem("A").values).astype(np.complex128)
    cb = np.diag(model.subsystem("B").values).astype(np.complex128)
    h_kin = np.kron(np.kron(ca, np.eye(2)), np.eye(4)) + np.kron(np.kron(np.eye(2), cb), np.eye(4))
    h_phys = space.embedding.conj().T @ h_kin @ space.embedding
    spectra = {}
    for d in model.subsystem("C").sectors:
        pos = list(space.sector_positions("C", d))
        report.assertions.append(check(f"sector_dim[C,{d}]", len(pos), "==", 3))
        w, _ = herm_eig(h_phys[np.ix_(pos, pos)])
        w = w / model.scale
        spectra[d] = _floats(w)
        report.assertions.append(
            check(f"h_phys_eigenvalues[C,{d}]", np.max(np.abs(w - np.array([-1.0, 0.0, 0.0]))), "<=", 1e-12)
        )
    report.extra["h_phys_eigenvalues"] = spectra
    report.assertions.append(check("factorizable[C]", float(check_factorizability(model, "C").holds), "==", 0.0))
    mix = np.zeros((4, 4), dtype=np.complex128)
    for a, b in ((0, 1), (2, 3)):
        mix[a, b] = mix[b, a] = 1.0
    t1 = theorem1_witness(space, mix)
    report.extra["theorem1"] = t1.to_dict()
    report.assertions.append(check("theorem1_success", float(t1.success), "==", 1.0))
    return report


GAUSS_B_ENTROPY_MIN = 0.1


def _example_translation(seed: int) -> FrameComparisonReport:
    model = packaged_model("z8")
    space = build_physical_space(model)
    gauss = state_from_document(space, packaged_packet("gauss"))
    report = compare_frames(space, gauss, "gauss")
    ent = {(e["frame"], e["sector"]): e["entropy"] for e in report.frames}
    report.assertions.append(check("gauss_entropy[C]", ent[("C", "0")], "<=", 1e-10))
    report.assertions.append(check("gauss_entropy[B]", ent[("B", "0")], ">=", GAUSS_B_ENTROPY_MIN))
    report.assertions.append(check("gauss_frame_gap[B-C]", ent[("B", "0")] - ent[("C", "0")], ">=", 0.05))
    char = state_from_document(space, packaged_packet("character"))
    char_rep = compare_frames(space, char, "character")
    cent = {(e["frame"], e["sector"]): e["entropy"] for e in char_rep.frames}
    report.assertions.append(check("character_entropy[C]", cent[("C", "0")], "<=", 1e-10))
    report.assertions.append(check("character_entropy[B]", cent[("B", "0")], "<=", 1e-10))
    report.extra["character"] = {"frames": char_rep.frames, "transported": char_rep.transported}
    report.assertions.extend(a for a in char_rep.assertions if a.name.startswith("transport"))
    errs = z8_operator_transport(space)
    report.extra["operator_transport"] = errs
    for key in ("q_B", "p_B"):
        report.assertions.append(check(f"operator_transport[{key}]", errs[key], "<=", 1e-9))
    t1 = theorem1_witness(space, cyclic_position(8))
    report.extra["theorem1"] = t1.to_dict()
    report.assertions.append(check("theorem1_success", float(t1.success), "==", 1.0))
    return report


def _example_windowed(seed: int) -> FrameComparisonReport:
    model = packaged_model("windowed")
    space = build_physical_space(model)
    # product state alpha(c_A) beta(c_B) on the full conditional spectra of frame C
    keys = {(a, "0", b, "0"): (1.0 + a) * complex(1.0, 0.5 * b) for a in range(4) for b in range(4)}
    psi = physical_state_from_coeffs(space, "C", "0", keys)
    report = compare_frames(space, psi, "product-C")
    fac = _factorizability_block(report, model)
    report.extra["factorizability"] = fac
    report.assertions.append(check("product_entropy[C]", _entropy_of(report, "C"), "<=", 1e-10))
    report.assertions.append(check("factorizable[C]", float(fac["C"]["holds"]), "==", 1.0))
    report.assertions.append(check("factorizable[B]", float(fac["B"]["holds"]), "==", 0.0))
    wit_b = commutator_witness_search(model, "B", "0")
    rng = np.random.default_rng(seed)
    worst_c = 0.0
    for _ in range(50):
        mi = _random_hermitian(rng, 4)
        mj = _random_hermitian(rng, 4)
        worst_c = max(worst_c, theorem2_commutator_norm(model, "C", "0", mi, mj))
    report.extra["theorem2"] = {"witness_B": wit_b.to_dict(), "random_pairs_C_max": worst_c}
    report.assertions.append(check("theorem2_witness[B]", wit_b.norm, ">=", 1e-2))
    report.assertions.append(check("theorem2_random_max[C]", worst_c, "<=", 1e-12))
    return report


def run_example(name: str, seed: int = 0) -> FrameComparisonReport:
    """Run one packaged example and attach its assertions."""
    runners = {"qutrit": _example_qutrit, "translation": _example_translation, "windowed": _example_windowed}
    if name not in runners:
        raise ModelValidationError(f"unknown example {name!r}; choose one of {', '.join(EXAMPLES)}")
    return runners[name](seed)
