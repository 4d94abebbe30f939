"""Command-line front end.

    qrf check MODEL
    qrf reduce MODEL --frame K [--sector D] [--state FILE]
    qrf change-frame MODEL --state FILE --to K[:D] [--from K[:D]]
    qrf entangle MODEL --state FILE [--frame K]
    qrf relobs MODEL --frame K --op NAME [--op2 NAME]
    qrf example {qutrit,translation,windowed}

MODEL is a TOML path; if no such file exists, the file stem names a packaged
model (``qutrit``, ``windowed``, ``z8``). ``--state`` likewise falls back to the
packaged packets (``gauss``, ``character``). The JSON report goes to stdout,
or to ``--out`` with a plain-text summary on stdout.

Exit codes: 0 success, 1 ``--assert`` failure, 2 input error, 3 runtime
precondition error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis
from .errors import (
    ConstraintViolationError,
    DimensionError,
    ModelValidationError,
    NormalizationError,
    PreconditionError,
    QRFError,
)
from .frames import (
    build_perspective,
    change_frame,
    cyclic_momentum,
    cyclic_position,
    frame_change_matrix,
    orientation_group,
    pair_sum,
    reduce_schrodinger,
)
from .linalg import max_abs
from .model import LABELS, CompositeModel, load_model_file
from .physical import build_physical_space, projector_factorizes, random_physical_state
from .relobs import (
    commutator_witness_search,
    dirac_defect,
    homomorphism_defect,
    relational_observable,
)
from .spectra import check_factorizability

EXIT_OK, EXIT_ASSERT, EXIT_INPUT, EXIT_PRECONDITION = 0, 1, 2, 3
TOL_FLOOR = 1e-14
DEFAULT_TOL = 1e-10


class InputError(Exception):
    pass


# --- input resolution ---------------------------------------------------------


def resolve_model(arg: str | None) -> CompositeModel:
    if not arg:
        raise InputError("a model is required (positional or --model)")
    p = Path(arg)
    if p.is_file():
        return load_model_file(p)
    try:
        return analysis.packaged_model(p.stem)
    except ModelValidationError:
        raise InputError(f"model file {arg!r} not found (and no packaged model {p.stem!r})") from None


def resolve_state_doc(arg: str):
    p = Path(arg)
    if p.is_file():
        try:
            return json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"state file {arg!r} is not valid JSON: {exc}") from None
    try:
        return analysis.packaged_packet(p.stem)
    except ModelValidationError:
        raise InputError(f"state file {arg!r} not found (and no packaged state {p.stem!r})") from None


def parse_frame(spec: str | None, model: CompositeModel, default_sector: bool = True) -> tuple[str, str | None]:
    if spec is None:
        raise InputError("a frame is required")
    k, _, d = spec.partition(":")
    if k not in LABELS:
        raise InputError(f"frame must be one of A, B, C, got {k!r}")
    if d and d not in model.subsystem(k).sectors:
        raise InputError(f"subsystem {k} has no sector {d!r}")
    if not d:
        d = model.subsystem(k).sectors[0] if default_sector else None
    return k, d


def _unscaled(v: int, scale: int):
    f = Fraction(v, scale)
    return f.numerator if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def coefficient_records(persp, vec: np.ndarray, scale: int) -> list[dict]:
    return [
        {"ci": _unscaled(ci, scale), "di": di, "cj": _unscaled(cj, scale), "dj": dj, "re": float(z.real), "im": float(z.imag)}
        for (ci, di, cj, dj), z in zip(persp.reduced_basis_tags, vec)
    ]


def _state(space, args, rng):
    if args.state:
        doc = resolve_state_doc(args.state)
        sector = args.state_sector
        return analysis.state_from_document(space, doc, args.state_frame, sector), Path(args.state).stem
    return random_physical_state(space, rng), f"random(seed={args.seed})"


def _base(command: str, model: CompositeModel, args) -> dict:
    return {"command": command, "model_id": model.model_id, "seed": args.seed, "tolerance": args.tol}


# --- commands -------------------------------------------------------------------


def cmd_check(args) -> tuple[dict, list]:
    model = resolve_model(args.model_path)
    space = build_physical_space(model)
    out = _base("check", model, args)
    out.update(kin_dim=model.kin_dim, phys_dim=space.dim, scale=model.scale,
               orientation_group_size=model.orientation_group_size, state_id=None)
    frames, asserts = [], []
    for k in LABELS:
        rep = check_factorizability(model, k)
        oracle = all(projector_factorizes(model, k, d) for d in model.subsystem(k).sectors)
        entry = rep.to_dict()
        entry["projector_oracle"] = oracle
        entry["sectors"] = {d: len(space.sector_positions(k, d)) for d in model.subsystem(k).sectors}
        if space.dim:
            wit = commutator_witness_search(model, k, model.subsystem(k).sectors[0])
            entry["theorem2_witness"] = wit.to_dict()
        frames.append(entry)
        asserts.append(analysis.check(f"oracle_agrees[{k}]", float(rep.holds == oracle), "==", 1.0))
    out.update(frames=frames, transported=[])
    return out, asserts


def cmd_reduce(args) -> tuple[dict, list]:
    model = resolve_model(args.model_path)
    space = build_physical_space(model)
    rng = np.random.default_rng(args.seed)
    k, d = parse_frame(args.frame, model)
    psi, state_id = _state(space, args, rng)
    persp = build_perspective(space, k, d, args.epsilon, args.m)
    red = persp.reduce(psi)
    back = persp.embed(red)
    proj = space.sector_projector(k, d) @ psi.amplitudes
    alt_m = (args.m + 1) % model.orientation_group_size
    alt = build_perspective(space, k, d, args.epsilon, alt_m)
    schro = reduce_schrodinger(space, psi, k, d, args.m)
    out = _base("reduce", model, args)
    out.update(
        state_id=state_id,
        frames=[{
            "frame": k, "sector": d, "epsilon": persp.epsilon, "m": persp.m,
            "reduced_dim": persp.reduced_dim, "weight": float(np.linalg.norm(red) ** 2),
            "coefficients": coefficient_records(persp, red, model.scale),
        }],
        transported=[],
    )
    full = np.zeros(schro.size, dtype=np.complex128)
    i, j = model.others(k)
    dj = model.subsystem(j).dimension
    for n, (a, b) in enumerate(persp.pair_index):
        full[a * dj + b] = red[n]
    g = orientation_group(model).angle(args.m)
    schro_pred = np.exp(-1j * pair_sum(model, k) * g) * full
    asserts = [
        analysis.check("round_trip", np.linalg.norm(back - proj), "<=", args.tol),
        analysis.check(f"gauge_independence[m={args.m},{alt_m}]", max_abs(alt.reduce(psi) - red), "<=", args.tol),
        analysis.check("schrodinger_heisenberg", max_abs(schro - schro_pred), "<=", args.tol),
    ]
    return out, asserts


def cmd_change_frame(args) -> tuple[dict, list]:
    model = resolve_model(args.model_path)
    space = build_physical_space(model)
    if not args.state:
        raise InputError("change-frame needs --state")
    doc = resolve_state_doc(args.state)
    meta = doc if isinstance(doc, dict) else {}
    src_k, src_d = parse_frame(args.from_ or args.state_frame or meta.get("frame") or "C", model, default_sector=False)
    src_d = src_d or args.state_sector or meta.get("sector") or model.subsystem(src_k).sectors[0]
    dst_k, dst_d = parse_frame(args.to, model)
    psi = analysis.state_from_document(space, doc, src_k, src_d)
    src = build_perspective(space, src_k, src_d)
    dst = build_perspective(space, dst_k, dst_d)
    vec = src.reduce(psi)
    moved = change_frame(space, src, dst, vec)
    back = change_frame(space, dst, src, moved)
    out = _base("change-frame", model, args)
    out.update(
        state_id=Path(args.state).stem,
        frame=dst_k,
        sector=dst_d,
        coefficients=coefficient_records(dst, moved, model.scale),
        frames=[{"frame": src_k, "sector": src_d, "reduced_dim": src.reduced_dim},
                {"frame": dst_k, "sector": dst_d, "reduced_dim": dst.reduced_dim}],
        transported=[],
    )
    lam = frame_change_matrix(space, src, dst)
    out["frame_change_shape"] = list(lam.shape)
    asserts = [
        analysis.check("norm_preserved", abs(np.linalg.norm(moved) - np.linalg.norm(vec)), "<=", args.tol),
        analysis.check("round_trip", np.linalg.norm(back - vec), "<=", args.tol),
    ]
    return out, asserts


def cmd_entangle(args) -> tuple[dict, list]:
    model = resolve_model(args.model_path)
    space = build_physical_space(model)
    rng = np.random.default_rng(args.seed)
    psi, state_id = _state(space, args, rng)
    rep = analysis.compare_frames(space, psi, state_id)
    if args.frame:
        k, d = parse_frame(args.frame, model, default_sector=False)
        rep.frames = [e for e in rep.frames if e["frame"] == k and (d is None or e["sector"] == d)]
        rep.transported = [t for t in rep.transported if t["to"] == k or t["from"] == k]
        rep.assertions = [a for a in rep.assertions if f"[{k}" in a.name or f"{k}]" in a.name or f"->{k}" in a.name]
        if not rep.frames:
            raise PreconditionError(f"state has no weight in frame {args.frame}")
    out = _base("entangle", model, args)
    out.update(rep.to_dict())
    return out, [a for a in rep.assertions]


def named_operator(model: CompositeModel, name: str, rng) -> tuple[str, np.ndarray]:
    """Operator on a single subsystem from a short name, e.g. qA, pB, CC, xA, hA, 1A."""
    if len(name) != 2 or name[1] not in LABELS:
        raise InputError(f"operator names look like qA, pB, CC, xA, hA or 1A; got {name!r}")
    kind, target = name[0], name[1]
    sub = model.subsystem(target)
    d = sub.dimension
    if kind in "qp":
        if model.cyclic_modulus is None or d != model.cyclic_modulus:
            raise InputError(f"{name}: position/momentum operators need a cyclic model")
        return target, cyclic_position(d) if kind == "q" else cyclic_momentum(d)
    if kind == "C":
        return target, np.diag(sub.values).astype(np.complex128)
    if kind == "1":
        return target, np.eye(d, dtype=np.complex128)
    if kind == "x":
        # swaps neighbouring levels within each degeneracy sector
        m = np.zeros((d, d), dtype=np.complex128)
        for lab in sub.sectors:
            lv = sub.sector_levels(lab)
            for a, b in zip(lv[:-1], lv[1:]):
                m[a, b] = m[b, a] = 1.0
        return target, m
    if kind == "h":
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        return target, (a + a.conj().T) / 2
    raise InputError(f"unknown operator kind {kind!r} in {name!r}")


def _pair_operator(model: CompositeModel, k: str, target: str, m: np.ndarray) -> np.ndarray:
    i, j = model.others(k)
    if target == k:
        raise InputError(f"operator acts on the frame {k} itself; pick one on {i} or {j}")
    di, dj = model.subsystem(i).dimension, model.subsystem(j).dimension
    return np.kron(m, np.eye(dj)) if target == i else np.kron(np.eye(di), m)


def cmd_relobs(args) -> tuple[dict, list]:
    model = resolve_model(args.model_path)
    space = build_physical_space(model)
    rng = np.random.default_rng(args.seed)
    k, d = parse_frame(args.frame, model)
    i, j = model.others(k)
    t1, m1 = named_operator(model, args.op, rng)
    f = _pair_operator(model, k, t1, m1)
    op2 = args.op2 or f"h{j if t1 == i else i}"
    t2, m2 = named_operator(model, op2, rng)
    h = _pair_operator(model, k, t2, m2)
    obs = relational_observable(space, k, d, f, source=args.op)
    hom = homomorphism_defect(space, k, d, f, h)
    wit = commutator_witness_search(model, k, d)
    out = _base("relobs", model, args)
    out.update(
        state_id=None,
        frames=[{
            "frame": k, "sector": d, "op": args.op, "op2": op2, "sign": obs.sign,
            "dirac_defect": dirac_defect(space, obs), "homomorphism_defect": hom,
            "theorem2_witness": wit.to_dict(),
            "factorizable": check_factorizability(model, k).holds,
        }],
        transported=[],
    )
    asserts = [
        analysis.check("dirac_defect", dirac_defect(space, obs), "<=", args.tol),
        analysis.check("homomorphism_defect", hom, "<=", args.tol),
    ]
    return out, asserts


def cmd_example(args) -> tuple[dict, list]:
    rep = analysis.run_example(args.name, seed=args.seed)
    out = {"command": "example", "seed": args.seed, "tolerance": args.tol, "example": args.name}
    out.update(rep.to_dict())
    return out, list(rep.assertions)


# --- driver -----------------------------------------------------------------------


def _tolerance(raw: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid tolerance {raw!r}") from None
    if not np.isfinite(v) or v < TOL_FLOOR:
        raise argparse.ArgumentTypeError(f"tolerance must be at least {TOL_FLOOR:g}, got {raw}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--assert", dest="assert_", action="store_true", help="exit 1 if any check fails")
    common.add_argument("--out", help="write the JSON report here and print a summary")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=_tolerance, default=DEFAULT_TOL)

    with_model = argparse.ArgumentParser(add_help=False, parents=[common])
    with_model.add_argument("model", nargs="?", help="model TOML path or packaged model name")
    with_model.add_argument("--model", dest="model_opt")
    with_model.add_argument("--state", help="coefficient JSON path or packaged packet name")
    with_model.add_argument("--state-frame", choices=LABELS, help="frame the state coefficients refer to")
    with_model.add_argument("--state-sector")

    p = argparse.ArgumentParser(prog="qrf", description="Quantum reference frame analysis for finite models.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", parents=[with_model], help="factorizability of every frame")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("reduce", parents=[with_model], help="reduce a state to a frame perspective")
    s.add_argument("--frame", required=True, help="K or K:SECTOR")
    s.add_argument("--sector")
    s.add_argument("--m", type=int, default=0, help="orientation group element")
    s.add_argument("--epsilon", type=int, default=None, help="disentangler label (scaled units)")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("change-frame", parents=[with_model], help="map a reduced state between frames")
    s.add_argument("--from", dest="from_", help="K or K:SECTOR (default: the state's frame)")
    s.add_argument("--to", required=True, help="K or K:SECTOR")
    s.set_defaults(func=cmd_change_frame)

    s = sub.add_parser("entangle", parents=[with_model], help="frame-dependent entanglement report")
    s.add_argument("--frame", help="restrict the report to K or K:SECTOR")
    s.set_defaults(func=cmd_entangle)

    s = sub.add_parser("relobs", parents=[with_model], help="relational observable checks")
    s.add_argument("--frame", required=True, help="K or K:SECTOR")
    s.add_argument("--sector")
    s.add_argument("--op", required=True, help="qX, pX (cyclic), CX, xX, hX (seeded random) or 1X")
    s.add_argument("--op2", help="second operator for the homomorphism check (default: random on the other party)")
    s.set_defaults(func=cmd_relobs)

    s = sub.add_parser("example", parents=[common], help="run a packaged worked example")
    s.add_argument("name")
    s.set_defaults(func=cmd_example)
    return p


def render_summary(report: dict, asserts: list) -> str:
    lines = [f"{report['command']}: model={report.get('model_id')} state={report.get('state_id')} seed={report['seed']}"]
    for fr in report.get("frames", []):
        bits = [f"{key}={fr[key]}" for key in ("frame", "sector", "holds", "reduced_dim", "entropy", "dirac_defect") if key in fr]
        lines.append("  frame " + " ".join(bits))
    for tr in report.get("transported", []):
        lines.append(f"  transported {tr['from']}->{tr['to']} entropy={tr['entropy']:.12g}")
    for a in asserts:
        lines.append(f"  [{'PASS' if a.passed else 'FAIL'}] {a.name}: {a.value:.6g} {a.relation} {a.tolerance:g}")
    return "\n".join(lines)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if hasattr(args, "model"):
        args.model_path = args.model_opt or args.model
        if getattr(args, "sector", None) and getattr(args, "frame", None) and ":" not in args.frame:
            args.frame = f"{args.frame}:{args.sector}"
    try:
        report, asserts = args.func(args)
    except (InputError, ModelValidationError, ConstraintViolationError, DimensionError, NormalizationError) as exc:
        print(f"qrf: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PreconditionError as exc:
        print(f"qrf: precondition error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except QRFError as exc:
        print(f"qrf: error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    report["assertions"] = [a.to_dict() for a in asserts]
    text = json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(render_summary(report, asserts))
    else:
        sys.stdout.write(text)
    failed = [a for a in asserts if not a.passed]
    if args.assert_ and failed:
        for a in failed:
            print(f"qrf: assertion failed: {a.name} ({a.value:.6g} {a.relation} {a.tolerance:g})", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
