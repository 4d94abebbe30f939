"""Three-subsystem constrained models: loading, validation and kinematical operators.

Model file schema (TOML, strict: unknown keys are rejected)::

    scale_hint = 2                  # optional integer
    cyclic_modulus = 8              # optional integer
    orientation_group_size = 9      # optional integer

    [[subsystem]]                   # exactly three, named A, B, C
    name = "A"
    levels = [ { value = "-1/2", label = "0" }, { value = "1/2", label = "0" } ]

Values are integers or exact fractions given as strings. They are rescaled by
their least common denominator (or by ``scale_hint``) so that every
eigenvalue stored in a :class:`CompositeModel` is an integer.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import NamedTuple

import numpy as np
import tomli
import tomli_w

from .errors import DimensionError, ModelValidationError
from .linalg import LabeledOperator, as_matrix, check_size
from .spectra import SpectrumSet

LABELS = ("A", "B", "C")
_TOP_KEYS = {"scale_hint", "cyclic_modulus", "orientation_group_size", "subsystem"}
_SUB_KEYS = {"name", "levels"}
_LEVEL_KEYS = {"value", "label"}


@dataclass(frozen=True)
class Level:
    value: int
    label: str


@dataclass(frozen=True)
class SubsystemSpec:
    """One subsystem: its constraint eigenbasis in file order."""

    name: str
    levels: tuple[Level, ...]
    modulus: int | None = None

    def __post_init__(self):
        if self.name not in LABELS:
            raise ModelValidationError(f"subsystem name must be one of {LABELS}, got {self.name!r}")
        if not self.levels:
            raise ModelValidationError(f"subsystem {self.name} has no levels")
        seen = set()
        for lev in self.levels:
            key = (lev.value, lev.label)
            if key in seen:
                raise ModelValidationError(
                    f"subsystem {self.name}: duplicate level (value={lev.value}, label={lev.label!r})"
                )
            seen.add(key)

    @property
    def dimension(self) -> int:
        return len(self.levels)

    @property
    def values(self) -> np.ndarray:
        return np.array([lev.value for lev in self.levels], dtype=np.int64)

    @property
    def spectrum(self) -> SpectrumSet:
        return SpectrumSet.from_levels(((lev.value, lev.label) for lev in self.levels), self.modulus)

    @property
    def sectors(self) -> tuple[str, ...]:
        """Degeneracy labels in order of first appearance."""
        return tuple(dict.fromkeys(lev.label for lev in self.levels))

    def sector_levels(self, label: str) -> tuple[int, ...]:
        return tuple(n for n, lev in enumerate(self.levels) if lev.label == label)


class KinIndex(NamedTuple):
    a: int
    b: int
    c: int


@dataclass(frozen=True)
class CompositeModel:
    """Subsystems A, B, C with integer constraint spectra and an orientation group size."""

    subsystems: tuple[SubsystemSpec, SubsystemSpec, SubsystemSpec]
    scale: int = 1
    cyclic_modulus: int | None = None
    orientation_group_size: int = 1
    model_id: str = field(default="model", compare=False)

    def subsystem(self, label: str) -> SubsystemSpec:
        try:
            return self.subsystems[LABELS.index(label)]
        except ValueError:
            raise ModelValidationError(f"unknown subsystem label {label!r}") from None

    def others(self, k: str) -> tuple[str, str]:
        if k not in LABELS:
            raise ModelValidationError(f"unknown subsystem label {k!r}")
        i, j = (x for x in LABELS if x != k)
        return i, j

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(s.dimension for s in self.subsystems)

    @property
    def kin_dim(self) -> int:
        return math.prod(self.dims)

    def flat_index(self, idx: KinIndex) -> int:
        _, db, dc = self.dims
        return (idx.a * db + idx.b) * dc + idx.c

    def kin_index(self, flat: int) -> KinIndex:
        _, db, dc = self.dims
        a, rest = divmod(flat, db * dc)
        b, c = divmod(rest, dc)
        return KinIndex(a, b, c)

    def unscaled(self, value: int) -> Fraction:
        return Fraction(value, self.scale)


def _parse_value(raw, where: str) -> Fraction:
    if isinstance(raw, bool):
        raise ModelValidationError(f"{where}: value must be an integer or fraction string")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        try:
            return Fraction(raw.strip())
        except (ValueError, ZeroDivisionError):
            raise ModelValidationError(f"{where}: cannot parse value {raw!r}") from None
    raise ModelValidationError(f"{where}: value must be an integer or fraction string, got {type(raw).__name__}")


def _positive_int(doc: dict, key: str) -> int | None:
    if key not in doc:
        return None
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ModelValidationError(f"{key} must be a positive integer, got {v!r}")
    return v


def group_size_bounds(subsystems, modulus: int | None) -> tuple[int, int]:
    """(minimal admissible N_g, default N_g) for non-cyclic models.

    N_g must exceed every eigenvalue difference within one subsystem and
    within each pair-sum spectrum, and every |total eigenvalue|, so that
    discrete Fourier sums are exact deltas on everything the model produces.
    """
    vals = [sorted(set(s.values.tolist())) for s in subsystems]
    spread = max(v[-1] - v[0] for v in vals)
    mag = max(max(abs(v[0]), abs(v[-1])) for v in vals)
    for x, y in combinations(vals, 2):
        sums = sorted({p + q for p in x for q in y})
        spread = max(spread, sums[-1] - sums[0])
        mag = max(mag, abs(sums[0]), abs(sums[-1]))
    tot_lo = sum(v[0] for v in vals)
    tot_hi = sum(v[-1] for v in vals)
    total = max(abs(tot_lo), abs(tot_hi))
    mag = max(mag, total)
    return 1 + max(spread, total), 2 * mag + 1


def build_model(
    levels: dict[str, list[tuple[Fraction | int, str]]],
    *,
    scale_hint: int | None = None,
    cyclic_modulus: int | None = None,
    orientation_group_size: int | None = None,
    model_id: str = "model",
) -> CompositeModel:
    """Validate raw levels (possibly fractional) and build a model."""
    missing = [x for x in LABELS if x not in levels]
    if missing:
        raise ModelValidationError(f"missing subsystem(s): {', '.join(missing)}")
    extra = [x for x in levels if x not in LABELS]
    if extra:
        raise ModelValidationError(f"unknown subsystem(s): {', '.join(map(str, extra))}")
    fracs = [Fraction(v) for name in LABELS for v, _ in levels[name]]
    lcd = math.lcm(*(f.denominator for f in fracs)) if fracs else 1
    if scale_hint is not None:
        if scale_hint % lcd:
            raise ModelValidationError(
                f"scale_hint={scale_hint} does not clear the denominators (needs a multiple of {lcd})"
            )
        scale = scale_hint
    else:
        scale = lcd
    subs = []
    for name in LABELS:
        lv = []
        for v, label in levels[name]:
            if not isinstance(label, str) or not label:
                raise ModelValidationError(f"subsystem {name}: labels must be nonempty strings")
            iv = Fraction(v) * scale
            lv.append(Level(int(iv), label))
        subs.append(SubsystemSpec(name, tuple(lv), cyclic_modulus))
    _check_degeneracy(subs)
    if cyclic_modulus is not None:
        for s in subs:
            bad = [lev.value for lev in s.levels if not 0 <= lev.value < cyclic_modulus]
            if bad:
                raise ModelValidationError(
                    f"subsystem {s.name}: cyclic values must lie in 0..{cyclic_modulus - 1}, got {bad}"
                )
        if orientation_group_size is not None and orientation_group_size != cyclic_modulus:
            raise ModelValidationError(
                f"cyclic models need orientation_group_size == cyclic_modulus ({cyclic_modulus}), "
                f"got {orientation_group_size}"
            )
        ng = cyclic_modulus
    else:
        minimal, default = group_size_bounds(subs, None)
        if orientation_group_size is None:
            ng = default
        elif orientation_group_size < minimal:
            raise ModelValidationError(
                f"orientation_group_size={orientation_group_size} is too small; "
                f"the minimal admissible value is {minimal}"
            )
        else:
            ng = orientation_group_size
    model = CompositeModel(tuple(subs), scale, cyclic_modulus, ng, model_id)
    check_size(model.kin_dim, 1)
    return model


def _check_degeneracy(subs) -> None:
    # Every degeneracy label of a subsystem must carry the same eigenvalues;
    # this keeps the physical projector independent of the frame sector.
    for s in subs:
        sets = {lab: frozenset(lev.value for lev in s.levels if lev.label == lab) for lab in s.sectors}
        if len(set(sets.values())) > 1:
            detail = "; ".join(f"{lab!r}: {sorted(v)}" for lab, v in sets.items())
            raise ModelValidationError(
                f"subsystem {s.name}: degeneracy must not depend on the eigenvalue "
                f"(each label needs the same value set, got {detail})"
            )


def load_model(text: str, model_id: str = "model") -> CompositeModel:
    """Parse and validate a TOML model description."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ModelValidationError(f"malformed TOML: {exc}") from None
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ModelValidationError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    subs = doc.get("subsystem")
    if not isinstance(subs, list):
        raise ModelValidationError("expected [[subsystem]] tables for A, B and C")
    levels: dict[str, list] = {}
    for n, sub in enumerate(subs):
        if not isinstance(sub, dict):
            raise ModelValidationError(f"subsystem #{n} is not a table")
        bad = set(sub) - _SUB_KEYS
        if bad:
            raise ModelValidationError(f"subsystem #{n}: unknown key(s): {', '.join(sorted(bad))}")
        name = sub.get("name")
        if name not in LABELS:
            raise ModelValidationError(f"subsystem #{n}: name must be one of A, B, C, got {name!r}")
        if name in levels:
            raise ModelValidationError(f"subsystem {name} declared twice")
        raw_levels = sub.get("levels")
        if not isinstance(raw_levels, list) or not raw_levels:
            raise ModelValidationError(f"subsystem {name}: levels must be a nonempty array")
        parsed = []
        for m, lev in enumerate(raw_levels):
            where = f"subsystem {name} level #{m}"
            if not isinstance(lev, dict):
                raise ModelValidationError(f"{where}: expected an inline table")
            bad = set(lev) - _LEVEL_KEYS
            if bad:
                raise ModelValidationError(f"{where}: unknown key(s): {', '.join(sorted(bad))}")
            if "value" not in lev or "label" not in lev:
                raise ModelValidationError(f"{where}: needs both value and label")
            parsed.append((_parse_value(lev["value"], where), lev["label"]))
        levels[name] = parsed
    return build_model(
        levels,
        scale_hint=_positive_int(doc, "scale_hint"),
        cyclic_modulus=_positive_int(doc, "cyclic_modulus"),
        orientation_group_size=_positive_int(doc, "orientation_group_size"),
        model_id=model_id,
    )


def load_model_file(path: str | os.PathLike) -> CompositeModel:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelValidationError(f"cannot read model file {str(p)!r}: {exc.strerror}") from None
    return load_model(text, model_id=p.stem)


def _frac_str(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def dump_model(model: CompositeModel) -> str:
    """Serialize to the TOML schema; ``load_model(dump_model(m)) == m``."""
    doc: dict = {"scale_hint": model.scale}
    if model.cyclic_modulus is not None:
        doc["cyclic_modulus"] = model.cyclic_modulus
    doc["orientation_group_size"] = model.orientation_group_size
    doc["subsystem"] = [
        {
            "name": s.name,
            "levels": [{"value": _frac_str(Fraction(lev.value, model.scale)), "label": lev.label} for lev in s.levels],
        }
        for s in model.subsystems
    ]
    return tomli_w.dumps(doc)


def total_values(model: CompositeModel) -> np.ndarray:
    """Flat kinematical vector of c_A + c_B + c_C (reduced mod N if cyclic)."""
    va, vb, vc = (s.values for s in model.subsystems)
    tot = (va[:, None, None] + vb[None, :, None] + vc[None, None, :]).reshape(-1)
    return np.mod(tot, model.cyclic_modulus) if model.cyclic_modulus else tot


def constraint_operator(model: CompositeModel) -> LabeledOperator:
    check_size(model.kin_dim, model.kin_dim)
    return LabeledOperator(np.diag(total_values(model).astype(np.complex128)), "kin")


def local_operator(model: CompositeModel, target: str, m) -> LabeledOperator:
    """Embed ``m`` on subsystem ``target`` as an identity-padded kinematical operator."""
    m = as_matrix(m)
    d = model.subsystem(target).dimension
    if m.shape != (d, d):
        raise DimensionError(f"operator for {target} must be {d}x{d}, got {m.shape[0]}x{m.shape[1]}")
    check_size(model.kin_dim, model.kin_dim)
    factors = [m if x == target else np.eye(model.subsystem(x).dimension) for x in LABELS]
    return LabeledOperator(np.kron(np.kron(factors[0], factors[1]), factors[2]), "kin")


def local_diag(model: CompositeModel, label: str) -> np.ndarray:
    """Diagonal matrix of the constraint generator of one subsystem."""
    return np.diag(model.subsystem(label).values.astype(np.complex128))
