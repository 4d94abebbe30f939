"""Physical Hilbert space: the constraint kernel, its sectors and physical states."""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import _kernels
from .errors import ConstraintViolationError, DimensionError, ModelValidationError, NormalizationError
from .linalg import LabeledOperator, as_vector, check_size
from .model import LABELS, CompositeModel, KinIndex

CoeffKey = tuple[int, str, int, str]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PhysicalSpace:
    """Kernel of the constraint in the kinematical product eigenbasis.

    ``basis`` lists the solving level triples in lexicographic order,
    ``flat`` their kinematical flat indices, and ``embedding`` is the
    kin-dim x phys-dim isometry whose columns are those product vectors.
    """

    model: CompositeModel
    basis: tuple[KinIndex, ...]
    flat: np.ndarray
    embedding: np.ndarray
    sector_index: Mapping[str, Mapping[str, tuple[int, ...]]]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def position(self, idx: KinIndex) -> int | None:
        return self._positions.get(self.model.flat_index(idx))

    @functools.cached_property
    def _positions(self) -> dict[int, int]:
        return {int(f): n for n, f in enumerate(self.flat)}

    def sector_positions(self, k: str, d_k: str) -> tuple[int, ...]:
        try:
            return self.sector_index[k][d_k]
        except KeyError:
            raise ModelValidationError(f"subsystem {k} has no degeneracy label {d_k!r}") from None

    def sector_projector(self, k: str, d_k: str) -> np.ndarray:
        p = np.zeros((self.dim, self.dim), dtype=np.complex128)
        pos = list(self.sector_positions(k, d_k))
        p[pos, pos] = 1.0
        return p

    def to_kin(self, amplitudes) -> np.ndarray:
        return self.embedding @ as_vector(amplitudes)


@dataclass(frozen=True, eq=False)
class PhysicalState:
    space: PhysicalSpace
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amp = as_vector(self.amplitudes).copy()
        if amp.size != self.space.dim:
            raise DimensionError(f"state has {amp.size} amplitudes, space has dimension {self.space.dim}")
        if self.normalized and abs(np.linalg.norm(amp) - 1.0) > 1e-10:
            raise NormalizationError(f"state flagged normalized has norm {np.linalg.norm(amp):.3e}")
        object.__setattr__(self, "amplitudes", _frozen(amp))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@functools.lru_cache(maxsize=32)
def build_physical_space(model: CompositeModel) -> PhysicalSpace:
    """Enumerate kernel basis vectors in lexicographic (a, b, c) order."""
    va, vb, vc = (s.values for s in model.subsystems)
    triples = _kernels.kernel_triples(va, vb, vc, model.cyclic_modulus)
    basis = tuple(KinIndex(int(a), int(b), int(c)) for a, b, c in triples)
    flat = np.array([model.flat_index(t) for t in basis], dtype=np.int64)
    check_size(model.kin_dim, len(basis))
    emb = np.zeros((model.kin_dim, len(basis)), dtype=np.complex128)
    emb[flat, np.arange(len(basis))] = 1.0
    sectors: dict[str, dict[str, tuple[int, ...]]] = {}
    for pos_k, k in enumerate(LABELS):
        levels = model.subsystem(k).levels
        sectors[k] = {
            d: tuple(n for n, t in enumerate(basis) if levels[t[pos_k]].label == d)
            for d in model.subsystem(k).sectors
        }
    return PhysicalSpace(model, basis, _frozen(flat), _frozen(emb), sectors)


def level_lookup(model: CompositeModel, label: str) -> dict[tuple[int, str], int]:
    return {(lev.value, lev.label): n for n, lev in enumerate(model.subsystem(label).levels)}


def physical_state_from_coeffs(
    space: PhysicalSpace,
    k: str,
    d_k: str,
    coeffs: Mapping[CoeffKey, complex],
    normalize: bool = True,
) -> PhysicalState:
    """Sector-``d_k`` state with amplitude ``coeffs[(c_i, d_i, c_j, d_j)]``.

    Eigenvalues are in scaled integer units. The frame level is fixed by the
    constraint to ``c_k = -(c_i + c_j)``.
    """
    model = space.model
    i, j = model.others(k)
    look = {x: level_lookup(model, x) for x in LABELS}
    mod = model.cyclic_modulus
    amp = np.zeros(space.dim, dtype=np.complex128)
    for (ci, di, cj, dj), val in coeffs.items():
        s = ci + cj
        ck = (-s) % mod if mod else -s
        try:
            idx = {i: look[i][(ci % mod if mod else ci, di)], j: look[j][(cj % mod if mod else cj, dj)]}
        except KeyError:
            raise ConstraintViolationError(
                f"({ci}, {cj}) with labels ({di!r}, {dj!r}) is not a level pair of {i}{j}"
            ) from None
        if (ck, d_k) not in look[k]:
            raise ConstraintViolationError(
                f"(c_{i}, c_{j}) = ({ci}, {cj}) has c_{i}+c_{j} = {s} outside sigma_{i}{j}|{k}"
                f" for sector {d_k!r}"
            )
        idx[k] = look[k][(ck, d_k)]
        pos = space.position(KinIndex(idx["A"], idx["B"], idx["C"]))
        amp[pos] += complex(val)
    if normalize:
        n = np.linalg.norm(amp)
        if n == 0:
            raise NormalizationError("coefficient map produces the zero vector")
        amp = amp / n
    return PhysicalState(space, amp, normalized=normalize)


def _parse_number(raw, scale: int, what: str) -> int:
    if isinstance(raw, bool):
        raise ModelValidationError(f"{what} must be a number")
    try:
        f = Fraction(raw) if not isinstance(raw, float) else Fraction(raw).limit_denominator(10**6)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ModelValidationError(f"cannot parse {what} {raw!r}") from None
    scaled = f * scale
    if scaled.denominator != 1:
        raise ModelValidationError(f"{what}={raw!r} is not an eigenvalue on the model's grid (scale {scale})")
    return int(scaled)


def parse_coefficients(doc, model: CompositeModel) -> dict[CoeffKey, complex]:
    """Coefficient map from JSON data (values in unscaled units).

    Accepts an array of ``{ci, di, cj, dj, re, im}`` records, or an object
    carrying such an array under ``"coefficients"``.
    """
    records = doc.get("coefficients") if isinstance(doc, dict) else doc
    if not isinstance(records, list):
        raise ModelValidationError("state JSON must be an array of coefficient records")
    out: dict[CoeffKey, complex] = {}
    for n, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise ModelValidationError(f"coefficient record #{n} is not an object")
        missing = {"ci", "di", "cj", "dj"} - set(rec)
        if missing:
            raise ModelValidationError(f"coefficient record #{n} lacks {', '.join(sorted(missing))}")
        key = (
            _parse_number(rec["ci"], model.scale, "ci"),
            str(rec["di"]),
            _parse_number(rec["cj"], model.scale, "cj"),
            str(rec["dj"]),
        )
        try:
            val = complex(float(rec.get("re", 0.0)), float(rec.get("im", 0.0)))
        except (TypeError, ValueError):
            raise ModelValidationError(f"coefficient record #{n} has non-numeric re/im") from None
        out[key] = out.get(key, 0.0) + val
    return out


def pair_values(model: CompositeModel, k: str) -> tuple[np.ndarray, np.ndarray]:
    i, j = model.others(k)
    return model.subsystem(i).values, model.subsystem(j).values


def projector(model: CompositeModel, k: str, d_k: str) -> LabeledOperator:
    """Diagonal projector on H_i (x) H_j onto pairs the frame can compensate."""
    if d_k not in model.subsystem(k).sectors:
        raise ModelValidationError(f"subsystem {k} has no degeneracy label {d_k!r}")
    vi, vj = pair_values(model, k)
    mod = model.cyclic_modulus
    allowed = {(-lev.value) % mod if mod else -lev.value for lev in model.subsystem(k).levels if lev.label == d_k}
    s = vi[:, None] + vj[None, :]
    if mod:
        s = np.mod(s, mod)
    keep = np.isin(s, sorted(allowed)).reshape(-1).astype(np.float64)
    i, j = model.others(k)
    return LabeledOperator(np.diag(keep), f"pair:{i}{j}", (d_k,))


def projector_factorizes(model: CompositeModel, k: str, d_k: str) -> bool:
    """Brute-force oracle: is the projector a product of local projectors?

    The local projectors keep the values of each factor that occur in some
    solution of the constraint, found by scanning all kinematical triples.
    """
    p = projector(model, k, d_k).matrix.real
    pos = {x: n for n, x in enumerate(LABELS)}
    i, j = model.others(k)
    vals = [s.values for s in model.subsystems]
    mod = model.cyclic_modulus
    tot = vals[0][:, None, None] + vals[1][None, :, None] + vals[2][None, None, :]
    if mod:
        tot = np.mod(tot, mod)
    sol = tot == 0
    axes_i = tuple(a for a in range(3) if a != pos[i])
    axes_j = tuple(a for a in range(3) if a != pos[j])
    pi_i = np.diag(sol.any(axis=axes_i).astype(np.float64))
    pi_j = np.diag(sol.any(axis=axes_j).astype(np.float64))
    return bool(np.array_equal(p, np.kron(pi_i, pi_j)))


def random_physical_state(space: PhysicalSpace, rng: np.random.Generator, sector: tuple[str, str] | None = None) -> PhysicalState:
    """Haar-like random unit vector, optionally supported on one sector."""
    if space.dim == 0:
        raise DimensionError("the physical space is zero-dimensional")
    amp = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    if sector is not None:
        mask = np.zeros(space.dim, dtype=bool)
        mask[list(space.sector_positions(*sector))] = True
        amp = np.where(mask, amp, 0.0)
    return PhysicalState(space, amp / np.linalg.norm(amp))
