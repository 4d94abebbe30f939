"""Exact integer spectrum algebra.

A :class:`SpectrumSet` maps each integer eigenvalue to the set of
degeneracy labels carried by its eigenvectors. For a cyclic model every
value is reduced mod ``modulus`` and sums and negations wrap around.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Hashable, Iterable, Mapping

from .errors import DomainError

if TYPE_CHECKING:
    from .model import CompositeModel


def _reduce(v: int, modulus: int | None) -> int:
    return v % modulus if modulus else v


@dataclass(frozen=True)
class SpectrumSet:
    """Deduplicated integer eigenvalues, each with a nonempty label set."""

    entries: tuple[tuple[int, frozenset], ...]
    modulus: int | None = None

    def __init__(self, entries: Mapping[int, Iterable[Hashable]] | Iterable, modulus: int | None = None):
        items = entries.items() if isinstance(entries, Mapping) else entries
        merged: dict[int, set] = {}
        for value, labels in items:
            if int(value) != value:
                raise DomainError(f"eigenvalues must be integers, got {value!r}")
            v = _reduce(int(value), modulus)
            merged.setdefault(v, set()).update(labels)
        for v, labels in merged.items():
            if not labels:
                raise DomainError(f"eigenvalue {v} has no degeneracy label")
        object.__setattr__(self, "entries", tuple((v, frozenset(merged[v])) for v in sorted(merged)))
        object.__setattr__(self, "modulus", modulus)

    @classmethod
    def from_levels(cls, levels: Iterable[tuple[int, Hashable]], modulus: int | None = None) -> "SpectrumSet":
        return cls(((v, {lab}) for v, lab in levels), modulus)

    @property
    def values(self) -> frozenset[int]:
        return frozenset(v for v, _ in self.entries)

    def labels(self, value: int) -> frozenset:
        for v, labs in self.entries:
            if v == value:
                return labs
        return frozenset()

    def multiplicity(self, value: int) -> int:
        return len(self.labels(value))

    def negated(self) -> "SpectrumSet":
        return SpectrumSet(((-v, labs) for v, labs in self.entries), self.modulus)

    def restricted(self, values: Iterable[int]) -> "SpectrumSet":
        keep = set(values)
        return SpectrumSet(((v, labs) for v, labs in self.entries if v in keep), self.modulus)

    def __contains__(self, value) -> bool:
        return value in self.values

    def __iter__(self):
        return (v for v, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def minkowski_sum(x: Iterable[int], y: Iterable[int], modulus: int | None = None) -> frozenset[int]:
    """All pairwise sums ``{a + b}`` (mod ``modulus`` if given)."""
    xs, ys = set(x), set(y)
    if not xs or not ys:
        raise DomainError("Minkowski sum of an empty set is undefined")
    return frozenset(_reduce(a + b, modulus) for a in xs for b in ys)


def spectrum_of_sum(a: SpectrumSet, b: SpectrumSet) -> SpectrumSet:
    """Spectrum of ``C_a (x) 1 + 1 (x) C_b``.

    Each sum value is labeled by its contributing level pairs
    ``((c_a, d_a), (c_b, d_b))``, so ``multiplicity`` counts eigenvectors.
    """
    modulus = a.modulus or b.modulus
    out: dict[int, set] = {}
    for va, la in a.entries:
        for vb, lb in b.entries:
            s = _reduce(va + vb, modulus)
            bucket = out.setdefault(s, set())
            for x in la:
                for y in lb:
                    bucket.add(((va, x), (vb, y)))
    return SpectrumSet(out, modulus)


def sigma_double(model: "CompositeModel", k: str) -> SpectrumSet:
    """Eigenvalues of ``C_i + C_j`` that frame ``k`` can compensate."""
    i, j = model.others(k)
    pair = spectrum_of_sum(model.subsystem(i).spectrum, model.subsystem(j).spectrum)
    allowed = model.subsystem(k).spectrum.negated().values
    return pair.restricted(allowed)


def sigma_conditional(model: "CompositeModel", i: str, given: tuple[str, str]) -> frozenset[int]:
    """Values of ``C_i`` compatible with the constraint given the other two."""
    j, k = given
    if sorted((i, j, k)) != ["A", "B", "C"]:
        raise DomainError(f"labels {i!r} and {given!r} do not partition A, B, C")
    rest = spectrum_of_sum(model.subsystem(j).spectrum, model.subsystem(k).spectrum).negated().values
    return frozenset(model.subsystem(i).spectrum.values & rest)


def pick_counterexample(values: Iterable[int]) -> int | None:
    """Smallest absolute value, ties broken toward the negative one."""
    vals = sorted(set(values), key=lambda v: (abs(v), v))
    return vals[0] if vals else None


@dataclass(frozen=True)
class FactorizabilityReport:
    frame: str
    sigma_double: frozenset[int]
    sigma_i_cond: frozenset[int]
    sigma_j_cond: frozenset[int]
    minkowski: frozenset[int]
    holds: bool
    counterexample: int | None

    def to_dict(self) -> dict:
        return {
            "frame": self.frame,
            "sigma_double": sorted(self.sigma_double),
            "sigma_i_cond": sorted(self.sigma_i_cond),
            "sigma_j_cond": sorted(self.sigma_j_cond),
            "minkowski": sorted(self.minkowski),
            "holds": self.holds,
            "counterexample": self.counterexample,
        }


def check_factorizability(model: "CompositeModel", k: str) -> FactorizabilityReport:
    """Does the reduced space of frame ``k`` inherit the kinematical i|j split?"""
    i, j = model.others(k)
    sd = sigma_double(model, k).values
    si = sigma_conditional(model, i, (j, k))
    sj = sigma_conditional(model, j, (i, k))
    mink = minkowski_sum(si, sj, model.cyclic_modulus) if si and sj else frozenset()
    holds = mink == sd
    counter = None if holds else pick_counterexample(sd ^ mink)
    return FactorizabilityReport(k, sd, si, sj, mink, holds, counter)
