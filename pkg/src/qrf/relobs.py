"""Relational Dirac observables and the frame-dependence witnesses.

A relational observable "f on ij when frame k reads g" is built as the
discrete G-twirl

    F_f = sum_m E^{d_k}(g_m) (x) U(g_m) f U(g_m)^dagger,   U(g) = exp(-i s g (C_i + C_j)),

with s = +1 or -1 picked as the sign that commutes with the constraint on
physical states. The same operator is also available from the moment
series ``sum_n (i^n / n!) O^(n) (x) [f, C_i + C_j]_n`` evaluated in
extended precision, which serves as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from . import _kernels
from .errors import ConventionError, DimensionError, PreconditionError
from .frames import (
    frame_to_kin,
    orientation_group,
    orientation_state,
    pair_sum,
)
from .linalg import LabeledOperator, as_matrix, commutator, max_abs
from .model import CompositeModel, constraint_operator, local_diag
from .physical import PhysicalSpace, projector

DIRAC_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RelationalObservable:
    frame: str
    sector: str
    source: str
    matrix: LabeledOperator
    sign: int
    defect: float


def _pair_dim(model: CompositeModel, k: str) -> int:
    i, j = model.others(k)
    return model.subsystem(i).dimension * model.subsystem(j).dimension


def _check_pair_op(model: CompositeModel, k: str, f) -> np.ndarray:
    f = as_matrix(f)
    d = _pair_dim(model, k)
    if f.shape != (d, d):
        i, j = model.others(k)
        raise DimensionError(f"operator on H_{i} (x) H_{j} must be {d}x{d}, got {f.shape[0]}x{f.shape[1]}")
    return f


def _sector_effects(model: CompositeModel, k: str, d_k: str) -> np.ndarray:
    grp = orientation_group(model)
    vs = [orientation_state(model, k, d_k, m) for m in range(grp.size)]
    return np.stack([grp.weight * np.outer(v, v.conj()) for v in vs])


def twirl(model: CompositeModel, k: str, d_k: str, f, sign: int = 1) -> np.ndarray:
    """Kinematical matrix of the G-twirl of ``f`` with conjugation sign ``sign``."""
    f = _check_pair_op(model, k, f)
    g = orientation_group(model).angles
    s = pair_sum(model, k)
    u = np.exp(-1j * sign * np.outer(g, s))  # rows: diagonal of U(g_m)
    right = u[:, :, None] * f[None, :, :] * u.conj()[:, None, :]
    return frame_to_kin(model, k, _kernels.kron_accumulate(_sector_effects(model, k, d_k), right))


def dirac_defect_matrix(space: PhysicalSpace, op: np.ndarray) -> float:
    c = constraint_operator(space.model).matrix
    return max_abs((op @ c - c @ op) @ space.embedding)


def dirac_defect(space: PhysicalSpace, obs) -> float:
    """``max |[F, C] E|`` for an observable (or raw kinematical matrix)."""
    op = obs.matrix.matrix if isinstance(obs, RelationalObservable) else np.asarray(obs, dtype=np.complex128)
    return dirac_defect_matrix(space, op)


def relational_observable(space: PhysicalSpace, k: str, d_k: str, f, source: str = "f") -> RelationalObservable:
    """Dirac observable for ``f`` relative to frame ``k`` in sector ``d_k``."""
    model = space.model
    # Both signs can be invariant (the wrong one may merely annihilate the
    # off-diagonal blocks), so +1 wins whenever it passes; -1 is the fallback.
    defects = []
    for sign in (1, -1):
        mat = twirl(model, k, d_k, f, sign)
        defect = dirac_defect_matrix(space, mat)
        if defect <= DIRAC_TOL:
            return RelationalObservable(k, d_k, source, LabeledOperator(mat, "kin", (d_k,)), sign, defect)
        defects.append(defect)
    raise ConventionError(
        f"no conjugation sign gives a Dirac observable (defects {defects[0]:.3e}, {defects[1]:.3e}); "
        "the orientation group is too small for this model"
    )


def _series_precision(gmax: float, dmax: float, tol_digits: int) -> tuple[int, int]:
    """(decimal digits, truncation order) for the moment series."""
    x = gmax * dmax
    dps = tol_digits + 10 + int(math.ceil(x / math.log(10)))
    n = 0
    log_term = 0.0
    while True:
        n += 1
        log_term += math.log(x) - math.log(n) if x > 0 else -math.inf
        if n > x and log_term < -tol_digits * math.log(10):
            return dps, n
        if x == 0:
            return dps, 1


def relational_observable_series(
    space: PhysicalSpace, k: str, d_k: str, f, sign: int = 1, tol_digits: int = 20
) -> np.ndarray:
    """Kinematical matrix of ``sum_n (i^n / n!) O^(n) (x) [f, C_i + C_j]_n``.

    The nested commutator with the diagonal generator S acts elementwise,
    ``[f, S]_n[x', x] = f[x', x] (s_x - s_x')^n``, and the moment operator
    of sector ``d_k`` has entries ``mu sum_m g_m^n exp(-i (c' - c) g_m)``.
    Terms grow like ``(g_max |s_x - s_x'|)^n / n!`` before they decay, so the
    sum runs in mpmath at a precision chosen from that bound and is
    truncated once the terms fall below ``10^-tol_digits``.
    ``sign=-1`` uses ``(-i)^n`` and ``[S, f]_n``.
    """
    model = space.model
    f = _check_pair_op(model, k, f)
    grp = orientation_group(model)
    sub = model.subsystem(k)
    ck = sub.values
    in_sector = np.array([lev.label == d_k for lev in sub.levels])
    s = pair_sum(model, k)
    delta = s[None, :] - s[:, None]  # s_x - s_x' at [x', x]
    dc = ck[:, None] - ck[None, :]  # c' - c at [c', c]
    gmax = float(grp.angles.max(initial=0.0))
    dmax = float(np.abs(delta).max(initial=0))
    dps, order = _series_precision(gmax, dmax, tol_digits)

    table: dict[tuple[int, int], complex] = {}
    c_diffs = sorted(set(dc[np.ix_(in_sector, in_sector)].reshape(-1).tolist()))
    deltas = sorted(set(delta.reshape(-1).tolist()))
    with mpmath.workdps(dps):
        gs = [2 * mpmath.pi * m / grp.size for m in range(grp.size)]
        mu = mpmath.mpf(1) / grp.size
        powers = [[mpmath.mpf(1)] * grp.size]
        for _ in range(order):
            powers.append([p * g for p, g in zip(powers[-1], gs)])
        unit = mpmath.mpc(0, sign)
        for c_diff in c_diffs:
            phases = [mpmath.expj(-c_diff * g) for g in gs]
            # moment-operator entries mu sum_m g_m^n exp(-i (c' - c) g_m)
            moments = [mu * mpmath.fsum(p * q for p, q in zip(phases, row)) for row in powers]
            for dl in deltas:
                total = mpmath.mpc(0)
                coef = mpmath.mpc(1)
                for n in range(order + 1):
                    if n > 0:
                        coef = coef * unit * dl / n
                    total += coef * moments[n]
                table[(c_diff, dl)] = complex(total)

    dk = sub.dimension
    dij = s.size
    frame_op = np.zeros((dk * dij, dk * dij), dtype=np.complex128)
    look = np.vectorize(lambda a, b: table[(a, b)], otypes=[np.complex128])
    for cp in range(dk):
        for c in range(dk):
            if not (in_sector[cp] and in_sector[c]):
                continue
            block = look(np.full_like(delta, dc[cp, c]), delta) * f
            frame_op[cp * dij : (cp + 1) * dij, c * dij : (c + 1) * dij] = block
    return frame_to_kin(model, k, frame_op)


def nested_commutator(f, s_op, n: int) -> np.ndarray:
    """``[f, S]_n = [[f, S], S]...`` with n commutators (``[f, S]_0 = f``)."""
    out = as_matrix(f)
    for _ in range(n):
        out = commutator(out, s_op)
    return out


def compress(f: np.ndarray, model: CompositeModel, k: str, d_k: str) -> np.ndarray:
    p = projector(model, k, d_k).matrix
    return p @ f @ p


def homomorphism_defect(space: PhysicalSpace, k: str, d_k: str, f, h) -> float:
    """``max |(F_[f,h] - [F_f, F_h]) E|`` for f, h compressed to the reduced space.

    The map f -> F_f is an algebra homomorphism on physical states for
    operators on the reduced space, i.e. after compression by the
    frame's projector; inputs are compressed before the check.
    """
    model = space.model
    fc = compress(_check_pair_op(model, k, f), model, k, d_k)
    hc = compress(_check_pair_op(model, k, h), model, k, d_k)
    ff = relational_observable(space, k, d_k, fc).matrix.matrix
    fh = relational_observable(space, k, d_k, hc).matrix.matrix
    fcomm = relational_observable(space, k, d_k, fc @ hc - hc @ fc).matrix.matrix
    return max_abs((fcomm - (ff @ fh - fh @ ff)) @ space.embedding)


# --- projected local algebras --------------------------------------------


def _kept(model: CompositeModel, k: str, d_k: str) -> np.ndarray:
    return np.flatnonzero(np.diag(projector(model, k, d_k).matrix).real > 0.5)


def _pi_matrix(model: CompositeModel, k: str, d_k: str) -> np.ndarray:
    i, j = model.others(k)
    di, dj = model.subsystem(i).dimension, model.subsystem(j).dimension
    return np.diag(projector(model, k, d_k).matrix).real.reshape(di, dj)


def projected_observable(model: CompositeModel, k: str, d_k: str, target: str, m) -> LabeledOperator:
    """``Pi (m (x) 1) Pi`` (or ``Pi (1 (x) m) Pi``) restricted to the range of Pi."""
    i, j = model.others(k)
    if target not in (i, j):
        raise DimensionError(f"target must be {i} or {j} for frame {k}, got {target!r}")
    m = as_matrix(m)
    d = model.subsystem(target).dimension
    if m.shape != (d, d):
        raise DimensionError(f"operator on {target} must be {d}x{d}, got {m.shape[0]}x{m.shape[1]}")
    di, dj = model.subsystem(i).dimension, model.subsystem(j).dimension
    full = np.kron(m, np.eye(dj)) if target == i else np.kron(np.eye(di), m)
    kept = _kept(model, k, d_k)
    return LabeledOperator(full[np.ix_(kept, kept)], f"reduced:{k}:{d_k}")


def theorem2_commutator_norm(model: CompositeModel, k: str, d_k: str, m_i, m_j, method: str = "compress") -> float:
    """``max |[A_{i|k}, A_{j|k}]|`` for compressed local operators.

    ``method="compress"`` multiplies the compressed matrices; ``"direct"``
    uses the closed elementwise formula for the commutator.
    """
    i, j = model.others(k)
    if method == "compress":
        ai = projected_observable(model, k, d_k, i, m_i).matrix
        aj = projected_observable(model, k, d_k, j, m_j).matrix
        return max_abs(ai @ aj - aj @ ai)
    if method == "direct":
        m_i, m_j = as_matrix(m_i), as_matrix(m_j)
        full = _kernels.aacom(_pi_matrix(model, k, d_k), m_i, m_j)
        return max_abs(full)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class WitnessResult:
    frame: str
    sector: str
    norm: float
    units: tuple[int, int, int, int] | None
    tags: tuple | None

    def to_dict(self) -> dict:
        return {
            "frame": self.frame,
            "sector": self.sector,
            "norm": self.norm,
            "units": list(self.units) if self.units else None,
            "tags": [list(t) for t in self.tags] if self.tags else None,
        }


def matrix_unit(d: int, a: int, b: int) -> np.ndarray:
    e = np.zeros((d, d), dtype=np.complex128)
    e[a, b] = 1.0
    return e


def commutator_witness_search(model: CompositeModel, k: str, d_k: str) -> WitnessResult:
    """Exhaustive search over matrix-unit pairs ``|a><a'|`` on i and ``|b><b'|`` on j.

    Returns the largest commutator norm found, re-evaluated through the
    compression route for the winning pair.
    """
    i, j = model.others(k)
    pi = _pi_matrix(model, k, d_k)
    best, a, ap, b, bp = _kernels.unit_witness(pi)
    if best <= 0:
        return WitnessResult(k, d_k, 0.0, None, None)
    di, dj = pi.shape
    norm = theorem2_commutator_norm(model, k, d_k, matrix_unit(di, a, ap), matrix_unit(dj, b, bp))
    si, sj = model.subsystem(i), model.subsystem(j)
    tags = tuple(
        (lev.value, lev.label) for lev in (si.levels[a], si.levels[ap], sj.levels[b], sj.levels[bp])
    )
    return WitnessResult(k, d_k, norm, (a, ap, b, bp), tags)


# --- frame-distinct relational algebras -------------------------------------


@dataclass(frozen=True)
class Theorem1Report:
    first_norm: float
    second_norm: float
    success: bool

    def to_dict(self) -> dict:
        return {"first_norm": self.first_norm, "second_norm": self.second_norm, "success": self.success}


def _kron_pair_c(model: CompositeModel, k: str, c_op: np.ndarray, slot: str) -> np.ndarray:
    """Operator acting on C inside H_i (x) H_j for frame k (C must be one of i, j)."""
    i, j = model.others(k)
    di, dj = model.subsystem(i).dimension, model.subsystem(j).dimension
    if slot == i:
        return np.kron(c_op, np.eye(dj))
    return np.kron(np.eye(di), c_op)


def theorem1_witness(space: PhysicalSpace, f, sector_a: str | None = None, sector_b: str | None = None) -> Theorem1Report:
    """Compare the relational algebras of C relative to A and relative to B.

    ``first`` is ``|[F^{C|A}_f, C_A (x) 1 (x) 1] E|``: a non-conserved f on C,
    seen from A, does not commute with A's own generator. ``second`` is
    ``|[F^{C|B}_f, F^{A|B}_{C_A}] E|``: seen from B, the same f commutes with
    the relational version of C_A.
    """
    model = space.model
    f = as_matrix(f)
    dc = model.subsystem("C").dimension
    if f.shape != (dc, dc):
        raise DimensionError(f"f must act on H_C ({dc}x{dc})")
    c_c = local_diag(model, "C")
    if max_abs(commutator(f, c_c)) <= 1e-12:
        raise PreconditionError("f commutes with C_C; a constant of motion gives a vacuous witness")
    sa = sector_a or model.subsystem("A").sectors[0]
    sb = sector_b or model.subsystem("B").sectors[0]
    c_a = local_diag(model, "A")
    e = space.embedding

    f_ca = compress(_kron_pair_c(model, "A", f, "C"), model, "A", sa)
    obs_ca = relational_observable(space, "A", sa, f_ca).matrix.matrix
    c_a_kin = np.kron(np.kron(c_a, np.eye(model.subsystem("B").dimension)), np.eye(dc))
    first = max_abs((obs_ca @ c_a_kin - c_a_kin @ obs_ca) @ e)

    f_cb = compress(_kron_pair_c(model, "B", f, "C"), model, "B", sb)
    ca_b = compress(_kron_pair_c(model, "B", c_a, "A"), model, "B", sb)
    obs_cb = relational_observable(space, "B", sb, f_cb).matrix.matrix
    obs_ab = relational_observable(space, "B", sb, ca_b).matrix.matrix
    second = max_abs((obs_cb @ obs_ab - obs_ab @ obs_cb) @ e)
    return Theorem1Report(first, second, first > 1e-6 and second <= 1e-10)
