"""Orientation states, reduction maps and frame changes over a discrete orientation group.

The orientation group of a model is Z_{N_g} with angles ``g_m = 2 pi m / N_g``
and weight ``mu = 1 / N_g``. Orientation states carry no extra phases
(theta = 0). Because N_g exceeds every eigenvalue difference in the model,
``mu * sum_m exp(i (c - c') g_m)`` is an exact Kronecker delta, and every
"integral over the group" below is a finite sum.

Reduction to the perspective of frame k, sector d_k, goes through the
disentangler T. It maps a physical sector state to ``|eps, d_k> (x) psi_ij``.
Conditioning on an orientation ``g_m`` and dividing out ``<g_m, d_k | eps, d_k>``
gives the reduced state, which does not depend on m or eps.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionError, ModelValidationError, OverlapError, PreconditionError
from .linalg import LabeledOperator, as_vector, check_size
from .model import LABELS, CompositeModel, local_diag
from .physical import PhysicalSpace, PhysicalState, projector
from .spectra import pick_counterexample, sigma_double

LEAK_TOL = 1e-10


@dataclass(frozen=True)
class OrientationGroup:
    size: int

    @property
    def weight(self) -> float:
        return 1.0 / self.size

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.size) / self.size

    def angle(self, m: int) -> float:
        if not 0 <= m < self.size:
            raise PreconditionError(f"group element {m} outside 0..{self.size - 1}")
        return 2.0 * np.pi * m / self.size


def orientation_group(model: CompositeModel) -> OrientationGroup:
    return OrientationGroup(model.orientation_group_size)


def _check_sector(model: CompositeModel, k: str, d_k: str) -> None:
    if d_k not in model.subsystem(k).sectors:
        raise ModelValidationError(f"subsystem {k} has no degeneracy label {d_k!r}")


def orientation_state(model: CompositeModel, k: str, d_k: str, m: int) -> np.ndarray:
    """``|g_m, d_k> = sum_c exp(-i c g_m) |c, d_k>`` as a vector on H_k (unnormalized)."""
    _check_sector(model, k, d_k)
    g = orientation_group(model).angle(m)
    sub = model.subsystem(k)
    mask = np.array([lev.label == d_k for lev in sub.levels])
    return np.where(mask, np.exp(-1j * sub.values * g), 0.0)


def _effects(model: CompositeModel, k: str, sector: str | None) -> np.ndarray:
    """Stack of POVM effects E(g_m), optionally restricted to one sector."""
    grp = orientation_group(model)
    sectors = [sector] if sector is not None else list(model.subsystem(k).sectors)
    dk = model.subsystem(k).dimension
    out = np.zeros((grp.size, dk, dk), dtype=np.complex128)
    for m in range(grp.size):
        for d in sectors:
            v = orientation_state(model, k, d, m)
            out[m] += grp.weight * np.outer(v, v.conj())
    return out


def povm_effect(model: CompositeModel, k: str, m: int, sector: str | None = None) -> LabeledOperator:
    """``E(g_m) = mu sum_d |g_m, d><g_m, d|`` (or a single sector's part)."""
    orientation_group(model).angle(m)
    if sector is not None:
        _check_sector(model, k, sector)
    return LabeledOperator(_effects(model, k, sector)[m], f"H_{k}")


def moment_operator(model: CompositeModel, k: str, n: int, sector: str | None = None) -> LabeledOperator:
    """``O^(n) = sum_m E(g_m) g_m^n``."""
    if n < 0:
        raise PreconditionError("moment order must be nonnegative")
    eff = _effects(model, k, sector)
    g = orientation_group(model).angles
    return LabeledOperator(np.einsum("m,mab->ab", g**n, eff), f"H_{k}")


def canonical_commutator_diagnostic(model: CompositeModel, k: str) -> np.ndarray:
    """``[O^(1), C_k]``, exposed as a diagnostic for the discretized canonical pair."""
    o1 = moment_operator(model, k, 1).matrix
    ck = local_diag(model, k)
    return o1 @ ck - ck @ o1


# --- frame-ordered bookkeeping ---------------------------------------------


@functools.lru_cache(maxsize=64)
def frame_permutation(model: CompositeModel, k: str) -> np.ndarray:
    """Index array ``perm`` with ``v_frame = v_kin[perm]`` for axis order (k, i, j)."""
    i, j = model.others(k)
    axes = [LABELS.index(x) for x in (k, i, j)]
    perm = np.arange(model.kin_dim).reshape(model.dims).transpose(axes).reshape(-1)
    perm.flags.writeable = False
    return perm


def frame_to_kin(model: CompositeModel, k: str, op_frame: np.ndarray) -> np.ndarray:
    perm = frame_permutation(model, k)
    out = np.empty_like(op_frame)
    out[np.ix_(perm, perm)] = op_frame
    return out


def pair_sum(model: CompositeModel, k: str) -> np.ndarray:
    """``c_i + c_j`` over the H_i (x) H_j product basis (i slow)."""
    i, j = model.others(k)
    vi, vj = model.subsystem(i).values, model.subsystem(j).values
    return (vi[:, None] + vj[None, :]).reshape(-1)


def _same_mod(a: int, b: int, mod: int | None) -> bool:
    return (a - b) % mod == 0 if mod else a == b


def admissible_epsilons(model: CompositeModel, k: str) -> list[int]:
    """All eps with -eps in sigma_{ij|k}, as eigenvalues of C_k."""
    mod = model.cyclic_modulus
    return sorted({(-s) % mod if mod else -s for s in sigma_double(model, k).values})


def default_epsilon(model: CompositeModel, k: str) -> int:
    eps = admissible_epsilons(model, k)
    if not eps:
        raise PreconditionError(f"frame {k} has an empty sigma_double; no reduction exists")
    if 0 in eps:
        return 0
    return pick_counterexample(eps)


def _check_epsilon(model: CompositeModel, k: str, epsilon: int) -> None:
    mod = model.cyclic_modulus
    if not any(_same_mod(epsilon, e, mod) for e in admissible_epsilons(model, k)):
        raise PreconditionError(f"epsilon={epsilon} is not admissible for frame {k}: -epsilon must lie in sigma_double")


def _disentangler_frame(model: CompositeModel, k: str, epsilon: int, sign: int) -> np.ndarray:
    grp = orientation_group(model)
    g = grp.angles
    eff = _effects(model, k, None)  # mu |g,d><g,d| summed over d
    left = np.exp(sign * 1j * epsilon * g)[:, None, None] * eff
    s = pair_sum(model, k)
    right = np.zeros((grp.size, s.size, s.size), dtype=np.complex128)
    idx = np.arange(s.size)
    right[:, idx, idx] = np.exp(sign * 1j * np.outer(g, s))
    check_size(model.kin_dim, model.kin_dim)
    return _kernels.kron_accumulate(left, right)


def disentangler(model: CompositeModel, k: str, epsilon: int) -> LabeledOperator:
    """``T = mu sum_d sum_m e^{i eps g} |g,d><g,d| (x) e^{i (C_i + C_j) g}`` on the kinematical space."""
    _check_epsilon(model, k, epsilon)
    return LabeledOperator(frame_to_kin(model, k, _disentangler_frame(model, k, epsilon, +1)), "kin")


def inverse_disentangler(model: CompositeModel, k: str, epsilon: int) -> LabeledOperator:
    """Inverse of :func:`disentangler` on the image of the physical space."""
    _check_epsilon(model, k, epsilon)
    return LabeledOperator(frame_to_kin(model, k, _disentangler_frame(model, k, epsilon, -1)), "kin")


def _level_vector(model: CompositeModel, k: str, value: int, d_k: str) -> np.ndarray:
    sub = model.subsystem(k)
    mod = model.cyclic_modulus
    v = np.zeros(sub.dimension, dtype=np.complex128)
    for n, lev in enumerate(sub.levels):
        if lev.label == d_k and _same_mod(lev.value, value, mod):
            v[n] = 1.0
            return v
    raise PreconditionError(f"subsystem {k} has no level ({value}, {d_k!r})")


def schrodinger_map(model: CompositeModel, k: str, d_k: str, m: int) -> np.ndarray:
    """``<g_m, d_k| (x) 1_ij`` as a (dim_ij x kin_dim) matrix in kinematical order."""
    bra = orientation_state(model, k, d_k, m).conj()[None, :]
    i, j = model.others(k)
    dij = model.subsystem(i).dimension * model.subsystem(j).dimension
    rf = np.kron(bra, np.eye(dij))
    out = np.empty_like(rf)
    out[:, frame_permutation(model, k)] = rf
    return out


def reduce_schrodinger(space: PhysicalSpace, psi, k: str, d_k: str, m: int) -> np.ndarray:
    """Condition a physical state on frame ``k`` being in orientation ``g_m``."""
    amp = psi.amplitudes if isinstance(psi, PhysicalState) else as_vector(psi)
    if amp.size != space.dim:
        raise DimensionError(f"state has {amp.size} amplitudes, space has dimension {space.dim}")
    return schrodinger_map(space.model, k, d_k, m) @ (space.embedding @ amp)


@dataclass(frozen=True, eq=False)
class FramePerspective:
    """Reduction of the physical space to the view of frame ``k`` in sector ``d_k``.

    ``reduce_matrix`` (reduced_dim x phys_dim) is the relational Heisenberg
    reduction, ``embed_matrix`` its inverse on the sector. Reduced basis
    vectors are kinematical product states of H_i (x) H_j, listed by
    ``reduced_basis_tags`` as scaled ``(c_i, d_i, c_j, d_j)``.
    """

    model: CompositeModel
    frame: str
    sector: str
    epsilon: int
    m: int
    reduce_matrix: np.ndarray
    embed_matrix: np.ndarray
    reduced_basis_tags: tuple[tuple[int, str, int, str], ...]
    pair_index: tuple[tuple[int, int], ...]

    @property
    def reduced_dim(self) -> int:
        return len(self.reduced_basis_tags)

    @property
    def pair_labels(self) -> tuple[str, str]:
        return self.model.others(self.frame)

    def reduce(self, psi) -> np.ndarray:
        amp = psi.amplitudes if isinstance(psi, PhysicalState) else as_vector(psi)
        return self.reduce_matrix @ amp

    def embed(self, vec) -> np.ndarray:
        return self.embed_matrix @ as_vector(vec)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@functools.lru_cache(maxsize=128)
def _build_perspective(space: PhysicalSpace, k: str, d_k: str, epsilon: int, m: int) -> FramePerspective:
    model = space.model
    i, j = model.others(k)
    si, sj = model.subsystem(i), model.subsystem(j)
    if space.dim == 0:
        empty = np.zeros((0, 0), dtype=np.complex128)
        return FramePerspective(model, k, d_k, epsilon, m, _readonly(empty), _readonly(empty), (), ())
    _check_epsilon(model, k, epsilon)
    kept = np.flatnonzero(np.diag(projector(model, k, d_k).matrix).real > 0.5)
    e = space.embedding

    eps_vec = _level_vector(model, k, epsilon, d_k)
    overlap = orientation_state(model, k, d_k, m).conj() @ eps_vec
    norm_g = 1.0 / overlap
    t = disentangler(model, k, epsilon).matrix
    full = norm_g * (schrodinger_map(model, k, d_k, m) @ (t @ e))
    mask = np.ones(full.shape[0], dtype=bool)
    mask[kept] = False
    if full.shape[0] and mask.any() and np.max(np.abs(full[mask]), initial=0.0) > LEAK_TOL:
        raise PreconditionError(f"reduction for frame {k} leaks outside the reduced basis; check the group size")
    reduce = full[kept, :]

    norm_eps = 1.0 / np.vdot(eps_vec, eps_vec)
    dij = si.dimension * sj.dimension
    lift_frame = np.kron(eps_vec[:, None], np.eye(dij))[:, kept]
    lift = np.empty_like(lift_frame)
    lift[frame_permutation(model, k), :] = lift_frame
    embed = norm_eps * (e.conj().T @ (inverse_disentangler(model, k, epsilon).matrix @ lift))

    pairs = tuple((int(n) // sj.dimension, int(n) % sj.dimension) for n in kept)
    tags = tuple(
        (si.levels[a].value, si.levels[a].label, sj.levels[b].value, sj.levels[b].label) for a, b in pairs
    )
    return FramePerspective(model, k, d_k, epsilon, m, _readonly(reduce), _readonly(embed), tags, pairs)


def build_perspective(
    space: PhysicalSpace, k: str, d_k: str | None = None, epsilon: int | None = None, m: int = 0
) -> FramePerspective:
    """Reduction/embedding maps for frame ``k``; defaults: first sector, canonical eps, m = 0."""
    model = space.model
    if d_k is None:
        d_k = model.subsystem(k).sectors[0]
    _check_sector(model, k, d_k)
    orientation_group(model).angle(m)
    if space.dim == 0:
        return _build_perspective(space, k, d_k, 0 if epsilon is None else int(epsilon), m)
    if epsilon is None:
        epsilon = default_epsilon(model, k)
    return _build_perspective(space, k, d_k, int(epsilon), m)


def sector_leak(space: PhysicalSpace, phys: np.ndarray, k: str, d_k: str) -> float:
    """Norm of the part of ``phys`` outside sector ``d_k`` of frame ``k``."""
    out = np.ones(space.dim, dtype=bool)
    out[list(space.sector_positions(k, d_k))] = False
    return float(np.linalg.norm(phys[out]))


def frame_change_matrix(space: PhysicalSpace, src: FramePerspective, dst: FramePerspective) -> np.ndarray:
    """``Lambda = R_dst o R_src^{-1}`` as a (dst.reduced_dim x src.reduced_dim) matrix."""
    return dst.reduce_matrix @ src.embed_matrix


def change_frame(space: PhysicalSpace, src: FramePerspective, dst: FramePerspective, psi_reduced) -> np.ndarray:
    """Map a reduced state from ``src``'s perspective to ``dst``'s.

    Raises :class:`OverlapError` when the embedded state has norm above
    ``LEAK_TOL`` outside the destination sector.
    """
    vec = as_vector(psi_reduced)
    if vec.size != src.reduced_dim:
        raise DimensionError(f"reduced state has {vec.size} entries, perspective {src.frame} has {src.reduced_dim}")
    if src is dst:
        return vec.copy()
    phys = src.embed_matrix @ vec
    leak = sector_leak(space, phys, dst.frame, dst.sector)
    if leak > LEAK_TOL * max(1.0, float(np.linalg.norm(phys))):
        raise OverlapError(
            f"state leaks norm {leak:.3e} outside sector {dst.sector!r} of frame {dst.frame}", leaked_norm=leak
        )
    return dst.reduce_matrix @ phys


def transport_operator(space: PhysicalSpace, src: FramePerspective, dst: FramePerspective, op) -> np.ndarray:
    """``Lambda X Lambda^{-1}`` for an operator on ``src``'s reduced space."""
    lam = frame_change_matrix(space, src, dst)
    lam_inv = frame_change_matrix(space, dst, src)
    return lam @ np.asarray(op, dtype=np.complex128) @ lam_inv


def reduced_local_operator(persp: FramePerspective, target: str, m) -> np.ndarray:
    """Compression of ``m`` acting on subsystem ``target`` to the reduced basis."""
    i, j = persp.pair_labels
    if target not in (i, j):
        raise DimensionError(f"{target} is the frame of this perspective")
    m = np.asarray(m, dtype=np.complex128)
    idx = np.array(persp.pair_index, dtype=np.int64).reshape(-1, 2)
    di = persp.model.subsystem(i).dimension
    dj = persp.model.subsystem(j).dimension
    want = di if target == i else dj
    if m.shape != (want, want):
        raise DimensionError(f"operator on {target} must be {want}x{want}")
    if target == i:
        same = idx[:, 1][:, None] == idx[:, 1][None, :]
        return m[np.ix_(idx[:, 0], idx[:, 0])] * same
    same = idx[:, 0][:, None] == idx[:, 0][None, :]
    return m[np.ix_(idx[:, 1], idx[:, 1])] * same


# --- Z_N canonical pair ------------------------------------------------------


def dft_matrix(n: int) -> np.ndarray:
    """``F[p, x] = exp(-2 pi i p x / n) / sqrt(n)``, momentum rows, position columns."""
    p = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(p, p) / n) / np.sqrt(n)


def cyclic_momentum(n: int) -> np.ndarray:
    return np.diag(np.arange(n).astype(np.complex128))


def cyclic_position(n: int) -> np.ndarray:
    """``q = F diag(0..n-1) F^dagger`` in the momentum basis."""
    f = dft_matrix(n)
    return f @ np.diag(np.arange(n).astype(np.complex128)) @ f.conj().T


def cyclic_reflection(n: int) -> np.ndarray:
    """``|p> -> |-p mod n>``."""
    r = np.zeros((n, n), dtype=np.complex128)
    r[(-np.arange(n)) % n, np.arange(n)] = 1.0
    return r
