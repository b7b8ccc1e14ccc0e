"""Theory-agnostic algebra of systems, states, effects, processes and tests.

Three concrete theories share this layer: finite classical probability
(``classical``), complex quantum theory (``quantum``), and real-vector-space
quantum theory (``real``).  States and effects are stored as real coordinate
vectors over a fixed orthonormal matrix basis per system (Hermitian for the
complex backend, real symmetric for the real one, the standard simplex basis
for the classical one), so the pairing of an effect with a state is a plain
dot product and the coordinate 2-norm equals the Hilbert-Schmidt norm.

Processes carry an explicit representation (Kraus list or substochastic
matrix) that lifts canonically to composites via ``K -> K (x) I``.  Keeping
the representation around, instead of a single-system transfer matrix, is
what keeps the real backend honest: there, the action on single systems does
not determine the action on composite systems.

Scalars are plain nonnegative floats; a scalar is cancellative exactly when
it is strictly positive.  All values are immutable after construction and
every operation is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import prod
from typing import Hashable, Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9

CLASSICAL = "classical"
QUANTUM = "quantum"
REAL = "real"
BACKENDS = (CLASSICAL, QUANTUM, REAL)
QUANTUM_FAMILY = (QUANTUM, REAL)

DETERMINISTIC = "deterministic"
SUBNORMALIZED = "subnormalized"
GENERAL = "general"


# ---------------------------------------------------------------------------
# Systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SystemDescriptor:
    """A physical system: a backend tag plus the ordered local dimensions.

    ``dims`` lists the dimension of each atomic factor (Hilbert dimension
    for the quantum backends, number of outcomes for the classical one).
    The trivial system has ``dims == ()``.
    """

    backend: str
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if any(int(d) != d or d < 1 for d in self.dims):
            raise ValueError(f"local dimensions must be positive integers, got {self.dims}")

    @property
    def total_dim(self) -> int:
        """Hilbert dimension (quantum family) or number of outcomes (classical)."""
        return prod(self.dims)

    @property
    def state_dim(self) -> int:
        """Dimension of the real span of states of this system."""
        n = self.total_dim
        if self.backend == CLASSICAL:
            return n
        if self.backend == QUANTUM:
            return n * n
        return n * (n + 1) // 2

    @property
    def effect_dim(self) -> int:
        return self.state_dim

    @property
    def is_trivial(self) -> bool:
        return self.total_dim == 1

    @property
    def factors(self) -> tuple["SystemDescriptor", ...]:
        return tuple(SystemDescriptor(self.backend, (d,)) for d in self.dims)

    @property
    def n_factors(self) -> int:
        return len(self.dims)

    def __repr__(self) -> str:
        return f"{self.backend}{list(self.dims)}"


def system(backend: str, *dims: int) -> SystemDescriptor:
    return SystemDescriptor(backend, tuple(dims))


def trivial(backend: str) -> SystemDescriptor:
    return SystemDescriptor(backend, ())


def tensor_systems(a: SystemDescriptor, b: SystemDescriptor) -> SystemDescriptor:
    if a.backend != b.backend:
        raise ValueError(f"cannot compose systems of mixed backends {a} and {b}")
    return SystemDescriptor(a.backend, a.dims + b.dims)


def subsystem(sys: SystemDescriptor, indices: Sequence[int]) -> SystemDescriptor:
    """The composite of the selected factors, in the given order."""
    for i in indices:
        if not 0 <= i < sys.n_factors:
            raise ValueError(f"factor selector {i} out of range for {sys}")
    return SystemDescriptor(sys.backend, tuple(sys.dims[i] for i in indices))


# ---------------------------------------------------------------------------
# Matrix bases and coordinate conversions
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal basis of n x n Hermitian matrices, shape (n*n, n, n).

    Order: diagonal units E_ii, then (E_ij + E_ji)/sqrt(2) for i < j, then
    (-i E_ij + i E_ji)/sqrt(2) for i < j.
    """
    mats = []
    for i in range(n):
        m = np.zeros((n, n), dtype=complex)
        m[i, i] = 1.0
        mats.append(m)
    for i in range(n):
        for j in range(i + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[i, j] = m[j, i] = 1.0 / np.sqrt(2.0)
            mats.append(m)
    for i in range(n):
        for j in range(i + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[i, j] = -1.0j / np.sqrt(2.0)
            m[j, i] = 1.0j / np.sqrt(2.0)
            mats.append(m)
    out = np.stack(mats)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def symmetric_basis(n: int) -> np.ndarray:
    """Orthonormal basis of n x n real symmetric matrices, shape (n(n+1)/2, n, n)."""
    mats = []
    for i in range(n):
        m = np.zeros((n, n))
        m[i, i] = 1.0
        mats.append(m)
    for i in range(n):
        for j in range(i + 1, n):
            m = np.zeros((n, n))
            m[i, j] = m[j, i] = 1.0 / np.sqrt(2.0)
            mats.append(m)
    out = np.stack(mats)
    out.flags.writeable = False
    return out


def matrix_basis(sys: SystemDescriptor) -> np.ndarray:
    if sys.backend == CLASSICAL:
        raise ValueError("classical systems have no matrix basis")
    n = sys.total_dim
    return hermitian_basis(n) if sys.backend == QUANTUM else symmetric_basis(n)


def coords_to_matrix(sys: SystemDescriptor, coords: np.ndarray) -> np.ndarray:
    """Reconstruct the density-operator-style matrix from basis coordinates."""
    basis = matrix_basis(sys)
    return np.tensordot(coords, basis, axes=(0, 0))


def matrix_to_coords(sys: SystemDescriptor, mat: np.ndarray, *, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Project a matrix onto the system's basis, checking it is representable.

    For the real backend this rejects matrices with imaginary or antisymmetric
    parts above ``tol``; that check is what catches processes that would leak
    out of the real-symmetric state space.
    """
    basis = matrix_basis(sys)
    coords = np.real(np.einsum("kab,ab->k", basis.conj(), mat))
    residue = np.abs(np.tensordot(coords, basis, axes=(0, 0)) - mat).max()
    if residue > tol:
        raise ValueError(
            f"matrix is not representable on {sys}: residue {residue:.3e} exceeds {tol:.1e}"
        )
    return coords


def _lock(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# States and effects
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StateVector:
    """An element of the real span of states, with cone membership enforced."""

    system: SystemDescriptor
    coords: np.ndarray
    kind: str  # DETERMINISTIC or SUBNORMALIZED

    @property
    def matrix(self) -> np.ndarray:
        """Density-matrix form (quantum family only)."""
        return coords_to_matrix(self.system, self.coords)

    @property
    def weight(self) -> float:
        """Pairing with the deterministic effect (trace / total probability)."""
        return float(np.dot(deterministic_effect(self.system).coords, self.coords))

    def __repr__(self) -> str:
        return f"StateVector({self.system}, kind={self.kind})"


@dataclass(frozen=True, eq=False)
class EffectVector:
    system: SystemDescriptor
    coords: np.ndarray
    kind: str  # DETERMINISTIC or GENERAL

    @property
    def matrix(self) -> np.ndarray:
        return coords_to_matrix(self.system, self.coords)

    def __repr__(self) -> str:
        return f"EffectVector({self.system}, kind={self.kind})"


def _min_eig(mat: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(mat).min())


def state_from_coords(sys: SystemDescriptor, coords: np.ndarray, *, tol: float = DEFAULT_TOL) -> StateVector:
    coords = np.asarray(coords, dtype=float)
    if coords.shape != (sys.state_dim,):
        raise ValueError(f"expected {sys.state_dim} coordinates for {sys}, got {coords.shape}")
    if sys.backend == CLASSICAL:
        if coords.min() < -tol:
            raise ValueError(f"classical state has negative entry {coords.min():.3e}")
        total = coords.sum()
    else:
        mat = coords_to_matrix(sys, coords)
        low = _min_eig(mat)
        if low < -tol:
            raise ValueError(f"state matrix has negative eigenvalue {low:.3e}")
        total = float(np.trace(mat).real)
    if total > 1.0 + tol:
        raise ValueError(f"state weight {total} exceeds 1")
    kind = DETERMINISTIC if abs(total - 1.0) <= tol else SUBNORMALIZED
    return StateVector(sys, _lock(coords), kind)


def state_from_matrix(sys: SystemDescriptor, mat: np.ndarray, *, tol: float = DEFAULT_TOL) -> StateVector:
    return state_from_coords(sys, matrix_to_coords(sys, mat, tol=tol), tol=tol)


def state_from_vector(sys: SystemDescriptor, vec: np.ndarray, *, tol: float = DEFAULT_TOL) -> StateVector:
    """Pure state from a (possibly subnormalized) Hilbert-space vector."""
    vec = np.asarray(vec)
    return state_from_matrix(sys, np.outer(vec, vec.conj()), tol=tol)


def effect_from_coords(sys: SystemDescriptor, coords: np.ndarray, *, tol: float = DEFAULT_TOL) -> EffectVector:
    coords = np.asarray(coords, dtype=float)
    if coords.shape != (sys.effect_dim,):
        raise ValueError(f"expected {sys.effect_dim} coordinates for {sys}, got {coords.shape}")
    if sys.backend == CLASSICAL:
        if coords.min() < -tol or coords.max() > 1.0 + tol:
            raise ValueError("classical effect entries must lie in [0, 1]")
        det = bool(np.allclose(coords, 1.0, atol=tol))
    else:
        mat = coords_to_matrix(sys, coords)
        if _min_eig(mat) < -tol:
            raise ValueError("effect matrix is not positive semidefinite")
        if _min_eig(np.eye(sys.total_dim) - mat) < -tol:
            raise ValueError("effect matrix exceeds the identity")
        det = bool(np.allclose(mat, np.eye(sys.total_dim), atol=tol))
    kind = DETERMINISTIC if det else GENERAL
    return EffectVector(sys, _lock(coords), kind)


def effect_from_matrix(sys: SystemDescriptor, mat: np.ndarray, *, tol: float = DEFAULT_TOL) -> EffectVector:
    return effect_from_coords(sys, matrix_to_coords(sys, mat, tol=tol), tol=tol)


def deterministic_effect(sys: SystemDescriptor) -> EffectVector:
    """The unique deterministic effect (causal backends have exactly one)."""
    if sys.backend == CLASSICAL:
        coords = np.ones(sys.state_dim)
    else:
        coords = matrix_to_coords(sys, np.eye(sys.total_dim))
    return EffectVector(sys, _lock(coords), DETERMINISTIC)


def pair(e: EffectVector, s: StateVector) -> float:
    """Probability of the effect on the state (a closed-diagram scalar)."""
    if e.system != s.system:
        raise ValueError(f"effect on {e.system} cannot meet state on {s.system}")
    return float(np.dot(e.coords, s.coords))


def tensor_states(s: StateVector, t: StateVector, *, tol: float = DEFAULT_TOL) -> StateVector:
    sys = tensor_systems(s.system, t.system)
    if s.system.backend == CLASSICAL:
        return state_from_coords(sys, np.kron(s.coords, t.coords), tol=tol)
    return state_from_matrix(sys, np.kron(s.matrix, t.matrix), tol=tol)


def tensor_effects(e: EffectVector, f: EffectVector, *, tol: float = DEFAULT_TOL) -> EffectVector:
    sys = tensor_systems(e.system, f.system)
    if e.system.backend == CLASSICAL:
        return effect_from_coords(sys, np.kron(e.coords, f.coords), tol=tol)
    return effect_from_matrix(sys, np.kron(e.matrix, f.matrix), tol=tol)


# ---------------------------------------------------------------------------
# Processes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProcessRep:
    """A physical transformation with a representation that lifts to composites.

    Quantum-family processes hold a Kraus list; classical ones a substochastic
    matrix.  For the real backend every Kraus operator must be entrywise real
    or entrywise purely imaginary: that class is closed under lifting and
    contains both counterexample processes, though it is documented as a
    sufficient class rather than a characterization.
    """

    input: SystemDescriptor
    output: SystemDescriptor
    kraus: tuple[np.ndarray, ...] | None
    stoch: np.ndarray | None
    deterministic: bool
    reversible: bool

    @property
    def backend(self) -> str:
        return self.input.backend

    def __repr__(self) -> str:
        rep = "stoch" if self.stoch is not None else f"kraus[{len(self.kraus)}]"
        return f"ProcessRep({self.input} -> {self.output}, {rep})"


def _is_real_or_imaginary(k: np.ndarray, tol: float) -> bool:
    return bool(np.abs(k.imag).max(initial=0.0) <= tol or np.abs(k.real).max(initial=0.0) <= tol)


def kraus_process(
    input: SystemDescriptor,
    output: SystemDescriptor,
    kraus: Iterable[np.ndarray],
    *,
    tol: float = DEFAULT_TOL,
) -> ProcessRep:
    if input.backend != output.backend:
        raise ValueError("process input and output must share a backend")
    if input.backend == CLASSICAL:
        raise ValueError("classical processes use stochastic matrices, not Kraus lists")
    din, dout = input.total_dim, output.total_dim
    ops = tuple(np.asarray(k, dtype=complex).reshape(dout, din) for k in kraus)
    if not ops:
        raise ValueError("a Kraus list needs at least one operator")
    if input.backend == REAL:
        for k in ops:
            if not _is_real_or_imaginary(k, tol):
                raise ValueError(
                    "real-backend Kraus operators must be entrywise real or entrywise purely imaginary"
                )
    gram = sum(k.conj().T @ k for k in ops)
    if _min_eig(np.eye(din) - gram) < -tol:
        raise ValueError("Kraus list is not physical: sum K^dag K exceeds the identity")
    det = bool(np.allclose(gram, np.eye(din), atol=tol))
    rev = bool(
        det
        and len(ops) == 1
        and din == dout
        and np.allclose(ops[0] @ ops[0].conj().T, np.eye(dout), atol=tol)
    )
    ops = tuple(_freeze_complex(k) for k in ops)
    return ProcessRep(input, output, ops, None, det, rev)


def stochastic_process(
    input: SystemDescriptor,
    output: SystemDescriptor,
    matrix: np.ndarray,
    *,
    tol: float = DEFAULT_TOL,
) -> ProcessRep:
    if input.backend != CLASSICAL or output.backend != CLASSICAL:
        raise ValueError("stochastic matrices represent classical processes only")
    mat = np.asarray(matrix, dtype=float).reshape(output.total_dim, input.total_dim)
    if mat.min() < -tol:
        raise ValueError("stochastic matrix has a negative entry")
    sums = mat.sum(axis=0)
    if sums.max() > 1.0 + tol:
        raise ValueError("stochastic matrix has a column summing above 1")
    det = bool(np.allclose(sums, 1.0, atol=tol))
    rev = bool(
        det
        and mat.shape[0] == mat.shape[1]
        and np.allclose(mat @ mat.T, np.eye(mat.shape[0]), atol=tol)
    )
    return ProcessRep(input, output, None, _lock(mat), det, rev)


def _freeze_complex(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.flags.writeable = False
    return out


def identity_process(sys: SystemDescriptor) -> ProcessRep:
    if sys.backend == CLASSICAL:
        return stochastic_process(sys, sys, np.eye(sys.total_dim))
    return kraus_process(sys, sys, [np.eye(sys.total_dim)])


def preparation_process(state: StateVector, *, tol: float = DEFAULT_TOL) -> ProcessRep:
    """The state as a process from the trivial system (columns of sqrt eigenpairs)."""
    triv = trivial(state.system.backend)
    if state.system.backend == CLASSICAL:
        return stochastic_process(triv, state.system, state.coords.reshape(-1, 1))
    vals, vecs = np.linalg.eigh(state.matrix)
    cols = [np.sqrt(v) * vecs[:, i : i + 1] for i, v in enumerate(vals) if v > tol]
    if not cols:
        cols = [np.zeros((state.system.total_dim, 1))]
    return kraus_process(triv, state.system, cols)


def effect_process(effect: EffectVector, *, tol: float = DEFAULT_TOL) -> ProcessRep:
    """The effect as a process to the trivial system (rows of sqrt eigenpairs)."""
    triv = trivial(effect.system.backend)
    if effect.system.backend == CLASSICAL:
        return stochastic_process(effect.system, triv, effect.coords.reshape(1, -1))
    vals, vecs = np.linalg.eigh(effect.matrix)
    rows = [np.sqrt(v) * vecs[:, i : i + 1].conj().T for i, v in enumerate(vals) if v > tol]
    if not rows:
        rows = [np.zeros((1, effect.system.total_dim))]
    return kraus_process(effect.system, triv, rows)


def trivial_state(backend: str) -> StateVector:
    return state_from_coords(trivial(backend), np.ones(1))


def apply(p: ProcessRep, s: StateVector, *, tol: float = DEFAULT_TOL) -> StateVector:
    if p.input != s.system:
        raise ValueError(f"process expects input {p.input}, state lives on {s.system}")
    if p.stoch is not None:
        return state_from_coords(p.output, p.stoch @ s.coords, tol=tol)
    mat = s.matrix
    out = sum(k @ mat @ k.conj().T for k in p.kraus)
    return state_from_matrix(p.output, out, tol=tol)


def compose(after: ProcessRep, before: ProcessRep, *, tol: float = DEFAULT_TOL) -> ProcessRep:
    """Sequential composition: ``compose(after, before)`` runs ``before`` first."""
    if before.output != after.input:
        raise ValueError(
            f"cannot compose: first process outputs {before.output}, second expects {after.input}"
        )
    if before.stoch is not None:
        return stochastic_process(before.input, after.output, after.stoch @ before.stoch, tol=tol)
    ops = [k2 @ k1 for k2 in after.kraus for k1 in before.kraus]
    return kraus_process(before.input, after.output, ops, tol=tol)


def tensor_processes(p: ProcessRep, q: ProcessRep, *, tol: float = DEFAULT_TOL) -> ProcessRep:
    if p.backend != q.backend:
        raise ValueError("cannot compose processes of mixed backends in parallel")
    inp = tensor_systems(p.input, q.input)
    out = tensor_systems(p.output, q.output)
    if p.stoch is not None:
        return stochastic_process(inp, out, np.kron(p.stoch, q.stoch), tol=tol)
    ops = [np.kron(a, b) for a in p.kraus for b in q.kraus]
    return kraus_process(inp, out, ops, tol=tol)


def lift(p: ProcessRep, anc: SystemDescriptor, *, tol: float = DEFAULT_TOL) -> ProcessRep:
    """Lift ``p: A -> B`` to ``A (x) C -> B (x) C`` acting locally on the left block."""
    if p.backend != anc.backend:
        raise ValueError("ancilla backend must match the process backend")
    return tensor_processes(p, identity_process(anc), tol=tol)


def scale_process(p_scalar: float, proc: ProcessRep, *, tol: float = DEFAULT_TOL) -> ProcessRep:
    """Multiply a process by a probability (coarse-graining / randomization weight)."""
    if not 0.0 <= p_scalar <= 1.0 + tol:
        raise ValueError(f"scale factor must be a probability, got {p_scalar}")
    if proc.stoch is not None:
        return stochastic_process(proc.input, proc.output, p_scalar * proc.stoch, tol=tol)
    root = np.sqrt(p_scalar)
    return kraus_process(proc.input, proc.output, [root * k for k in proc.kraus], tol=tol)


def add_processes(procs: Sequence[ProcessRep], *, tol: float = DEFAULT_TOL) -> ProcessRep:
    """Coarse-grained sum of same-type processes (Kraus lists concatenate)."""
    first = procs[0]
    if any(p.input != first.input or p.output != first.output for p in procs):
        raise ValueError("can only sum processes of a common type")
    if first.stoch is not None:
        return stochastic_process(first.input, first.output, sum(p.stoch for p in procs), tol=tol)
    ops: list[np.ndarray] = []
    for p in procs:
        ops.extend(p.kraus)
    return kraus_process(first.input, first.output, ops, tol=tol)


def apply_to_factors(
    p: ProcessRep, s: StateVector, start: int, *, tol: float = DEFAULT_TOL
) -> StateVector:
    """Apply ``p`` to the contiguous factor block of ``s`` beginning at ``start``."""
    sys = s.system
    k = p.input.n_factors
    if p.backend != sys.backend or sys.dims[start : start + k] != p.input.dims:
        raise ValueError(
            f"factors {start}..{start + k - 1} of {sys} do not match process input {p.input}"
        )
    left = prod(sys.dims[:start])
    right = prod(sys.dims[start + k :])
    out_sys = SystemDescriptor(sys.backend, sys.dims[:start] + p.output.dims + sys.dims[start + k :])
    if p.stoch is not None:
        big = np.kron(np.kron(np.eye(left), p.stoch), np.eye(right))
        return state_from_coords(out_sys, big @ s.coords, tol=tol)
    mat = s.matrix
    out = np.zeros((out_sys.total_dim, out_sys.total_dim), dtype=complex)
    for k_op in p.kraus:
        big = np.kron(np.kron(np.eye(left), k_op), np.eye(right))
        out += big @ mat @ big.conj().T
    return state_from_matrix(out_sys, out, tol=tol)


# ---------------------------------------------------------------------------
# Marginals and contractions
# ---------------------------------------------------------------------------

def _permute_matrix(mat: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    k = len(dims)
    tens = mat.reshape(*dims, *dims)
    axes = list(perm) + [k + i for i in perm]
    new = tens.transpose(axes)
    n = prod(dims)
    return new.reshape(n, n)


def _permute_vector(vec: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    return vec.reshape(*dims).transpose(perm).reshape(-1)


def permute_factors(s: StateVector, perm: Sequence[int], *, tol: float = DEFAULT_TOL) -> StateVector:
    sys = s.system
    if sorted(perm) != list(range(sys.n_factors)):
        raise ValueError(f"{perm} is not a permutation of {sys.n_factors} factors")
    out_sys = subsystem(sys, perm)
    if sys.backend == CLASSICAL:
        return state_from_coords(out_sys, _permute_vector(s.coords, sys.dims, perm), tol=tol)
    return state_from_matrix(out_sys, _permute_matrix(s.matrix, sys.dims, perm), tol=tol)


def _contract_matrix(
    mat: np.ndarray, dims: Sequence[int], effect: np.ndarray, on: Sequence[int]
) -> np.ndarray:
    """Tr_on[(I (x) effect) mat] after permuting the contracted factors last."""
    keep = [i for i in range(len(dims)) if i not in on]
    perm = keep + list(on)
    mat = _permute_matrix(mat, dims, perm)
    dk = prod(dims[i] for i in keep)
    dd = prod(dims[i] for i in on)
    m4 = mat.reshape(dk, dd, dk, dd)
    return np.einsum("xy,aybx->ab", effect, m4)


def _contract_vector(
    vec: np.ndarray, dims: Sequence[int], effect: np.ndarray, on: Sequence[int]
) -> np.ndarray:
    keep = [i for i in range(len(dims)) if i not in on]
    perm = keep + list(on)
    vec = _permute_vector(vec, dims, perm)
    dk = prod(dims[i] for i in keep)
    dd = prod(dims[i] for i in on)
    return vec.reshape(dk, dd) @ effect


def contract(
    s: StateVector, effect: EffectVector, on: Sequence[int], *, tol: float = DEFAULT_TOL
) -> StateVector:
    """Apply an effect to the selected factors, returning the residual state.

    The effect's system must equal the composite of ``s``'s factors at the
    given indices, in that order.  The result is subnormalized in general.
    """
    sys = s.system
    on = list(on)
    if effect.system != subsystem(sys, on):
        raise ValueError(
            f"effect lives on {effect.system}, selected factors form {subsystem(sys, on)}"
        )
    keep = [i for i in range(sys.n_factors) if i not in on]
    out_sys = subsystem(sys, keep)
    if sys.backend == CLASSICAL:
        out = _contract_vector(s.coords, sys.dims, effect.coords, on)
        return state_from_coords(out_sys, out, tol=tol)
    out = _contract_matrix(s.matrix, sys.dims, effect.matrix, on)
    return state_from_matrix(out_sys, out, tol=tol)


def marginal(
    s: StateVector,
    keep: int | Sequence[int],
    effect: EffectVector | None = None,
    *,
    tol: float = DEFAULT_TOL,
) -> StateVector:
    """Discard the unselected factors with a deterministic effect.

    By definition of an extension, the marginal of any extension of ``rho``
    equals ``rho``.  A custom deterministic effect may be supplied for the
    discarded block; it defaults to the unique one.
    """
    if isinstance(keep, int):
        keep = [keep]
    keep = list(keep)
    for i in keep:
        if not 0 <= i < s.system.n_factors:
            raise ValueError(f"factor selector {i} out of range for {s.system}")
    on = [i for i in range(s.system.n_factors) if i not in keep]
    if effect is None:
        effect = deterministic_effect(subsystem(s.system, on))
    elif effect.kind != DETERMINISTIC:
        raise ValueError("marginal requires a deterministic effect on the discarded factors")
    reduced = contract(s, effect, on, tol=tol)
    if keep != sorted(keep):
        order = list(np.argsort(np.argsort(keep)))
        reduced = permute_factors(reduced, order, tol=tol)
    return reduced


# ---------------------------------------------------------------------------
# Tests (outcome-labelled families of processes)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Test:
    """A list of transformations of a common type, labelled by outcomes.

    Coarse-graining over all branches must yield a deterministic process;
    this is validated at construction.
    """

    branches: tuple[tuple[Hashable, ProcessRep], ...]
    _validated: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.branches:
            raise ValueError("a test needs at least one branch")
        labels = [lab for lab, _ in self.branches]
        if len(set(labels)) != len(labels):
            raise ValueError("test outcome labels must be distinct")
        procs = [p for _, p in self.branches]
        first = procs[0]
        if any(p.input != first.input or p.output != first.output for p in procs):
            raise ValueError("all branches of a test must share input and output")
        if not self._validated:
            total = add_processes(procs)
            if not total.deterministic:
                raise ValueError("coarse-graining over all branches must be deterministic")

    @property
    def input(self) -> SystemDescriptor:
        return self.branches[0][1].input

    @property
    def output(self) -> SystemDescriptor:
        return self.branches[0][1].output

    def outcomes(self) -> tuple[Hashable, ...]:
        return tuple(lab for lab, _ in self.branches)

    def branch(self, label: Hashable) -> ProcessRep:
        for lab, p in self.branches:
            if lab == label:
                return p
        raise KeyError(label)


def preparation_test(
    states: Sequence[StateVector], labels: Sequence[Hashable] | None = None
) -> Test:
    """A source: an outcome-labelled family of subnormalized preparations."""
    if labels is None:
        labels = list(range(len(states)))
    branches = tuple((lab, preparation_process(s)) for lab, s in zip(labels, states))
    return Test(branches)


def source_states(source: Test) -> list[tuple[Hashable, StateVector]]:
    """The heralded states of a preparation test."""
    if not source.input.is_trivial:
        raise ValueError("not a preparation test: input system is not trivial")
    unit = trivial_state(source.input.backend)
    return [(lab, apply(p, unit)) for lab, p in source.branches]


def coarse_grain(test: Test, partition: Sequence[Sequence[Hashable]]) -> Test:
    """Join outcomes according to a disjoint cover of the outcome set."""
    seen: set[Hashable] = set()
    for block in partition:
        for lab in block:
            if lab in seen:
                raise ValueError(f"invalid partition: outcome {lab!r} appears twice")
            seen.add(lab)
    if seen != set(test.outcomes()):
        raise ValueError("invalid partition: blocks must cover the outcome set exactly")
    branches = []
    for block in partition:
        summed = add_processes([test.branch(lab) for lab in block])
        label = block[0] if len(block) == 1 else tuple(block)
        branches.append((label, summed))
    return Test(tuple(branches), _validated=True)


def randomize(tests: Sequence[Test], probs: Sequence[float], *, tol: float = DEFAULT_TOL) -> Test:
    """Randomized test: branch ``x`` of test ``i`` becomes ``p_i * branch`` at ``(i, x)``."""
    if len(tests) != len(probs):
        raise ValueError(f"got {len(tests)} tests but {len(probs)} probabilities")
    check_prob_vector(probs, tol=tol)
    first = tests[0]
    if any(t.input != first.input or t.output != first.output for t in tests):
        raise ValueError("randomized tests must share a type")
    branches = []
    for i, (t, p) in enumerate(zip(tests, probs)):
        for lab, proc in t.branches:
            branches.append(((i, lab), scale_process(p, proc)))
    return Test(tuple(branches), _validated=True)


def check_prob_vector(probs: Sequence[float], *, tol: float = DEFAULT_TOL) -> None:
    arr = np.asarray(probs, dtype=float)
    if arr.min(initial=0.0) < -tol:
        raise ValueError("probabilities must be nonnegative")
    if abs(arr.sum() - 1.0) > tol:
        raise ValueError(f"probabilities must sum to 1, got {arr.sum()}")


def mixture(
    states: Sequence[StateVector], probs: Sequence[float], *, tol: float = DEFAULT_TOL
) -> StateVector:
    """The coarse-graining of the randomized preparation: sum p_i state_i."""
    check_prob_vector(probs, tol=tol)
    first = states[0]
    if any(s.system != first.system for s in states):
        raise ValueError("mixture requires states of a common system")
    coords = sum(p * s.coords for p, s in zip(probs, states))
    return state_from_coords(first.system, coords, tol=tol)
