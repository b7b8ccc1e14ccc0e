"""Concrete theories: spanning sets, complete states, purification, process bases.

The three backends supply everything the tomography layer treats as given:
fiducial families that span the state and effect spaces, a canonical complete
(full-rank / full-support) state, purifications for the quantum family, a
spanning set of the *operational* span of processes, and seeded generators
for property tests.

Operational process coordinates deserve a note.  A process is identified by
its action on all composites, not by its single-system transfer matrix (the
whole point of the real backend).  We therefore coordinatize a process by a
Choi-style object: the lifted action on the unnormalized maximally correlated
state ``sum_ij E_ij (x) E_ij``.  For the complex backend that object ranges
over all Hermitian matrices on B (x) A, giving span dimension (d_A d_B)^2; for
the real backend over real symmetric matrices; for the classical backend the
process matrix itself is the coordinate.  The real-backend span dimension is
computed numerically from a polarization family rather than asserted.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import numpy as np

from .core import (
    CLASSICAL,
    DEFAULT_TOL,
    QUANTUM,
    EffectVector,
    ProcessRep,
    StateVector,
    SystemDescriptor,
    apply_to_factors,
    contract,
    effect_from_coords,
    effect_from_matrix,
    kraus_process,
    matrix_to_coords,
    state_from_coords,
    state_from_matrix,
    state_from_vector,
    stochastic_process,
    tensor_states,
    tensor_systems,
)


def _rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# Spanning families and complete states
# ---------------------------------------------------------------------------

def _pure_family(n: int, complex_pairs: bool) -> list[np.ndarray]:
    """Vectors e_i, (e_i+e_j)/sqrt2 and, for the complex case, (e_i+i e_j)/sqrt2."""
    eye = np.eye(n)
    vecs = [eye[i] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            vecs.append((eye[i] + eye[j]) / np.sqrt(2.0))
    if complex_pairs:
        for i in range(n):
            for j in range(i + 1, n):
                vecs.append((eye[i] + 1j * eye[j]) / np.sqrt(2.0))
    return vecs


def spanning_states(sys: SystemDescriptor) -> list[StateVector]:
    """Deterministic states whose real span is the full state space."""
    if sys.backend == CLASSICAL:
        return [state_from_coords(sys, row) for row in np.eye(sys.total_dim)]
    vecs = _pure_family(sys.total_dim, complex_pairs=sys.backend == QUANTUM)
    return [state_from_vector(sys, v) for v in vecs]


def spanning_effects(sys: SystemDescriptor) -> list[EffectVector]:
    """Effects (rank-1 projectors / outcome indicators) spanning the effect space."""
    if sys.backend == CLASSICAL:
        return [effect_from_coords(sys, row) for row in np.eye(sys.total_dim)]
    vecs = _pure_family(sys.total_dim, complex_pairs=sys.backend == QUANTUM)
    return [effect_from_matrix(sys, np.outer(v, v.conj())) for v in vecs]


def complete_state(sys: SystemDescriptor) -> StateVector:
    """The maximally mixed (quantum family) or uniform (classical) state.

    Any full-rank state contains every deterministic state; this one is the
    canonical interior point.
    """
    n = sys.total_dim
    if sys.backend == CLASSICAL:
        return state_from_coords(sys, np.full(n, 1.0 / n))
    return state_from_matrix(sys, np.eye(n) / n)


def maximally_entangled_state(a: SystemDescriptor) -> StateVector:
    """Canonical two-copy correlated state: Bell-type for quantum, perfect copy for classical."""
    n = a.total_dim
    comp = tensor_systems(a, a)
    if a.backend == CLASSICAL:
        coords = np.zeros(n * n)
        for i in range(n):
            coords[i * n + i] = 1.0 / n
        return state_from_coords(comp, coords)
    vec = np.eye(n).reshape(-1) / np.sqrt(n)
    return state_from_vector(comp, vec)


def maximally_entangled_effect(a: SystemDescriptor) -> EffectVector:
    """The matching rank-1 effect (quantum) or equality indicator (classical)."""
    n = a.total_dim
    comp = tensor_systems(a, a)
    if a.backend == CLASSICAL:
        coords = np.zeros(n * n)
        for i in range(n):
            coords[i * n + i] = 1.0
        return effect_from_coords(comp, coords)
    vec = np.eye(n).reshape(-1) / np.sqrt(n)
    return effect_from_matrix(comp, np.outer(vec, vec.conj()))


def _canonical_signs(vecs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip eigenvector phases so the first nonzero entry is positive real."""
    out = vecs.copy()
    for i in range(out.shape[1]):
        col = out[:, i]
        nz = np.flatnonzero(np.abs(col) > tol)
        if nz.size:
            phase = col[nz[0]] / abs(col[nz[0]])
            out[:, i] = col / phase
    return out


def purify(rho: StateVector, *, tol: float = DEFAULT_TOL) -> StateVector:
    """A rank-1 extension of ``rho`` on A (x) R with R a copy of A.

    Built from the eigendecomposition with eigenvalues sorted descending, so
    the maximally mixed state purifies to the canonical maximally entangled
    state and pure states purify to products.
    """
    sys = rho.system
    if sys.backend == CLASSICAL:
        raise ValueError("the classical backend admits no purification")
    n = sys.total_dim
    vals, vecs = np.linalg.eigh(rho.matrix)
    order = np.argsort(-vals, kind="stable")  # descending, ties keep eigh order
    vals, vecs = vals[order], _canonical_signs(vecs[:, order])
    vals = np.clip(vals, 0.0, None)
    psi = np.zeros(n * n, dtype=complex)
    eye = np.eye(n)
    for i in range(n):
        psi += np.sqrt(vals[i]) * np.kron(vecs[:, i], eye[i])
    return state_from_vector(tensor_systems(sys, sys), psi, tol=tol)


# ---------------------------------------------------------------------------
# Operational process coordinates and process-space bases
# ---------------------------------------------------------------------------

def _choi_matrix(p: ProcessRep) -> np.ndarray:
    """Choi-style matrix on B (x) A from the lifted action on sum_ij E_ij (x) E_ij."""
    din = p.input.total_dim
    omega = np.eye(din).reshape(-1)  # sum_i |i>|i>
    choi = np.zeros((p.output.total_dim * din,) * 2, dtype=complex)
    for k in p.kraus:
        v = np.kron(k, np.eye(din)) @ omega
        choi += np.outer(v, v.conj())
    return choi


def process_coords(p: ProcessRep, *, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Coordinates of a process in the fixed operational basis of its type.

    Two processes are operationally indistinguishable exactly when their
    coordinates agree; for the quantum backends these are the coordinates of
    the Choi-style matrix on the output (x) input system.
    """
    if p.stoch is not None:
        return p.stoch.reshape(-1).copy()
    comp = tensor_systems(p.output, p.input)
    return matrix_to_coords(comp, _choi_matrix(p), tol=tol)


@dataclass(frozen=True)
class ProcessSpaceBasis:
    """A spanning family for the real span of processes of one type.

    ``processes`` are physical (single-Kraus or matrix-unit) processes whose
    operational coordinates (rows of ``elements``) are linearly independent
    and span the full operational span; ``dim`` is the numerically computed
    rank of ``elements``.
    """

    input: SystemDescriptor
    output: SystemDescriptor
    processes: tuple[ProcessRep, ...]
    elements: np.ndarray
    dim: int


def process_space_basis(
    a: SystemDescriptor,
    b: SystemDescriptor,
    *,
    seed: int | None = None,
    tol: float = DEFAULT_TOL,
) -> ProcessSpaceBasis:
    """Spanning set of the operational span of processes A -> B.

    Classical: matrix units (dimension d_A d_B).  Quantum family: single-Kraus
    processes over a polarization family of operators, so the span dimension
    is read off the rank of the coordinate matrix rather than assumed.  When a
    ``seed`` is given, a few random physical processes are appended and the
    rank is re-checked; a rank increase would mean the family fails to span.
    """
    basis = _process_space_basis_cached(a, b)
    if seed is not None:
        extra = [process_coords(random_process(a, b, s)) for s in _spawn_seeds(seed, 5)]
        if matrix_rank(np.vstack([basis.elements, np.stack(extra)])) != basis.dim:
            raise ValueError("random physical process escaped the computed span")
    return basis


@lru_cache(maxsize=None)
def _process_space_basis_cached(a: SystemDescriptor, b: SystemDescriptor) -> ProcessSpaceBasis:
    if a.backend != b.backend:
        raise ValueError("process space needs matching backends")
    if a.backend == CLASSICAL:
        procs = []
        for i in range(b.total_dim):
            for j in range(a.total_dim):
                m = np.zeros((b.total_dim, a.total_dim))
                m[i, j] = 1.0
                procs.append(stochastic_process(a, b, m))
    else:
        kops = []
        din, dout = a.total_dim, b.total_dim
        for i in range(dout):
            for j in range(din):
                m = np.zeros((dout, din), dtype=complex)
                m[i, j] = 1.0
                kops.append(m)
        flat = list(kops)
        m_tot = len(flat)
        for x in range(m_tot):
            for y in range(x + 1, m_tot):
                kops.append((flat[x] + flat[y]) / np.sqrt(2.0))
        if a.backend == QUANTUM:
            for x in range(m_tot):
                for y in range(x + 1, m_tot):
                    kops.append((flat[x] + 1j * flat[y]) / np.sqrt(2.0))
        procs = [kraus_process(a, b, [k]) for k in kops]
    elements = np.stack([process_coords(p) for p in procs])
    elements.flags.writeable = False
    dim = matrix_rank(elements)
    if dim != len(procs):
        raise ValueError("process basis construction produced dependent elements")
    return ProcessSpaceBasis(a, b, tuple(procs), elements, dim)


def matrix_rank(mat: np.ndarray, *, rel_tol: float = 1e-9) -> int:
    """Rank with a singular-value cutoff relative to the largest singular value."""
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def _spawn_seeds(seed: int, n: int) -> list[int]:
    rng = np.random.default_rng(seed)
    return [int(x) for x in rng.integers(0, 2**31, size=n)]


# ---------------------------------------------------------------------------
# Seeded generators
# ---------------------------------------------------------------------------

def random_state(sys: SystemDescriptor, seed: int | np.random.Generator | None) -> StateVector:
    """A full-rank-in-expectation random deterministic state (Wishart style)."""
    rng = _rng(seed)
    n = sys.total_dim
    if sys.backend == CLASSICAL:
        w = rng.random(n) + 1e-12
        return state_from_coords(sys, w / w.sum())
    g = rng.normal(size=(n, n))
    if sys.backend == QUANTUM:
        g = g + 1j * rng.normal(size=(n, n))
    w = g @ g.conj().T
    return state_from_matrix(sys, w / np.trace(w).real)


def random_pure_state(sys: SystemDescriptor, seed: int | np.random.Generator | None) -> StateVector:
    rng = _rng(seed)
    n = sys.total_dim
    if sys.backend == CLASSICAL:
        raise ValueError("classical states are never pure unless deterministic points")
    v = rng.normal(size=n)
    if sys.backend == QUANTUM:
        v = v + 1j * rng.normal(size=n)
    return state_from_vector(sys, v / np.linalg.norm(v))


def random_rank_deficient_state(
    sys: SystemDescriptor, seed: int | np.random.Generator | None
) -> StateVector:
    """A random deterministic state supported on a proper subspace."""
    rng = _rng(seed)
    n = sys.total_dim
    if n < 2:
        raise ValueError("need dimension at least 2 for a rank-deficient state")
    if sys.backend == CLASSICAL:
        w = rng.random(n) + 1e-12
        w[int(rng.integers(n))] = 0.0
        return state_from_coords(sys, w / w.sum())
    rank = int(rng.integers(1, n))
    g = rng.normal(size=(n, rank))
    if sys.backend == QUANTUM:
        g = g + 1j * rng.normal(size=(n, rank))
    w = g @ g.conj().T
    return state_from_matrix(sys, w / np.trace(w).real)


def random_process(
    a: SystemDescriptor, b: SystemDescriptor, seed: int | np.random.Generator | None
) -> ProcessRep:
    """A random deterministic process, Stinespring style for the quantum family.

    A Haar-ish isometry V: A -> B (x) E is drawn by QR of a Ginibre matrix
    (real orthogonal for the real backend, so the Kraus operators stay inside
    the entrywise-real class) and sliced along the environment.
    """
    rng = _rng(seed)
    if a.backend != b.backend:
        raise ValueError("random process needs matching backends")
    if a.backend == CLASSICAL:
        cols = np.stack([rng.dirichlet(np.ones(b.total_dim)) for _ in range(a.total_dim)], axis=1)
        return stochastic_process(a, b, cols)
    din, dout = a.total_dim, b.total_dim
    env = din  # any env with dout*env >= din works; this keeps Kraus counts small
    g = rng.normal(size=(dout * env, din))
    if a.backend == QUANTUM:
        g = g + 1j * rng.normal(size=(dout * env, din))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.real(np.diag(r)))  # fix QR sign gauge for reproducibility
    ops = [q[m * dout : (m + 1) * dout, :] for m in range(env)]
    return kraus_process(a, b, ops)


def random_povm(
    sys: SystemDescriptor, n_outcomes: int, seed: int | np.random.Generator | None
) -> list[EffectVector]:
    """A random measurement: effects summing to the deterministic one."""
    rng = _rng(seed)
    n = sys.total_dim
    if sys.backend == CLASSICAL:
        raw = rng.random((n_outcomes, n)) + 1e-12
        raw /= raw.sum(axis=0, keepdims=True)
        return [effect_from_coords(sys, row) for row in raw]
    mats = []
    for _ in range(n_outcomes):
        g = rng.normal(size=(n, n))
        if sys.backend == QUANTUM:
            g = g + 1j * rng.normal(size=(n, n))
        mats.append(g @ g.conj().T)
    total = sum(mats)
    vals, vecs = np.linalg.eigh(total)
    inv_sqrt = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.conj().T
    return [effect_from_matrix(sys, inv_sqrt @ m @ inv_sqrt) for m in mats]


def random_extension(
    rho: StateVector, env: SystemDescriptor, seed: int | np.random.Generator | None
) -> StateVector:
    """A random extension of ``rho`` on A (x) env (marginal over env equals rho).

    Quantum family: a random deterministic channel pushed onto the purifying
    system.  Classical: a random conditional distribution on the environment.
    """
    rng = _rng(seed)
    sys = rho.system
    if sys.backend == CLASSICAL:
        cond = np.stack(
            [rng.dirichlet(np.ones(env.total_dim)) for _ in range(sys.total_dim)], axis=1
        )
        joint = cond * rho.coords  # joint[e, a] = p(e|a) rho_a
        comp = tensor_systems(sys, env)
        return state_from_coords(comp, joint.T.reshape(-1))
    psi = purify(rho)
    ref = SystemDescriptor(sys.backend, psi.system.dims[sys.n_factors :])
    channel = random_process(ref, env, rng)
    return apply_to_factors(channel, psi, sys.n_factors)


def random_ensemble_extension(
    rho: StateVector,
    env: SystemDescriptor,
    seed: int | np.random.Generator | None,
    n_branches: int = 3,
) -> StateVector:
    """A separable extension sum_x sigma_x (x) tau_x with sum_x sigma_x = rho."""
    rng = _rng(seed)
    sys = rho.system
    if sys.backend == CLASSICAL:
        return random_extension(rho, env, rng)
    psi = purify(rho)
    ref = SystemDescriptor(sys.backend, psi.system.dims[sys.n_factors :])
    effects = random_povm(ref, n_branches, rng)
    ref_indices = list(range(sys.n_factors, psi.system.n_factors))
    pieces = []
    for e in effects:
        sigma = contract(psi, e, ref_indices)  # subnormalized branch of rho
        tau = random_state(env, rng)
        pieces.append(tensor_states(sigma, tau))
    coords = sum(p.coords for p in pieces)
    return state_from_coords(tensor_systems(sys, env), coords)
