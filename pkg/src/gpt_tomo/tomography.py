"""Process-equality levels, containment, tomographic ordering, faithfulness.

The four levels of identifying a process, from weakest to strongest:

1. equality on a fixed source (``equal_on_source``),
2. equality upon input of a state: on every source with that average state,
   equivalently on the face of the state (``equal_upon_input``),
3. equality on all extensions of a state (``equal_on_extensions``),
4. full equality as processes (``equal_processes``).

Tomographic ordering compares bipartite states by the kernels of their
lifting maps: ``Phi >= Psi`` when processes indistinguishable on Phi are
indistinguishable on Psi.  A state is dynamically faithful when its lifting
map is injective on the operational span of processes, i.e. the lifting
matrix has full rank against the process-space dimension.
"""

from __future__ import annotations

import numpy as np

from . import backends as bk
from .core import (
    CLASSICAL,
    DEFAULT_TOL,
    ProcessRep,
    StateVector,
    SystemDescriptor,
    Test,
    apply,
    apply_to_factors,
    lift,
    source_states,
    state_from_coords,
    state_from_matrix,
    tensor_effects,
    tensor_systems,
)
from .reports import CheckReport


# ---------------------------------------------------------------------------
# Equality level 1: on a source
# ---------------------------------------------------------------------------

def equal_on_source(p: ProcessRep, p2: ProcessRep, source: Test, tol: float = DEFAULT_TOL) -> bool:
    """True when the two processes agree on every branch state of the source."""
    _check_same_type(p, p2)
    if source.output != p.input:
        raise ValueError(f"source prepares {source.output}, processes expect {p.input}")
    for _, rho in source_states(source):
        if not _states_close(apply(p, rho), apply(p2, rho), tol):
            return False
    return True


def _check_same_type(p: ProcessRep, p2: ProcessRep) -> None:
    if p.input != p2.input or p.output != p2.output:
        raise ValueError(f"processes have different types: {p} vs {p2}")


def _states_close(a: StateVector, b: StateVector, tol: float) -> bool:
    return bool(np.abs(a.coords - b.coords).max() <= tol)


# ---------------------------------------------------------------------------
# Containment and complete states
# ---------------------------------------------------------------------------

CONTAINS_BISECTION_ITERS = 60


def contains(
    rho: StateVector, sigma: StateVector, *, tol: float = DEFAULT_TOL
) -> tuple[float, StateVector] | None:
    """Largest cancellative p with rho = p sigma + (1-p) tau, tau a state.

    Returns ``(p, tau)`` or ``None`` when infeasible.  Quantum criterion:
    the support of sigma must lie inside the support of rho; p is found by
    bisection on positive semidefiniteness of rho - p sigma.  Classical:
    coordinate ratios.
    """
    if rho.system != sigma.system:
        raise ValueError("containment compares states of one system")
    sys = rho.system
    if sys.backend == CLASSICAL:
        mask = sigma.coords > tol
        if not mask.any():
            return None
        if (rho.coords[mask] <= tol).any():
            return None
        p = float(np.min(rho.coords[mask] / sigma.coords[mask]))
        p = min(p, 1.0)
    else:
        r_mat, s_mat = rho.matrix, sigma.matrix
        # support test: sigma must vanish on the kernel of rho
        vals, vecs = np.linalg.eigh(r_mat)
        kernel = vecs[:, vals <= tol]
        if kernel.size and np.abs(kernel.conj().T @ s_mat @ kernel).max() > np.sqrt(tol):
            return None
        lo, hi = 0.0, 1.0
        # acceptance sits at eigensolver-noise level so the remainder state
        # cannot inherit an amplified negative eigenvalue after division
        for _ in range(CONTAINS_BISECTION_ITERS):
            mid = 0.5 * (lo + hi)
            if float(np.linalg.eigvalsh(r_mat - mid * s_mat).min()) >= -1e-14:
                lo = mid
            else:
                hi = mid
        p = lo
    if p <= tol:
        return None
    if p >= 1.0 - tol:
        return 1.0, rho
    if sys.backend == CLASSICAL:
        tau = state_from_coords(sys, (rho.coords - p * sigma.coords) / (1.0 - p), tol=np.sqrt(tol))
    else:
        tau = state_from_matrix(sys, (rho.matrix - p * sigma.matrix) / (1.0 - p), tol=np.sqrt(tol))
    return p, tau


def is_complete(rho: StateVector, *, tol: float = DEFAULT_TOL) -> bool:
    """Full rank (quantum) / full support (classical): contains every state."""
    if rho.kind != "deterministic":
        raise ValueError("completeness is defined for deterministic states")
    if rho.system.backend == CLASSICAL:
        return bool(rho.coords.min() > tol)
    return bool(np.linalg.eigvalsh(rho.matrix).min() > tol)


# ---------------------------------------------------------------------------
# Equality level 2: upon input of a state
# ---------------------------------------------------------------------------

def face_spanning_states(rho: StateVector, *, tol: float = DEFAULT_TOL) -> list[StateVector]:
    """Deterministic states spanning the face of rho (states contained in rho)."""
    sys = rho.system
    if sys.backend == CLASSICAL:
        support = np.flatnonzero(rho.coords > tol)
        out = []
        for i in support:
            coords = np.zeros(sys.total_dim)
            coords[i] = 1.0
            out.append(state_from_coords(sys, coords))
        return out
    vals, vecs = np.linalg.eigh(rho.matrix)
    support = vecs[:, vals > tol]
    r = support.shape[1]
    small = SystemDescriptor(sys.backend, (r,))
    out = []
    for small_state in bk.spanning_states(small):
        emb = support @ small_state.matrix @ support.conj().T
        out.append(state_from_matrix(sys, emb))
    return out


def equal_upon_input(
    p: ProcessRep, p2: ProcessRep, rho: StateVector, tol: float = DEFAULT_TOL
) -> bool:
    """Equality on every source averaging to rho: agreement on the face of rho."""
    _check_same_type(p, p2)
    if rho.system != p.input:
        raise ValueError("reference state must live on the process input")
    for sigma in face_spanning_states(rho, tol=tol):
        if not _states_close(apply(p, sigma), apply(p2, sigma), tol):
            return False
    return True


# ---------------------------------------------------------------------------
# Equality level 3: on the extensions of a state
# ---------------------------------------------------------------------------

def canonical_extension(rho: StateVector, *, tol: float = DEFAULT_TOL) -> StateVector:
    """The dominating extension used to decide equality on all extensions.

    Quantum family: a purification, which is a universal extension (every
    other extension is obtained from it by a deterministic transformation on
    the reference system).  Classical: the perfectly correlated extension
    with a display register, which plays the same role.
    """
    sys = rho.system
    if sys.backend == CLASSICAL:
        n = sys.total_dim
        joint = np.zeros(n * n)
        for i in range(n):
            joint[i * n + i] = rho.coords[i]
        return state_from_coords(tensor_systems(sys, sys), joint, tol=tol)
    return bk.purify(rho, tol=tol)


def equal_on_extensions(
    p: ProcessRep, p2: ProcessRep, rho: StateVector, tol: float = DEFAULT_TOL
) -> bool:
    """True when the lifted processes agree on every extension of rho.

    Decided on the canonical (universal) extension alone; agreement there
    propagates to every extension through the generating transformation,
    while disagreement is already a counterexample since the canonical
    extension is an extension.
    """
    _check_same_type(p, p2)
    if rho.system != p.input:
        raise ValueError("reference state must live on the process input")
    gamma = canonical_extension(rho, tol=tol)
    ref = SystemDescriptor(rho.system.backend, gamma.system.dims[rho.system.n_factors :])
    return _states_close(apply(lift(p, ref), gamma), apply(lift(p2, ref), gamma), tol)


# ---------------------------------------------------------------------------
# Tomographic ordering and dynamical faithfulness
# ---------------------------------------------------------------------------

def lifting_matrix(
    phi: StateVector, a: SystemDescriptor, basis: bk.ProcessSpaceBasis
) -> np.ndarray:
    """Columns are coordinates of (T_i (x) I) phi over the process basis.

    A process with basis coordinates c acts on phi as ``M c``; the kernel of
    M is the set of process-span elements invisible on phi.
    """
    k = a.n_factors
    if phi.system.dims[:k] != a.dims:
        raise ValueError(f"state on {phi.system} does not start with input {a}")
    cols = [apply_to_factors(t, phi, 0).coords for t in basis.processes]
    return np.stack(cols, axis=1)


def tomographically_geq(
    phi: StateVector,
    psi: StateVector,
    a: SystemDescriptor,
    b: SystemDescriptor,
    *,
    rel_tol: float = 1e-9,
) -> bool:
    """Kernel inclusion ker M_phi <= ker M_psi via stacked-rank comparison."""
    basis = bk.process_space_basis(a, b)
    m_phi = lifting_matrix(phi, a, basis)
    m_psi = lifting_matrix(psi, a, basis)
    r_phi = bk.matrix_rank(m_phi, rel_tol=rel_tol)
    return bk.matrix_rank(np.vstack([m_phi, m_psi]), rel_tol=rel_tol) == r_phi


def is_dynamically_faithful(
    phi: StateVector, a: SystemDescriptor, b: SystemDescriptor, *, rel_tol: float = 1e-9
) -> bool:
    """The lifting map on phi is injective on the span of processes A -> B."""
    basis = bk.process_space_basis(a, b)
    return bk.matrix_rank(lifting_matrix(phi, a, basis), rel_tol=rel_tol) == basis.dim


def find_faithful_state(a: SystemDescriptor) -> StateVector:
    """A dynamically faithful state for processes out of ``a``, any output.

    Quantum family: the purification of the complete state, i.e. the
    canonical maximally entangled state.  Classical: the perfectly
    correlated copy state.
    """
    if a.backend == CLASSICAL:
        return bk.maximally_entangled_state(a)
    return bk.purify(bk.complete_state(a))


def is_locally_tomographic(
    a: SystemDescriptor, b: SystemDescriptor, *, tol: float = DEFAULT_TOL
) -> CheckReport:
    """Do product effects span the composite effect space?

    Equivalent to the dimension law state_dim(A (x) B) = state_dim(A) *
    state_dim(B); both the dimension count and the numeric span rank of the
    product effects are reported.
    """
    comp = tensor_systems(a, b)
    dim_composite = comp.state_dim
    dim_product = a.state_dim * b.state_dim
    prod_effects = [
        tensor_effects(ea, eb) for ea in bk.spanning_effects(a) for eb in bk.spanning_effects(b)
    ]
    rank = bk.matrix_rank(np.stack([e.coords for e in prod_effects]))
    passed = dim_composite == dim_product and rank == dim_composite
    return CheckReport(
        check="local-tomography",
        passed=passed,
        tolerance=tol,
        details={
            "backend": a.backend,
            "dims": [list(a.dims), list(b.dims)],
            "dim_composite": dim_composite,
            "dim_product": dim_product,
            "product_effect_span_rank": rank,
        },
    )


# ---------------------------------------------------------------------------
# Equality level 4: full process equality
# ---------------------------------------------------------------------------

def equal_processes(p: ProcessRep, p2: ProcessRep, tol: float = DEFAULT_TOL) -> bool:
    """Operational equality: agreement of the lifted action on a faithful state.

    Equivalent to coordinate equality in the operational process basis.
    """
    _check_same_type(p, p2)
    phi = find_faithful_state(p.input)
    ref = SystemDescriptor(p.input.backend, phi.system.dims[p.input.n_factors :])
    return _states_close(apply(lift(p, ref), phi), apply(lift(p2, ref), phi), tol)
