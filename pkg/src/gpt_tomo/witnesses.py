"""Constructive witnesses: teleportation, universal extensions, purification.

Every witness-producing function re-checks its output by an independent
contraction before returning it, so a returned witness is already verified
at the construction tolerance.

The chain realized here: a teleportation pair (Phi, E) with a cancellative
scalar p turns Phi into the universal extension of a complete state chi,
with the generating transformation read off by contracting E against the
target extension.  Independently, for the quantum family any purification is
a universal extension with scalar 1: two purifications of the same state are
connected by a reversible transformation on the purifying system, and
discarding the surplus factors of the connection yields the deterministic
generating channel.
"""

from __future__ import annotations

from math import prod

import numpy as np
from scipy.linalg import null_space

from . import backends as bk
from .core import (
    CLASSICAL,
    REAL,
    DEFAULT_TOL,
    EffectVector,
    ProcessRep,
    StateVector,
    SystemDescriptor,
    _contract_matrix,
    apply_to_factors,
    contract,
    deterministic_effect,
    kraus_process,
    preparation_test,
    randomize,
    stochastic_process,
    subsystem,
    tensor_states,
    tensor_systems,
)
from .reports import CheckReport
from .tomography import equal_on_source, equal_processes, is_locally_tomographic


# ---------------------------------------------------------------------------
# Conclusive teleportation
# ---------------------------------------------------------------------------

def teleportation_witness(a: SystemDescriptor) -> tuple[StateVector, EffectVector, float]:
    """A state on A (x) R, an effect on R (x) A and a scalar p realizing p * identity.

    Quantum family: the maximally entangled pair with p = 1/d^2.  Classical:
    the perfect-copy state with the equality effect and p = 1/d.
    """
    phi = bk.maximally_entangled_state(a)
    effect = bk.maximally_entangled_effect(a)
    d = a.total_dim
    p = 1.0 / d if a.backend == CLASSICAL else 1.0 / d**2
    if not verify_teleportation(phi, effect, p):
        raise AssertionError("teleportation witness failed its own contraction check")
    return phi, effect, p


def teleport_map(
    phi: StateVector, effect: EffectVector, rho: StateVector, *, tol: float = DEFAULT_TOL
) -> StateVector:
    """The bent-wire map: feed rho beside Phi and apply the effect on (R, A')."""
    big = tensor_states(phi, rho, tol=tol)
    half = phi.system.n_factors // 2
    on = list(range(half, big.system.n_factors))
    return contract(big, effect, on, tol=tol)


def verify_teleportation(
    phi: StateVector, effect: EffectVector, p: float, tol: float = DEFAULT_TOL
) -> bool:
    """Check the bent-wire identity rho -> p rho on a spanning family of inputs."""
    half = phi.system.n_factors // 2
    a = subsystem(phi.system, range(half))
    for rho in bk.spanning_states(a):
        out = teleport_map(phi, effect, rho, tol=tol)
        if np.abs(out.coords - p * rho.coords).max() > tol:
            return False
    return True


def chi_state(
    phi: StateVector,
    omega: StateVector,
    t_effect: EffectVector | None = None,
    *,
    tol: float = DEFAULT_TOL,
) -> StateVector:
    """The complete state whose universal extension is the teleportation state.

    Contract Phi (x) omega with the coarse-grained binary effect T = E + F on
    (R, A'); with the deterministic T this is just the marginal of Phi.
    """
    big = tensor_states(phi, omega, tol=tol)
    half = phi.system.n_factors // 2
    on = list(range(half, big.system.n_factors))
    if t_effect is None:
        t_effect = deterministic_effect(subsystem(big.system, on))
    return contract(big, t_effect, on, tol=tol)


# ---------------------------------------------------------------------------
# Universal extensions
# ---------------------------------------------------------------------------

def _matrix_units(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        for j in range(n):
            m = np.zeros((n, n), dtype=complex)
            m[i, j] = 1.0
            out.append(m)
    return out


def _kraus_from_choi(
    inp: SystemDescriptor, out: SystemDescriptor, choi: np.ndarray, *, tol: float = DEFAULT_TOL
) -> ProcessRep:
    """Recover a Kraus list from a Choi-style matrix on out (x) in.

    For the real backend the Choi matrix must come out real symmetric, which
    makes the extracted Kraus operators entrywise real.
    """
    if inp.backend == REAL:
        if np.abs(choi.imag).max() > tol or np.abs(choi - choi.T).max() > np.sqrt(tol):
            raise ValueError("real-backend construction produced a non-symmetric Choi matrix")
        choi = 0.5 * (choi.real + choi.real.T)
    vals, vecs = np.linalg.eigh(choi)
    if vals.min() < -np.sqrt(tol):
        raise ValueError(f"Choi matrix is not positive semidefinite: min eig {vals.min():.3e}")
    din, dout = inp.total_dim, out.total_dim
    ops = []
    for i, v in enumerate(vals):
        if v > tol:
            ops.append(np.sqrt(v) * vecs[:, i].reshape(dout, din))
    if not ops:
        ops = [np.zeros((dout, din))]
    return kraus_process(inp, out, ops, tol=np.sqrt(tol))


def extension_from_teleportation(
    phi: StateVector,
    effect: EffectVector,
    gamma: StateVector,
    *,
    tol: float = DEFAULT_TOL,
) -> tuple[float, ProcessRep]:
    """Build (p, T) with p * Gamma = (I (x) T) Phi from a teleportation pair.

    ``T: R -> E`` contracts the teleportation effect against Gamma: feeding a
    reference state r, the effect absorbs (r, A-part of Gamma) and leaves the
    E-part, scaled so the bent-wire identity turns Phi into p * Gamma.
    """
    half = phi.system.n_factors // 2
    a = subsystem(phi.system, range(half))
    r_sys = subsystem(phi.system, range(half, phi.system.n_factors))
    env = SystemDescriptor(a.backend, gamma.system.dims[a.n_factors :])
    d = a.total_dim
    p = 1.0 / d if a.backend == CLASSICAL else 1.0 / d**2

    if a.backend == CLASSICAL:
        # T[e, r] = sum_a effect[(r, a)] gamma[(a, e)]
        e_mat = effect.coords.reshape(r_sys.total_dim, d)
        g_mat = gamma.coords.reshape(d, env.total_dim)
        t_mat = (e_mat @ g_mat).T
        t_proc = stochastic_process(r_sys, env, t_mat, tol=np.sqrt(tol))
    else:
        dims = [r_sys.total_dim, d, env.total_dim]
        e_big = effect.matrix
        g_big = gamma.matrix
        n_r, n_e = r_sys.total_dim, env.total_dim
        choi = np.zeros((n_e * n_r, n_e * n_r), dtype=complex)
        for idx, unit in enumerate(_matrix_units(n_r)):
            image = _contract_matrix(np.kron(unit, g_big), dims, e_big, [0, 1])
            i, j = divmod(idx, n_r)
            choi += np.kron(image, np.outer(np.eye(n_r)[i], np.eye(n_r)[j]))
        t_proc = _kraus_from_choi(r_sys, env, choi, tol=tol)

    if not verify_universal_extension(phi, gamma, p, t_proc, tol=np.sqrt(tol)):
        raise AssertionError("teleportation-based extension witness failed verification")
    return p, t_proc


def verify_universal_extension(
    psi: StateVector,
    gamma: StateVector,
    p: float,
    t_proc: ProcessRep,
    *,
    tol: float = DEFAULT_TOL,
) -> bool:
    """Check p * Gamma == (I (x) T) Psi and that T is physical.

    ``psi`` and ``gamma`` must share their first block of factors (the system
    being extended); T maps the remaining factors of psi to those of gamma.
    """
    if p <= 0.0:
        return False
    n_keep = psi.system.n_factors - t_proc.input.n_factors
    moved = apply_to_factors(t_proc, psi, n_keep, tol=np.sqrt(tol))
    if moved.system != gamma.system:
        raise ValueError(f"witness maps onto {moved.system}, extension lives on {gamma.system}")
    return bool(np.abs(moved.coords - p * gamma.coords).max() <= tol)


# ---------------------------------------------------------------------------
# Purification symmetry
# ---------------------------------------------------------------------------

def _pure_vector(s: StateVector, *, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Extract the Hilbert-space vector of a rank-1 state, canonical phase."""
    vals, vecs = np.linalg.eigh(s.matrix)
    if vals[:-1].max(initial=0.0) > np.sqrt(tol):
        raise ValueError("state is not pure: second eigenvalue is not negligible")
    v = vecs[:, -1] * np.sqrt(max(vals[-1], 0.0))
    nz = np.flatnonzero(np.abs(v) > tol)
    if nz.size:
        v = v * (abs(v[nz[0]]) / v[nz[0]])
    return v


def _unitary_connecting(w1: np.ndarray, w2: np.ndarray, *, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Unitary X on the column space with W1 X = W2, given W1 W1^dag = W2 W2^dag.

    Rows of the reduced pieces are completed with orthonormal bases of the
    respective kernels, keeping the result real whenever the inputs are real.
    """
    if np.abs(w1 @ w1.conj().T - w2 @ w2.conj().T).max() > np.sqrt(tol):
        raise ValueError("no connecting symmetry: the marginals differ")
    real = bool(np.isrealobj(w1) and np.isrealobj(w2))
    p1, s1, q1h = np.linalg.svd(w1, full_matrices=False)
    r = int(np.sum(s1 > tol * max(s1[0], 1.0))) if s1.size else 0
    p1, s1, q1h = p1[:, :r], s1[:r], q1h[:r, :]
    y = (np.diag(1.0 / s1) @ p1.conj().T @ w2) if r else np.zeros((0, w2.shape[1]))
    q1 = q1h.conj().T
    q1c = null_space(q1.conj().T, rcond=1e-12)
    yc = null_space(y, rcond=1e-12).conj().T
    x = q1 @ y
    if q1c.shape[1]:
        x = x + q1c @ yc
    if real:
        x = x.real
    return x


def connect_purifications(
    psi: StateVector, psi2: StateVector, *, split: int | None = None, tol: float = DEFAULT_TOL
) -> ProcessRep:
    """Reversible U on the purifying system with (I (x) U) psi == psi2.

    Both states must be pure with the same marginal on the first ``split``
    factors (default: half the factors).  Raises when the marginals differ.
    """
    if psi.system != psi2.system:
        raise ValueError("purifications must live on the same composite")
    sys = psi.system
    k = sys.n_factors // 2 if split is None else split
    n_a = prod(sys.dims[:k])
    n_r = prod(sys.dims[k:])
    w1 = _pure_vector(psi, tol=tol).reshape(n_a, n_r)
    w2 = _pure_vector(psi2, tol=tol).reshape(n_a, n_r)
    x = _unitary_connecting(w1, w2, tol=tol)
    r_sys = subsystem(sys, range(k, sys.n_factors))
    u_proc = kraus_process(r_sys, r_sys, [x.T], tol=np.sqrt(tol))
    if not u_proc.reversible:
        raise AssertionError("connecting transformation is not reversible")
    check = apply_to_factors(u_proc, psi, k, tol=np.sqrt(tol))
    if np.abs(check.coords - psi2.coords).max() > np.sqrt(tol):
        raise AssertionError("connecting symmetry failed its contraction check")
    return u_proc


def channel_from_purification(
    psi: StateVector,
    gamma: StateVector,
    *,
    split: int | None = None,
    tol: float = DEFAULT_TOL,
) -> ProcessRep:
    """Deterministic T: R -> E with (I (x) T) Psi == Gamma, via the symmetry of purifications.

    Purify Gamma with a fresh system F, so that both Gamma's purification
    (padded with a pure reference on R) and Psi (padded with a pure reference
    on E (x) F) purify the same marginal with purifying system R (x) E (x) F.
    The connecting reversible transformation, with the reference fed in and
    the F and R outputs discarded, is the generating channel.
    """
    sys_a_len = psi.system.n_factors // 2 if split is None else split
    a = subsystem(psi.system, range(sys_a_len))
    r_sys = subsystem(psi.system, range(sys_a_len, psi.system.n_factors))
    if gamma.system.dims[: a.n_factors] != a.dims:
        raise ValueError(f"extension on {gamma.system} does not extend the {a} block")
    env = SystemDescriptor(a.backend, gamma.system.dims[a.n_factors :])
    if a.backend == CLASSICAL:
        raise ValueError("the classical backend admits no purification")

    phi_g = bk.purify(gamma, tol=tol)  # on (A, E, F) with F a copy of A (x) E
    f_sys = SystemDescriptor(a.backend, phi_g.system.dims[gamma.system.n_factors :])

    n_a, n_r, n_e, n_f = (s.total_dim for s in (a, r_sys, env, f_sys))
    v_psi = _pure_vector(psi, tol=tol)
    v_gam = _pure_vector(phi_g, tol=tol)

    # reference vectors: |0> on E (x) F beside psi, |0> on R beside gamma's purification
    ref_ef = np.zeros(n_e * n_f)
    ref_ef[0] = 1.0
    ref_r = np.zeros(n_r)
    ref_r[0] = 1.0
    v1 = np.kron(v_psi, ref_ef)  # ordering (A, R, E, F)
    v2 = np.kron(v_gam, ref_r)  # ordering (A, E, F, R)
    v2 = v2.reshape(n_a, n_e * n_f, n_r).transpose(0, 2, 1).reshape(-1)  # -> (A, R, E, F)

    w1 = v1.reshape(n_a, n_r * n_e * n_f)
    w2 = v2.reshape(n_a, n_r * n_e * n_f)
    u = _unitary_connecting(w1, w2, tol=tol).T  # (I (x) U) v1 = v2 on R (x) E (x) F

    # T(r) = Tr_{R,F}[ U (r (x) |0><0|_EF) U^dag ], Kraus indexed by the traced outputs
    u_cols = u.reshape(n_r * n_e * n_f, n_r, n_e * n_f)[:, :, 0]  # feed the EF reference
    ops = []
    for r_out in range(n_r):
        for f_out in range(n_f):
            rows = u_cols.reshape(n_r, n_e, n_f, n_r)[r_out, :, f_out, :]
            ops.append(rows)
    t_proc = kraus_process(r_sys, env, ops, tol=np.sqrt(tol))
    if not t_proc.deterministic:
        raise AssertionError("purification-based channel came out non-deterministic")
    if not verify_universal_extension(psi, gamma, 1.0, t_proc, tol=np.sqrt(tol)):
        raise AssertionError("purification-based channel failed verification")
    return t_proc


# ---------------------------------------------------------------------------
# Preparational faithfulness
# ---------------------------------------------------------------------------

def preparationally_faithful_witness(
    phi: StateVector,
    target: StateVector,
    *,
    side: str = "second",
    tol: float = DEFAULT_TOL,
) -> tuple[float, ProcessRep]:
    """(p, S) with p * target == (I (x) S) Phi, S acting on the chosen factor block.

    Phi must be the canonical maximally correlated state on A (x) A.  For a
    pure target with coefficient matrix c the witness is the single Kraus
    operator carrying c, scaled by the top singular value; mixed targets
    eigendecompose and share one scalar across branches, fixed by the
    largest-branch normalization.
    """
    a = subsystem(phi.system, [0])
    d = a.total_dim
    if target.weight <= tol:
        raise ValueError("cannot prepare the zero target with a cancellative scalar")

    if a.backend == CLASSICAL:
        if side != "second":
            raise ValueError("classical witness is implemented on the second factor")
        env = SystemDescriptor(a.backend, target.system.dims[1:])
        joint = target.coords.reshape(d, env.total_dim)
        marg = joint.sum(axis=1)
        p = 1.0 / (d * marg.max())
        s_mat = p * d * joint.T
        witness = stochastic_process(a, env, s_mat, tol=np.sqrt(tol))
    else:
        k_a = a.n_factors
        if side == "second":
            env = SystemDescriptor(a.backend, target.system.dims[k_a:])
        else:
            env = SystemDescriptor(a.backend, target.system.dims[: target.system.n_factors - k_a])
        vals, vecs = np.linalg.eigh(target.matrix)
        branches = [
            np.sqrt(v) * vecs[:, i] for i, v in enumerate(vals) if v > tol
        ]  # unnormalized eigenvectors, squared norms summing to the weight
        coeff_mats = []
        for vec in branches:
            if side == "second":
                c = vec.reshape(d, env.total_dim)
                coeff_mats.append(c.T)  # maps A-copy to E
            else:
                c = vec.reshape(env.total_dim, d)
                coeff_mats.append(c)  # maps A-copy to E on the first slot
        gram = sum(m.conj().T @ m for m in coeff_mats)
        top = float(np.linalg.eigvalsh(gram).max())
        p = 1.0 / (d * top)
        ops = [np.sqrt(p * d) * m for m in coeff_mats]
        witness = kraus_process(a, env, ops, tol=np.sqrt(tol))

    start = phi.system.n_factors - a.n_factors if side == "second" else 0
    out = apply_to_factors(witness, phi, start, tol=np.sqrt(tol))
    if np.abs(out.coords - p * target.coords).max() > np.sqrt(tol):
        raise AssertionError("preparational witness failed its contraction check")
    return p, witness


def is_doubly_preparationally_faithful(
    a: SystemDescriptor,
    b: SystemDescriptor,
    *,
    seed: int = 0,
    samples: int = 8,
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Witness generation for targets on A (x) A and A (x) B from one fixed state.

    When standard process tomography identifies processes (complex and
    classical backends), the dimension law must also hold; for the real
    backend the witnesses exist while Local Tomography fails, so standard
    tomography must fail, as exhibited by a pair of processes that agree on
    every single-system input without being equal.
    """
    rng = np.random.default_rng(seed)
    phi = bk.maximally_entangled_state(a)
    max_residual = 0.0
    ok = True
    for comp in (tensor_systems(a, a), tensor_systems(a, b)):
        for _ in range(samples):
            target = bk.random_state(comp, rng)
            try:
                p, witness = preparationally_faithful_witness(phi, target, tol=tol)
            except (ValueError, AssertionError):
                ok = False
                continue
            start = phi.system.n_factors - a.n_factors
            out = apply_to_factors(witness, phi, start, tol=np.sqrt(tol))
            max_residual = max(max_residual, float(np.abs(out.coords - p * target.coords).max()))
    # "from A to A": witnesses acting on the first factor
    for _ in range(samples):
        target = bk.random_state(tensor_systems(a, a), rng)
        side = "first" if a.backend != CLASSICAL else "second"
        try:
            preparationally_faithful_witness(phi, target, side=side, tol=tol)
        except (ValueError, AssertionError):
            ok = False

    lt_report = is_locally_tomographic(a, b, tol=tol)
    details = {
        "backend": a.backend,
        "witness_max_residual": max_residual,
        "local_tomography_pass": lt_report.passed,
    }
    if a.backend == REAL:
        from .rebit import rebit_processes

        if a.total_dim == 2:
            p1, p2 = rebit_processes()
            src = bk.spanning_states(a)
            source = randomize(
                [preparation_test([s]) for s in src], [1.0 / len(src)] * len(src)
            )
            details["standard_tomography_fails"] = bool(
                equal_on_source(p1, p2, source, tol) and not equal_processes(p1, p2, tol)
            )
    return CheckReport(
        check="doubly-preparationally-faithful",
        passed=ok,
        tolerance=tol,
        seed=seed,
        details=details,
    )
