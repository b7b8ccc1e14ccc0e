"""Core algebra: pairing, composition, lifting, coarse-graining, marginals."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpt_tomo import backends as bk
from gpt_tomo import core as c
from gpt_tomo.core import CLASSICAL, QUANTUM, REAL, system, tensor_systems, trivial

from conftest import I2, PAULI_Y, PHI_PLUS, proj

BACKEND_ST = st.sampled_from([CLASSICAL, QUANTUM, REAL])
SEED_ST = st.integers(0, 2**31 - 1)


# ---------------------------------------------------------------------------
# systems
# ---------------------------------------------------------------------------

def test_composite_dimensions(qubit, rebit, bit):
    assert tensor_systems(rebit, rebit).state_dim == 10  # 4*5/2 symmetric matrices
    assert tensor_systems(qubit, qubit).state_dim == 16  # 4x4 Hermitian matrices
    assert tensor_systems(bit, system(CLASSICAL, 3)).state_dim == 6


def test_trivial_system_is_unit(qubit):
    assert tensor_systems(qubit, trivial(QUANTUM)) == qubit
    assert tensor_systems(trivial(QUANTUM), qubit) == qubit
    assert trivial(REAL).state_dim == 1


def test_mixed_backend_composition_rejected(qubit, bit):
    with pytest.raises(ValueError, match="mixed backends"):
        tensor_systems(qubit, bit)


# ---------------------------------------------------------------------------
# pairing
# ---------------------------------------------------------------------------

def test_pair_deterministic_effect_on_maxmix(qubit):
    u = c.deterministic_effect(qubit)
    assert c.pair(u, bk.complete_state(qubit)) == pytest.approx(1.0, abs=1e-12)


def test_pair_orthogonal_projectors(qubit):
    e0 = c.effect_from_matrix(qubit, np.diag([1.0, 0.0]))
    s1 = c.state_from_matrix(qubit, np.diag([0.0, 1.0]))
    assert c.pair(e0, s1) == pytest.approx(0.0, abs=1e-12)


def test_pair_bell_effect_on_wootters_state(qubit):
    # oracle: direct 4x4 matrix trace of the projector against 1/4 (II - YY)
    rho1 = 0.25 * (np.eye(4) - np.kron(PAULI_Y, PAULI_Y).real)
    expected = float(np.trace(proj(PHI_PLUS) @ rho1).real)
    assert expected == pytest.approx(0.5, abs=1e-12)
    two = tensor_systems(qubit, qubit)
    e = c.effect_from_matrix(two, proj(PHI_PLUS))
    s = c.state_from_matrix(two, rho1)
    assert c.pair(e, s) == pytest.approx(expected, abs=1e-12)


def test_pair_rejects_system_mismatch(qubit, rebit):
    with pytest.raises(ValueError, match="effect on"):
        c.pair(c.deterministic_effect(rebit), bk.complete_state(qubit))


@settings(max_examples=30, deadline=None, derandomize=True)
@given(backend=BACKEND_ST, seed=SEED_ST)
def test_pair_is_bilinear(backend, seed):
    rng = np.random.default_rng(seed)
    sys = system(backend, 2)
    s1, s2 = bk.random_state(sys, rng), bk.random_state(sys, rng)
    effects = bk.spanning_effects(sys)
    e1, e2 = effects[0], effects[-1]
    a, b = rng.random(), rng.random()
    combo = a * s1.coords + b * s2.coords
    lhs = float(np.dot(e1.coords, combo))
    assert lhs == pytest.approx(a * c.pair(e1, s1) + b * c.pair(e1, s2), abs=1e-12)
    combo_e = a * e1.coords + b * e2.coords
    assert float(np.dot(combo_e, s1.coords)) == pytest.approx(
        a * c.pair(e1, s1) + b * c.pair(e2, s1), abs=1e-12
    )


# ---------------------------------------------------------------------------
# states, effects, cones
# ---------------------------------------------------------------------------

def test_state_cone_membership_enforced(qubit, bit):
    with pytest.raises(ValueError, match="negative eigenvalue"):
        c.state_from_matrix(qubit, np.diag([1.5, -0.5]))
    with pytest.raises(ValueError, match="negative entry"):
        c.state_from_coords(bit, [-0.1, 1.1])


def test_real_backend_rejects_complex_states(rebit):
    with pytest.raises(ValueError, match="not representable"):
        c.state_from_matrix(rebit, np.array([[0.5, 0.5j], [-0.5j, 0.5]]))


def test_zero_state_allowed_subnormalized(qubit):
    z = c.state_from_matrix(qubit, np.zeros((2, 2)))
    assert z.kind == "subnormalized"


def test_kind_tracks_weight(qubit):
    assert bk.complete_state(qubit).kind == "deterministic"
    half = c.state_from_matrix(qubit, np.diag([0.25, 0.25]))
    assert half.kind == "subnormalized"


def test_effect_must_stay_below_identity(qubit):
    with pytest.raises(ValueError, match="exceeds the identity"):
        c.effect_from_matrix(qubit, np.diag([1.5, 0.0]))


def test_deterministic_effect_is_unique(qubit, bit):
    # any effect flagged deterministic has the canonical coordinates
    for sys in (qubit, bit):
        u = c.deterministic_effect(sys)
        for e in bk.spanning_effects(sys):
            if e.kind == "deterministic":
                assert np.abs(e.coords - u.coords).max() < 1e-12
        rebuilt = (
            c.effect_from_matrix(sys, np.eye(sys.total_dim))
            if sys.backend != "classical"
            else c.effect_from_coords(sys, np.ones(sys.total_dim))
        )
        assert rebuilt.kind == "deterministic"
        assert np.abs(rebuilt.coords - u.coords).max() < 1e-12


def test_tensor_states_product(qubit, bit):
    mm = bk.complete_state(qubit)
    prod = c.tensor_states(mm, mm)
    assert np.allclose(prod.matrix, np.eye(4) / 4.0)
    e0 = c.state_from_coords(bit, [1.0, 0.0])
    e1 = c.state_from_coords(bit, [0.0, 1.0])
    assert np.allclose(c.tensor_states(e0, e1).coords, [0.0, 1.0, 0.0, 0.0])


def test_tensor_states_rebit_rank_one(rebit):
    # oracle: direct outer product of |0> (x) |+>
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    vec = np.kron(np.array([1.0, 0.0]), plus)
    expected = np.outer(vec, vec)
    s0 = c.state_from_matrix(rebit, np.diag([1.0, 0.0]))
    sp = c.state_from_matrix(rebit, np.outer(plus, plus))
    got = c.tensor_states(s0, sp).matrix
    assert np.abs(got - expected).max() < 1e-12
    assert np.linalg.matrix_rank(got) == 1
    assert np.abs(got - got.T).max() < 1e-15


# ---------------------------------------------------------------------------
# processes: apply, compose, lift
# ---------------------------------------------------------------------------

def test_identity_apply(qubit):
    rho = bk.random_state(qubit, 3)
    out = c.apply(c.identity_process(qubit), rho)
    assert np.abs(out.coords - rho.coords).max() < 1e-14


def test_rebit_scrambler_sends_everything_to_maxmix(rebit):
    p = c.kraus_process(rebit, rebit, [I2 / np.sqrt(2), PAULI_Y / np.sqrt(2)])
    for seed in range(5):
        rho = bk.random_state(rebit, seed)
        assert np.abs(c.apply(p, rho).matrix - I2 / 2).max() < 1e-12


def test_bitflip_permutes(bit):
    flip = c.stochastic_process(bit, bit, [[0.0, 1.0], [1.0, 0.0]])
    s = c.state_from_coords(bit, [0.3, 0.7])
    assert np.allclose(c.apply(flip, s).coords, [0.7, 0.3])
    assert flip.deterministic and flip.reversible


def test_kraus_physicality_rejected(qubit):
    with pytest.raises(ValueError, match="not physical"):
        c.kraus_process(qubit, qubit, [np.eye(2) * 1.1])


def test_real_backend_kraus_reality_enforced(rebit):
    mixed = np.array([[1.0, 1.0j], [0.0, 0.0]]) / 2.0  # neither real nor purely imaginary
    with pytest.raises(ValueError, match="entrywise"):
        c.kraus_process(rebit, rebit, [mixed])
    # purely imaginary operators are inside the class
    c.kraus_process(rebit, rebit, [PAULI_Y])


def test_lift_identity_is_identity(qubit):
    lifted = c.lift(c.identity_process(qubit), qubit)
    rho = bk.random_state(tensor_systems(qubit, qubit), 0)
    assert np.abs(c.apply(lifted, rho).coords - rho.coords).max() < 1e-12


def test_lift_rebit_scramblers_split_the_bell_state(rebit):
    # oracle: Pauli algebra gives 1/2(Phi+ + Psi-) and 1/2(Psi+ + Phi-)
    p = c.kraus_process(rebit, rebit, [I2 / np.sqrt(2), PAULI_Y / np.sqrt(2)])
    p2 = c.kraus_process(
        rebit, rebit, [np.array([[0, 1.0], [1.0, 0]]) / np.sqrt(2), np.diag([1.0, -1.0]) / np.sqrt(2)]
    )
    bell = bk.maximally_entangled_state(rebit)
    yy = np.kron(PAULI_Y, PAULI_Y).real
    out1 = c.apply(c.lift(p, rebit), bell).matrix
    out2 = c.apply(c.lift(p2, rebit), bell).matrix
    assert np.abs(out1 - 0.25 * (np.eye(4) - yy)).max() < 1e-12
    assert np.abs(out2 - 0.25 * (np.eye(4) + yy)).max() < 1e-12


@settings(max_examples=25, deadline=None, derandomize=True)
@given(backend=BACKEND_ST, seed=SEED_ST)
def test_lift_functoriality(backend, seed):
    # apply(lift(P, C), s (x) t) == apply(P, s) (x) t
    rng = np.random.default_rng(seed)
    a, anc = system(backend, 2), system(backend, 2)
    p = bk.random_process(a, a, rng)
    s, t = bk.random_state(a, rng), bk.random_state(anc, rng)
    lhs = c.apply(c.lift(p, anc), c.tensor_states(s, t))
    rhs = c.tensor_states(c.apply(p, s), t)
    assert np.abs(lhs.coords - rhs.coords).max() < 1e-12


def test_compose_types_checked(qubit, qutrit):
    p = c.identity_process(qubit)
    q = c.identity_process(qutrit)
    with pytest.raises(ValueError, match="cannot compose"):
        c.compose(p, q)


def test_apply_to_factors_middle():
    three = system(QUANTUM, 2, 2, 2)
    rho = bk.random_state(three, 1)
    flip = c.kraus_process(system(QUANTUM, 2), system(QUANTUM, 2), [np.array([[0, 1], [1, 0]])])
    out = c.apply_to_factors(flip, rho, 1)
    big = np.kron(np.kron(I2, np.array([[0, 1], [1, 0]])), I2)
    assert np.abs(out.matrix - big @ rho.matrix @ big.T).max() < 1e-12


# ---------------------------------------------------------------------------
# cancellation (exact arithmetic on representations)
# ---------------------------------------------------------------------------

@settings(max_examples=40, deadline=None, derandomize=True)
@given(
    p=st.floats(min_value=1e-6, max_value=1.0),
    x=st.floats(min_value=-1.0, max_value=1.0),
    delta=st.floats(min_value=1e-9, max_value=1.0),
)
def test_cancellative_scalars_never_collapse_coordinates(p, x, delta):
    # p > 0 and x != y imply p*x != p*y at representation scale
    y = x + delta
    assert p * x != p * y


def test_scaling_by_zero_is_not_cancellative(qubit):
    p = bk.random_process(qubit, qubit, 0)
    zeroed = c.scale_process(0.0, p)
    zeroed2 = c.scale_process(0.0, bk.random_process(qubit, qubit, 1))
    assert np.abs(bk.process_coords(zeroed) - bk.process_coords(zeroed2)).max() < 1e-15


# ---------------------------------------------------------------------------
# tests, coarse-graining, randomization
# ---------------------------------------------------------------------------

def _bell_measurement(qubit):
    two = tensor_systems(qubit, qubit)
    from conftest import PHI_MINUS, PSI_MINUS, PSI_PLUS

    effects = {
        "phi+": proj(PHI_PLUS),
        "phi-": proj(PHI_MINUS),
        "psi+": proj(PSI_PLUS),
        "psi-": proj(PSI_MINUS),
    }
    branches = tuple(
        (name, c.effect_process(c.effect_from_matrix(two, mat))) for name, mat in effects.items()
    )
    return c.Test(branches)


def test_full_coarse_graining_is_deterministic(qubit):
    t = _bell_measurement(qubit)
    merged = c.coarse_grain(t, [list(t.outcomes())])
    assert len(merged.branches) == 1
    assert merged.branches[0][1].deterministic


def test_identity_partition_preserves_test(qubit):
    t = _bell_measurement(qubit)
    same = c.coarse_grain(t, [[lab] for lab in t.outcomes()])
    assert same.outcomes() == t.outcomes()
    for lab in t.outcomes():
        before = sum(k.conj().T @ k for k in t.branch(lab).kraus)
        after = sum(k.conj().T @ k for k in same.branch(lab).kraus)
        assert np.abs(before - after).max() < 1e-12


def test_bell_measurement_pair_merge_sums_to_unit(qubit):
    t = _bell_measurement(qubit)
    merged = c.coarse_grain(t, [["phi+", "phi-"], ["psi+", "psi-"]])
    mats = [sum(k.conj().T @ k for k in proc.kraus) for _, proc in merged.branches]
    assert np.abs(sum(mats) - np.eye(4)).max() < 1e-12
    assert len(merged.branches) == 2


def test_invalid_partition_rejected(qubit):
    t = _bell_measurement(qubit)
    with pytest.raises(ValueError, match="invalid partition"):
        c.coarse_grain(t, [["phi+", "phi+"], ["phi-", "psi+", "psi-"]])
    with pytest.raises(ValueError, match="invalid partition"):
        c.coarse_grain(t, [["phi+"]])


def test_randomize_single_test_is_identity_up_to_labels(qubit):
    t = _bell_measurement(qubit)
    r = c.randomize([t], [1.0])
    for (lab, proc), (_, orig) in zip(r.branches, t.branches):
        assert np.abs(bk.process_coords(proc) - bk.process_coords(orig)).max() < 1e-12


def test_randomize_preparations_averages_to_mixture(rebit):
    s0 = c.state_from_matrix(rebit, np.diag([1.0, 0.0]))
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    sp = c.state_from_matrix(rebit, np.outer(plus, plus))
    r = c.randomize([c.preparation_test([s0]), c.preparation_test([sp])], [0.25, 0.75])
    avg = sum(state.coords for _, state in c.source_states(r))
    # oracle: plain coordinate arithmetic
    assert np.abs(avg - (0.25 * s0.coords + 0.75 * sp.coords)).max() < 1e-12
    assert np.abs(c.mixture([s0, sp], [0.25, 0.75]).coords - avg).max() < 1e-12


def test_randomize_length_mismatch(qubit):
    t = _bell_measurement(qubit)
    with pytest.raises(ValueError, match="probabilities"):
        c.randomize([t], [0.5, 0.5])


@settings(max_examples=20, deadline=None, derandomize=True)
@given(backend=BACKEND_ST, seed=SEED_ST)
def test_coarse_graining_distributes_over_composition(backend, seed):
    # (sum_x T_x) o C == sum_x (T_x o C) and A (x) (sum_x T_x) == sum_x (A (x) T_x)
    rng = np.random.default_rng(seed)
    a = system(backend, 2)
    t1 = c.scale_process(0.4, bk.random_process(a, a, rng))
    t2 = c.scale_process(0.6, bk.random_process(a, a, rng))
    after = bk.random_process(a, a, rng)
    summed_then = c.compose(after, c.add_processes([t1, t2]))
    then_summed = c.add_processes([c.compose(after, t1), c.compose(after, t2)])
    assert np.abs(bk.process_coords(summed_then) - bk.process_coords(then_summed)).max() < 1e-12
    par_sum = c.tensor_processes(after, c.add_processes([t1, t2]))
    sum_par = c.add_processes([c.tensor_processes(after, t1), c.tensor_processes(after, t2)])
    assert np.abs(bk.process_coords(par_sum) - bk.process_coords(sum_par)).max() < 1e-12


# ---------------------------------------------------------------------------
# marginals and contractions
# ---------------------------------------------------------------------------

def test_marginal_of_product(qubit):
    rho = bk.random_state(qubit, 5)
    omega = bk.random_state(qubit, 6)
    joint = c.tensor_states(rho, omega)
    assert np.abs(c.marginal(joint, 0).coords - rho.coords).max() < 1e-12
    assert np.abs(c.marginal(joint, 1).coords - omega.coords).max() < 1e-12


def test_marginal_of_bell_is_maximally_mixed(rebit):
    # oracle: partial trace of the projector onto (|00> + |11>)/sqrt2
    bell = bk.maximally_entangled_state(rebit)
    mat = bell.matrix
    traced = mat.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
    assert np.abs(traced - I2 / 2).max() < 1e-12
    for keep in (0, 1):
        assert np.abs(c.marginal(bell, keep).matrix - I2 / 2).max() < 1e-12


def test_marginal_requires_deterministic_effect(qubit):
    joint = bk.random_state(tensor_systems(qubit, qubit), 8)
    not_det = c.effect_from_matrix(qubit, np.diag([1.0, 0.0]))
    with pytest.raises(ValueError, match="deterministic"):
        c.marginal(joint, 0, not_det)


def test_marginal_selector_out_of_range(qubit):
    joint = bk.random_state(tensor_systems(qubit, qubit), 9)
    with pytest.raises(ValueError, match="out of range"):
        c.marginal(joint, [2])


def test_marginal_of_extension_recovers_the_state(qubit):
    rho = bk.random_state(qubit, 11)
    gamma = bk.random_extension(rho, qubit, 12)
    assert np.abs(c.marginal(gamma, 0).coords - rho.coords).max() < 1e-9


def test_contract_classical(bit):
    joint = c.state_from_coords(tensor_systems(bit, bit), [0.1, 0.2, 0.3, 0.4])
    pick0 = c.effect_from_coords(bit, [1.0, 0.0])
    out = c.contract(joint, pick0, [1])
    assert np.allclose(out.coords, [0.1, 0.3])
