"""The real-vector-space counterexample to standard process tomography.

Two channels on a rebit (a two-level real-amplitude system), built from the
Pauli matrices as ``(M + Y M Y)/2`` and ``(X M X + Z M Z)/2``, send every
single-rebit state to the maximally mixed state, yet act orthogonally on a
maximally entangled pair of rebits.  The two lifted outputs are the classic
pair of two-rebit states that are perfectly distinguishable globally and
completely indistinguishable by local measurements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backends as bk
from .core import (
    REAL,
    DEFAULT_TOL,
    ProcessRep,
    StateVector,
    apply,
    kraus_process,
    lift,
    pair,
    state_from_matrix,
    system,
    tensor_effects,
    tensor_systems,
)
from .tomography import lifting_matrix

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]]),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

REBIT = system(REAL, 2)
TWO_REBITS = tensor_systems(REBIT, REBIT)


def rebit_processes() -> tuple[ProcessRep, ProcessRep]:
    """The two deterministic rebit channels with Kraus {I, Y}/sqrt2 and {X, Z}/sqrt2."""
    s = 1.0 / np.sqrt(2.0)
    p = kraus_process(REBIT, REBIT, [s * PAULI["I"], s * PAULI["Y"]])
    p2 = kraus_process(REBIT, REBIT, [s * PAULI["X"], s * PAULI["Z"]])
    return p, p2


def wootters_pair() -> tuple[StateVector, StateVector]:
    """The orthogonal two-rebit mixtures 1/4 (II -+ YY) with identical local statistics."""
    yy = np.kron(PAULI["Y"], PAULI["Y"]).real
    rho1 = state_from_matrix(TWO_REBITS, 0.25 * (np.eye(4) - yy))
    rho2 = state_from_matrix(TWO_REBITS, 0.25 * (np.eye(4) + yy))
    return rho1, rho2


def pauli_components(mat: np.ndarray) -> np.ndarray:
    """4x4 table of components over the normalized two-qubit Pauli basis.

    Entry (i, j) is Tr[(P_i (x) P_j) M] / 2 for P in (I, X, Y, Z).  Real
    two-rebit states must have zero weight on products with an odd number of
    Y factors (those are not real-symmetric); this is asserted.
    """
    labels = ("I", "X", "Y", "Z")
    table = np.empty((4, 4))
    for i, a in enumerate(labels):
        for j, b in enumerate(labels):
            table[i, j] = np.real(np.trace(np.kron(PAULI[a], PAULI[b]) @ mat)) / 2.0
    for i, a in enumerate(labels):
        for j, b in enumerate(labels):
            if (a == "Y") != (b == "Y") and abs(table[i, j]) > 1e-9:
                raise AssertionError(f"real state has a forbidden {a}(x){b} component")
    return table


@dataclass(frozen=True)
class CounterexampleReport:
    """Numbers witnessing the failure of standard tomography in the real backend."""

    max_local_deviation: float
    output1: np.ndarray = field(repr=False)
    output2: np.ndarray = field(repr=False)
    orthogonality_gap: float
    trace_distance: float
    local_stats_max_gap: float
    faithful_rank: int
    tolerance: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "max_local_deviation": self.max_local_deviation,
            "output1_coords": [float(x) for x in self.output1],
            "output2_coords": [float(x) for x in self.output2],
            "orthogonality_gap": self.orthogonality_gap,
            "trace_distance": self.trace_distance,
            "local_stats_max_gap": self.local_stats_max_gap,
            "faithful_rank": self.faithful_rank,
            "tolerance": self.tolerance,
            "seed": self.seed,
        }


def trace_distance(a: StateVector, b: StateVector) -> float:
    return 0.5 * float(np.abs(np.linalg.eigvalsh(a.matrix - b.matrix)).sum())


def counterexample_report(
    tol: float = DEFAULT_TOL, *, seed: int = 0, n_random: int = 100
) -> CounterexampleReport:
    """Reproduce the counterexample end to end and collect the key numbers."""
    p, p2 = rebit_processes()
    mix = np.eye(2) / 2.0

    dev = 0.0
    probes = bk.spanning_states(REBIT)
    rng = np.random.default_rng(seed)
    probes += [bk.random_state(REBIT, rng) for _ in range(n_random)]
    for rho in probes:
        dev = max(dev, float(np.linalg.norm(apply(p, rho).matrix - mix)))
        dev = max(dev, float(np.linalg.norm(apply(p2, rho).matrix - mix)))

    bell = bk.maximally_entangled_state(REBIT)
    out1 = apply(lift(p, REBIT), bell)
    out2 = apply(lift(p2, REBIT), bell)
    pauli_components(out1.matrix)  # asserts no odd-Y leakage
    pauli_components(out2.matrix)

    gap = float(np.linalg.norm(out1.matrix @ out2.matrix))
    tdist = trace_distance(out1, out2)

    local_gap = 0.0
    for ea in bk.spanning_effects(REBIT):
        for eb in bk.spanning_effects(REBIT):
            prod_effect = tensor_effects(ea, eb)
            local_gap = max(local_gap, abs(pair(prod_effect, out1) - pair(prod_effect, out2)))

    basis = bk.process_space_basis(REBIT, REBIT)
    rank = bk.matrix_rank(lifting_matrix(bell, REBIT, basis))

    return CounterexampleReport(
        max_local_deviation=dev,
        output1=out1.coords,
        output2=out2.coords,
        orthogonality_gap=gap,
        trace_distance=tdist,
        local_stats_max_gap=local_gap,
        faithful_rank=rank,
        tolerance=tol,
        seed=seed,
    )
