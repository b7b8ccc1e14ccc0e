"""Operational probabilistic theories with executable process-tomography checks.

Backends: finite classical probability, complex quantum theory, and
real-vector-space quantum theory.  The package models states, effects,
processes and tests over these theories; decides the hierarchy of process
equalities; runs rank checks for dynamically faithful states and Local
Tomography; constructs teleportation, universal-extension, purification and
preparational-faithfulness witnesses; and reproduces the real-backend
counterexample where two distinct channels agree on every single-system
input.
"""

from .core import (
    CLASSICAL,
    DEFAULT_TOL,
    QUANTUM,
    REAL,
    EffectVector,
    ProcessRep,
    StateVector,
    SystemDescriptor,
    Test,
    apply,
    apply_to_factors,
    coarse_grain,
    compose,
    contract,
    deterministic_effect,
    effect_from_coords,
    effect_from_matrix,
    identity_process,
    kraus_process,
    lift,
    marginal,
    mixture,
    pair,
    permute_factors,
    preparation_test,
    randomize,
    state_from_coords,
    state_from_matrix,
    state_from_vector,
    stochastic_process,
    system,
    tensor_effects,
    tensor_processes,
    tensor_states,
    tensor_systems,
    trivial,
)
from .backends import (
    ProcessSpaceBasis,
    complete_state,
    maximally_entangled_effect,
    maximally_entangled_state,
    process_coords,
    process_space_basis,
    purify,
    random_extension,
    random_process,
    random_state,
    spanning_effects,
    spanning_states,
)
from .tomography import (
    contains,
    equal_on_extensions,
    equal_on_source,
    equal_processes,
    equal_upon_input,
    find_faithful_state,
    is_complete,
    is_dynamically_faithful,
    is_locally_tomographic,
    tomographically_geq,
)
from .witnesses import (
    channel_from_purification,
    chi_state,
    connect_purifications,
    extension_from_teleportation,
    is_doubly_preparationally_faithful,
    preparationally_faithful_witness,
    teleportation_witness,
    verify_teleportation,
    verify_universal_extension,
)
from .rebit import CounterexampleReport, counterexample_report, rebit_processes, wootters_pair
from .reports import CheckReport

__version__ = "0.1.0"
