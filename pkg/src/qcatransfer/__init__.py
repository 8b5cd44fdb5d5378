"""Noisy quantum cellular automata for excitation transfer on a qubit lattice.

The package simulates, exactly, the single-excitation dynamics of a 1-d
qubit lattice evolved by a two-pass partitioned automaton whose pair update
composes a unitary, a dephasing channel, and an amplitude damping channel.
The channel parameters embed any 2x2 classical stochastic map, so fully
dephased runs reproduce a Markov chain with the same local transition
probabilities and the dephasing strength interpolates from classical to
fully coherent transfer.  Receptor absorption is a repeated projective
measurement with exact conditional (unnormalised) bookkeeping.
"""

from .automaton import Automaton, LatticeConfig, PassSchedule, run, schedule, step
from .channels import (
    ChannelParams,
    DegenerateEmbeddingWarning,
    DiagState2,
    StochasticMatrix2,
    UnitaryParams,
    amp_damp_2d,
    amp_damp_kraus,
    apply_kraus,
    build_unitary,
    channel_to_stochastic,
    classical_to_channel,
    dephase_2d,
    dephasing_kraus,
    embedded_apply,
    stochastic_apply,
)
from .classical import (
    ClassicalAutomaton,
    ClassicalState,
    classical_measure,
    classical_step,
    point_mass,
    run_classical,
)
from .configfile import ConfigError
from .experiments import (
    OptimizeSpec,
    Scenario,
    SweepGrid,
    emit,
    evaluate_reducer,
    first_classical_catchup,
    optimize,
    optimize_scenario,
    p_tot_at,
    p_tot_series,
    read_series,
    run_scenario,
    scenario_from_config,
    sweep,
    sweep_from_config,
)
from .measurement import (
    AbsorptionTracker,
    ReceptorConfig,
    RunRecord,
    StateExhausted,
    coherence_within_bound,
    integrated_probability,
    measure_and_condition,
    predict_next_absorption,
)
from .state import (
    PairIndex,
    SectorState,
    basis_state,
    pair_damp,
    pair_dephase,
    pair_unitary,
)

__version__ = "0.1.0"
