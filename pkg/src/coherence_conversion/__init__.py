"""Single-qubit coherence conversion under strictly incoherent operations.

Closed-form reachability and optimal probabilities, explicit instrument
synthesis, assisted (two-party) conversion, coherence measures, asymptotic
rate bounds, a brute-force verification oracle, and a simulation of the
linear-optics implementation.
"""
from .core import (CoherenceError, InvalidStateError, DimensionError, PreconditionError, ArgumentError, Bloch,
                   bloch_to_density, density_to_bloch, check_density, check_bloch, dephase,
                   hermitian_eigensystem, von_neumann_entropy, trace_distance, fidelity, partial_trace, purify,
                   state_to_json, state_from_json)
from .measures import (UndefinedBoundError, c_l1, c_distillable, c_cost_qubit, c_delta_robustness,
                       c_delta_robustness_qubit, all_measures, probability_upper_bound)
from .conversion import (InfeasibleError, SioKraus, SioInstrument, SynthesisSolution, is_reachable,
                         max_conversion_probability, max_transverse, reachable_boundary, synthesize_instrument,
                         complete_instrument, apply_instrument, success_output)
from .assisted import (assisted_max_probability, optimal_pure_decomposition, alice_measurement_for,
                       run_assisted_protocol, assisted_protocol_simulate, werner_state, werner_assisted_probability,
                       werner_protocol_simulate, is_quantum_incoherent, correlation_advantage_witness)
from .asymptotic import (RateBounds, rate_bounds, mixed_plus_minus, scan_bounds, irreversibility_curve,
                         region_membership)
from .oracle import OracleConfig, oracle_max_probability, oracle_grid, oracle_reachable_set, verify_queries
from .photonic import (hwp_action, prepare_single_qubit, simulate_sio_circuit, simulate_counts,
                       estimate_probability, tomography_reconstruct)
