"""Differentially private summation of real vectors in the single-message
shuffle model: local randomizer, trusted-shuffler simulation, analyzer,
parameter calibration, accuracy bounds, and privacy auditing."""

from .accuracy import (
    BoundReport,
    TrialResult,
    bound_mse_general,
    bound_mse_t1,
    bound_sigma,
    empirical_mse,
    fit_power_law,
)
from .aggregation import (
    CoordinateAggregate,
    EstimateVector,
    aggregate,
    aggregate_arrays,
    analyze,
    analyze_arrays,
    debias,
    estimate_average,
    shuffle,
)
from .audit import (
    AuditVerdict,
    NeighborPair,
    TailParams,
    chernoff_upper_bound,
    exact_tail_probability,
    monte_carlo_audit,
    sample_count_tail,
    tail_params_from_protocol,
)
from .calibration import (
    ComposedBudget,
    PrivacyBudget,
    ProtocolParams,
    advanced_composition,
    calibrate_gamma_general,
    calibrate_gamma_t1,
    choose_k_general,
    choose_k_t1,
    compose_epsilon_prime,
)
from .exceptions import (
    InfeasibleParametersError,
    InsufficientTrialsError,
    MalformedMessageError,
)
from .harness import (
    DatasetMatrix,
    ExperimentConfig,
    SweepResult,
    emit_outputs,
    fit_matrix,
    ingest_csv,
    read_long_csv,
    resolve_point,
    run_sweep,
    run_trial,
    trial_seed,
)
from .randomizer import (
    Message,
    encode_fixed_point,
    messages_from_batch,
    per_user_rng,
    randomize_batch,
    randomize_vector,
    randomized_response,
)

__version__ = "0.1.0"
