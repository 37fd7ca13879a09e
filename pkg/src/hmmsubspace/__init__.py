"""Subspace estimation and linear prediction for finite-alphabet hidden Markov models."""
from .errors import (
    ConditionCViolated,
    DegenerateStates,
    HmmSubspaceError,
    NoConvergence,
    NotErgodic,
    NotStochastic,
    NumericalFailure,
    OrderTooLarge,
    SingularCore,
    ZeroLikelihood,
)
from .estimator import EstimatedSystem, Factorization, factorize, subspace_fit, true_factors
from .experiments import BenchmarkConfig, BenchmarkReport, run_benchmark
from .hmm import HmmModel, StationaryInfo, Trajectory, fixture, load_model, simulate, stationary_info, validate_model
from .linalg import block_basis, ortho_basis, structured_pinv, truncated_svd
from .moments import HankelPair, MomentSet, beta_hat, cross_cov, empirical_moments, hankel, theoretical_moments
from .predictor import (
    GainSolution,
    LinearSystem,
    PredictorState,
    absorb,
    filter_posterior,
    finite_horizon_predict,
    initial_state,
    l1_distance,
    linear_predict,
    optimal_predict,
    riccati_gain,
    true_system,
)

__version__ = "0.1.0"
