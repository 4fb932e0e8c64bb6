"""System identification on generalized orthonormal basis functions.

The package builds orthonormal basis models from user-chosen stable
poles, runs recursive pseudo-linear identification schemes on them
(equation-error, extended equation-error, and output-error forms),
checks the positivity conditions that govern their convergence, and
quantifies how the basis poles steer the estimation bias across
frequency bands.
"""

from ._version import __version__
from .lti import (NoiseSpec, RationalModel, Signal, ZpkForm, bode, prbs,
                  prbs_period, simulate)
from .basis import (BalancedAllPass, BasisSpec, FilterBank,
                    balanced_realization, basis_char_poly, basis_response,
                    filter_bank_run, gram_matrix, impulse_responses,
                    realization_for, tail_length, validate_basis)
from .hambo import (fir_operator_coefficients, hambo_operator_grid,
                    hambo_operator_transform, hambo_signal_eval,
                    hambo_signal_reconstruct, hambo_signal_transform)
from .distortion import (ChiExtremaReport, ModalPole, REAL_POLE_THRESHOLD,
                         chi_conservation, chi_curve, chi_extrema,
                         distortion_rate, phase_density)
from .predictor import (GobfResponse, ParameterVector, PredictorConfig,
                        RegressorState, STRUCTURES, gobf_to_rational,
                        rational_to_gobf, simulate_model_output)
from .adaptation import (AdaptationOptions, AdaptationState, DivergenceError,
                         IdentResult, SCHEMES, adaptation_step,
                         run_identification, scheme_structure)
from .convergence import SprReport, spr_check
from .analysis import (BandFitReport, SpectralDensity, band_fit,
                       equivalent_prediction_error, estimate_spectrum,
                       limit_criterion, regressor_filter_error)
from .bench import (BenchmarkSystem, ExperimentConfig, EXPERIMENT_SCHEMA,
                    builtin_experiments, run_experiment, stiff_benchmark)

__all__ = [
    "__version__",
    # signals and rational models
    "Signal", "NoiseSpec", "ZpkForm", "RationalModel", "bode", "simulate",
    "prbs", "prbs_period",
    # basis construction
    "BasisSpec", "validate_basis", "BalancedAllPass", "balanced_realization",
    "realization_for", "FilterBank", "filter_bank_run", "impulse_responses",
    "tail_length", "basis_response", "basis_char_poly", "gram_matrix",
    # Hambo transforms
    "hambo_signal_transform", "hambo_signal_reconstruct", "hambo_signal_eval",
    "hambo_operator_transform", "hambo_operator_grid",
    "fir_operator_coefficients",
    # bias distribution over frequency
    "ModalPole", "ChiExtremaReport", "REAL_POLE_THRESHOLD", "phase_density",
    "distortion_rate", "chi_conservation", "chi_curve", "chi_extrema",
    # predictors
    "STRUCTURES", "PredictorConfig", "ParameterVector", "RegressorState",
    "GobfResponse", "gobf_to_rational", "rational_to_gobf",
    "simulate_model_output",
    # adaptation
    "SCHEMES", "scheme_structure", "AdaptationState", "adaptation_step",
    "AdaptationOptions", "IdentResult", "run_identification",
    "DivergenceError",
    # convergence certificates
    "SprReport", "spr_check",
    # analysis
    "SpectralDensity", "estimate_spectrum", "equivalent_prediction_error",
    "regressor_filter_error", "limit_criterion", "BandFitReport", "band_fit",
    # benchmarks and experiments
    "BenchmarkSystem", "stiff_benchmark", "ExperimentConfig",
    "EXPERIMENT_SCHEMA", "builtin_experiments", "run_experiment",
]
