"""Neural-derivative ODE models: fit small tanh networks as a dynamical
system's per-state derivatives, then read causal structure out of the fit
via link-score analysis and validate predictions by Monte Carlo."""

from .dynsys import (ConfigurationError, IntegrationConfig, IntegrationError,
                     Trajectory, integrate, integrate_dense, rk4_step)
from .ground_truth import (BENCHMARK_INITIALIZATIONS, STATE_NAMES,
                           GroundTruthParams, TrainingDataset,
                           equilibrium_state, generate_training_data,
                           ground_truth_derivs, make_derivs, sigmoid_f)
from .linkscores import (Edge, EdgeReport, LinkProfile, classify_edges,
                         compose_path, conditional_delta, link_profile,
                         link_score)
from .model import (AdjacencyMask, GeneratedModel, NetworkArchitecture,
                    ScalingSpec, load_model, model_derivs, param_count,
                    save_model, unpack_params, zero_params)
from .training import (TrainingConfig, TrainingResult, best_so_far_trace,
                       payoff, train)
from .evaluation import (MonteCarloReport, SobolSampler, StructureComparison,
                         bin_max_errors, monte_carlo, prediction_error,
                         sample_initializations, structure_recovery)
from .io import RunConfig

__version__ = "1.0.0"
