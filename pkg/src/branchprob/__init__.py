"""Transition probabilities of two-type continuous-time branching processes.

Core pipeline: evaluate the probability generating function on a torus grid
(backward ODEs), invert by FFT to transition probabilities, or recover the
full law from a small random measurement sub-grid by l1-penalised proximal
gradient descent. Uniformization and direct simulation provide independent
ground truth, and a benchmark harness compares the routes end to end.
"""

from .errors import (DivergenceError, IntegrationError,
                     NumericalInconsistencyError, StepUnderflowError,
                     TruncationWarning)
from .inversion import (PgfGrid, ProbabilityGrid, full_pgf_grid, invert_full,
                        invert_model, truncation_mass)
from .likelihood import ObservationSeries, observed_log_likelihood
from .models import (ModelSpec, PgfQuery, TwoTypeRates, backward_rhs,
                     bds_model, default_time, hsc_model, named_model,
                     pgf_eval, pgf_eval_batch, pseudo_gf)
from .ode import OdeProblem, integrate
from .oracle import (SimulationResult, TransitionDistribution,
                     TruncatedGenerator, build_generator, simulate,
                     transition_row)
from .recovery import (IndexSet, MeasurementSet, RecoveryConfig,
                       RecoveryResult, default_lambda, gradient, line_search,
                       m_from_sparsity, objective, recover,
                       recover_transition_grid, sample_measurements,
                       soft_threshold)

__version__ = "0.1.0"

__all__ = [
    "DivergenceError", "IntegrationError", "NumericalInconsistencyError",
    "StepUnderflowError", "TruncationWarning",
    "PgfGrid", "ProbabilityGrid", "full_pgf_grid", "invert_full",
    "invert_model", "truncation_mass",
    "ObservationSeries", "observed_log_likelihood",
    "ModelSpec", "PgfQuery", "TwoTypeRates", "backward_rhs", "bds_model",
    "default_time", "hsc_model", "named_model", "pgf_eval", "pgf_eval_batch",
    "pseudo_gf",
    "OdeProblem", "integrate",
    "SimulationResult", "TransitionDistribution", "TruncatedGenerator",
    "build_generator", "simulate", "transition_row",
    "IndexSet", "MeasurementSet", "RecoveryConfig", "RecoveryResult",
    "default_lambda", "gradient", "line_search", "m_from_sparsity",
    "objective", "recover", "recover_transition_grid", "sample_measurements",
    "soft_threshold",
    "__version__",
]
