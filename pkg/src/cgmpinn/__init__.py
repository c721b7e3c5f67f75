"""Curriculum-guided Gaussian-mixture residual reweighting for PINNs."""

from .balancing import BalancerConfig, BalancerState, compute_lambdas, new_balancer, update_ema
from .config import ExperimentConfig, TrainConfig, resolve_method
from .curriculum import (
    CurriculumConfig,
    CurriculumState,
    bound_constants,
    component_difficulty,
    curriculum_component_weights,
    initial_state,
    normalize_difficulty,
    refresh,
    sample_weights,
    tau,
)
from .errors import CgmpinnError, ConfigurationError, InputError, NumericalError
from .gmm import GmmModel, em_step, fit_gmm, log_likelihood, responsibilities
from .network import (
    ApproximatorParams,
    Jet,
    eval_jet,
    forward_jets,
    forward_values,
    init_network,
    load_checkpoint,
    n_parameters,
    objective_gradient,
    save_checkpoint,
)
from .problems import (
    PROBLEM_IDS,
    ErrorMetrics,
    PointSets,
    ProblemSpec,
    evaluate_metrics,
    exact_jet,
    exact_solution,
    make_problem,
    make_test_grid,
    pde_residual,
    sample_points,
    source_and_data,
)
from .records import IterRow, RefreshRow, RunRecord
from .training import (
    AdamState,
    PinnLoss,
    adam_init,
    adam_step,
    gd_step,
    lbfgs_run,
    total_loss,
    train,
    weighted_pde_loss,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
