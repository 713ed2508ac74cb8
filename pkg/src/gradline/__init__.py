"""Gradient-only line searches and a benchmark harness for dynamically
sub-sampled training losses."""

from .baselines import CosineSchedule, GolsiState, cosine_lr, fixed_step, golsi_step
from .data import (
    Dataset,
    NoisyBowlND,
    NoisyQuadratic1D,
    load_idx,
    load_mnist,
    make_noisy_bowl,
    make_noisy_quadratic,
    read_idx_images,
    read_idx_labels,
    write_idx_images,
    write_idx_labels,
)
from .directions import (
    DIRECTION_KINDS,
    GAMMA_DEFAULTS,
    DirectionState,
    adam_direction,
    make_direction_state,
    next_direction,
    rmsprop_direction,
    sgd_direction,
)
from .errors import (
    BudgetExhaustedError,
    ConfigError,
    DataError,
    DegenerateAbscissaeError,
    IncompleteTableError,
    NonFiniteLossError,
    NotADescentDirectionError,
    ZeroSlopeError,
)
from .goals import (
    GOALS_PRESETS,
    INITIAL_GUESS_MODES,
    GoalsConfig,
    bracket,
    check_armijo,
    check_curvature,
    check_iac,
    goals_preset,
    goals_step,
    initial_guess,
)
from .harness import (
    CSV_HEADER,
    N2_LAYERS,
    PROBLEMS,
    STRATEGIES,
    ProblemBundle,
    RobustnessTable,
    RunConfig,
    RunLog,
    RunRecord,
    build_problem,
    config_from_mapping,
    moving_average,
    relative_robustness,
    run_sweep,
    snngpp_histogram,
    train_run,
)
from .network import (
    MlpArchitecture,
    MlpProblem,
    evaluate_metrics,
    forward,
    loss_and_grad,
    one_hot,
    param_layout,
    xavier_init,
)
from .oracle import DirectionalSlice, FreshEvaluation, StochasticOracle, sample_batch
from .surrogate import (
    BRACKET_CAPPED,
    BRACKET_CONVERGED,
    DEGENERATE_RESTART,
    EXTRAPOLATION_GUESS,
    IMMEDIATE_ACCEPT,
    INTERPOLATED,
    TERMINATIONS,
    LinearDerivativeModel,
    LineSearchResult,
    fit_linear_derivative,
    gos_step,
    interpolate_sign_change,
)

__version__ = "0.1.0"
