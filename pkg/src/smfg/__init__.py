"""Static mean-field game simulator.

Construct monotone payoff operators over a finite action set, solve the
regularized mean-field equilibrium, simulate N independent learning agents
under full or bandit feedback, and measure exploitability and convergence
against closed-form guarantee bounds.
"""

from ._kernels import backend_name
from .bounds import (
    exploration_bias_bound,
    no_exploration_probability,
    policy_deviation_bound,
    symmetric_profile_exploitability_bound,
)
from .dynamics import (
    GameConfig,
    Schedule,
    Trajectory,
    epoch_length,
    importance_estimate,
    learning_rate,
    optimal_hyperparams,
    play_round,
    run_exploration_epoch,
    run_trpa_bandit,
    run_trpa_full,
)
from .equilibrium import (
    NonConvergenceError,
    RegularizedSolution,
    contraction_modulus,
    mfne_gap,
    solve_mfne,
    trpa_step,
)
from .metrics import (
    EnumerationBudgetError,
    ExploitabilityReport,
    PopulationMetrics,
    exploitability,
    exploitability_report,
    exploitability_with_std_error,
    expected_payoff,
    population_metrics,
)
from .payoffs import (
    BeachBarParams,
    CollisionParams,
    CurveTableParams,
    KlParams,
    LinearParams,
    PayoffOperator,
    custom_operator,
    estimate_lipschitz,
    estimate_monotonicity,
    linear_from_params,
    load_curve_table_csv,
    make_beach_bar,
    make_collision,
    make_constant,
    make_curve_table,
    make_kl,
    make_linear,
)
from .simplex import (
    EmpiricalMeasure,
    SimplexPoint,
    empirical_measure,
    project,
    sample_action,
    sample_uniform_points,
)

__version__ = "0.1.0"
