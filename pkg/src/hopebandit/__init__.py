"""High-dimensional linear contextual bandits with pointwise reward estimates.

The library half exposes the estimators and policies; the CLI half
(``hopebandit run|plot|validate``) drives the benchmark grid and writes
delimited traces plus regret figures.
"""

from .bandit import (
    EnvData,
    PolicySpec,
    RegretTrace,
    choose_N,
    choose_n_raw,
    make_env_data,
    oracle_regret_increment,
    run_etc_baseline,
    run_hope,
    run_lasso_bandit,
    run_lin_ucb,
    run_oracle,
    run_policy,
)
from .config import ExperimentConfig, ScenarioConfig, load_config, parse_config
from .core import (
    ArmDataset,
    ConfigError,
    RngStream,
    StructuralError,
    SupportSet,
    as_design,
    split_halves,
    truncate_columns,
)
from .environment import (
    ArmModel,
    CovarianceSpec,
    ScenarioSpec,
    build_scenario,
    make_covariance,
    reward,
    sample_round,
    sample_rounds,
)
from .estimators import (
    Coefficients,
    LassoConfig,
    fit_lasso,
    fit_rdl,
    initial_lambda,
    lasso_support,
    sis_screen,
)
from .harness import (
    AggregateResult,
    ExperimentResult,
    aggregate,
    aggregate_all,
    read_aggregate_csv,
    run_experiment,
    write_aggregate_csv,
    write_raw_csv,
)
from .plots import emit_plot
from .pwe import (
    PweConfig,
    PweWorkspace,
    build_gamma,
    build_workspace,
    cross_validate_initial,
    estimate_with_prep,
    predict_mu,
    prepare_arm,
    project_split,
    pwe_estimate,
    solve_transformed,
    transformed_lambda,
)

__version__ = "0.1.0"
