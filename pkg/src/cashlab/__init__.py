"""cashlab: model-free combined algorithm selection and hyperparameter
tuning, with a worst-case sampling-theory laboratory and a statistical
engine for comparing tuning methods across dataset collections."""

from ._accel import NUMBA_ENABLED
from .chart import render_rank_chart
from .configspace import (
    Configuration,
    ConfigurationSpace,
    HyperparameterSpec,
    ModelDistribution,
    ModelSpec,
    SpaceError,
    hyperparameter_volume,
    load_space,
    model_probabilities,
    parse_space,
    sample_configuration,
    serialize_space,
    space_volumes,
)
from .engine import (
    EngineError,
    EvaluationError,
    RunResult,
    Rung,
    Schedule,
    TrialRecord,
    budget_of,
    compute_s_max,
    hyperband,
    hyperband_brackets,
    make_schedule,
    random_search,
    successive_halving,
    write_run_records,
)
from .harness import (
    BracketWinCounts,
    HarnessError,
    MethodSpec,
    ResultsStore,
    RunRecord,
    Suite,
    SyntheticProblem,
    bracket_win_counts,
    count_entropy,
    export_loss_matrix,
    generate_problem,
    run_method,
    run_suite,
    synthetic_evaluate,
)
from .stats import (
    LossMatrix,
    OmnibusReport,
    PValueMatrix,
    RankSummary,
    StatsError,
    average_ranks,
    bonferroni_adjust,
    compare_pipeline,
    finner_adjust,
    friedman_imandavenport,
    wilcoxon_signed_rank,
)
from .worker import WorkerClient, WorkerError, external_evaluate
from .worstcase import (
    FailureReport,
    WorstCaseError,
    WorstCaseSpec,
    failure_prob_closed,
    failure_prob_monte_carlo,
    failure_prob_uniform,
    failure_prob_weighted,
    theorem_gap,
)

__version__ = "0.1.0"
