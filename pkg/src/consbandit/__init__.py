"""Conservative linear UCB for stochastic contextual bandits.

The learner sees a distribution over contexts each round instead of the
context itself, plays optimistically within a confidence ellipsoid, and a
safety gate keeps its cumulative reward above a fixed fraction of a known
baseline's.  The package bundles the policy, its unconstrained and
observed-context baselines, simulation environments (a synthetic quadratic
model and a bilinear yield model), theory-bound calculators, and a seeded
experiment harness with a CLI.
"""

from .bilinear import BilinearModel, YieldDataset, load_dataset, make_surrogate, predict, sgd_fit
from .bounds import (
    TheoryParams,
    elliptical_potential_bound,
    elliptical_potential_check,
    lemma2_bound,
    lemma2_check,
    nT_lower_bound,
    nT_upper_bound,
    total_regret_bound,
    ucb_regret_bound,
)
from .confidence import (
    BetaParams,
    ConfidenceEllipsoid,
    RidgeState,
    beta,
    contains,
    lcb_value,
    ridge_update,
    ucb_value,
    ucb_values,
)
from .environments import (
    BilinearEnv,
    LinearBanditEnv,
    SyntheticQuadraticEnv,
    best_action_under_mu,
    realize_reward,
    sample_round,
)
from .features import (
    ActionSet,
    BilinearEmbeddingMap,
    ContextDistribution,
    Dirac,
    Discrete,
    FeatureMap,
    Gaussian,
    QuadraticFeatureMap,
    expected_feature_matrix,
    expected_features,
    features,
)
from .harness import (
    ExperimentConfig,
    RegretTrace,
    read_trace,
    report_from_traces,
    run_experiment,
    run_trial,
    simulate,
    write_trace,
)
from .numerics import (
    CholeskyFactor,
    NotPositiveDefiniteError,
    SpdMatrix,
    backend_name,
    solve_spd,
    weighted_norm,
    weighted_norm_inv,
)
from .policies import (
    PolicyState,
    RoundDecision,
    absorb_reward,
    baseline_kth_best,
    clucb_step,
    conservative_gate,
    cslucb_step,
    linucb_select,
    linucb_step,
)

__version__ = "0.1.0"
