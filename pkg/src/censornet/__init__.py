"""censornet: censoring + randomized-transmission distributed detection.

Library and batch CLI for simulating ternary censoring sensor networks over
fading channels with equicorrelated observation noise, evaluating
miss/false-alarm/transmission probabilities semi-analytically and by Monte
Carlo, and solving the two constrained design problems (minimize miss under
rate + false-alarm caps; minimize rate under detection caps) for pure
censoring, CRT-I, and CRT-II schemes.
"""

from .network_model import (
    DesignPoint,
    FeasibleRange,
    Hypothesis,
    NetworkConfig,
    Scheme,
    classify_observation,
    feasible_f_range,
    g_of_f,
    interval_probs,
    map_symbol,
    rate_probs,
)
from .correlated_gaussian import (
    IntervalAssignment,
    rectangle_prob,
    sample_observations,
    univariate_cdf,
)
from .fusion_rules import (
    AssumedModel,
    ChannelRealization,
    fuse,
    lr_crt1,
    lr_crt2,
    lr_pure_censoring,
    symbol_likelihood,
)
from .performance_eval import (
    CategoryVector,
    PerfEstimate,
    Route,
    SignedBivariatePolynomial,
    estimate_pu,
    extract_signed_coeffs,
    perf_oracle,
    perf_semianalytic_crt1,
    perf_semianalytic_crt2,
)
from .problem_o import (
    InfeasibleError,
    KKTSolution,
    ProblemOSpec,
    PureDesign,
    SolverOptions,
    solve_crt_o,
    solve_pure_censoring_o,
)
from .problem_s import (
    CondensedConstraint,
    GPIterate,
    ProblemSSpec,
    SOptions,
    condense_agm,
    solve_crt_s,
    solve_gp_2var,
    solve_pure_censoring_s,
)
from .analysis_checks import (
    DerivativeReport,
    check_crt1_boundary_derivatives,
    check_crt2_boundary_derivatives,
    closed_form_boundary_derivatives_crt1,
)
from .experiments import ExperimentSpec, load_config, run_experiment, run_mismatch

__version__ = "0.1.0"
