"""Age of information for two update streams sharing a single-source
n-receiver multicast network under earliest-k1/k2 stopping.

Closed-form exact and large-n average ages, a Monte Carlo simulator that
serves as an independent oracle, and a weighted threshold optimizer with
pareto frontiers.
"""

from .analytic import (
    INFINITE_AGE,
    AgePair,
    AtWill,
    Exogenous,
    InfiniteAge,
    Moments2,
    Scenario,
    ScenarioApprox,
    StarvedStreamError,
    Stream,
    StreamMix,
    age_atwill_approx,
    age_atwill_exact,
    age_atwill_expanded,
    age_exogenous_approx,
    age_exogenous_exact,
    age_pair,
    geometric_moments,
    s_moments_atwill,
    s_moments_exogenous,
    ybar_moments,
)
from .optimize import (
    MonotonicityReport,
    ParetoPoint,
    ScenarioTemplate,
    lemma1_monotonicity_check,
    optimize,
    pareto_frontier,
)
from .orderstats import (
    HarmonicCache,
    ShiftedExp,
    delta_threshold,
    gen_harmonic,
    harmonic,
    mean_first_k,
    mean_first_k_approx,
    os_mean,
    os_second_moment,
    os_var,
    sample_delays,
)
from .sim import (
    DEFAULT_SEED,
    SimConfig,
    SimResult,
    empirical_cycle_gaps,
    empirical_delivery_probability,
    empirical_interarrival_moments,
    simulate,
)

__version__ = "0.1.0"
