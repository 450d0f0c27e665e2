"""Exact and Monte Carlo analysis of recursive tournament rules and their manipulability."""

__version__ = "0.1.0"

from .errors import (
    BadCoalition,
    DegenerateInputs,
    ExactModeTooLarge,
    InvalidProbability,
    NotComplementary,
    NotMatchingRule,
    NotStrict,
    TooFewTeams,
    TooLarge,
    TournamentError,
    ViolationFound,
    ZeroEpsilon,
)
from .tournament import (
    DetTournament,
    ProbTournament,
    adjacent_extremes,
    condorcet_winner,
    enumerate_strict,
    is_strictly_bounded,
    is_weakly_bounded,
    l_values,
    sample_outcome,
    sample_strict,
    sample_weak,
    strict_decomposition_sample,
    validate,
)
from .rules import (
    MatchSet,
    Rule,
    WinnerDistribution,
    apply_round,
    coalition_win_prob,
    exact_winner_distribution,
    matchsets,
    mc_winner_distribution,
    rdm_matchsets,
    rkoth_matchsets,
    rseb_matchsets,
)
from .manipulation import (
    ManipulationReport,
    WorstCaseResult,
    alpha_pair,
    alpha_worst_case,
    coalition_gain_sum_check,
    convexity_check,
    epsilon_sweep,
    lower_bound_formula,
    three_cycle,
)
from .gauntlet import (
    EventClass,
    EventProbabilities,
    GauntletDistribution,
    calcs_lhs,
    classify_event,
    conditional_bad_gain,
    event_probabilities,
    framework_bound,
    gauntlet_distribution,
    gauntlet_independence_check,
    subcase_3b_probability,
    subcase_3b_tournament,
)
