"""Greedy heuristics for D-efficient saturated and general-size subsets."""
from .core import (
    Criterion, RegressorSet, a_criterion, d_criterion, info_matrix, leverage_scores,
    orthogonal_rank, subset_value,
)
from .errors import (
    AllRunsSingularError, ConvergenceError, DSubsetError, InfeasibleSizeError,
    InstanceTooLargeError, InvalidSubsetError, RankDeficientError, SingularUniverseError,
)
from .evaluation import (
    ApproximateDesign, EfficiencyReport, approx_design_optimum, brute_force_optimal,
    efficiency_report,
)
from .heuristics import (
    HeuristicConfig, SelectionTrace, gkm, gkm_a_opt, gkm_randomized, kym, rgh,
    rnd_leverage_saturated, rnd_saturated, select,
)
from .strategies import (
    Profile, StrategyConfig, general_size, multi_run, preselect, run_strategy,
)
from .rng import stream

__version__ = "0.1.0"
