"""Fair randomized threshold classifiers for strategic binary classification."""

__version__ = "0.1.0"

from .errors import (
    DegenerateScoreModelError,
    EstimationError,
    InfeasibleError,
    IngestionError,
    InvalidCostModelError,
    StratFairError,
)
from .score_cost import CostModel, FairnessBudget, ScoreBounds, ScoreModel, cap_constant, density_cap_individual
from .response import ThresholdDistribution, best_respond, expected_brc, expected_outcome
from .estimation import BinWeights, compute_error_weights, compute_positive_weights, conditional_positive_weights
from .lp import LpProblem, LpSolution, brute_force_oracle, solve
from .policy import FairPolicy, FitSpec, fit_deterministic_baseline, fit_group, fit_individual, predict
from .metrics import FairnessReport, disparity, if_ratio, macro_f1
from .data import GroupCdfTable, SplitSpec, TabularDataset, load_lawschool, sample_fico, split
from .experiments import RunConfig, evaluate_policy, format_table, run_reproduce
