"""Weighted nuclear norm matrix completion under non-uniform sampling."""
from .distributions import ProbabilityVector, ProductDistribution, power_law, uniform
from .sampling import EmpiricalEstimate, ObservationSet, stage_one_sample, stage_two_sample, stream
from .bounds import BoundPlan, sample_size_one_sided, sample_size_two_sided
from .weights import WeightPair, build_weights
from .solver import SolverConfig, SolveResult, recovery_check, solve_unweighted, solve_weighted

__version__ = "0.1.0"
