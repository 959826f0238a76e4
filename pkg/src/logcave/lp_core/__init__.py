"""Dense LP solver and the tent-function oracles built on it."""

from .simplex import (FEAS_TOL, INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem,
                      LpSolution, simplex_standard, solve_lp)
from .samples import SampleSet, ball_volume
from .oracles import (INSIDE, OUTSIDE_HULL, Hyperplane, Statistic, TentLP, heights_of,
                      hull_separator, is_outside, membership_oracle,
                      polyhedral_statistic, separation_oracle, tent_evaluate,
                      tent_support)

__all__ = [
    "FEAS_TOL", "INFEASIBLE", "OPTIMAL", "UNBOUNDED", "LpProblem", "LpSolution",
    "simplex_standard", "solve_lp", "SampleSet", "ball_volume", "INSIDE",
    "OUTSIDE_HULL", "Hyperplane", "Statistic", "TentLP", "heights_of", "hull_separator",
    "is_outside", "membership_oracle", "polyhedral_statistic",
    "separation_oracle", "tent_evaluate", "tent_support",
]
