"""Scores over the outcome matrix returned by the primal decomposition workflow.

Each score reads one column of ``y_pred``; ``y_true`` carries no outcome and is
ignored. Instances with an infeasible restricted LP count as not solvable and
not feasible, and are left out of the suboptimality and feasibility round.
"""
import numpy as np
from rampwf.score_types.base import BaseScoreType

from workflows.primal_decomposition import OUTCOME_COLUMNS


def _column(y_pred, name):
    return np.asarray(y_pred, dtype=float).reshape(-1, len(OUTCOME_COLUMNS))[:, OUTCOME_COLUMNS.index(name)]


def _mean(values):
    values = values[~np.isnan(values)]
    return float(values.mean()) if values.size else np.nan


class _OutcomeScore(BaseScoreType):
    column = None

    def check_y_pred_dimensions(self, y_true, y_pred):
        pass

    def __call__(self, y_true, y_pred):
        return _mean(_column(y_pred, self.column))


class SolvableFraction(_OutcomeScore):
    """Share of instances whose restricted LP is feasible."""
    is_lower_the_better = False
    minimum = 0.0
    maximum = 1.0
    precision = 3
    column = "solvable"

    def __init__(self, name="solvable"):
        self.name = name


class FeasibleFraction(_OutcomeScore):
    """Share of instances whose last recovered solution satisfies the coupling constraint."""
    is_lower_the_better = False
    minimum = 0.0
    maximum = 1.0
    precision = 3
    column = "feasible"

    def __init__(self, name="feasible"):
        self.name = name


class RestrictionSize(_OutcomeScore):
    """Mean ``||sigma|| / ||b||``."""
    is_lower_the_better = True
    minimum = 0.0
    maximum = float("inf")
    precision = 4
    column = "restriction_ratio"

    def __init__(self, name="restriction_size"):
        self.name = name


class Suboptimality(_OutcomeScore):
    """Mean ``(cost - q*) / |q*|`` over the solvable instances."""
    is_lower_the_better = True
    minimum = -float("inf")
    maximum = float("inf")
    precision = 4
    column = "suboptimality"

    def __init__(self, name="suboptimality"):
        self.name = name

    def __call__(self, y_true, y_pred):
        solvable = _column(y_pred, "solvable") == 1.0
        return _mean(_column(y_pred, self.column)[solvable])


class FeasibilityRound(_OutcomeScore):
    """Mean first round with a feasible recovered solution, over the instances that reach one."""
    is_lower_the_better = True
    minimum = 0.0
    maximum = float("inf")
    precision = 1
    column = "feasibility_round"

    def __init__(self, name="feasibility_round"):
        self.name = name
