import os
from pathlib import Path

import numpy as np

from workflows.primal_decomposition import DistributedPrimalDecomposition, OUTCOME_COLUMNS

from prediction_types.outcomes import make_run_outcomes
from score_types.restriction_scores import (FeasibilityRound, FeasibleFraction, RestrictionSize,
                                            SolvableFraction, Suboptimality)

problem_title = "Distributed primal decomposition of constraint-coupled MILPs"

# -----------------------------------------------------------------------------
# Worklow element
# -----------------------------------------------------------------------------

# delta : finite-time enlargement, 0.5 * S / 5 for the S = 2 desk instances
workflow = DistributedPrimalDecomposition(T_f=300, delta=0.2, graph_p=0.2, graph_seed=0,
                                          schedule_kind="power", alpha0=1.0, exponent=0.8,
                                          recover_every=10, pricing="enumerate", n_jobs=1)

# -----------------------------------------------------------------------------
# Predictions type
# -----------------------------------------------------------------------------

Predictions = make_run_outcomes(columns=OUTCOME_COLUMNS)

# -----------------------------------------------------------------------------
# Score types
# -----------------------------------------------------------------------------


score_types = [
    Suboptimality(),
    SolvableFraction(),
    FeasibleFraction(),
    RestrictionSize(),
    FeasibilityRound(),
]


# ----------------------------------------------------------------------------
# Cross-validation scheme
# ----------------------------------------------------------------------------


def get_cv(X, y):
    """
    One fold per data/train_* folder (loose and tight resources). Restrictions
    are computed per instance, so the train and valid data of a fold are the same.

    :param X: tuple of paths
    :param y: tuple of paths
    :return:
    """
    assert isinstance(X, tuple)
    assert isinstance(y, tuple)
    assert len(X) == len(y), f"{len(X)=}  and {len(y)=}"

    folders_names = sorted(set(Path(path_).parent.name for path_ in X))
    # {'train_loose': 0, 'train_tight': 1}
    map_ = {k: v for v, k in enumerate(folders_names)}

    support = np.array([map_[Path(path_).parent.name] for path_ in X])
    arange = np.arange(len(y))
    for i_fold in range(len(folders_names)):
        vec_bool = (support == i_fold)
        train_is = arange[vec_bool]
        valid_is = arange[vec_bool]
        yield train_is, valid_is


# -----------------------------------------------------------------------------
# Training / testing data reader
# -----------------------------------------------------------------------------


def _read_data(path, str_: str):
    train_folders = sorted((Path(path) / Path("data")).glob("train_*"))
    assert len(
        train_folders), f"Please generate the data with python generate_data.py"
    test = os.getenv("RAMP_TEST_MODE", 0)

    rng = np.random.RandomState(seed=0)

    res = tuple()
    for train_folder in train_folders:
        instances = tuple(sorted(train_folder.glob("*.json")))
        if test:
            # for the "quick-test" mode, solve only a few instances per fold
            res += tuple(rng.choice(np.array(instances, dtype=object), size=min(2, len(instances)),
                                    replace=False))
        else:
            res += instances

    return res, res


def get_train_data(path="."):
    return _read_data(path, "train")


def get_test_data(path="."):
    return tuple(), tuple()
