import os
from pathlib import Path
from typing import List

import numpy as np
from joblib import Parallel, delayed
from rampwf.utils.importing import import_module_from_source

from dpmilp.config import GraphConfig, RestrictionConfig, RunConfig, ScheduleConfig
from dpmilp.cli import OUTCOME_OK, run_pipeline
from dpmilp.model import load
from dpmilp.restriction import compute_report

OUTCOME_COLUMNS = ("solvable", "restriction_ratio", "q_star", "cost", "feasible",
                   "suboptimality", "feasibility_round")


class DistributedPrimalDecomposition():
    """

    Workflow comparing restrictions of the coupling constraint

    the submissions must contain only one file "restriction.py".
    This file must contain a "Restriction" class with the following methods:
    __init__(self, delta) : where delta is the finite-time enlargement of the restriction
    fit(self, problems) : where problems is the list of training instances of the fold
    sigma(self, problem, report) : returns the restriction vector (S nonnegative values) of one instance,
        report holds the quantities every agent can compute locally (L, U, rho_max, sigma_inf, sigma_ft, sigma_dd)

    Every instance is then solved by the distributed algorithm with the returned restriction.
    test_submission returns one row of OUTCOME_COLUMNS per instance.
    """

    def __init__(self, workflow_element_names=['restriction'],
                 T_f: int = 300,
                 delta: float = 0.2,
                 graph_p: float = 0.2,
                 graph_seed: int = 0,
                 schedule_kind: str = "power",
                 alpha0: float = 1.0,
                 exponent: float = 0.8,
                 recover_every: int = 10,
                 pricing: str = "milp",
                 n_jobs: int = 1):
        """

        :param workflow_element_names: List of python file names contained in a submission
        :param T_f: number of rounds of the distributed algorithm
        :param delta: finite-time enlargement handed to the submission
        :param graph_p: edge probability of the Erdos-Renyi communication graph
        :param graph_seed: integer value for reproductible graphs
        :param recover_every: recovery period in rounds (the last round is always recovered)
        :param pricing: "milp" or "enumerate"
        :param n_jobs: number of instances solved in parallel
        """
        self.elements_names = workflow_element_names
        self.delta = delta
        self.n_jobs = n_jobs
        self.config = RunConfig(
            graph=GraphConfig(p=graph_p, seed=graph_seed),
            restriction=RestrictionConfig(delta=delta),
            schedule=ScheduleConfig(kind=schedule_kind, alpha0=alpha0, exponent=exponent),
            T_f=T_f,
            recover_every=recover_every,
            pricing=pricing,
        )

    def train_submission(self, module_path, X_array, y_array, train_is=None):
        """Load the restriction strategy and fit it on the instances of the fold.
        module_path : str
            folder of the submission, it has to contain restriction.py.
        X_array : Tuple of instance paths
        y_array : Tuple of instance paths
        train_is : vector of int
           indices from X_array to train on
        """
        assert isinstance(X_array, tuple)  # tuple of paths
        assert isinstance(y_array, tuple)  # tuple of paths
        if train_is is None:
            train_is = range(len(X_array))

        restriction_module = import_module_from_source(
            os.path.join(module_path, self.elements_names[0] + ".py"),
            self.elements_names[0],
            sanitize=True
        )
        restriction = restriction_module.Restriction(delta=self.delta)

        selected: List[Path] = [Path(X_array[i]) for i in train_is]
        folders = set(path_.parent.name for path_ in selected)
        assert len(folders) <= 1, f"They are not exactly one folder ({len(folders)}) {folders=}"
        restriction.fit([load(path_) for path_ in selected])
        return restriction

    def check_sigma(self, sigma, problem):
        """Checks that sigma is a vector of S nonnegative finite values."""
        if sigma.shape != (problem.S,):
            raise ValueError(f"Output of sigma must have shape {(problem.S,)}, found {sigma.shape}")
        if not np.all(np.isfinite(sigma)):
            raise ValueError("Output of sigma must be finite")
        if np.any(sigma < 0):
            raise ValueError(f"Output of sigma must be nonnegative, found {sigma}")

    def run_instance(self, restriction, path):
        """One outcome row: the distributed algorithm on the instance at ``path``."""
        problem = load(path)
        report = compute_report(problem, self.delta)
        sigma = np.asarray(restriction.sigma(problem, report), dtype=float)
        self.check_sigma(sigma, problem)
        summary, _ = run_pipeline(problem, self.config, sigma=sigma, report=report)
        row = dict.fromkeys(OUTCOME_COLUMNS, np.nan)
        row["restriction_ratio"] = summary["restriction_ratio"]
        row["solvable"] = float(summary["outcome"] == OUTCOME_OK)
        row["feasible"] = 0.0
        if summary["outcome"] == OUTCOME_OK:
            row.update(q_star=summary["q_star"], cost=summary["cost"], feasible=float(summary["feasible"]),
                       suboptimality=summary["suboptimality"])
            if summary["feasibility_round"] is not None:
                row["feasibility_round"] = summary["feasibility_round"]
        return [row[c] for c in OUTCOME_COLUMNS]

    def test_submission(self, trained_model, X_array):
        """

        :param trained_model: object that is returned by train_submission, in our case the restriction
        :param X_array: Tuple of instance paths
        :return: outcome matrix of shape (len(X_array), len(OUTCOME_COLUMNS))
        """
        assert isinstance(X_array, tuple)
        rows = Parallel(n_jobs=self.n_jobs, backend='threading')(
            delayed(self.run_instance)(trained_model, path_) for path_ in X_array)
        return np.array(rows, dtype=float).reshape(len(X_array), len(OUTCOME_COLUMNS))
