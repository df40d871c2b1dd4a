"""Restriction of the coupling constraint.

Per agent: ``L_i = min_{X_i} A_i x`` row by row, the worst-case steady-state
violation ``rho_i^max = min_{X_i} max_s [A_i x - L_i]_s`` and the saturated
``sigma_i^loc = min(rho_i^max 1, max_{X_i} A_i x - L_i)``. Over the network:
``sigma_inf = S max_i sigma_i^loc`` (componentwise), its finite-time
enlargement ``sigma_ft = sigma_inf + delta 1`` and the dual decomposition
baseline ``sigma_dd = S max_i (max_{X_i} A_i x - L_i)``.
"""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
from joblib import Parallel, delayed

from .config import TOLERANCES
from .errors import InfeasibleBlockError
from .milp import block_instance, minimize_over_block, solve_milp
from .model import MixedIntegerPoint
from .network import RoundMessage, SynchronousChannel

logger = logging.getLogger(__name__)

SIGMA_MODES = ("inf", "ft", "dd", "custom")


def compute_L(block, tol=TOLERANCES):
    return np.array([minimize_over_block(block, block.A[s], tol)[0] for s in range(block.S)])


def compute_U(block, tol=TOLERANCES):
    return np.array([-minimize_over_block(block, -block.A[s], tol)[0] for s in range(block.S)])


def compute_rho_max(block, L, tol=TOLERANCES, owner=0):
    """``min t  s.t.  A x - L <= t 1, x in X_i``; returns ``t`` and the minimiser."""
    S, n = block.S, block.n
    G = np.hstack([block.A, -np.ones((S, 1))])
    objective = np.concatenate([np.zeros(n), [1.0]])
    inst = block_instance(block, objective, G=G, h=np.asarray(L, dtype=float), n_extra=1)
    sol = solve_milp(inst, tol)
    if not sol.optimal:
        raise InfeasibleBlockError(f"rho_max problem is {sol.status}")
    return max(float(sol.obj), 0.0), MixedIntegerPoint(sol.x[:n], owner)


def compute_sigma_loc(block, L, rho_max, U=None, tol=TOLERANCES):
    U = compute_U(block, tol) if U is None else np.asarray(U, dtype=float)
    return np.maximum(np.minimum(rho_max, U - np.asarray(L, dtype=float)), 0.0)


@dataclass(frozen=True, eq=False)
class AgentRestriction:
    L: np.ndarray
    U: np.ndarray
    rho_max: float
    witness: MixedIntegerPoint
    sigma_loc: np.ndarray


def compute_agent(block, owner=0, tol=TOLERANCES):
    L = compute_L(block, tol)
    U = compute_U(block, tol)
    rho, witness = compute_rho_max(block, L, tol, owner)
    return AgentRestriction(L, U, rho, witness, compute_sigma_loc(block, L, rho, U, tol))


@dataclass(frozen=True, eq=False)
class RestrictionReport:
    L: np.ndarray                   # (N, S)
    U: np.ndarray                   # (N, S)
    rho_max: np.ndarray             # (N,)
    sigma_loc: np.ndarray           # (N, S)
    sigma_inf: np.ndarray
    sigma_ft: np.ndarray
    sigma_dd: np.ndarray
    delta: float
    witnesses: List[MixedIntegerPoint] = field(default_factory=list)

    def sigma(self, mode, custom=None):
        if mode == "inf":
            return self.sigma_inf
        if mode == "ft":
            return self.sigma_ft
        if mode == "dd":
            return self.sigma_dd
        if mode == "custom":
            custom = np.asarray(custom, dtype=float)
            if custom.shape != self.sigma_inf.shape or np.any(custom < 0):
                raise ValueError(f"custom sigma must be {self.sigma_inf.size} nonnegative values")
            return custom
        raise ValueError(f"unknown sigma mode {mode!r}, expected one of {SIGMA_MODES}")

    def to_dict(self):
        return {
            "L": self.L.tolist(),
            "U": self.U.tolist(),
            "rho_max": self.rho_max.tolist(),
            "sigma_loc": self.sigma_loc.tolist(),
            "sigma_inf": self.sigma_inf.tolist(),
            "sigma_ft": self.sigma_ft.tolist(),
            "sigma_dd": self.sigma_dd.tolist(),
            "delta": self.delta,
        }


def restriction_ratio(sigma, b):
    """Size of a restriction relative to the resource vector, ``||sigma|| / ||b||``."""
    return float(np.linalg.norm(sigma) / np.linalg.norm(b))


def assemble(agents, S, delta):
    sigma_loc = np.array([a.sigma_loc for a in agents]).reshape(-1, S)
    L = np.array([a.L for a in agents]).reshape(-1, S)
    U = np.array([a.U for a in agents]).reshape(-1, S)
    sigma_inf = S * sigma_loc.max(axis=0)
    return RestrictionReport(L=L, U=U, rho_max=np.array([a.rho_max for a in agents]), sigma_loc=sigma_loc,
                             sigma_inf=sigma_inf, sigma_ft=sigma_inf + delta,
                             sigma_dd=S * np.maximum((U - L).max(axis=0), 0.0), delta=float(delta),
                             witnesses=[a.witness for a in agents])


def compute_report(problem, delta=0.5, n_jobs=1, tol=TOLERANCES):
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    agents = Parallel(n_jobs=n_jobs, backend="threading")(
        delayed(compute_agent)(blk, i, tol) for i, blk in enumerate(problem.blocks))
    report = assemble(agents, problem.S, delta)
    logger.info("restriction: max rho_max=%.4g, sigma_inf=%s, sigma_dd=%s",
                report.rho_max.max(), report.sigma_inf, report.sigma_dd)
    return report


def max_consensus(values, graph, rounds=None, channel=None):
    """Synchronous max-consensus; row ``i`` of the result is agent ``i``'s estimate.

    After ``graph.diameter`` rounds every agent holds the componentwise maximum.
    """
    state = np.array(values, dtype=float).reshape(graph.n, -1)
    rounds = graph.diameter if rounds is None else rounds
    channel = channel or SynchronousChannel(graph)
    for _ in range(rounds):
        t = channel.round
        for i in range(graph.n):
            for j in graph.neighbors(i):
                channel.send(RoundMessage(i, j, state[i].copy(), t))
        inbox = channel.deliver(t)
        state = np.array([np.max([state[i]] + [m.payload for m in inbox[i]], axis=0)
                          for i in range(graph.n)])
    return state


def distributed_report(problem, graph, delta=0.5, n_jobs=1, tol=TOLERANCES):
    """``compute_report`` with the network maxima taken by max-consensus.

    Returns the report and the per-agent estimates of ``sigma_inf``.
    """
    report = compute_report(problem, delta, n_jobs, tol)
    local = np.hstack([report.sigma_loc, report.U - report.L])
    agreed = max_consensus(local, graph)
    S = problem.S
    estimates = S * agreed[:, :S]
    if not np.array_equal(estimates, np.broadcast_to(report.sigma_inf, estimates.shape)):
        logger.warning("max-consensus estimates differ from the centralized sigma_inf")
    return report, estimates


def default_M(problem, graph=None):
    """``10 max_i (||c_i||_1 + 1)``, agreed by max-consensus when a graph is given."""
    local = np.array([[np.abs(blk.c).sum() + 1.0] for blk in problem.blocks])
    if graph is not None:
        local = max_consensus(local, graph)
    return 10.0 * float(local.max())
