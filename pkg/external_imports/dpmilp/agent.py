"""Per-agent state machine: allocation update and mixed-integer recovery.

At round ``t`` agent ``i`` evaluates its relaxed subproblem at ``y_i^t``,
receives the neighbours' multipliers of the same round and moves

    y_i^{t+1} = y_i^t + alpha^t sum_{j in N_i} (mu_i^t - mu_j^t).

The pairwise terms cancel over the network, so ``sum_i y_i^t`` stays equal to
``b - sigma``. Recovery picks a point of ``X_i`` that first minimises the
violation ``rho`` of ``A_i x <= y_i + rho 1`` and then the cost.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import TOLERANCES
from .errors import InfeasibleBlockError
from .milp import block_instance, minimize_over_block, solve_milp
from .model import MixedIntegerPoint
from .subproblem import ColumnPool, evaluate, make_pricer

logger = logging.getLogger(__name__)

STAGE_TWO_SLACK = 1e-9


@dataclass(frozen=True)
class StepSizeSchedule:
    """``alpha^t = alpha0 / (t + 1)^exponent``; ``harmonic`` is exponent 1.

    Exponents in (0.5, 1] give a divergent sum with a summable square.
    """
    kind: str = "power"
    alpha0: float = 1.0
    exponent: float = 0.8

    def __post_init__(self):
        if self.kind not in ("harmonic", "power"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "harmonic":
            object.__setattr__(self, "exponent", 1.0)
        if not 0.5 < self.exponent <= 1.0:
            raise ValueError(f"step-size exponent must lie in (0.5, 1], got {self.exponent}")
        if self.alpha0 <= 0:
            raise ValueError(f"alpha0 must be > 0, got {self.alpha0}")

    def __call__(self, t):
        return self.alpha0 / (t + 1.0) ** self.exponent

    @classmethod
    def from_config(cls, cfg):
        return cls(cfg.kind, cfg.alpha0, cfg.exponent)


def init_allocation(problem, sigma):
    """``y_i^0 = (b - sigma) / N``; the last agent absorbs the rounding."""
    total = problem.b - np.asarray(sigma, dtype=float)
    share = total / problem.N
    ys = [share.copy() for _ in range(problem.N)]
    ys[-1] = total - np.sum(ys[:-1], axis=0) if problem.N > 1 else total.copy()
    return ys


def allocation_update(state, neighbor_mus, alpha_t):
    """New allocation from same-round ``(mu_j, j)`` pairs; ``state`` is not modified."""
    step = np.zeros_like(state.y)
    for mu_j, _ in neighbor_mus:
        step += state.mu - np.asarray(mu_j, dtype=float)
    return state.y + alpha_t * step


@dataclass(frozen=True, eq=False)
class Recovery:
    point: MixedIntegerPoint
    rho: float
    cost: float


def recover_mixed_integer(block, y, owner=0, tol=TOLERANCES):
    """Two-stage lexicographic recovery: minimal ``rho`` first, then minimal cost."""
    S, n = block.S, block.n
    y = np.asarray(y, dtype=float)
    G = np.hstack([block.A, -np.ones((S, 1))])
    stage_one = block_instance(block, np.concatenate([np.zeros(n), [1.0]]), G=G, h=y, n_extra=1)
    sol = solve_milp(stage_one, tol)
    if not sol.optimal:
        raise InfeasibleBlockError(f"recovery stage 1 is {sol.status}")
    rho = max(float(sol.obj), 0.0)

    stage_two = block_instance(block, np.concatenate([block.c, [0.0]]), G=G, h=y, n_extra=1,
                               extra_lo=[0.0], extra_hi=[rho + STAGE_TWO_SLACK])
    sol = solve_milp(stage_two, tol)
    if not sol.optimal:
        raise InfeasibleBlockError(f"recovery stage 2 is {sol.status}")
    x = sol.x[:n]
    return Recovery(MixedIntegerPoint(x, owner), rho, float(block.c @ x))


def recover_dual_decomposition(block, lam, owner=0, tol=TOLERANCES):
    """Minimiser over ``X_i`` of the Lagrangian ``(c_i + A_i^T lam)^T x``."""
    _, x = minimize_over_block(block, block.c + block.A.T @ np.asarray(lam, dtype=float), tol)
    return Recovery(MixedIntegerPoint(x, owner), 0.0, float(block.c @ x))


class AgentState:
    """Everything agent ``id`` keeps between rounds."""

    def __init__(self, id, block, y, pricing="milp", tol=TOLERANCES):
        self.id = id
        self.block = block
        self.y = np.array(y, dtype=float)
        self.mu = np.zeros(block.S)
        self.z = None
        self.v = 0.0
        self.lp_cost = np.nan
        self.pool = ColumnPool(block)
        self.pricer = make_pricer(block, pricing, tol)
        self.tol = tol
        self.recovery: Optional[Recovery] = None
        self._evaluated = None

    def evaluate(self, M):
        """Subproblem at the current ``y``; repeated calls at the same ``(y, M)`` reuse the result."""
        if self._evaluated is not None and self._evaluated[1] == M and np.array_equal(self._evaluated[0], self.y):
            return self._evaluated[2]
        res = evaluate(self.block, self.y, M, self.pool, self.pricer, self.tol)
        self.mu, self.z, self.v, self.lp_cost = res.mu, res.z, res.v, res.cost
        self._evaluated = (self.y.copy(), M, res)
        return res

    def update_allocation(self, neighbor_mus, alpha_t):
        self.y = allocation_update(self, neighbor_mus, alpha_t)
        return self.y

    def recover(self):
        self.recovery = recover_mixed_integer(self.block, self.y, self.id, self.tol)
        return self.recovery

    def iterate(self, neighbor_mus, alpha_t, M):
        """One round: evaluate at ``y``, then move ``y``.

        ``neighbor_mus`` is either the list of same-round ``(mu_j, j)`` pairs or
        a callable ``(id, mu) -> list`` that performs the exchange.
        """
        self.evaluate(M)
        if callable(neighbor_mus):
            neighbor_mus = neighbor_mus(self.id, self.mu)
        self.update_allocation(neighbor_mus, alpha_t)
        return self
