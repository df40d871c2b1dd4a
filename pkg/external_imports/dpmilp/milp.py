"""Best-first branch and bound over the dense simplex.

Nodes are explored in order of their LP bound, ties by insertion order; the
branching variable is the most fractional integer variable (lowest index on
ties) and the down child is created before the up child. No cuts, no presolve.
"""
import heapq
import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .config import TOLERANCES
from .errors import InfeasibleBlockError, NodeBudgetError
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, solve_lp

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MILPInstance:
    lp: LinearProgram
    int_idx: Tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(int(j) for j in self.int_idx)
        object.__setattr__(self, "int_idx", idx)
        if any(j < 0 or j >= self.lp.n for j in idx):
            raise ValueError(f"integer indices {idx} out of range for {self.lp.n} variables")
        lo, hi = self.lp.bounds
        if idx and not (np.all(np.isfinite(lo[list(idx)])) and np.all(np.isfinite(hi[list(idx)]))):
            raise ValueError("integer variables need finite bounds")


@dataclass(frozen=True, eq=False)
class MILPSolution:
    status: str
    x: Optional[np.ndarray] = None
    obj: float = np.nan
    nodes: int = 0

    @property
    def optimal(self):
        return self.status == OPTIMAL


def _most_fractional(x, int_idx, tol_int):
    best, best_frac = None, tol_int
    for j in int_idx:
        frac = abs(x[j] - np.round(x[j]))
        if frac > best_frac:
            best, best_frac = j, frac
    return best


def _cutoff(incumbent_obj, tol):
    if not np.isfinite(incumbent_obj):
        return np.inf
    return incumbent_obj - tol.tol_gap * (1.0 + abs(incumbent_obj))


def solve_milp(inst, tol=TOLERANCES, node_budget=None):
    """Globally optimal solution of ``inst`` within ``tol_gap * (1 + |obj|)``."""
    node_budget = tol.node_budget if node_budget is None else node_budget
    int_idx = list(inst.int_idx)
    lo, hi = (b.copy() for b in inst.lp.bounds)
    lo[int_idx] = np.ceil(lo[int_idx] - tol.tol_int)
    hi[int_idx] = np.floor(hi[int_idx] + tol.tol_int)
    if np.any(lo > hi):
        return MILPSolution(INFEASIBLE)

    root = solve_lp(inst.lp.with_bounds(lo, hi), tol)
    if root.status != OPTIMAL:
        return MILPSolution(root.status)

    counter = itertools.count()
    heap = [(root.obj, next(counter), lo, hi, root.x)]
    incumbent, incumbent_obj = None, np.inf
    branched = 0
    while heap:
        bound, _, node_lo, node_hi, x = heapq.heappop(heap)
        if bound >= _cutoff(incumbent_obj, tol):
            break
        j = _most_fractional(x, int_idx, tol.tol_int)
        if j is None:
            x = x.copy()
            x[int_idx] = np.round(x[int_idx])
            incumbent, incumbent_obj = x, float(inst.lp.objective @ x)
            continue
        branched += 1
        if branched > node_budget:
            raise NodeBudgetError(f"branch and bound exceeded {node_budget} nodes")
        down_hi = node_hi.copy()
        down_hi[j] = np.floor(x[j])
        up_lo = node_lo.copy()
        up_lo[j] = np.ceil(x[j])
        for child_lo, child_hi in ((node_lo, down_hi), (up_lo, node_hi)):
            if np.any(child_lo > child_hi):
                continue
            sol = solve_lp(inst.lp.with_bounds(child_lo, child_hi), tol)
            if sol.status == UNBOUNDED:
                return MILPSolution(UNBOUNDED, nodes=branched)
            if sol.status == OPTIMAL and sol.obj < _cutoff(incumbent_obj, tol):
                heapq.heappush(heap, (sol.obj, next(counter), child_lo, child_hi, sol.x))

    if incumbent is None:
        return MILPSolution(INFEASIBLE, nodes=branched)
    logger.debug("branch and bound: obj=%.6g after %d branchings", incumbent_obj, branched)
    return MILPSolution(OPTIMAL, x=incumbent, obj=incumbent_obj, nodes=branched)


def block_instance(block, objective, G=None, h=None, n_extra=0, extra_lo=None, extra_hi=None):
    """MILP over ``X_i`` of ``block`` extended by ``n_extra`` continuous columns.

    Variables are ``[x (n_i), extra (n_extra)]``; the rows are the block's
    ``D x <= d`` followed by ``G [x; extra] <= h``.
    """
    n = block.n
    width = n + n_extra
    D = np.hstack([block.P.D, np.zeros((block.P.D.shape[0], n_extra))])
    rows, rhs = [D], [block.P.d]
    if G is not None:
        rows.append(np.atleast_2d(np.asarray(G, dtype=float)).reshape(-1, width))
        rhs.append(np.atleast_1d(np.asarray(h, dtype=float)))
    lo = np.concatenate([block.P.lo, np.zeros(n_extra) if extra_lo is None else extra_lo])
    hi = np.concatenate([block.P.hi, np.full(n_extra, np.inf) if extra_hi is None else extra_hi])
    lp = LinearProgram(objective, G=np.vstack(rows), h=np.concatenate(rhs), lo=lo, hi=hi)
    return MILPInstance(lp, block.int_idx)


def minimize_over_block(block, weights, tol=TOLERANCES):
    """``min_{x in X_i} weights^T x``; raises InfeasibleBlockError when X_i is empty."""
    sol = solve_milp(block_instance(block, weights), tol)
    if not sol.optimal:
        raise InfeasibleBlockError(f"block has no mixed-integer point ({sol.status})")
    return sol.obj, sol.x
