"""The relaxed local subproblem over conv(X_i), solved by column generation.

For one block the subproblem at allocation ``y`` is::

    min  c^T z + M v   s.t.  A z <= y + v 1,  z in conv(X_i),  v >= 0

``conv(X_i)`` is never built. The master LP mixes the points of a column pool,
and pricing adds the point of ``X_i`` with the most negative reduced cost.
The multiplier ``mu`` of the ``A z <= y + v 1`` rows is the master's basis
dual, so the derivative of the optimal cost with respect to ``y`` is ``-mu``.
"""
import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .config import TOLERANCES
from .errors import DPMILPWarning, InfeasibleBlockError, PricingCapError
from .lp import OPTIMAL, LinearProgram, solve_lp
from .milp import minimize_over_block
from .model import extreme_points

logger = logging.getLogger(__name__)


class ColumnPool:
    """Points of ``X_i`` generated so far for one block; no duplicates."""

    def __init__(self, block):
        self.block = block
        self.points = []
        self._keys = set()
        self._ints = list(block.int_idx)

    def __len__(self):
        return len(self.points)

    def add(self, x):
        """Add ``x`` (integer coordinates snapped); returns False if already present."""
        x = np.array(x, dtype=float)
        x[self._ints] = np.round(x[self._ints])
        key = x.tobytes()
        if key in self._keys:
            return False
        self._keys.add(key)
        self.points.append(x)
        return True

    def copy(self):
        other = ColumnPool(self.block)
        other.points = list(self.points)
        other._keys = set(self._keys)
        return other

    @property
    def matrix(self):
        return np.array(self.points).reshape(-1, self.block.n)

    def columns(self):
        """Per-point cost ``c^T x`` and usage ``A x`` (one column per point)."""
        V = self.matrix
        return V @ self.block.c, (V @ self.block.A.T).T


class MILPPricer:
    """Pricing by branch and bound over ``X_i``."""

    def __init__(self, block, tol=TOLERANCES):
        self.block = block
        self.tol = tol

    def __call__(self, weights):
        return minimize_over_block(self.block, weights, self.tol)


class EnumerationPricer:
    """Pricing over the extreme points of ``X_i`` (blocks with ``q <= 1``)."""

    def __init__(self, block, tol=TOLERANCES):
        self.block = block
        self.points = extreme_points(block, tol)
        if self.points.shape[0] == 0:
            raise InfeasibleBlockError("block has no mixed-integer point")

    def __call__(self, weights):
        values = self.points @ np.asarray(weights, dtype=float)
        k = int(np.argmin(values))
        return float(values[k]), self.points[k].copy()


def make_pricer(block, kind="milp", tol=TOLERANCES):
    if kind == "milp":
        return MILPPricer(block, tol)
    if kind == "enumerate":
        return EnumerationPricer(block, tol)
    raise ValueError(f"unknown pricing kind {kind!r}")


@dataclass(frozen=True, eq=False)
class SubproblemResult:
    cost: float
    z: np.ndarray
    v: float
    mu: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    history: List[float] = field(default_factory=list)

    @property
    def rounds(self):
        return len(self.history)


def _reduced_cost_converged(rc, value, tol):
    return rc >= -tol.tol_rc * (1.0 + abs(value))


def evaluate(block, y, M, pool, pricer=None, tol=TOLERANCES):
    """Exact optimum of the relaxed subproblem at allocation ``y``.

    An empty pool is bootstrapped with the minimiser of ``c^T x`` over ``X_i``.
    New columns are added to ``pool`` in place.
    """
    if M <= 0:
        raise ValueError(f"M must be > 0, got {M}")
    y = np.asarray(y, dtype=float)
    pricer = pricer or MILPPricer(block, tol)
    if not len(pool):
        pool.add(pricer(block.c)[1])

    S = block.S
    history = []
    for _ in range(tol.pricing_cap):
        costs, usage = pool.columns()
        K = costs.size
        lp = LinearProgram(np.concatenate([costs, [M]]),
                           G=np.hstack([usage, -np.ones((S, 1))]), h=y,
                           E=np.concatenate([np.ones(K), [0.0]])[None, :], f=[1.0])
        sol = solve_lp(lp, tol)
        if sol.status != OPTIMAL:
            raise InfeasibleBlockError(f"subproblem master is {sol.status}")
        history.append(sol.obj)
        mu, nu = sol.dual_ineq, float(sol.dual_eq[0])
        value, x = pricer(block.c + block.A.T @ mu)
        if _reduced_cost_converged(value + nu, value, tol) or not pool.add(x):
            break
    else:
        raise PricingCapError(f"column generation did not converge in {tol.pricing_cap} rounds")

    weights = sol.x[:K]
    V = pool.matrix[:K]
    return SubproblemResult(cost=float(sol.obj), z=weights @ V, v=float(sol.x[K]), mu=mu,
                            weights=weights, points=V, history=history)


@dataclass(frozen=True, eq=False)
class GradientReport:
    y: np.ndarray
    mu: np.ndarray
    finite_difference: np.ndarray
    max_error: float
    kink: bool
    attempts: int

    @property
    def passed(self):
        return not self.kink


def _slopes(block, y, M, pool, pricer, h, tol):
    base = evaluate(block, y, M, pool, pricer, tol)
    central, kink = np.zeros(y.size), False
    for s in range(y.size):
        step = np.zeros(y.size)
        step[s] = h
        up = evaluate(block, y + step, M, pool, pricer, tol).cost
        down = evaluate(block, y - step, M, pool, pricer, tol).cost
        central[s] = (up - down) / (2.0 * h)
        forward, backward = (up - base.cost) / h, (base.cost - down) / h
        kink |= abs(forward - backward) > 1e-6 * (1.0 + abs(central[s]))
    return base, central, kink


def gradient_check(block, y, M, pool, pricer=None, h=1e-4, retries=3, seed=0, tol=TOLERANCES):
    """Compare ``-mu`` with central differences of the subproblem cost over ``y``.

    When ``y`` sits within ``h`` of a kink (forward and backward slopes differ)
    it is resampled nearby up to ``retries`` times; a kink that persists is
    flagged in the report and should be excluded from pass/fail.
    """
    pool = pool.copy()
    pricer = pricer or MILPPricer(block, tol)
    rng = np.random.default_rng(seed)
    y = np.asarray(y, dtype=float)
    for attempt in range(retries + 1):
        base, central, kink = _slopes(block, y, M, pool, pricer, h, tol)
        if not kink:
            break
        if attempt < retries:
            logger.debug("gradient check: kink at y=%s, resampling", y)
            y = y + rng.uniform(-100 * h, 100 * h, size=y.size)
    else:
        warnings.warn(f"gradient check: persistent kink near y={y}", DPMILPWarning, stacklevel=2)
    error = float(np.max(np.abs(-base.mu - central))) if central.size else 0.0
    return GradientReport(y, base.mu, central, error, kink, attempt + 1)


@dataclass(frozen=True, eq=False)
class RestrictedLPSolution:
    """Optimum of the restricted LP over ``prod_i conv(X_i)``.

    ``y_star`` splits ``b - sigma`` into allocations under which every
    ``z_star[i]`` is feasible: ``A_i z_i* + slack / N``.
    """
    feasible: bool
    q_star: float = np.nan
    z_star: List[np.ndarray] = field(default_factory=list)
    y_star: List[np.ndarray] = field(default_factory=list)
    multipliers: Optional[np.ndarray] = None
    weights: List[np.ndarray] = field(default_factory=list)
    violation: float = 0.0
    rounds: int = 0


def _coupled_master(pools, problem, rhs, phase_one):
    cols = [pool.columns() for pool in pools]
    sizes = [c.size for c, _ in cols]
    total = sum(sizes)
    if phase_one:
        objective = np.concatenate([np.zeros(total), [1.0]])
        G = np.hstack([u for _, u in cols] + [-np.ones((problem.S, 1))])
    else:
        objective = np.concatenate([c for c, _ in cols])
        G = np.hstack([u for _, u in cols])
    width = objective.size
    E = np.zeros((problem.N, width))
    start = 0
    for i, k in enumerate(sizes):
        E[i, start:start + k] = 1.0
        start += k
    return LinearProgram(objective, G=G, h=rhs, E=E, f=np.ones(problem.N)), sizes


def _column_generation(problem, pools, pricers, rhs, phase_one, tol):
    for rounds in range(1, tol.pricing_cap + 1):
        lp, sizes = _coupled_master(pools, problem, rhs, phase_one)
        sol = solve_lp(lp, tol)
        if sol.status != OPTIMAL:
            return sol, sizes, rounds
        mu = sol.dual_ineq
        added = False
        for i, (blk, pool, pricer) in enumerate(zip(problem.blocks, pools, pricers)):
            weights = blk.A.T @ mu if phase_one else blk.c + blk.A.T @ mu
            value, x = pricer(weights)
            if not _reduced_cost_converged(value + sol.dual_eq[i], value, tol):
                added |= pool.add(x)
        if not added:
            return sol, sizes, rounds
    raise PricingCapError(f"restricted LP column generation did not converge in {tol.pricing_cap} rounds")


def solve_restricted_lp(problem, sigma, pricing="milp", pools=None, tol=TOLERANCES):
    """Centralized column generation for ``min sum c_i^T z_i  s.t.  sum A_i z_i <= b - sigma``.

    Phase 1 minimises a uniform violation ``t``; the LP is infeasible when
    ``t > tol_feas``. Phase 2 minimises cost from phase 1's columns.
    """
    pricers = [make_pricer(blk, pricing, tol) for blk in problem.blocks]
    pools = pools or [ColumnPool(blk) for blk in problem.blocks]
    for blk, pool, pricer in zip(problem.blocks, pools, pricers):
        if not len(pool):
            pool.add(pricer(blk.c)[1])
    rhs = problem.b - np.asarray(sigma, dtype=float)

    sol, _, rounds_one = _column_generation(problem, pools, pricers, rhs, True, tol)
    t = float(sol.x[-1])
    if t > tol.tol_feas * (1.0 + np.max(np.abs(rhs))):
        logger.info("restricted LP infeasible: minimal uniform violation %.6g", t)
        return RestrictedLPSolution(False, violation=t, rounds=rounds_one)

    sol, sizes, rounds_two = _column_generation(problem, pools, pricers, rhs + max(t, 0.0), False, tol)
    if sol.status != OPTIMAL:
        return RestrictedLPSolution(False, violation=t, rounds=rounds_one + rounds_two)
    weights, z = [], []
    start = 0
    for pool, k in zip(pools, sizes):
        w = sol.x[start:start + k]
        weights.append(w)
        z.append(w @ pool.matrix[:k])
        start += k
    slack = rhs - problem.usage(z)
    y_star = [blk.A @ zi + slack / problem.N for blk, zi in zip(problem.blocks, z)]
    return RestrictedLPSolution(True, float(sol.obj), z, y_star, sol.dual_ineq, weights, t,
                                rounds_one + rounds_two)
