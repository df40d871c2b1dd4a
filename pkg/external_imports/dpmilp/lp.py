"""Dense revised simplex with exact basis duals.

The solver works on the standard form ``min c'u  s.t.  A u = r, u >= 0``
obtained by shifting/mirroring/splitting the variables, turning finite upper
bounds into rows and adding one slack per inequality row. Phase 1 uses
explicit artificial variables; Bland's rule (lowest index entering, lowest
basic index leaving) makes the pivot sequence deterministic and cycle free.

Duals are reported in the sign convention

    c + G^T dual_ineq + E^T dual_eq = dual_bounds,   dual_ineq >= 0

so that ``dual_ineq[s]`` is the (nonnegative) multiplier of ``G_s x <= h_s``
and the derivative of the optimal value with respect to ``h_s`` is
``-dual_ineq[s]``.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .config import TOLERANCES
from .errors import LPNumericalError

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIVOT_TOL = 1e-9
_OPT_TOL = 1e-9
_TIE_TOL = 1e-12


def _as_matrix(a, n_cols):
    if a is None:
        return np.zeros((0, n_cols))
    arr = np.asarray(a, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, n_cols)
    return np.atleast_2d(arr)


def _as_vector(a, size=0):
    if a is None:
        return np.zeros(size)
    return np.atleast_1d(np.asarray(a, dtype=float)).ravel()


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``min objective^T x  s.t.  G x <= h, E x = f, lo <= x <= hi``.

    Bounds default to ``(0, +inf)``; pass ``-np.inf`` / ``np.inf`` for free sides.
    """
    objective: np.ndarray
    G: Optional[np.ndarray] = None
    h: Optional[np.ndarray] = None
    E: Optional[np.ndarray] = None
    f: Optional[np.ndarray] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    def __post_init__(self):
        c = _as_vector(self.objective)
        n = c.size
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "G", _as_matrix(self.G, n))
        object.__setattr__(self, "h", _as_vector(self.h, self.G.shape[0]))
        object.__setattr__(self, "E", _as_matrix(self.E, n))
        object.__setattr__(self, "f", _as_vector(self.f, self.E.shape[0]))
        lo = np.zeros(n) if self.lo is None else np.broadcast_to(_as_vector(self.lo), (n,)).astype(float)
        hi = np.full(n, np.inf) if self.hi is None else np.broadcast_to(_as_vector(self.hi), (n,)).astype(float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if self.G.shape != (self.h.size, n) or self.E.shape != (self.f.size, n):
            raise ValueError(
                f"inconsistent LP dimensions: n={n}, G{self.G.shape}, h({self.h.size}), "
                f"E{self.E.shape}, f({self.f.size})")
        if np.any(lo > hi):
            raise ValueError(f"lower bound above upper bound at {np.flatnonzero(lo > hi).tolist()}")

    @property
    def n(self):
        return self.objective.size

    @property
    def ineq(self):
        return self.G, self.h

    @property
    def eq(self):
        return self.E, self.f

    @property
    def bounds(self):
        return self.lo, self.hi

    def with_bounds(self, lo, hi):
        return LinearProgram(self.objective, self.G, self.h, self.E, self.f, lo, hi)


@dataclass(frozen=True, eq=False)
class LPSolution:
    status: str
    x: Optional[np.ndarray] = None
    obj: float = np.nan
    dual_ineq: Optional[np.ndarray] = None
    dual_eq: Optional[np.ndarray] = None
    dual_bounds: Optional[np.ndarray] = None
    ray: Optional[np.ndarray] = None
    iterations: int = 0

    @property
    def optimal(self):
        return self.status == OPTIMAL


@dataclass
class _StandardForm:
    A: np.ndarray
    rhs: np.ndarray
    cost: np.ndarray
    transform: np.ndarray           # x = offset + transform @ u[:n_struct]
    offset: np.ndarray
    n_struct: int
    n_ineq: int                     # rows of G
    n_upper: int                    # finite-upper-bound rows
    row_sign: np.ndarray
    initial_basis: list = field(default_factory=list)


def _standard_form(lp):
    n = lp.n
    columns = []
    offset = np.zeros(n)
    upper = []                      # (structural column, bound)
    for j in range(n):
        lo, hi = lp.lo[j], lp.hi[j]
        if np.isfinite(lo):
            offset[j] = lo
            columns.append((j, 1.0))
            if np.isfinite(hi):
                upper.append((len(columns) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            columns.append((j, -1.0))
        else:
            columns.append((j, 1.0))
            columns.append((j, -1.0))
    k = len(columns)
    transform = np.zeros((n, k))
    for col, (j, sign) in enumerate(columns):
        transform[j, col] = sign

    m_ineq, m_up, m_eq = lp.G.shape[0], len(upper), lp.E.shape[0]
    m_slack = m_ineq + m_up
    A = np.zeros((m_slack + m_eq, k + m_slack))
    rhs = np.zeros(m_slack + m_eq)
    A[:m_ineq, :k] = lp.G @ transform
    rhs[:m_ineq] = lp.h - lp.G @ offset
    for r, (col, bound) in enumerate(upper):
        A[m_ineq + r, col] = 1.0
        rhs[m_ineq + r] = bound
    A[:m_slack, k:] = np.eye(m_slack)
    A[m_slack:, :k] = lp.E @ transform
    rhs[m_slack:] = lp.f - lp.E @ offset

    row_sign = np.where(rhs < 0, -1.0, 1.0)
    A *= row_sign[:, None]
    rhs *= row_sign
    cost = np.concatenate([lp.objective @ transform, np.zeros(m_slack)])
    return _StandardForm(A, rhs, cost, transform, offset, k, m_ineq, m_up, row_sign)


def _simplex(A, rhs, cost, basis, allowed, max_iter):
    """Bland-rule revised simplex from a feasible basis."""
    m = A.shape[0]
    basis = list(basis)
    for iteration in range(max_iter):
        lu = lu_factor(A[:, basis], check_finite=False)
        x_B = lu_solve(lu, rhs, check_finite=False)
        y = lu_solve(lu, cost[basis], trans=1, check_finite=False)
        reduced = cost - A.T @ y
        reduced[basis] = 0.0
        entering = np.flatnonzero((reduced < -_OPT_TOL) & allowed)
        if entering.size == 0:
            return OPTIMAL, basis, x_B, y, iteration
        j = int(entering[0])
        w = lu_solve(lu, A[:, j], check_finite=False)
        rows = np.flatnonzero(w > _PIVOT_TOL)
        if rows.size == 0:
            return UNBOUNDED, basis, x_B, (j, w), iteration
        ratios = np.maximum(x_B[rows], 0.0) / w[rows]
        best = ratios.min()
        ties = rows[ratios <= best + _TIE_TOL * (1.0 + best)]
        leave = int(min(ties, key=lambda r: basis[r]))
        basis[leave] = j
    raise LPNumericalError(f"simplex did not terminate within {max_iter} iterations on a {m}-row basis")


def _drive_out_artificials(A, basis, n_real):
    """Pivot zero-level artificials out of the basis; drop rows that are redundant."""
    keep_rows = list(range(A.shape[0]))
    position = 0
    while position < len(basis):
        if basis[position] < n_real:
            position += 1
            continue
        sub = A[keep_rows][:, :]
        lu = lu_factor(sub[:, basis], check_finite=False)
        e = np.zeros(len(basis))
        e[position] = 1.0
        row = lu_solve(lu, e, trans=1, check_finite=False) @ sub[:, :n_real]
        row[[b for b in basis if b < n_real]] = 0.0
        candidates = np.flatnonzero(np.abs(row) > _PIVOT_TOL)
        if candidates.size:
            basis[position] = int(candidates[0])
            position += 1
        else:
            del keep_rows[position]
            del basis[position]
    return keep_rows, basis


def solve_lp(lp, tol=TOLERANCES):
    """Solve ``lp`` and return an :class:`LPSolution` with duals and reduced costs."""
    sf = _standard_form(lp)
    m, n_real = sf.A.shape
    max_iter = tol.simplex_max_iter

    if m == 0:
        if np.any(sf.cost < -_OPT_TOL):
            j = int(np.flatnonzero(sf.cost < -_OPT_TOL)[0])
            u_ray = np.zeros(n_real)
            u_ray[j] = 1.0
            return LPSolution(UNBOUNDED, ray=sf.transform @ u_ray[:sf.n_struct])
        x = sf.offset.copy()
        return _finish(lp, sf, x, np.zeros(0), list(range(0)), 0, tol)

    # slack columns give the starting basis wherever the row was not flipped
    n_slack = sf.n_ineq + sf.n_upper
    basis = []
    artificial_rows = []
    for r in range(m):
        if r < n_slack and sf.row_sign[r] > 0:
            basis.append(sf.n_struct + r)
        else:
            basis.append(None)
            artificial_rows.append(r)

    A, cost = sf.A, sf.cost
    iterations = 0
    if artificial_rows:
        n_art = len(artificial_rows)
        art = np.zeros((m, n_art))
        for a, r in enumerate(artificial_rows):
            art[r, a] = 1.0
            basis[r] = n_real + a
        A1 = np.hstack([A, art])
        cost1 = np.concatenate([np.zeros(n_real), np.ones(n_art)])
        allowed = np.ones(n_real + n_art, dtype=bool)
        status, basis, x_B, _, it = _simplex(A1, sf.rhs, cost1, basis, allowed, max_iter)
        iterations += it
        phase1 = float(cost1[basis] @ x_B)
        if phase1 > tol.tol_feas:
            logger.debug("phase 1 optimum %.3e > tol_feas: infeasible", phase1)
            return LPSolution(INFEASIBLE, iterations=iterations)
        keep_rows, basis = _drive_out_artificials(A1, basis, n_real)
        A = A[keep_rows]
        rhs = sf.rhs[keep_rows]
    else:
        keep_rows = list(range(m))
        rhs = sf.rhs

    allowed = np.ones(n_real, dtype=bool)
    status, basis, x_B, extra, it = _simplex(A, rhs, cost, basis, allowed, max_iter)
    iterations += it
    if status == UNBOUNDED:
        j, w = extra
        u_ray = np.zeros(n_real)
        u_ray[j] = 1.0
        u_ray[basis] = -w
        return LPSolution(UNBOUNDED, ray=sf.transform @ u_ray[:sf.n_struct], iterations=iterations)

    u = np.zeros(n_real)
    u[basis] = x_B
    x = sf.offset + sf.transform @ u[:sf.n_struct]
    y = np.zeros(m)
    y[keep_rows] = extra
    return _finish(lp, sf, x, y, basis, iterations, tol)


def _finish(lp, sf, x, y_std, basis, iterations, tol):
    y = y_std * sf.row_sign if y_std.size else y_std
    dual_ineq = -y[:sf.n_ineq] if y.size else np.zeros(0)
    dual_eq = -y[sf.n_ineq + sf.n_upper:] if y.size else np.zeros(lp.E.shape[0])
    if dual_ineq.size == 0:
        dual_ineq = np.zeros(lp.G.shape[0])
    if dual_eq.size == 0:
        dual_eq = np.zeros(lp.E.shape[0])
    reduced = lp.objective + lp.G.T @ dual_ineq + lp.E.T @ dual_eq
    obj = float(lp.objective @ x)
    _check_invariants(lp, x, obj, dual_ineq, dual_eq, reduced, tol)
    return LPSolution(OPTIMAL, x=x, obj=obj, dual_ineq=np.maximum(dual_ineq, 0.0), dual_eq=dual_eq,
                      dual_bounds=reduced, iterations=iterations)


def _check_invariants(lp, x, obj, dual_ineq, dual_eq, reduced, tol):
    """Raise LPNumericalError when the optimum misses its invariants at 10x tolerance."""
    scale = 1.0 + max(abs(obj), np.max(np.abs(lp.h), initial=0.0), np.max(np.abs(lp.f), initial=0.0),
                      np.max(np.abs(x), initial=0.0))
    feas = 10 * tol.tol_feas * scale
    slack = lp.h - lp.G @ x
    problems = []
    if slack.size and slack.min() < -feas:
        problems.append(f"inequality violated by {-slack.min():.3e}")
    if lp.f.size and np.max(np.abs(lp.E @ x - lp.f)) > feas:
        problems.append(f"equality residual {np.max(np.abs(lp.E @ x - lp.f)):.3e}")
    if np.any(x < lp.lo - feas) or np.any(x > lp.hi + feas):
        problems.append("bound violated")
    dual_scale = 1.0 + np.max(np.abs(dual_ineq), initial=0.0) + np.max(np.abs(lp.objective), initial=0.0)
    if dual_ineq.size and dual_ineq.min() < -10 * tol.tol_cs * dual_scale:
        problems.append(f"negative inequality multiplier {dual_ineq.min():.3e}")
    if dual_ineq.size and np.max(dual_ineq * np.maximum(slack, 0.0)) > 10 * tol.tol_cs * scale * dual_scale:
        problems.append("complementary slackness violated")

    # dual objective: -h'l - f'n + sum of bound terms picked by the reduced-cost sign
    at_lo = np.where(reduced > 0, reduced, 0.0)
    at_hi = np.where(reduced < 0, reduced, 0.0)
    bound_term = (np.sum(at_lo[np.isfinite(lp.lo)] * lp.lo[np.isfinite(lp.lo)])
                  + np.sum(at_hi[np.isfinite(lp.hi)] * lp.hi[np.isfinite(lp.hi)]))
    dual_obj = -lp.h @ dual_ineq - lp.f @ dual_eq + bound_term
    if abs(obj - dual_obj) > 10 * 1e-7 * scale * dual_scale:
        problems.append(f"duality gap {obj - dual_obj:.3e}")
    if problems:
        raise LPNumericalError("simplex optimum failed its checks: " + "; ".join(problems))
