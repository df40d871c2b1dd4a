"""Problem data, random instances, the JSON instance format and brute-force oracles.

An instance is ``min sum_i c_i^T x_i  s.t.  sum_i A_i x_i <= b,  x_i in X_i``
with ``X_i = {x : D_i x <= d_i, lo_i <= x <= hi_i, x_j integer for j in int_idx_i}``.

JSON schema (``int_idx`` is 0-based, matrices are row-major lists of rows)::

    {"N": 2, "S": 1, "b": [2.0],
     "blocks": [{"c": [...], "A": [[...]], "D": [[...]], "d": [...],
                 "lo": [...], "hi": [...], "int_idx": [0]}, ...]}

Numbers are written with ``repr`` (shortest text that parses back to the same
double), so ``deserialize(serialize(p)) == p`` holds bit for bit.
"""
import itertools
import json
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .config import TOLERANCES
from .errors import (EnumerationCapError, InfeasibleBlockError, InstanceFormatError,
                     SizeCapError, ValidationError)
from .lp import INFEASIBLE, OPTIMAL, LinearProgram, solve_lp
from .milp import MILPInstance, solve_milp

logger = logging.getLogger(__name__)


def _frozen(a, ndim, n_cols=None):
    arr = np.array(a, dtype=float)
    if ndim == 2:
        if arr.size == 0:
            arr = arr.reshape(0, n_cols or 0)
        else:
            arr = np.atleast_2d(arr)
    else:
        arr = np.atleast_1d(arr).ravel()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """``{x : D x <= d, lo <= x <= hi}``; the box keeps it compact."""
    D: np.ndarray
    d: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _frozen(self.lo, 1)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", _frozen(self.hi, 1))
        object.__setattr__(self, "D", _frozen(self.D, 2, lo.size))
        object.__setattr__(self, "d", _frozen(self.d, 1))

    def __eq__(self, other):
        if not isinstance(other, Polyhedron):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in ("D", "d", "lo", "hi"))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class AgentBlock:
    c: np.ndarray
    A: np.ndarray
    P: Polyhedron
    int_idx: Tuple[int, ...] = ()

    def __post_init__(self):
        c = _frozen(self.c, 1)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", _frozen(self.A, 2, c.size))
        object.__setattr__(self, "int_idx", tuple(int(j) for j in self.int_idx))

    @property
    def n(self):
        return self.c.size

    @property
    def S(self):
        return self.A.shape[0]

    @property
    def p(self):
        return len(self.int_idx)

    @property
    def q(self):
        return self.n - self.p

    @property
    def cont_idx(self):
        ints = set(self.int_idx)
        return tuple(j for j in range(self.n) if j not in ints)

    def contains(self, x, tol=TOLERANCES):
        """Membership in ``X_i`` within ``tol_feas`` / ``tol_int``."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            return False
        P = self.P
        if np.any(x < P.lo - tol.tol_feas) or np.any(x > P.hi + tol.tol_feas):
            return False
        if P.D.shape[0] and np.any(P.D @ x > P.d + tol.tol_feas * (1.0 + np.abs(P.d))):
            return False
        ints = list(self.int_idx)
        return bool(np.all(np.abs(x[ints] - np.round(x[ints])) <= tol.tol_int))

    def __eq__(self, other):
        if not isinstance(other, AgentBlock):
            return NotImplemented
        return (np.array_equal(self.c, other.c) and np.array_equal(self.A, other.A)
                and self.P == other.P and self.int_idx == other.int_idx)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class CoupledProblem:
    blocks: Tuple[AgentBlock, ...]
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "b", _frozen(self.b, 1))

    @property
    def N(self):
        return len(self.blocks)

    @property
    def S(self):
        return self.b.size

    def usage(self, xs):
        """Coupling usage ``sum_i A_i x_i``."""
        return np.sum([blk.A @ np.asarray(x, dtype=float) for blk, x in zip(self.blocks, xs)], axis=0)

    def cost(self, xs):
        return float(sum(blk.c @ np.asarray(x, dtype=float) for blk, x in zip(self.blocks, xs)))

    def __eq__(self, other):
        if not isinstance(other, CoupledProblem):
            return NotImplemented
        return np.array_equal(self.b, other.b) and self.blocks == other.blocks

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MixedIntegerPoint:
    x: np.ndarray
    owner: int

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x, 1))


@dataclass(frozen=True)
class Violation:
    block: Optional[int]
    field: str
    reason: str

    def __str__(self):
        where = "problem" if self.block is None else f"block {self.block}"
        return f"{where}: {self.field}: {self.reason}"


def _validate_block(i, blk, S):
    out = []
    n, P = blk.n, blk.P
    if P.lo.size != n or P.hi.size != n:
        out.append(Violation(i, "lo/hi", f"expected {n} box bounds, got {P.lo.size}/{P.hi.size}"))
    elif np.any(P.lo > P.hi):
        for j in np.flatnonzero(P.lo > P.hi):
            out.append(Violation(i, f"lo[{j}]", f"lo={P.lo[j]} > hi={P.hi[j]}"))
    if not (np.all(np.isfinite(P.lo)) and np.all(np.isfinite(P.hi))):
        out.append(Violation(i, "lo/hi", "box bounds must be finite"))
    if P.D.shape[1] != n or P.D.shape[0] != P.d.size:
        out.append(Violation(i, "D/d", f"D is {P.D.shape}, d has {P.d.size} entries, n={n}"))
    if blk.A.shape != (S, n):
        out.append(Violation(i, "A", f"expected shape ({S}, {n}), got {blk.A.shape}"))
    if len(set(blk.int_idx)) != blk.p or any(j < 0 or j >= n for j in blk.int_idx):
        out.append(Violation(i, "int_idx", f"indices {list(blk.int_idx)} not a subset of 0..{n - 1}"))
    for name, arr in (("c", blk.c), ("A", blk.A), ("D", P.D), ("d", P.d)):
        if not np.all(np.isfinite(arr)):
            out.append(Violation(i, name, "non-finite entries"))
    return out


def validate(problem):
    """Every broken invariant of ``problem`` as a list of ``Violation``; empty when valid."""
    out = []
    if problem.N < 1:
        out.append(Violation(None, "N", "at least one block is required"))
    if problem.S < 1:
        out.append(Violation(None, "S", "b must have at least one row"))
    if not np.all(np.isfinite(problem.b)):
        out.append(Violation(None, "b", "non-finite entries"))
    for i, blk in enumerate(problem.blocks):
        out.extend(_validate_block(i, blk, problem.S))
    return out


# random instances


@dataclass(frozen=True)
class ResourceScale:
    """Sampling intervals of the random generator; ``b`` intervals are per agent."""
    D: Tuple[float, float] = (0.0, 1.0)
    d: Tuple[float, float] = (20.0, 40.0)
    box: Tuple[float, float] = (-60.0, 60.0)
    c_hat: Tuple[float, float] = (0.0, 5.0)
    A: Tuple[float, float] = (0.0, 1.0)
    b_loose: Tuple[float, float] = (-20.0, -15.0)
    b_tight: Tuple[float, float] = (-180.0, -175.0)
    perturbation: float = 1e-6

    @classmethod
    def full(cls):
        return cls()

    @classmethod
    def desk(cls):
        """Small boxes, cost pulling against mixed-sign resource rows.

        With nonnegative ``c`` and ``A`` the box corner ``lo`` minimises every
        row at once, so rho_max vanishes; these intervals keep the
        coupling active at N around 20.
        """
        return cls(D=(0.0, 1.0), d=(2.0, 6.0), box=(-5.0, 5.0), c_hat=(-5.0, 0.0), A=(-1.0, 1.0),
                   b_loose=(-1.0, -0.5), b_tight=(-3.0, -2.5))

    @classmethod
    def named(cls, name):
        if name == "full":
            return cls.full()
        if name == "desk":
            return cls.desk()
        raise ValueError(f"unknown scale {name!r}")


def generate_random(n_agents, S, p, q, m, seed, resource_mode="loose", scale=None, perturb_costs=True):
    """Random instance: ``c_i = D_i^T c_hat_i``, uniform entries on ``scale``'s intervals.

    The first ``p`` coordinates of each block are integer. Draw order is fixed
    (per block ``D, d, c_hat, A`` then the cost perturbation; ``b`` last), so
    equal seeds give bit-identical instances.
    """
    if min(n_agents, S, m) < 1 or p < 0 or q < 0 or p + q < 1:
        raise ValueError(f"bad sizes: N={n_agents}, S={S}, p={p}, q={q}, m={m}")
    if resource_mode not in ("loose", "tight"):
        raise ValueError(f"resource_mode must be loose or tight, got {resource_mode!r}")
    scale = scale or ResourceScale()
    rng = np.random.default_rng(seed)
    n = p + q
    blocks = []
    for _ in range(n_agents):
        D = rng.uniform(*scale.D, size=(m, n))
        d = rng.uniform(*scale.d, size=m)
        c_hat = rng.uniform(*scale.c_hat, size=m)
        A = rng.uniform(*scale.A, size=(S, n))
        c = D.T @ c_hat
        if perturb_costs:
            c = c + rng.uniform(-scale.perturbation, scale.perturbation, size=n)
        P = Polyhedron(D, d, np.full(n, scale.box[0]), np.full(n, scale.box[1]))
        blocks.append(AgentBlock(c, A, P, tuple(range(p))))
    lo, hi = scale.b_loose if resource_mode == "loose" else scale.b_tight
    b = rng.uniform(lo * n_agents, hi * n_agents, size=S)
    return CoupledProblem(tuple(blocks), b)


# serialization


def _rows(a):
    return [[float(v) for v in row] for row in a]


def to_dict(problem):
    return {
        "N": problem.N,
        "S": problem.S,
        "b": [float(v) for v in problem.b],
        "blocks": [
            {
                "c": [float(v) for v in blk.c],
                "A": _rows(blk.A),
                "D": _rows(blk.P.D),
                "d": [float(v) for v in blk.P.d],
                "lo": [float(v) for v in blk.P.lo],
                "hi": [float(v) for v in blk.P.hi],
                "int_idx": list(blk.int_idx),
            }
            for blk in problem.blocks
        ],
    }


def serialize(problem):
    return json.dumps(to_dict(problem), indent=1).encode("utf-8")


_BLOCK_KEYS = ("c", "A", "D", "d", "lo", "hi", "int_idx")


def from_dict(data):
    """Build a problem from parsed JSON and validate it."""
    if not isinstance(data, dict):
        raise InstanceFormatError("top level must be an object")
    for key in ("N", "S", "b", "blocks"):
        if key not in data:
            raise InstanceFormatError(f"missing field {key!r}")
    blocks = []
    try:
        for k, raw in enumerate(data["blocks"]):
            missing = [key for key in _BLOCK_KEYS if key not in raw]
            if missing:
                raise InstanceFormatError(f"block {k}: missing field(s) {missing}")
            n = len(raw["c"])
            P = Polyhedron(np.asarray(raw["D"], dtype=float).reshape(-1, n) if raw["D"] else np.zeros((0, n)),
                           raw["d"], raw["lo"], raw["hi"])
            A = np.asarray(raw["A"], dtype=float)
            blocks.append(AgentBlock(raw["c"], A.reshape(-1, n) if A.size else np.zeros((0, n)), P,
                                     tuple(raw["int_idx"])))
        problem = CoupledProblem(tuple(blocks), data["b"])
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed instance data: {exc}") from exc
    violations = validate(problem)
    if data["N"] != problem.N:
        violations.append(Violation(None, "N", f"declared {data['N']}, found {problem.N} blocks"))
    if data["S"] != problem.S:
        violations.append(Violation(None, "S", f"declared {data['S']}, b has {problem.S} rows"))
    if violations:
        raise ValidationError(violations)
    return problem


def deserialize(raw):
    text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise InstanceFormatError(f"cannot parse instance: {exc.msg}", offset=offset) from exc
    return from_dict(data)


def load(path):
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def dump(problem, path):
    with open(path, "wb") as fh:
        fh.write(serialize(problem))


# enumeration oracles


def _integer_ranges(block, tol):
    if block.p > tol.enumeration_cap:
        raise EnumerationCapError(f"{block.p} integer variables exceed the cap of {tol.enumeration_cap}")
    ints = list(block.int_idx)
    lo = np.ceil(block.P.lo[ints] - tol.tol_int).astype(int)
    hi = np.floor(block.P.hi[ints] + tol.tol_int).astype(int)
    size = int(np.prod(np.maximum(hi - lo + 1, 0), dtype=float)) if ints else 1
    if size > tol.grid_cap:
        raise EnumerationCapError(f"integer grid of {size} points exceeds the cap of {tol.grid_cap}")
    return [range(a, b + 1) for a, b in zip(lo, hi)]


def enumerate_integer_points(block, tol=TOLERANCES):
    """Every assignment of the integer coordinates within the box, in lexicographic order."""
    for assignment in itertools.product(*_integer_ranges(block, tol)):
        yield np.array(assignment, dtype=float)


def integer_grid(block, tol=TOLERANCES):
    ranges = _integer_ranges(block, tol)
    if not ranges:
        return np.zeros((1, 0))
    return np.array(list(itertools.product(*ranges)), dtype=float).reshape(-1, len(ranges))


def extreme_points(block, tol=TOLERANCES):
    """Finite point set of ``X_i`` whose convex hull is ``conv(X_i)`` (``q_i <= 1``).

    For each feasible integer assignment the continuous coordinate ranges over
    an interval; its endpoints are returned. Rows are ordered by assignment.
    """
    if block.q > 1:
        raise EnumerationCapError(f"extreme point enumeration needs q <= 1, block has q={block.q}")
    ints = list(block.int_idx)
    grid = integer_grid(block, tol)
    P = block.P
    residual = P.d[None, :] - grid @ P.D[:, ints].T
    slack = tol.tol_feas * (1.0 + np.abs(P.d))[None, :]
    if block.q == 0:
        ok = np.all(residual >= -slack, axis=1)
        pts = np.zeros((int(ok.sum()), block.n))
        pts[:, ints] = grid[ok]
        return pts
    k = block.cont_idx[0]
    a = P.D[:, k]
    upper = np.full(grid.shape[0], P.hi[k])
    lower = np.full(grid.shape[0], P.lo[k])
    ok = np.ones(grid.shape[0], dtype=bool)
    pos, neg, zero = a > 0, a < 0, a == 0
    if pos.any():
        upper = np.minimum(upper, np.min(residual[:, pos] / a[pos], axis=1))
    if neg.any():
        lower = np.maximum(lower, np.max(residual[:, neg] / a[neg], axis=1))
    if zero.any():
        ok &= np.all(residual[:, zero] >= -slack[:, zero], axis=1)
    ok &= lower <= upper + tol.tol_feas
    upper = np.maximum(upper, lower)
    rows = []
    for g, lo_k, hi_k in zip(grid[ok], lower[ok], upper[ok]):
        for value in ((lo_k,) if hi_k - lo_k <= tol.tol_feas else (lo_k, hi_k)):
            x = np.zeros(block.n)
            x[ints] = g
            x[k] = value
            rows.append(x)
    return np.array(rows).reshape(-1, block.n)


def _continuous_completion(block, w, assignment, tol):
    """``min w_c^T x_c`` over the continuous coordinates for fixed integer values."""
    ints, cont = list(block.int_idx), list(block.cont_idx)
    P = block.P
    rhs = P.d - P.D[:, ints] @ assignment
    if not cont:
        if np.all(rhs >= -tol.tol_feas * (1.0 + np.abs(P.d))):
            return 0.0, np.zeros(0)
        return None
    sol = solve_lp(LinearProgram(w[cont], G=P.D[:, cont], h=rhs, lo=P.lo[cont], hi=P.hi[cont]), tol)
    if not sol.optimal:
        return None
    return sol.obj, sol.x


def oracle_min_over_X(block, w, tol=TOLERANCES, owner=0):
    """Exact ``min_{x in X_i} w^T x`` by enumerating integer assignments.

    Ties keep the first assignment in enumeration order.
    """
    w = np.asarray(w, dtype=float)
    ints, cont = list(block.int_idx), list(block.cont_idx)
    best_val, best_x = np.inf, None
    for assignment in enumerate_integer_points(block, tol):
        done = _continuous_completion(block, w, assignment, tol)
        if done is None:
            continue
        val = float(w[ints] @ assignment) + done[0]
        if val < best_val - tol.tol_gap * 1e-3:
            x = np.zeros(block.n)
            x[ints] = assignment
            x[cont] = done[1]
            best_val, best_x = val, x
    if best_x is None:
        raise InfeasibleBlockError("no integer assignment admits a feasible continuous completion")
    return best_val, MixedIntegerPoint(best_x, owner)


@dataclass(frozen=True)
class OracleResult:
    status: str
    value: float = np.nan
    points: Tuple[MixedIntegerPoint, ...] = ()


def joint_instance(problem):
    """The whole coupled problem as one MILP over ``[x_1; ...; x_N]``."""
    sizes = [blk.n for blk in problem.blocks]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    rows, rhs = [], []
    for blk, off in zip(problem.blocks, offsets):
        G = np.zeros((blk.P.D.shape[0], total))
        G[:, off:off + blk.n] = blk.P.D
        rows.append(G)
        rhs.append(blk.P.d)
    rows.append(np.hstack([blk.A for blk in problem.blocks]))
    rhs.append(problem.b)
    lp = LinearProgram(np.concatenate([blk.c for blk in problem.blocks]), G=np.vstack(rows),
                       h=np.concatenate(rhs),
                       lo=np.concatenate([blk.P.lo for blk in problem.blocks]),
                       hi=np.concatenate([blk.P.hi for blk in problem.blocks]))
    int_idx = [off + j for blk, off in zip(problem.blocks, offsets) for j in blk.int_idx]
    return MILPInstance(lp, tuple(int_idx)), offsets


def _split(problem, x, offsets):
    return tuple(MixedIntegerPoint(x[offsets[i]:offsets[i + 1]], i) for i in range(problem.N))


def oracle_global_milp(problem, tol=TOLERANCES, method="bnb"):
    """Exact ``J^MILP`` of a small coupled problem.

    ``method="bnb"`` runs branch and bound on the joint MILP; ``"enumerate"``
    enumerates the joint integer grid and solves one LP per assignment.
    """
    if problem.N > tol.oracle_max_agents:
        raise SizeCapError(f"{problem.N} agents exceed the oracle cap of {tol.oracle_max_agents}")
    inst, offsets = joint_instance(problem)
    if method == "bnb":
        sol = solve_milp(inst, tol)
        if not sol.optimal:
            return OracleResult(sol.status)
        return OracleResult(OPTIMAL, sol.obj, _split(problem, sol.x, offsets))
    if method != "enumerate":
        raise ValueError(f"unknown method {method!r}")

    grids = [integer_grid(blk, tol) for blk in problem.blocks]
    total = int(np.prod([g.shape[0] for g in grids], dtype=float))
    if total > tol.grid_cap:
        raise EnumerationCapError(f"joint grid of {total} points exceeds the cap of {tol.grid_cap}")
    int_idx = list(inst.int_idx)
    cont = [j for j in range(inst.lp.n) if j not in set(int_idx)]
    G, h = inst.lp.ineq
    lo, hi = inst.lp.bounds
    c = inst.lp.objective
    best_val, best_x = np.inf, None
    for combo in itertools.product(*(range(g.shape[0]) for g in grids)):
        assignment = np.concatenate([g[k] for g, k in zip(grids, combo)])
        rhs = h - G[:, int_idx] @ assignment
        if cont:
            sol = solve_lp(LinearProgram(c[cont], G=G[:, cont], h=rhs, lo=lo[cont], hi=hi[cont]), tol)
            if not sol.optimal:
                continue
            val, xc = float(c[int_idx] @ assignment) + sol.obj, sol.x
        else:
            if np.any(rhs < -tol.tol_feas * (1.0 + np.abs(h))):
                continue
            val, xc = float(c[int_idx] @ assignment), np.zeros(0)
        if val < best_val - tol.tol_gap * 1e-3:
            x = np.zeros(inst.lp.n)
            x[int_idx] = assignment
            x[cont] = xc
            best_val, best_x = val, x
    if best_x is None:
        return OracleResult(INFEASIBLE)
    return OracleResult(OPTIMAL, best_val, _split(problem, best_x, offsets))


@dataclass(frozen=True, eq=False)
class HullSolution:
    """Solution of an explicit LP over ``conv(X_i)`` written with all extreme points."""
    status: str
    cost: float = np.nan
    z: List[np.ndarray] = field(default_factory=list)
    v: float = 0.0
    mu: Optional[np.ndarray] = None
    weights: List[np.ndarray] = field(default_factory=list)

    @property
    def feasible(self):
        return self.status == OPTIMAL


def oracle_hull_program(block, y, M, tol=TOLERANCES):
    """``min c^T z + M v  s.t.  A z <= y + v 1, z in conv(X_i), v >= 0`` over all extreme points."""
    V = extreme_points(block, tol)
    if V.shape[0] == 0:
        raise InfeasibleBlockError("block has no mixed-integer point")
    K, S = V.shape[0], block.S
    objective = np.concatenate([V @ block.c, [M]])
    G = np.hstack([(V @ block.A.T).T, -np.ones((S, 1))])
    E = np.concatenate([np.ones(K), [0.0]])[None, :]
    sol = solve_lp(LinearProgram(objective, G=G, h=np.asarray(y, dtype=float), E=E, f=[1.0]), tol)
    lam = sol.x[:K]
    return HullSolution(OPTIMAL, sol.obj, [lam @ V], float(sol.x[K]), sol.dual_ineq, [lam])


def oracle_restricted_lp(problem, sigma, tol=TOLERANCES):
    """The restricted LP over ``prod_i conv(X_i)`` with every extreme point as a column.

    The simplex returns a basic solution, so at most S blocks mix more than one point.
    """
    pts = [extreme_points(blk, tol) for blk in problem.blocks]
    if any(V.shape[0] == 0 for V in pts):
        raise InfeasibleBlockError("a block has no mixed-integer point")
    sizes = [V.shape[0] for V in pts]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    total = int(offsets[-1])
    objective = np.concatenate([V @ blk.c for blk, V in zip(problem.blocks, pts)])
    G = np.hstack([(V @ blk.A.T).T for blk, V in zip(problem.blocks, pts)])
    E = np.zeros((problem.N, total))
    for i in range(problem.N):
        E[i, offsets[i]:offsets[i + 1]] = 1.0
    rhs = problem.b - np.asarray(sigma, dtype=float)
    sol = solve_lp(LinearProgram(objective, G=G, h=rhs, E=E, f=np.ones(problem.N)), tol)
    if not sol.optimal:
        return HullSolution(sol.status)
    weights = [sol.x[offsets[i]:offsets[i + 1]] for i in range(problem.N)]
    z = [w @ V for w, V in zip(weights, pts)]
    return HullSolution(OPTIMAL, sol.obj, z, 0.0, sol.dual_ineq, weights)
