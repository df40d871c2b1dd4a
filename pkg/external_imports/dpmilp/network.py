"""Synchronous message-passing simulator.

Each round every agent evaluates its subproblem (concurrently), the
multipliers are exchanged over the graph edges and delivered at the round
barrier, then every agent updates its allocation with the same-round
multipliers. A central monitor checks the coupling constraint on the
recovered points.
"""
import logging
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import networkx as nx
import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from .agent import AgentState, init_allocation
from .config import TOLERANCES
from .errors import DisconnectedGraphError, DPMILPWarning, GraphGenerationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Graph:
    """Undirected connected graph on nodes ``0..n-1``."""
    n: int
    edges: FrozenSet[Tuple[int, int]] = frozenset()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"a graph needs at least one node, got n={self.n}")
        edges = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) outside 0..{self.n - 1}")
            edges.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(edges))
        g = self.to_networkx()
        if not nx.is_connected(g):
            raise DisconnectedGraphError(
                f"graph with {self.n} nodes has {nx.number_connected_components(g)} components")
        object.__setattr__(self, "_adjacency", {i: sorted(g.neighbors(i)) for i in range(self.n)})

    def to_networkx(self):
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    def neighbors(self, i):
        return self._adjacency[i]

    @property
    def diameter(self):
        return nx.diameter(self.to_networkx()) if self.n > 1 else 0

    @classmethod
    def from_networkx(cls, g):
        return cls(g.number_of_nodes(), frozenset(g.edges()))

    @classmethod
    def path(cls, n):
        return cls(n, frozenset((i, i + 1) for i in range(n - 1)))

    @classmethod
    def complete(cls, n):
        return cls(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))


def erdos_renyi_connected(n, p, seed=0, max_attempts=10 ** 4):
    """First connected ``G(n, p)`` sample of a seeded stream of graph seeds."""
    if n < 1:
        raise ValueError(f"a graph needs at least one node, got n={n}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"edge probability must lie in (0, 1], got {p}")
    rng = np.random.default_rng(seed)
    for attempt in range(max_attempts):
        g = nx.erdos_renyi_graph(n, p, seed=int(rng.integers(2 ** 32)))
        if nx.is_connected(g):
            logger.debug("connected G(%d, %g) after %d attempt(s)", n, p, attempt + 1)
            return Graph.from_networkx(g)
    raise GraphGenerationError(f"no connected G({n}, {p}) in {max_attempts} attempts")


@dataclass(frozen=True, eq=False)
class RoundMessage:
    sender: int
    receiver: int
    payload: np.ndarray
    round: int


class SynchronousChannel:
    """In-process queue with a per-round barrier.

    Messages sent during round ``t`` must carry ``t`` and travel along an edge;
    ``deliver(t)`` hands them out (sorted by sender) and opens round ``t + 1``.
    """

    def __init__(self, graph, record=False):
        self.graph = graph
        self.round = 0
        self.record = record
        self.log: List[Tuple[int, int, int]] = []
        self._outbox: List[RoundMessage] = []

    def send(self, msg):
        if msg.round != self.round:
            raise ValueError(f"message of round {msg.round} sent during round {self.round}")
        if msg.receiver not in self.graph.neighbors(msg.sender):
            raise ValueError(f"no edge between {msg.sender} and {msg.receiver}")
        self._outbox.append(msg)

    def deliver(self, t):
        if t != self.round:
            raise ValueError(f"barrier of round {t} reached during round {self.round}")
        inbox: Dict[int, List[RoundMessage]] = defaultdict(list)
        for msg in sorted(self._outbox, key=lambda m: (m.receiver, m.sender)):
            inbox[msg.receiver].append(msg)
            if self.record:
                self.log.append((msg.round, msg.sender, msg.receiver))
        self._outbox = []
        self.round += 1
        return inbox


@dataclass(frozen=True, eq=False)
class RoundRecord:
    t: int
    y: np.ndarray                       # (N, S)
    mu: np.ndarray                      # (N, S)
    v: np.ndarray                       # (N,)
    lp_cost: np.ndarray                 # (N,)
    alpha: float
    points: Optional[List[np.ndarray]] = None
    rho: Optional[np.ndarray] = None
    cost: Optional[np.ndarray] = None
    usage: Optional[np.ndarray] = None
    feasible: Optional[bool] = None

    @property
    def master_cost(self):
        return float(np.sum(self.lp_cost))

    @property
    def recovered(self):
        return self.points is not None


@dataclass(eq=False)
class RunTrace:
    problem: object
    sigma: np.ndarray
    M: float
    rounds: List[RoundRecord] = field(default_factory=list)
    z: List[np.ndarray] = field(default_factory=list)
    messages: List[Tuple[int, int, int]] = field(default_factory=list)
    small_M_agents: List[int] = field(default_factory=list)

    @property
    def last(self):
        return self.rounds[-1]

    @property
    def last_recovered(self):
        return next((r for r in reversed(self.rounds) if r.recovered), None)

    def conservation_error(self):
        target = self.problem.b - self.sigma
        return max(float(np.max(np.abs(r.y.sum(axis=0) - target))) for r in self.rounds)

    def check_consistency(self):
        """Largest gap between stored coupling usage and usage recomputed from the points."""
        gaps = [float(np.max(np.abs(self.problem.usage(r.points) - r.usage)))
                for r in self.rounds if r.recovered]
        return max(gaps, default=0.0)

    def to_frame(self):
        """One row per (round, agent): ``t, i, y_*, mu_*, v, lp_cost, rho, cost``."""
        S = self.problem.S
        rows = []
        for r in self.rounds:
            for i in range(self.problem.N):
                row = {"t": r.t, "i": i}
                row.update({f"y_{s}": r.y[i, s] for s in range(S)})
                row.update({f"mu_{s}": r.mu[i, s] for s in range(S)})
                row["v"] = r.v[i]
                row["lp_cost"] = r.lp_cost[i]
                row["rho"] = r.rho[i] if r.recovered else np.nan
                row["cost"] = r.cost[i] if r.recovered else np.nan
                rows.append(row)
        columns = (["t", "i"] + [f"y_{s}" for s in range(S)] + [f"mu_{s}" for s in range(S)]
                   + ["v", "lp_cost", "rho", "cost"])
        return pd.DataFrame(rows, columns=columns)

    def coupling_frame(self):
        """One row per recovered round: ``t, usage_*, b_*, feasible, master_cost``."""
        S = self.problem.S
        rows = []
        for r in self.rounds:
            if not r.recovered:
                continue
            row = {"t": r.t}
            row.update({f"usage_{s}": r.usage[s] for s in range(S)})
            row.update({f"b_{s}": self.problem.b[s] for s in range(S)})
            row["feasible"] = bool(r.feasible)
            row["master_cost"] = r.master_cost
            rows.append(row)
        columns = (["t"] + [f"usage_{s}" for s in range(S)] + [f"b_{s}" for s in range(S)]
                   + ["feasible", "master_cost"])
        return pd.DataFrame(rows, columns=columns)


def coupling_satisfied(usage, b, tol=TOLERANCES):
    """``sum_i A_i x_i <= b + tol_feas`` in every row."""
    return bool(np.all(np.asarray(usage, dtype=float) <= np.asarray(b, dtype=float) + tol.tol_feas))


def _recover_all(problem, agents, n_jobs, tol):
    recs = Parallel(n_jobs=n_jobs, backend="threading")(delayed(a.recover)() for a in agents)
    points = [np.asarray(r.point.x) for r in recs]
    usage = problem.usage(points)
    member = all(blk.contains(x, tol) for blk, x in zip(problem.blocks, points))
    feasible = member and coupling_satisfied(usage, problem.b, tol)
    return points, np.array([r.rho for r in recs]), np.array([r.cost for r in recs]), usage, feasible


def run(problem, graph, sigma, schedule, M, T_f, recover_every=1, monitor_every=1,
        stop_on_feasible=False, pricing="milp", n_jobs=1, progress=False, record_messages=False,
        tol=TOLERANCES):
    """Rounds ``t = 0..T_f`` of the distributed algorithm.

    Recovery runs every ``recover_every`` rounds (``0``: only at ``T_f``) and
    always at the last round; the monitor checks feasibility on recovered
    rounds that are multiples of ``monitor_every``.
    """
    if graph.n != problem.N:
        raise ValueError(f"graph has {graph.n} nodes but the problem has {problem.N} agents")
    sigma = np.asarray(sigma, dtype=float)
    agents = [AgentState(i, blk, y, pricing, tol)
              for i, (blk, y) in enumerate(zip(problem.blocks, init_allocation(problem, sigma)))]
    channel = SynchronousChannel(graph, record=record_messages)
    trace = RunTrace(problem, sigma, M)
    parallel = Parallel(n_jobs=n_jobs, backend="threading")

    for t in tqdm(range(T_f + 1), disable=not progress, desc="rounds"):
        parallel(delayed(a.evaluate)(M) for a in agents)
        alpha = schedule(t)
        record = dict(t=t, y=np.array([a.y for a in agents]), mu=np.array([a.mu for a in agents]),
                      v=np.array([a.v for a in agents]), lp_cost=np.array([a.lp_cost for a in agents]),
                      alpha=alpha)
        recover_now = t == T_f or (recover_every > 0 and t % recover_every == 0)
        stop = False
        if recover_now:
            points, rho, cost, usage, feasible = _recover_all(problem, agents, n_jobs, tol)
            monitored = t % monitor_every == 0 or t == T_f
            record.update(points=points, rho=rho, cost=cost, usage=usage,
                          feasible=feasible if monitored else None)
            stop = stop_on_feasible and monitored and feasible
        trace.rounds.append(RoundRecord(**record))
        if stop:
            logger.info("coupling constraint satisfied at round %d, stopping", t)
            break
        if t == T_f:
            break

        for a in agents:
            for j in graph.neighbors(a.id):
                channel.send(RoundMessage(a.id, j, a.mu.copy(), t))
        inbox = channel.deliver(t)
        for a in agents:
            a.iterate([(m.payload, m.sender) for m in inbox[a.id]], alpha, M)

    trace.z = [a.z for a in agents]
    trace.messages = channel.log
    trace.small_M_agents = [a.id for a in agents if a.v > tol.tol_feas]
    if trace.small_M_agents:
        warnings.warn(f"final violation v_i > {tol.tol_feas} for agents {trace.small_M_agents}; "
                      f"M={M} may be too small", DPMILPWarning, stacklevel=2)
    return trace


def feasibility_first_round(trace, b, tol=TOLERANCES):
    """First recovered round whose points lie in ``X_i`` and satisfy ``sum A_i x_i <= b``."""
    b = np.asarray(b, dtype=float)
    for r in trace.rounds:
        if not r.recovered:
            continue
        member = all(blk.contains(x, tol) for blk, x in zip(trace.problem.blocks, r.points))
        if member and coupling_satisfied(r.usage, b, tol):
            return r.t
    return None
