import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
for entry in (ROOT / "external_imports", ROOT):
    if str(entry) not in sys.path:
        sys.path.insert(0, str(entry))

from dpmilp.model import AgentBlock, CoupledProblem, Polyhedron, ResourceScale, generate_random  # noqa: E402


def make_block(c, A, lo, hi, int_idx=None, D=None, d=None):
    """Block with an optional ``D x <= d``; every coordinate integer by default."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    n = c.size
    D = np.zeros((0, n)) if D is None else np.asarray(D, dtype=float)
    d = np.zeros(0) if d is None else np.asarray(d, dtype=float)
    int_idx = tuple(range(n)) if int_idx is None else tuple(int_idx)
    return AgentBlock(c, np.asarray(A, dtype=float), Polyhedron(D, d, np.broadcast_to(lo, (n,)), np.broadcast_to(hi, (n,))),
                      int_idx)


def desk_problem(n_agents=4, seed=0, mode="loose", S=2, p=2, q=1, m=4):
    return generate_random(n_agents, S, p, q, m, seed, mode, ResourceScale.desk())


@pytest.fixture
def line_block():
    """x integer in {0, 1, 2}, cost x, usage x."""
    return make_block([1.0], [[1.0]], 0.0, 2.0)


@pytest.fixture
def two_point_block():
    """X = {(0, 1), (1, 0)} with the identity as usage."""
    return make_block([0.0, 0.0], np.eye(2), 0.0, 1.0,
                      D=[[1.0, 1.0], [-1.0, -1.0]], d=[1.0, -1.0])


@pytest.fixture
def asymmetric_problem():
    """Two agents, x_i in {0..4}, costs -2 and -1, sum x_i <= 5; optimum -9."""
    blocks = (make_block([-2.0], [[1.0]], 0.0, 4.0), make_block([-1.0], [[1.0]], 0.0, 4.0))
    return CoupledProblem(blocks, np.array([5.0]))


@pytest.fixture
def desk():
    return desk_problem()
