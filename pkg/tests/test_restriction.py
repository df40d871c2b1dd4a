import numpy as np
import pytest

from conftest import desk_problem, make_block
from dpmilp.model import CoupledProblem, extreme_points, oracle_min_over_X
from dpmilp.network import Graph, SynchronousChannel, erdos_renyi_connected
from dpmilp.restriction import (assemble, compute_agent, compute_L, compute_report, compute_rho_max,
                                compute_sigma_loc, compute_U, default_M, distributed_report,
                                max_consensus, restriction_ratio)


def test_lower_bounds_by_hand(line_block):
    assert compute_L(line_block).tolist() == [0.0]
    mirrored = make_block([1.0], [[-1.0]], 0.0, 2.0)
    assert compute_L(mirrored).tolist() == [-2.0]
    assert compute_U(mirrored).tolist() == [0.0]


@pytest.mark.parametrize("seed", range(4))
def test_bounds_match_enumeration(seed):
    block = desk_problem(n_agents=1, seed=seed).blocks[0]
    L, U = compute_L(block), compute_U(block)
    for s in range(block.S):
        assert L[s] == pytest.approx(oracle_min_over_X(block, block.A[s])[0], abs=1e-6)
        assert U[s] == pytest.approx(-oracle_min_over_X(block, -block.A[s])[0], abs=1e-6)


def test_rho_max_zero_for_one_row(line_block):
    rho, witness = compute_rho_max(line_block, compute_L(line_block))
    assert rho == pytest.approx(0.0)
    assert witness.x.tolist() == [0.0]


def test_rho_max_two_points(two_point_block):
    L = compute_L(two_point_block)
    assert L.tolist() == [0.0, 0.0]
    rho, witness = compute_rho_max(two_point_block, L)
    assert rho == pytest.approx(1.0)
    assert two_point_block.contains(witness.x)


@pytest.mark.parametrize("seed", range(4))
def test_rho_max_matches_enumeration(seed):
    block = desk_problem(n_agents=1, seed=seed, q=0).blocks[0]
    L = compute_L(block)
    V = extreme_points(block)
    expected = max(np.min(np.max(V @ block.A.T - L, axis=1)), 0.0)
    assert compute_rho_max(block, L)[0] == pytest.approx(expected, abs=1e-6)


def test_sigma_loc_saturates(two_point_block):
    L = compute_L(two_point_block)
    assert compute_sigma_loc(two_point_block, L, 0.0).tolist() == [0.0, 0.0]
    assert compute_sigma_loc(two_point_block, L, 1e6).tolist() == [1.0, 1.0]
    assert compute_sigma_loc(two_point_block, L, 0.5).tolist() == [0.5, 0.5]


@pytest.mark.parametrize("seed", range(4))
def test_sigma_loc_below_both_arms(seed):
    block = desk_problem(n_agents=1, seed=seed).blocks[0]
    agent = compute_agent(block)
    assert np.all(agent.sigma_loc <= agent.rho_max + 1e-12)
    assert np.all(agent.sigma_loc <= agent.U - agent.L + 1e-12)
    assert np.all(agent.sigma_loc >= 0)


def test_single_agent_report(line_block):
    report = compute_report(CoupledProblem((line_block,), [1.0]), delta=0.25)
    assert report.sigma_inf.tolist() == [0.0]
    assert report.sigma_ft.tolist() == [0.25]
    assert report.sigma("ft").tolist() == [0.25]


def test_report_of_two_point_agents(two_point_block):
    agents = [compute_agent(two_point_block, i) for i in range(3)]
    report = assemble(agents, 2, delta=0.5)
    assert report.sigma_inf.tolist() == [2.0, 2.0]
    assert report.sigma_ft.tolist() == [2.5, 2.5]
    assert report.sigma_dd.tolist() == [2.0, 2.0]
    assert [w.owner for w in report.witnesses] == [0, 1, 2]


@pytest.mark.parametrize("mode", ["loose", "tight"])
@pytest.mark.parametrize("seed", range(5))
def test_sigma_inf_dominated_by_sigma_dd(seed, mode):
    report = compute_report(desk_problem(n_agents=5, seed=seed, mode=mode))
    assert np.all(report.sigma_inf <= report.sigma_dd + 1e-12)


def test_ratio(desk):
    assert restriction_ratio(np.zeros(desk.S), desk.b) == 0.0
    assert restriction_ratio(np.abs(desk.b), desk.b) == pytest.approx(1.0)


def test_custom_sigma_is_checked(desk):
    report = compute_report(desk)
    assert report.sigma("custom", [0.1, 0.2]).tolist() == [0.1, 0.2]
    with pytest.raises(ValueError):
        report.sigma("custom", [-0.1, 0.2])
    with pytest.raises(ValueError):
        report.sigma("half")


def test_negative_delta(desk):
    with pytest.raises(ValueError):
        compute_report(desk, delta=-1.0)


def test_parallel_report_is_identical(desk):
    one, two = compute_report(desk, n_jobs=1), compute_report(desk, n_jobs=2)
    assert np.array_equal(one.sigma_loc, two.sigma_loc)
    assert np.array_equal(one.sigma_dd, two.sigma_dd)


def test_consensus_on_a_path():
    graph = Graph.path(4)
    values = np.array([[3.0], [1.0], [4.0], [7.0]])
    assert not np.all(max_consensus(values, graph, rounds=2) == 7.0)
    assert np.all(max_consensus(values, graph, rounds=3) == 7.0)
    assert np.all(max_consensus(values, graph) == 7.0)


def test_consensus_keeps_agreement():
    graph = Graph.complete(3)
    assert np.all(max_consensus(np.full((3, 2), 2.5), graph, rounds=5) == 2.5)


def test_consensus_on_random_graph():
    graph = erdos_renyi_connected(12, 0.3, seed=1)
    values = np.random.default_rng(0).normal(size=(12, 3))
    agreed = max_consensus(values, graph)
    assert np.array_equal(agreed, np.broadcast_to(values.max(axis=0), agreed.shape))


def test_consensus_uses_graph_edges():
    graph = Graph.path(3)
    channel = SynchronousChannel(graph, record=True)
    max_consensus(np.arange(3.0), graph, channel=channel)
    assert channel.round == graph.diameter
    assert {(s, r) for _, s, r in channel.log} == {(0, 1), (1, 0), (1, 2), (2, 1)}


def test_distributed_report_agrees(desk):
    graph = erdos_renyi_connected(desk.N, 0.5, seed=0)
    report, estimates = distributed_report(desk, graph)
    assert np.array_equal(estimates, np.broadcast_to(report.sigma_inf, estimates.shape))


def test_default_M(asymmetric_problem):
    assert default_M(asymmetric_problem) == pytest.approx(30.0)
    assert default_M(asymmetric_problem, Graph.path(2)) == pytest.approx(30.0)
