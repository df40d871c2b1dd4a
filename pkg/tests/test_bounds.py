import numpy as np
import pytest

from conftest import desk_problem, make_block
from dpmilp.cli import run_pipeline
from dpmilp.config import RestrictionConfig, RunConfig
from dpmilp.agent import recover_mixed_integer
from dpmilp.bounds import (Gamma, bound_aposteriori, bound_apriori, bound_finite_time, compute_bounds,
                           find_slater, gamma, slater, suboptimality)
from dpmilp.errors import DPMILPWarning, MissingSlaterError
from dpmilp.model import CoupledProblem, oracle_global_milp, oracle_min_over_X
from dpmilp.restriction import compute_report
from dpmilp.subproblem import solve_restricted_lp


def test_gamma_by_hand(line_block):
    assert gamma(make_block([0.0], [[1.0]], 0.0, 2.0)) == 0.0
    assert gamma(line_block) == pytest.approx(2.0)


@pytest.mark.parametrize("seed", range(3))
def test_gamma_matches_enumeration(seed):
    block = desk_problem(n_agents=1, seed=seed).blocks[0]
    spread = -oracle_min_over_X(block, -block.c)[0] - oracle_min_over_X(block, block.c)[0]
    assert gamma(block) == pytest.approx(spread, abs=1e-6)


def test_slater_margin(asymmetric_problem):
    cert = slater(asymmetric_problem, [0.0], [[1.0], [1.0]])
    assert cert.zeta == pytest.approx(3.0)
    assert cert.J_sl == pytest.approx(-3.0)
    assert slater(asymmetric_problem, [1.0], [[2.0], [2.0]]) is None


def test_slater_with_huge_resources(line_block):
    problem = CoupledProblem((line_block,), [1e6])
    assert slater(problem, [0.0], [[2.0]]).zeta > 0


def test_slater_on_witnesses(desk):
    report = compute_report(desk)
    points = [w.x for w in report.witnesses]
    expected = np.min(desk.b - report.sigma_inf - desk.usage(points))
    cert = slater(desk, report.sigma_inf, points)
    if expected > 0:
        assert cert.zeta == pytest.approx(expected)
    else:
        assert cert is None


def test_find_slater_falls_back(asymmetric_problem):
    cert = find_slater(asymmetric_problem, [0.0], None, [[4.0], [4.0]], [[0.0], [0.0]])
    assert cert.zeta == pytest.approx(5.0)
    with pytest.warns(DPMILPWarning):
        assert find_slater(asymmetric_problem, [0.0], [[4.0], [4.0]]) is None


def test_apriori_by_hand(line_block):
    problem = CoupledProblem((line_block,), [5.0])
    assert bound_apriori(problem, [0.0], 1.0, [0.0]) == 0.0
    assert bound_apriori(problem, [0.0], 1.0, [2.0]) == pytest.approx(2.0)
    assert bound_apriori(problem, [0.5], 0.25, [2.0]) == pytest.approx((1 + 0.5 / 0.25) * 2.0)
    with pytest.raises(MissingSlaterError):
        bound_apriori(problem, [0.0], None, [2.0])


def test_aposteriori_vanishes_on_integral_optimum(asymmetric_problem):
    z = [np.array([4.0]), np.array([1.0])]
    B_prime, I_R = bound_aposteriori(asymmetric_problem, z, z, [0.5], 1.0, asymmetric_problem.cost(z))
    assert B_prime == 0.0
    assert I_R == []


def test_aposteriori_counts_fractional_agents(asymmetric_problem):
    z = [np.array([3.5]), np.array([1.0])]
    x = [np.array([3.0]), np.array([1.0])]
    B_prime, I_R = bound_aposteriori(asymmetric_problem, z, x, [0.5], 2.0, -6.0)
    assert I_R == [0]
    assert B_prime == pytest.approx(1.0 + 0.25 * (-6.0 + 8.0))


def test_finite_time_by_hand():
    B_t = bound_finite_time([3.0], [1.0], [np.array([2.0, -1.0])], [0.5], 2.0, [0.25, 0.1])
    assert B_t == pytest.approx(2.0 + 1.5 + 0.5)
    assert bound_finite_time([1.0], [1.0], [np.zeros(2)], [0.0], 2.0, [0.0, 0.0]) == 0.0


def test_Gamma():
    assert Gamma([1.0, 3.0], 2, 0.5) == pytest.approx(16.0)
    with pytest.raises(MissingSlaterError):
        Gamma([1.0], 1, 0.0)


def test_suboptimality_sign():
    assert suboptimality(-9.0, -10.0) == pytest.approx(0.1)
    assert suboptimality(11.0, 10.0) == pytest.approx(0.1)
    assert np.isnan(suboptimality(1.0, 0.0))


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(4))
def test_bounds_hold_against_global_optimum(seed):
    problem = desk_problem(n_agents=4, seed=seed)
    report = compute_report(problem, delta=0.2)
    sol = solve_restricted_lp(problem, report.sigma_inf)
    if not sol.feasible:
        pytest.skip("restricted LP infeasible for this draw")
    x_inf = [np.asarray(recover_mixed_integer(blk, y, i).point.x)
             for i, (blk, y) in enumerate(zip(problem.blocks, sol.y_star))]
    bounds = compute_bounds(problem, report, report.sigma_inf, z_star=sol.z_star, x_inf=x_inf)
    if bounds.B is None:
        pytest.skip("no Slater certificate among the witnesses")
    oracle = oracle_global_milp(problem)
    assert oracle.status == "optimal"
    gap = problem.cost(x_inf) - oracle.value
    assert gap <= bounds.B + 1e-6
    assert gap <= bounds.B_prime + 1e-6
    assert len(bounds.I_R) <= problem.S


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(3))
def test_finite_time_bound_holds_after_feasibility(seed):
    problem = desk_problem(n_agents=4, seed=seed)
    report = compute_report(problem, delta=0.2)
    cfg = RunConfig(restriction=RestrictionConfig(delta=0.2), T_f=400, recover_every=10, pricing="enumerate",
                    oracle=True)
    summary, trace = run_pipeline(problem, cfg, sigma=report.sigma_ft, report=report)
    if trace is None or summary["feasibility_round"] is None:
        pytest.skip("no feasible recovery for this draw")
    bounds = compute_bounds(problem, report, report.sigma_ft, trace=trace)
    if not bounds.B_t:
        pytest.skip("no Slater certificate for this draw")
    J_milp = summary["J_milp"]
    assert J_milp is not None
    checked = 0
    for r in trace.rounds:
        if r.recovered and r.feasible and r.t >= summary["feasibility_round"]:
            assert float(np.sum(r.cost)) - J_milp <= bounds.B_t[r.t] + 1e-6
            assert float(np.sum(r.cost)) >= J_milp - 1e-6
            checked += 1
    assert checked > 0
