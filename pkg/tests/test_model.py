import json

import numpy as np
import pytest

from conftest import desk_problem, make_block
from dpmilp.errors import EnumerationCapError, InstanceFormatError, SizeCapError, ValidationError
from dpmilp.model import (CoupledProblem, ResourceScale, deserialize, dump, enumerate_integer_points,
                          extreme_points, from_dict, generate_random, load, oracle_global_milp,
                          oracle_hull_program, oracle_min_over_X, serialize, to_dict, validate)
from dpmilp.milp import minimize_over_block


def test_well_formed_instance_is_valid(asymmetric_problem):
    assert validate(asymmetric_problem) == []


def test_lo_above_hi_names_the_component():
    block = make_block([1.0, 1.0], [[1.0, 1.0]], [0.0, 3.0], [2.0, 2.0])
    violations = validate(CoupledProblem((block,), [1.0]))
    assert len(violations) == 1
    assert violations[0].field == "lo[1]"
    assert violations[0].block == 0


def test_coupling_rows_mismatch():
    block = make_block([1.0], [[1.0]], 0.0, 2.0)
    violations = validate(CoupledProblem((block,), [1.0, 1.0]))
    assert [v.field for v in violations] == ["A"]


def test_full_scale_dimensions():
    problem = generate_random(300, 5, 10, 5, 20, 1)
    assert (problem.N, problem.S) == (300, 5)
    block = problem.blocks[0]
    assert block.n == 15
    assert block.int_idx == tuple(range(10))
    assert block.P.D.shape == (20, 15)
    assert np.all(block.P.lo == -60.0) and np.all(block.P.hi == 60.0)
    assert np.all((problem.b >= -20.0 * 300) & (problem.b <= -15.0 * 300))


def test_equal_seeds_give_equal_instances():
    assert desk_problem(seed=3) == desk_problem(seed=3)
    assert desk_problem(seed=3) != desk_problem(seed=4)


def test_desk_tight_instance_is_valid():
    problem = generate_random(6, 2, 2, 1, 4, 7, "tight", ResourceScale.desk())
    assert validate(problem) == []
    assert np.all(problem.b <= -2.5 * 6)


def test_bad_generator_arguments():
    with pytest.raises(ValueError):
        generate_random(3, 2, 1, 1, 2, 0, resource_mode="medium")
    with pytest.raises(ValueError):
        generate_random(0, 2, 1, 1, 2, 0)


def test_serialization_is_exact(desk):
    raw = serialize(desk)
    again = deserialize(raw)
    assert again == desk
    assert serialize(again) == raw


def test_dump_and_load(tmp_path, asymmetric_problem):
    path = tmp_path / "instance.json"
    dump(asymmetric_problem, path)
    assert load(path) == asymmetric_problem


def test_truncated_file_reports_byte_offset(desk):
    raw = serialize(desk)[:40]
    with pytest.raises(InstanceFormatError) as info:
        deserialize(raw)
    assert info.value.offset is not None
    assert "byte" in str(info.value)


def test_zero_agents_fail_validation():
    with pytest.raises(ValidationError) as info:
        deserialize(json.dumps({"N": 0, "S": 1, "b": [1.0], "blocks": []}))
    assert any(v.field == "N" for v in info.value.violations)


def test_missing_field():
    data = to_dict(desk_problem(n_agents=2))
    del data["blocks"][1]["hi"]
    with pytest.raises(InstanceFormatError, match="hi"):
        from_dict(data)


def test_declared_size_must_match():
    data = to_dict(desk_problem(n_agents=2))
    data["N"] = 3
    with pytest.raises(ValidationError):
        from_dict(data)


def test_integer_points_of_one_coordinate(line_block):
    assert [p.tolist() for p in enumerate_integer_points(line_block)] == [[0.0], [1.0], [2.0]]


def test_integer_points_of_two_binaries():
    block = make_block([0.0, 0.0], [[1.0, 1.0]], 0.0, 1.0)
    assert len(list(enumerate_integer_points(block))) == 4


def test_enumeration_cap():
    block = make_block(np.zeros(13), np.ones((1, 13)), 0.0, 1.0)
    with pytest.raises(EnumerationCapError):
        list(enumerate_integer_points(block))


def test_min_over_X_by_hand(line_block):
    value, point = oracle_min_over_X(line_block, [1.0])
    assert value == 0.0 and point.x.tolist() == [0.0]
    value, point = oracle_min_over_X(line_block, [-1.0])
    assert value == -2.0 and point.x.tolist() == [2.0]


@pytest.mark.parametrize("seed", range(5))
def test_min_over_X_agrees_with_branch_and_bound(seed):
    block = desk_problem(n_agents=1, seed=seed).blocks[0]
    w = np.random.default_rng(seed).uniform(-1.0, 1.0, block.n)
    assert oracle_min_over_X(block, w)[0] == pytest.approx(minimize_over_block(block, w)[0], abs=1e-6)


def test_extreme_points_of_mixed_block():
    block = make_block([0.0, 0.0], [[1.0, 1.0]], [0.0, 0.0], [2.0, 1.0], int_idx=(0,),
                       D=[[1.0, 1.0]], d=[2.0])
    V = extreme_points(block)
    assert V.tolist() == [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [2.0, 0.0]]


def test_hull_program_penalty(line_block):
    sol = oracle_hull_program(line_block, [-1.0], 10.0)
    assert sol.cost == pytest.approx(10.0)
    assert sol.v == pytest.approx(1.0)
    assert sol.mu == pytest.approx([10.0])


def test_global_milp_asymmetric(asymmetric_problem):
    for method in ("bnb", "enumerate"):
        result = oracle_global_milp(asymmetric_problem, method=method)
        assert result.status == "optimal"
        assert result.value == pytest.approx(-9.0)
        assert [p.x.tolist() for p in result.points] == [[4.0], [1.0]]


def test_global_milp_infeasible(line_block):
    problem = CoupledProblem((line_block,), [-1.0])
    assert oracle_global_milp(problem).status == "infeasible"
    assert oracle_global_milp(problem, method="enumerate").status == "infeasible"


def test_single_agent_reduces_to_block_milp():
    problem = CoupledProblem((make_block([-1.0], [[1.0]], 0.0, 2.0),), [1.5])
    result = oracle_global_milp(problem)
    assert result.value == pytest.approx(-1.0)


def test_global_milp_methods_agree():
    problem = desk_problem(n_agents=3, seed=2, p=1, q=1)
    bnb = oracle_global_milp(problem)
    enum = oracle_global_milp(problem, method="enumerate")
    assert bnb.status == enum.status
    if bnb.status == "optimal":
        assert bnb.value == pytest.approx(enum.value, abs=1e-6)


def test_oracle_size_cap():
    with pytest.raises(SizeCapError):
        oracle_global_milp(desk_problem(n_agents=9))
