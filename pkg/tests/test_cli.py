import json

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from conftest import make_block
from dpmilp import cli
from dpmilp.cli import (MONTECARLO_COLUMNS, OUTCOME_INFEASIBLE, OUTCOME_OK, aggregate, cmd_montecarlo,
                        cmd_validate, load_config, main, recovered_feasible, run_pipeline, run_trial,
                        trial_seed)
from dpmilp.config import RunConfig
from dpmilp.errors import ConfigError
from dpmilp.model import CoupledProblem, dump, load, to_dict

DESK_RUN = ("--desk", "--set", "instance.n_agents=3", "--set", "T_f=5", "--set", "pricing=enumerate")


def test_generate_desk_instance(tmp_path):
    out = tmp_path / "inst.json"
    result = CliRunner().invoke(main, ["generate", "--desk", "--set", "instance.n_agents=3", "-o", str(out)])
    assert result.exit_code == 0, result.output
    problem = load(out)
    assert (problem.N, problem.S) == (3, 2)


def test_bad_config_is_a_usage_error():
    result = CliRunner().invoke(main, ["generate", "--set", "instance.S=0"])
    assert result.exit_code == 2
    assert "instance.S" in result.output


def test_unknown_config_field(tmp_path):
    config = tmp_path / "run.yml"
    config.write_text("instance:\n  colour: blue\n")
    result = CliRunner().invoke(main, ["generate", "--config", str(config)])
    assert result.exit_code == 2
    assert "instance.colour" in result.output


def test_load_config_layers(tmp_path):
    config = tmp_path / "run.yml"
    config.write_text("T_f: 40\ngraph:\n  p: 0.5\n")
    cfg = load_config(config, desk=True, overrides=["schedule.kind=harmonic", "restriction.delta=0.2"])
    assert cfg.T_f == 40
    assert cfg.graph.p == 0.5
    assert cfg.instance.n_agents == 20
    assert cfg.schedule.kind == "harmonic"
    assert cfg.restriction.delta == 0.2
    with pytest.raises(ConfigError):
        load_config(overrides=["T_f"])


def test_validate_command(tmp_path, asymmetric_problem):
    good = tmp_path / "good.json"
    dump(asymmetric_problem, good)
    result = CliRunner().invoke(main, ["validate", str(good)])
    assert result.exit_code == 0 and "ok" in result.output

    data = to_dict(asymmetric_problem)
    data["blocks"][1]["lo"] = [5.0]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    assert [v.field for v in cmd_validate(bad)] == ["lo[0]"]
    result = CliRunner().invoke(main, ["validate", str(bad)])
    assert result.exit_code == 1
    assert "block 1" in result.output


def test_validate_reports_parse_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text('{"N": 1, "S"')
    result = CliRunner().invoke(main, ["validate", str(broken)])
    assert result.exit_code == 1
    assert "byte" in result.output


def test_run_writes_outputs(tmp_path):
    args = ["run", *DESK_RUN, "--set", f"output_dir={tmp_path}"]
    result = CliRunner().invoke(main, args)
    assert result.exit_code == 0, result.output
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["outcome"] in (OUTCOME_OK, OUTCOME_INFEASIBLE)
    if summary["outcome"] == OUTCOME_OK:
        trace = pd.read_csv(tmp_path / "trace.csv")
        assert list(trace.columns[:4]) == ["t", "i", "y_0", "y_1"]
        assert trace["t"].max() == 5
        assert (tmp_path / "coupling.csv").exists()


def test_single_agent_pipeline_recovers_local_optimum():
    problem = CoupledProblem((make_block([-1.0], [[1.0]], 0.0, 2.0),), np.array([5.0]))
    cfg = RunConfig(T_f=3, pricing="enumerate")
    summary, trace = run_pipeline(problem, cfg)
    assert summary["outcome"] == OUTCOME_OK
    assert summary["cost"] == pytest.approx(-2.0)
    assert summary["feasible"]
    assert summary["feasibility_round"] == 0
    assert trace.conservation_error() < 1e-12


def test_infeasible_restriction_is_an_outcome(asymmetric_problem):
    summary, trace = run_pipeline(asymmetric_problem, RunConfig(T_f=3), sigma=np.array([50.0]))
    assert summary["outcome"] == OUTCOME_INFEASIBLE
    assert trace is None


def test_trial_seeds_are_stable_and_distinct():
    assert trial_seed(0, 1) == trial_seed(0, 1)
    assert len({trial_seed(0, t) for t in range(20)}) == 20


def test_aggregate_table():
    frame = pd.DataFrame([
        dict(resource_mode="loose", solvable_dpd=True, solvable_dd=True, restriction_dpd=0.1,
             restriction_dd=0.6, subopt_dpd=0.01, subopt_dd=0.05),
        dict(resource_mode="loose", solvable_dpd=True, solvable_dd=False, restriction_dpd=0.3,
             restriction_dd=0.8, subopt_dpd=0.03, subopt_dd=np.nan),
    ])
    table = aggregate(frame)
    assert list(table.columns) == ["dpd_loose", "dd_loose"]
    assert table.loc["solvable problems", "dd_loose"] == 0.5
    assert table.loc["size of restriction", "dpd_loose"] == pytest.approx(0.2)
    assert table.loc["suboptimality of solution", "dpd_loose"] == pytest.approx(0.02)
    assert table.loc["suboptimality of solution", "dd_loose"] == pytest.approx(0.05)


def test_montecarlo_is_deterministic(tmp_path):
    outputs = []
    for name in ("a", "b"):
        cfg = load_config(desk=True, overrides=["instance.n_agents=3", "pricing=enumerate",
                                                f"output_dir={tmp_path / name}"])
        frame = cmd_montecarlo(cfg, n_trials=1)
        assert list(frame.columns) == MONTECARLO_COLUMNS
        assert sorted(frame["resource_mode"]) == ["loose", "tight"]
        outputs.append((tmp_path / name / "montecarlo.csv").read_bytes())
        assert (tmp_path / name / "montecarlo_aggregate.csv").exists()
    assert outputs[0] == outputs[1]


def test_recovered_feasibility_uses_absolute_tolerance():
    block = make_block([1.0], [[1.0]], -100.0, 0.0)
    point = [np.array([-100.0])]
    assert recovered_feasible(CoupledProblem((block,), np.array([-100.0])), point)
    assert not recovered_feasible(CoupledProblem((block,), np.array([-100.0 - 5e-7])), point)


def test_failed_trial_is_recorded(tmp_path, monkeypatch):
    def singular(*args, **kwargs):
        raise ValueError("singular basis")

    monkeypatch.setattr(cli, "compute_report", singular)
    cfg = load_config(desk=True, overrides=["instance.n_agents=3", f"output_dir={tmp_path}"])
    row = run_trial(cfg, 0, "loose")
    assert row["error"] == "ValueError: singular basis"
    assert not row["solvable_dpd"]
    frame = cmd_montecarlo(cfg, n_trials=1)
    assert len(frame) == 2
    assert frame["error"].str.startswith("ValueError").all()


@pytest.mark.slow
def test_montecarlo_restrictions_compare(tmp_path):
    cfg = load_config(desk=True, overrides=["instance.n_agents=8", f"output_dir={tmp_path}"])
    frame = cmd_montecarlo(cfg, n_trials=4)
    assert (frame["error"] == "").all()
    assert (frame["restriction_dpd"] <= frame["restriction_dd"] + 1e-12).all()
    assert (frame["solvable_dpd"] | ~frame["solvable_dd"]).all()
    assert frame.loc[frame["solvable_dpd"], "feasible_dpd"].all()
    assert frame["feasible_dpd"].sum() >= frame["feasible_dd"].sum()
