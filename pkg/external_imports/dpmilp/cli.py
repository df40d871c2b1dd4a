"""Command-line harness: ``generate``, ``run``, ``montecarlo`` and ``validate``.

Every subcommand reads one YAML/JSON config (see ``dpmilp.config.RunConfig``);
``--desk`` starts from the desk-scale preset and ``--set key=value`` overrides
single dotted fields, e.g. ``--set instance.n_agents=6 --set T_f=200``.
"""
import dataclasses
import json
import logging
from pathlib import Path

import click
import numpy as np
import pandas as pd
import yaml
from joblib import Parallel, delayed
from tqdm import tqdm

from . import __version__
from .agent import StepSizeSchedule, recover_dual_decomposition, recover_mixed_integer
from .bounds import compute_bounds, suboptimality
from .config import TOLERANCES, RunConfig
from .errors import ConfigError, DPMILPError, ValidationError
from .model import ResourceScale, dump, generate_random, load, oracle_global_milp, validate
from .network import coupling_satisfied, erdos_renyi_connected, feasibility_first_round, run
from .restriction import compute_report, default_M, restriction_ratio
from .subproblem import solve_restricted_lp

logger = logging.getLogger(__name__)

OUTCOME_OK = "ok"
OUTCOME_INFEASIBLE = "restricted_lp_infeasible"

MONTECARLO_COLUMNS = [
    "trial", "seed", "resource_mode", "solvable_dpd", "solvable_dd", "restriction_dpd",
    "restriction_dd", "q_star_dpd", "q_star_dd", "cost_dpd", "cost_dd", "feasible_dpd",
    "feasible_dd", "subopt_dpd", "subopt_dd", "J_milp", "gap_milp_dpd", "gap_milp_dd", "error",
]


def build_problem(icfg):
    if icfg.path:
        return load(icfg.path)
    return generate_random(icfg.n_agents, icfg.S, icfg.p, icfg.q, icfg.m, icfg.seed,
                           icfg.resource_mode, ResourceScale.named(icfg.scale), icfg.perturb_costs)


def recovered_feasible(problem, points, tol=TOLERANCES):
    usage = problem.usage(points)
    member = all(blk.contains(x, tol) for blk, x in zip(problem.blocks, points))
    return member and coupling_satisfied(usage, problem.b, tol)


def recover_at(problem, allocations, tol=TOLERANCES):
    """Mixed-integer points recovered at fixed allocations (one per agent)."""
    return [np.asarray(recover_mixed_integer(blk, y, i, tol).point.x)
            for i, (blk, y) in enumerate(zip(problem.blocks, allocations))]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if np.isfinite(value) else None
    return obj


def run_pipeline(problem, cfg, sigma=None, report=None, tol=TOLERANCES):
    """Restriction, restricted LP precheck, simulator, recovery and bounds for one instance.

    Returns ``(summary, trace)``; ``trace`` is ``None`` when the restricted LP
    is infeasible, which is an outcome and not an error.
    """
    report = report or compute_report(problem, cfg.restriction.delta, cfg.n_jobs, tol)
    if sigma is None:
        sigma = report.sigma(cfg.restriction.mode, cfg.restriction.custom)
    sigma = np.asarray(sigma, dtype=float)
    summary = {
        "N": problem.N,
        "S": problem.S,
        "restriction": report.to_dict(),
        "sigma": sigma,
        "restriction_ratio": restriction_ratio(sigma, problem.b),
    }
    precheck = solve_restricted_lp(problem, sigma, cfg.pricing, tol=tol)
    if not precheck.feasible:
        summary.update(outcome=OUTCOME_INFEASIBLE, violation=precheck.violation)
        logger.warning("restricted LP infeasible (violation %.4g)", precheck.violation)
        return summary, None

    graph = erdos_renyi_connected(problem.N, cfg.graph.p, cfg.graph.seed)
    M = cfg.M if cfg.M is not None else default_M(problem, graph)
    trace = run(problem, graph, sigma, StepSizeSchedule.from_config(cfg.schedule), M, cfg.T_f,
                recover_every=cfg.recover_every, monitor_every=cfg.monitor_every,
                stop_on_feasible=cfg.stop_on_feasible, pricing=cfg.pricing, n_jobs=cfg.n_jobs,
                progress=cfg.n_jobs == 1 and logger.isEnabledFor(logging.INFO), tol=tol)
    last = trace.last_recovered
    x_inf = recover_at(problem, precheck.y_star, tol)
    bounds = compute_bounds(problem, report, sigma, trace=trace, z_star=precheck.z_star, x_inf=x_inf, tol=tol)
    cost = float(np.sum(last.cost))
    summary.update(
        outcome=OUTCOME_OK,
        q_star=precheck.q_star,
        M=M,
        small_M_agents=trace.small_M_agents,
        rounds=len(trace.rounds),
        feasibility_round=feasibility_first_round(trace, problem.b, tol),
        cost=cost,
        feasible=bool(last.feasible),
        suboptimality=suboptimality(cost, precheck.q_star),
        cost_asymptotic=problem.cost(x_inf),
        feasible_asymptotic=recovered_feasible(problem, x_inf, tol),
        bounds=bounds.to_dict(),
    )
    if cfg.oracle:
        oracle = oracle_global_milp(problem, tol)
        summary["J_milp"] = oracle.value if oracle.status == "optimal" else None
    return summary, trace


def cmd_generate(cfg, output=None):
    problem = build_problem(cfg.instance)
    path = Path(output) if output else Path(cfg.output_dir) / "instance.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    dump(problem, path)
    logger.info("wrote %d-agent instance to %s", problem.N, path)
    return path


def cmd_run(cfg):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(cfg.instance)
    summary, trace = run_pipeline(problem, cfg)
    if trace is not None:
        trace.to_frame().to_csv(out / "trace.csv", index=False)
        trace.coupling_frame().to_csv(out / "coupling.csv", index=False)
    (out / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2))
    return summary


def trial_seed(master_seed, trial):
    return int(np.random.SeedSequence([master_seed, trial]).generate_state(1)[0])


def _method_dpd(problem, report, cfg, row, tol):
    sigma = report.sigma_ft if cfg.montecarlo.mode == "distributed" else report.sigma_inf
    row["restriction_dpd"] = restriction_ratio(sigma, problem.b)
    sol = solve_restricted_lp(problem, sigma, cfg.pricing, tol=tol)
    row["solvable_dpd"] = sol.feasible
    if not sol.feasible:
        return None
    row["q_star_dpd"] = sol.q_star
    if cfg.montecarlo.mode == "distributed":
        _, trace = run_pipeline(problem, dataclasses.replace(cfg, oracle=False), sigma, report, tol)
        points = trace.last_recovered.points
    else:
        points = recover_at(problem, sol.y_star, tol)
    row["cost_dpd"] = problem.cost(points)
    row["feasible_dpd"] = recovered_feasible(problem, points, tol)
    row["subopt_dpd"] = suboptimality(row["cost_dpd"], sol.q_star)
    return points


def _method_dd(problem, report, cfg, row, tol):
    row["restriction_dd"] = restriction_ratio(report.sigma_dd, problem.b)
    sol = solve_restricted_lp(problem, report.sigma_dd, cfg.pricing, tol=tol)
    row["solvable_dd"] = sol.feasible
    if not sol.feasible:
        return None
    row["q_star_dd"] = sol.q_star
    points = [np.asarray(recover_dual_decomposition(blk, sol.multipliers, i, tol).point.x)
              for i, blk in enumerate(problem.blocks)]
    row["cost_dd"] = problem.cost(points)
    row["feasible_dd"] = recovered_feasible(problem, points, tol)
    row["subopt_dd"] = suboptimality(row["cost_dd"], sol.q_star)
    return points


def run_trial(cfg, trial, resource_mode, tol=TOLERANCES):
    """One Monte Carlo row: both restrictions on one random instance."""
    seed = trial_seed(cfg.montecarlo.master_seed, trial)
    row = {key: np.nan for key in MONTECARLO_COLUMNS}
    row.update(trial=trial, seed=seed, resource_mode=resource_mode, solvable_dpd=False,
               solvable_dd=False, feasible_dpd=False, feasible_dd=False, error="")
    try:
        icfg = dataclasses.replace(cfg.instance, path=None, seed=seed, resource_mode=resource_mode)
        problem = build_problem(icfg)
        report = compute_report(problem, cfg.restriction.delta, 1, tol)
        _method_dpd(problem, report, cfg, row, tol)
        _method_dd(problem, report, cfg, row, tol)
        if cfg.oracle and problem.N <= tol.oracle_max_agents:
            oracle = oracle_global_milp(problem, tol)
            if oracle.status == "optimal":
                row["J_milp"] = oracle.value
                row["gap_milp_dpd"] = suboptimality(row["cost_dpd"], oracle.value)
                row["gap_milp_dd"] = suboptimality(row["cost_dd"], oracle.value)
    except (DPMILPError, ValueError, ArithmeticError) as exc:
        logger.warning("trial %d (%s) failed: %s", trial, resource_mode, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def aggregate(frame):
    """Comparison table: one column per method and resource mode."""
    table = {}
    for mode in sorted(frame["resource_mode"].unique()):
        part = frame[frame["resource_mode"] == mode]
        for method in ("dpd", "dd"):
            ok = part[f"solvable_{method}"].astype(bool)
            table[f"{method}_{mode}"] = {
                "solvable problems": float(ok.mean()),
                "size of restriction": float(part[f"restriction_{method}"].mean()),
                "suboptimality of solution": float(part.loc[ok, f"subopt_{method}"].mean()),
            }
    agg = pd.DataFrame(table)
    agg.index.name = "metric"
    return agg


def cmd_montecarlo(cfg, n_trials=None, progress=False):
    n_trials = n_trials or cfg.montecarlo.n_trials
    jobs = [(trial, mode) for trial in range(n_trials) for mode in cfg.montecarlo.resource_modes]
    rows = Parallel(n_jobs=cfg.n_jobs, backend="threading")(
        delayed(run_trial)(cfg, trial, mode) for trial, mode in tqdm(jobs, disable=not progress, desc="trials"))
    frame = pd.DataFrame(rows, columns=MONTECARLO_COLUMNS)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out / "montecarlo.csv", index=False)
    aggregate(frame).to_csv(out / "montecarlo_aggregate.csv")
    return frame


def cmd_validate(path):
    """Violations of the instance at ``path``; format errors propagate."""
    try:
        return validate(load(path))
    except ValidationError as exc:
        return exc.violations


# click surface


def _merge(base, update):
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value
    return base


def load_config(path=None, desk=False, overrides=()):
    data = RunConfig.desk().to_dict() if desk else {}
    if path:
        try:
            loaded = yaml.safe_load(Path(path).read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(str(path), f"cannot parse config: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(str(path), "top level must be a mapping")
        _merge(data, loaded)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(item, "expected key=value")
        node = data
        *parents, leaf = key.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = yaml.safe_load(raw)
    return RunConfig.from_dict(data)


def _config_options(f):
    f = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                     help="Override one dotted config field.")(f)
    f = click.option("--desk", is_flag=True, help="Start from the desk-scale preset.")(f)
    f = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="YAML or JSON run configuration.")(f)
    return f


def _config(config_path, desk, overrides):
    try:
        return load_config(config_path, desk, overrides)
    except ConfigError as exc:
        raise click.UsageError(f"bad config field {exc}") from exc


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", count=True, help="-v for INFO, -vv for DEBUG.")
def main(verbose):
    """Distributed primal decomposition for constraint-coupled MILPs."""
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


@main.command()
@_config_options
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="Instance file to write.")
def generate(config_path, desk, overrides, output):
    """Write a random instance."""
    cfg = _config(config_path, desk, overrides)
    try:
        path = cmd_generate(cfg, output)
    except DPMILPError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(str(path))


@main.command("run")
@_config_options
def run_command(config_path, desk, overrides):
    """Run the algorithm on one instance and write trace.csv, coupling.csv and summary.json."""
    cfg = _config(config_path, desk, overrides)
    try:
        summary = cmd_run(cfg)
    except DPMILPError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"outcome: {summary['outcome']}")
    if summary["outcome"] == OUTCOME_OK:
        click.echo(f"cost: {summary['cost']:.6g}  q*: {summary['q_star']:.6g}  "
                   f"feasibility round: {summary['feasibility_round']}")


@main.command()
@_config_options
@click.option("-n", "--n-trials", type=click.IntRange(min=1), help="Overrides montecarlo.n_trials.")
def montecarlo(config_path, desk, overrides, n_trials):
    """Compare the restrictions over random instances; writes montecarlo.csv."""
    cfg = _config(config_path, desk, overrides)
    frame = cmd_montecarlo(cfg, n_trials, progress=True)
    click.echo(aggregate(frame).to_string())


@main.command("validate")
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
def validate_command(instance):
    """Check an instance file."""
    try:
        violations = cmd_validate(instance)
    except DPMILPError as exc:
        raise click.ClickException(str(exc)) from exc
    for v in violations:
        click.echo(str(v))
    if violations:
        raise SystemExit(1)
    click.echo("ok")


if __name__ == "__main__":
    main()
