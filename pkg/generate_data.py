"""Write the desk-scale instances of the kit into data/train_loose and data/train_tight."""
import sys
from pathlib import Path

import click

sys.path.insert(0, str(Path(__file__).parent / "external_imports"))

from dpmilp.config import InstanceConfig  # noqa: E402
from dpmilp.model import ResourceScale, dump, generate_random  # noqa: E402

LOCAL_DATA = Path(__file__).parent / "data"


def write_instances(folder, mode, n_instances, n_agents, first_seed):
    icfg = InstanceConfig.desk(n_agents=n_agents, resource_mode=mode)
    folder.mkdir(parents=True, exist_ok=True)
    paths = []
    for k in range(n_instances):
        problem = generate_random(icfg.n_agents, icfg.S, icfg.p, icfg.q, icfg.m, first_seed + k,
                                  icfg.resource_mode, ResourceScale.named(icfg.scale), icfg.perturb_costs)
        paths.append(folder / f"instance_{k:03d}.json")
        dump(problem, paths[-1])
    return paths


@click.command()
@click.option("-n", "--n-instances", default=20, show_default=True, help="Instances per folder.")
@click.option("--n-agents", default=8, show_default=True)
@click.option("--seed", default=0, show_default=True, help="Seed of the first instance.")
@click.option("--output", type=click.Path(file_okay=False), default=str(LOCAL_DATA), show_default=True)
def main(n_instances, n_agents, seed, output):
    for offset, mode in enumerate(("loose", "tight")):
        folder = Path(output) / f"train_{mode}"
        write_instances(folder, mode, n_instances, n_agents, seed + offset * n_instances)
        click.echo(f"{n_instances} {mode} instances in {folder}")


if __name__ == "__main__":
    main()
