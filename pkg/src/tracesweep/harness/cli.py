"""Command line entry point: ``tracesweep {solve,converge,precond,pipeline}``."""
from __future__ import annotations

import logging
import sys

import click

from ..errors import ConfigurationError, DataError, MemoryGuardError
from .config import RunConfig
from .experiments import run


def _options(f):
    f = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                     help="Override a config entry, e.g. --set pml.width=20 (repeatable).")(f)
    f = click.option("--seed", type=int, default=None, help="Seed for random shot placement.")(f)
    f = click.option("--out", type=click.Path(file_okay=False), default=None,
                     help="Output directory (overrides output.dir).")(f)
    f = click.argument("config", type=click.Path(exists=True, dir_okay=False), required=False)(f)
    return f


def _execute(mode: str, config, overrides, seed, out) -> None:
    items = [("mode", mode)] + list(overrides)
    if seed is not None:
        items.append(("seed", seed))
    if out is not None:
        items.append(("output.dir", out))
    try:
        cfg = RunConfig.load(config, items) if config else RunConfig.from_dict({}, items)
        result = run(cfg)
    except (ConfigurationError, DataError, MemoryGuardError) as exc:
        raise click.ClickException(str(exc)) from None
    for row in result.rows:
        click.echo("  ".join(f"{k}={_short(v)}" for k, v in row.items() if v != ""))
    for k, v in result.summary.items():
        click.echo(f"{k}: {_short(v)}")
    for path in result.artifacts:
        click.echo(f"wrote {path}")


def _short(v):
    return f"{v:.4g}" if isinstance(v, float) else v


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool) -> None:
    """Diagonal sweeping Helmholtz solver experiments."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@_options
def solve(config, overrides, seed, out):
    """Sweeping solve as a direct solver, checked against the global solve."""
    _execute("direct", config, overrides, seed, out)


@main.command()
@_options
def converge(config, overrides, seed, out):
    """Error and rate table over nested meshes."""
    _execute("converge", config, overrides, seed, out)


@main.command()
@_options
def precond(config, overrides, seed, out):
    """GMRES iteration counts with the sweeping preconditioner."""
    _execute("precond", config, overrides, seed, out)


@main.command()
@_options
def pipeline(config, overrides, seed, out):
    """Pipeline cost model: closed form against the simulated schedule."""
    _execute("pipeline", config, overrides, seed, out)


if __name__ == "__main__":
    main()
