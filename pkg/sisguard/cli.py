"""
Command-line interface for the sisguard epidemic game solver.

Provides Click-based commands for trajectories, equilibria, parameter sweeps,
degree-distribution comparisons and the NIMFA consistency check.
"""

import json
import logging
import os
import re
from contextlib import contextmanager
from typing import Optional, Sequence

import click

from .artifacts import ArtifactWriter
from .config import load_comparison_config, load_model_config, load_sweep_config
from .equilibrium import oracle_theta
from .exceptions import (
    ArtifactError,
    ConfigurationError,
    NumericalError,
    SisguardError,
    ValidationError,
)
from .experiments import (
    BUILTIN_SCENARIOS,
    COMPARISON_PARAMETERS,
    DEFAULT_GRID_POINTS,
    HETERO_RATES,
    SPOT_CHECK_POINTS,
    ExperimentRunner,
    Scenario,
    builtin_comparison,
    builtin_scenario,
    builtin_sweep,
)


def get_version():
    """Read version from __init__.py"""
    init_file = os.path.join(os.path.dirname(__file__), "__init__.py")
    with open(init_file, "r") as f:
        content = f.read()
    match = re.search(r'__version__ = ["\']([^"\']+)["\']', content)
    if match:
        return match.group(1)
    raise RuntimeError("Unable to find version string.")


class AliasedGroup(click.Group):
    def get_command(self, ctx, cmd_name):
        rv = click.Group.get_command(self, ctx, cmd_name)
        if rv is not None:
            return rv
        matches = [
            c for c, cmd in self.commands.items() if cmd_name in getattr(cmd, "aliases", [])
        ]
        if matches:
            return self.commands[matches[0]]
        return None


class NumericalFailure(click.ClickException):
    """Numerical failures exit with status 2."""

    exit_code = 2


@contextmanager
def reported_errors():
    """Echo sisguard errors to stderr and turn them into click exits."""
    try:
        yield
    except click.ClickException:
        raise
    except (ConfigurationError, ValidationError) as e:
        click.echo(f"❌ Configuration Error: {e}", err=True)
        raise click.ClickException(str(e))
    except NumericalError as e:
        click.echo(f"❌ Numerical Error: {e}", err=True)
        raise NumericalFailure(str(e))
    except ArtifactError as e:
        click.echo(f"❌ Output Error: {e}", err=True)
        click.echo("💡 Choose another directory with --out.", err=True)
        raise click.ClickException(str(e))
    except SisguardError as e:
        click.echo(f"❌ Error: {e}", err=True)
        raise click.ClickException(str(e))
    except Exception as e:
        click.echo(f"❌ Unexpected error: {e}", err=True)
        raise click.ClickException(f"Unexpected error: {e}")


def load_scenario(config_path: Optional[str], scenario_name: Optional[str]) -> Scenario:
    """Scenario from exactly one of a config file or a built-in name."""
    if config_path and scenario_name:
        raise ConfigurationError("Give either a configuration file or --scenario, not both")
    if scenario_name:
        return builtin_scenario(scenario_name)
    if config_path:
        return load_model_config(config_path)
    raise ConfigurationError(
        "No scenario given",
        f"Pass a configuration file or --scenario ({', '.join(sorted(BUILTIN_SCENARIOS))})",
    )


def _make_runner(out: Optional[str], workers: int = 1) -> ExperimentRunner:
    writer = ArtifactWriter(out) if out else None
    return ExperimentRunner(writer=writer, workers=workers)


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _echo_rows(rows: Sequence, label: str) -> None:
    click.echo(f"{label:>10} {'y_avg':>10} {'theta':>10} {'d_eq':>5}  regime")
    click.echo("-" * 58)
    for row in rows:
        click.echo(
            f"{_fmt(row.value):>10} {_fmt(row.y_avg):>10} {_fmt(row.theta_star):>10} "
            f"{_fmt(row.d_eq):>5}  {row.flag or row.regime}"
        )


scenario_option = click.option(
    "-s",
    "--scenario",
    "scenario_name",
    help=f"Built-in scenario instead of a configuration file ({', '.join(sorted(BUILTIN_SCENARIOS))})",
)
config_argument = click.argument(
    "config_path", required=False, type=click.Path(dir_okay=False)
)


@click.group(cls=AliasedGroup, context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(get_version(), "-V", "--version", prog_name="sisguard")
@click.option("-v", "--verbose", is_flag=True, help="Log debug output to stderr")
def cli(verbose: bool):
    """sisguard - Protection adoption games over networked SIS epidemics."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


@cli.command()
@config_argument
@scenario_option
@click.option(
    "-m",
    "--mode",
    type=click.Choice(["coupled", "switched"]),
    help="Integrate the coupled dynamics or the switched best-response system",
)
@click.option("--step", type=float, help="Euler step (default 0.01)")
@click.option("--horizon", type=float, help="Integration horizon in time units")
@click.option("--epsilon", type=float, help="Timescale separation factor")
@click.option(
    "-o",
    "--out",
    type=click.Path(file_okay=False),
    default="results",
    show_default=True,
    help="Output directory for the trajectory CSV and JSON summaries",
)
def simulate(
    config_path: Optional[str],
    scenario_name: Optional[str],
    mode: Optional[str],
    step: Optional[float],
    horizon: Optional[float],
    epsilon: Optional[float],
    out: str,
):
    """Integrate a scenario and compare its end state with the equilibrium.

    \b
    Example:
      $ sisguard simulate --scenario table1-cp10
      $ sisguard simulate model.json --mode switched --horizon 500
    """
    with reported_errors():
        scenario = load_scenario(config_path, scenario_name)
        if mode is None and scenario.run == "equilibrium":
            mode = "coupled"
        scenario = scenario.with_overrides(step=step, horizon=horizon, epsilon=epsilon, run=mode)

        result = _make_runner(out).run_scenario(scenario)
        summary = result.summary

        click.echo(f"📈 Scenario {scenario.name} ({scenario.run})")
        click.echo("=" * 40)
        click.echo(f"Equilibrium: {summary['regime']} (d_eq={_fmt(summary['d_eq'])})")
        click.echo(f"theta*: {summary['theta_star']:.6f}")
        click.echo(f"Final theta: {summary['final_theta']:.6f} at t={summary['final_time']:.2f}")
        click.echo(f"Final y_avg: {summary['final_y_avg']:.6f}")
        if summary["agreement"]:
            click.echo("✅ Simulated limit agrees with the analytic equilibrium.")
        else:
            click.echo(
                f"⚠️  Simulated limit is {summary['theta_gap']:.2e} away from theta*; "
                "try a longer --horizon."
            )
        for kind, path in result.paths.items():
            click.echo(f"Wrote {kind}: {path}")


simulate.aliases = ["sim"]


@cli.command()
@config_argument
@scenario_option
@click.option("--oracle", is_flag=True, help="Cross-check theta* with a grid search")
@click.option(
    "-o", "--out", type=click.Path(file_okay=False), help="Also write the result JSON here"
)
def equilibrium(
    config_path: Optional[str], scenario_name: Optional[str], oracle: bool, out: Optional[str]
):
    """Print the unique equilibrium of the best-response dynamics as JSON.

    \b
    Example:
      $ sisguard equilibrium --scenario table1-cp8
      $ sisguard equilibrium model.json --oracle
    """
    with reported_errors():
        scenario = load_scenario(config_path, scenario_name).with_overrides(run="equilibrium")
        result = _make_runner(out).run_scenario(scenario)
        click.echo(json.dumps(result.equilibrium.to_dict(), indent=2, sort_keys=True))

        if oracle:
            estimate = oracle_theta(scenario.params, scenario.dist)
            gap = abs(estimate.theta - result.equilibrium.theta_star)
            click.echo(f"Oracle: theta={estimate.theta:.4f} ({estimate.regime.value}), gap {gap:.2e}")
            if estimate.regime is not result.equilibrium.regime:
                click.echo("⚠️  Oracle regime differs from the classifier.", err=True)


equilibrium.aliases = ["eq"]


@cli.command()
@click.argument("sweep_path", required=False, type=click.Path(dir_okay=False))
@click.option(
    "-p",
    "--preset",
    type=click.Choice(sorted(HETERO_RATES)),
    help="Built-in m_4 sweep instead of a sweep file",
)
@click.option("-n", "--grid-points", type=int, help=f"Grid points (default {DEFAULT_GRID_POINTS})")
@click.option("-w", "--workers", type=int, default=1, show_default=True, help="Parallel processes")
@click.option(
    "--spot-checks",
    type=int,
    default=SPOT_CHECK_POINTS,
    show_default=True,
    help="Grid points re-derived by simulation (0 disables)",
)
@click.option(
    "-o", "--out", type=click.Path(file_okay=False), default="results", show_default=True
)
def sweep(
    sweep_path: Optional[str],
    preset: Optional[str],
    grid_points: Optional[int],
    workers: int,
    spot_checks: int,
    out: str,
):
    """Equilibrium table over a one-parameter grid.

    \b
    Example:
      $ sisguard sweep --preset hetero-case1
      $ sisguard sweep sweep.json --grid-points 65 --workers 4
    """
    with reported_errors():
        if sweep_path and preset:
            raise ConfigurationError("Give either a sweep file or --preset, not both")
        if preset:
            spec = builtin_sweep(preset, points=grid_points or DEFAULT_GRID_POINTS)
        elif sweep_path:
            spec = load_sweep_config(sweep_path, points=grid_points)
        else:
            raise ConfigurationError("No sweep given", "Pass a sweep file or --preset")

        runner = _make_runner(out, workers)
        rows = runner.run_sweep(spec)
        _echo_rows(rows, spec.parameter)

        if spot_checks > 0:
            checks = runner.spot_check(spec, rows, points=spot_checks)
            for check in checks:
                mark = "✅" if check.passed else "⚠️ "
                click.echo(
                    f"{mark} {spec.parameter}={check.value:.6g}: simulated theta "
                    f"{check.theta_simulated:.6f} vs {check.theta_star:.6f}"
                )
        click.echo(f"Wrote {os.path.join(out, spec.output)}")


@cli.command("compare-dist")
@config_argument
@click.option(
    "-p",
    "--parameter",
    type=click.Choice(COMPARISON_PARAMETERS),
    help="Swept parameter (overrides the file's grid)",
)
@click.option("-n", "--grid-points", type=int, help=f"Grid points (default {DEFAULT_GRID_POINTS})")
@click.option("-w", "--workers", type=int, default=1, show_default=True, help="Parallel processes")
@click.option(
    "-o", "--out", type=click.Path(file_okay=False), default="results", show_default=True
)
def compare_dist(
    config_path: Optional[str],
    parameter: Optional[str],
    grid_points: Optional[int],
    workers: int,
    out: str,
):
    """Equilibria under binomial, uniform and bimodal degree distributions.

    \b
    Example:
      $ sisguard compare-dist --parameter c_P
      $ sisguard compare-dist base.json --parameter alpha --grid-points 19
    """
    with reported_errors():
        if config_path:
            spec = load_comparison_config(config_path, parameter=parameter, points=grid_points)
        else:
            spec = builtin_comparison(parameter or "c_P", points=grid_points or DEFAULT_GRID_POINTS)

        results = _make_runner(out, workers).compare_distributions(spec)
        for name, rows in results.items():
            click.echo(f"\n📊 {name}")
            _echo_rows(rows, spec.parameter)


compare_dist.aliases = ["compare"]


@cli.command("nimfa-check")
@config_argument
@scenario_option
@click.option("-d", "--d-star", "d_stars", type=int, multiple=True, help="Regime(s) to check")
@click.option("--step", type=float, help="Euler step (default 0.01)")
@click.option("--horizon", type=float, default=50.0, show_default=True)
@click.option("-o", "--out", type=click.Path(file_okay=False), help="Write graphs and report here")
def nimfa_check(
    config_path: Optional[str],
    scenario_name: Optional[str],
    d_stars: Sequence[int],
    step: Optional[float],
    horizon: float,
    out: Optional[str],
):
    """Check each regime against NIMFA on its degree-class digraph.

    \b
    Example:
      $ sisguard nimfa-check --scenario table1-cp10 -d 1 -d 3 -d 5
    """
    with reported_errors():
        scenario = load_scenario(config_path, scenario_name).with_overrides(step=step)
        report = _make_runner(out).nimfa_check(scenario, d_stars=d_stars or None, horizon=horizon)

        click.echo(f"{'d*':>3} {'R':>10} {'rho':>10} {'v1.v2':>10} {'deviation':>10}")
        click.echo("-" * 47)
        for entry in report:
            click.echo(
                f"{entry['d_star']:>3} {entry['R']:>10.6f} {entry['spectral_radius']:>10.6f} "
                f"{entry['rank_one_radius']:>10.6f} {entry['deviation']:>10.2e}"
            )


nimfa_check.aliases = ["nimfa"]


if __name__ == "__main__":
    cli()
