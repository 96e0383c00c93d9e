"""Command-line interface.

Subcommands: ``run`` (execute a configured experiment), ``theory`` (print the
stability bound and predicted steady deviation), ``gen-graph`` (write a random
sensor graph as CSV), ``ingest`` (validate station data files).
"""

from __future__ import annotations

import sys

import click
import numpy as np

from .errors import GspFilterError
from .graph import random_sensor_graph, save_graph_csv
from .harness import (
    build_setup,
    ingest_stations,
    parse_config,
    run_experiment,
    theory_report,
)


@click.group()
def main():
    """Adaptive graph-signal estimation under impulsive noise."""


def _load_config(config_path, overrides):
    config = parse_config(config_path)
    for attr, value in overrides.items():
        if value is not None:
            setattr(config, attr, value)
    config.__post_init__()  # re-validate the combination after overrides
    return config


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="flat key = value experiment description")
@click.option("--output", "output_dir", default=None, help="override output.dir")
@click.option("--algorithm", default=None, help="override filter.algorithm")
@click.option("--mu", default=None, type=str, help="override filter.mu (comma list for features)")
@click.option("--alpha", default=None, type=float, help="override noise.alpha")
@click.option("--gamma", default=None, type=float, help="override noise.gamma")
@click.option("--sampling", default=None,
              type=click.Choice(["greedy-lambda-min", "greedy-logdet"]),
              help="override sampling.strategy")
@click.option("--freq-select", default=None, type=click.Choice(["energy", "lowpass"]),
              help="override frequency.policy")
@click.option("--figure/--no-figure", default=True, help="render a PNG next to the CSV")
def run_cmd(config_path, output_dir, algorithm, mu, alpha, gamma, sampling, freq_select, figure):
    """Run a Monte Carlo experiment and write metrics.csv + summary.txt."""
    overrides = {
        "output_dir": output_dir,
        "filter_algorithm": algorithm,
        "filter_mu": tuple(float(v) for v in mu.split(",")) if mu else None,
        "noise_alpha": alpha,
        "noise_gamma": gamma,
        "sampling_strategy": sampling,
        "frequency_policy": freq_select,
    }
    try:
        config = _load_config(config_path, overrides)
        result = run_experiment(config, render_figure=figure)
    except (GspFilterError, ValueError) as exc:
        raise click.ClickException(str(exc))
    series = result.series
    click.echo(f"runs = {series.runs}  diverged = {series.diverged_runs}")
    click.echo(f"final MSD = {series.msd[-1]:.6g} ({series.msd_db[-1]:.2f} dB)")
    if series.nmsd is not None:
        click.echo(f"final NMSD = {series.nmsd[-1]:.6g} ({series.nmsd_db[-1]:.2f} dB)")
    click.echo(f"wrote {result.csv_path}")
    click.echo(f"wrote {result.summary_path}")
    if result.figure_path is not None:
        click.echo(f"wrote {result.figure_path}")


@main.command("theory")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def theory_cmd(config_path):
    """Print the stability bound and theoretical steady deviation."""
    try:
        config = parse_config(config_path)
        setup = build_setup(config)
        report = theory_report(setup)
    except (GspFilterError, ValueError) as exc:
        raise click.ClickException(str(exc))
    if not report:
        raise click.ClickException(
            "no steady-state prediction for this config "
            "(needs a normalized filter, one feature, a steady signal, and noise.gamma > 0)"
        )
    click.echo(f"mu_max = {report['mu_max']:.6g}")
    if "theoretical_msd" in report:
        click.echo(
            f"theoretical_msd = {report['theoretical_msd']:.6g} "
            f"({report['theoretical_msd_db']:.2f} dB)"
        )
    else:
        click.echo("theoretical_msd = (not finite at this p/alpha/mu)")


@main.command("gen-graph")
@click.option("--n", required=True, type=int, help="node count")
@click.option("--k", required=True, type=int, help="neighbors per node")
@click.option("--seed", required=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(), help="edge-list CSV path")
@click.option("--coords-out", default=None, type=click.Path(), help="optional node,x,y CSV path")
def gen_graph_cmd(n, k, seed, out_path, coords_out):
    """Generate a random sensor graph and write it as i,j,weight CSV."""
    try:
        graph = random_sensor_graph(n, k, seed)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    save_graph_csv(graph, out_path, coords_out)
    click.echo(f"wrote {out_path} ({graph.n} nodes, {int(np.count_nonzero(graph.adjacency) / 2)} edges)")
    if coords_out:
        click.echo(f"wrote {coords_out}")


@main.command("ingest")
@click.option("--coords", "coords_path", required=True, type=click.Path(exists=True),
              help="station_id,lat,lon CSV")
@click.option("--feature", "feature_paths", required=True, multiple=True,
              type=click.Path(exists=True), help="wide CSV, one per feature (repeatable)")
def ingest_cmd(coords_path, feature_paths):
    """Validate station data files and report their shape."""
    try:
        coords, tensor, ids = ingest_stations(coords_path, feature_paths)
    except GspFilterError as exc:
        raise click.ClickException(str(exc))
    n, steps, d = tensor.shape
    click.echo(f"{n} stations, {steps} time steps, {d} feature(s)")
    click.echo(f"first station: {ids[0]}  planar extent: "
               f"x {coords[:, 0].min():.1f}..{coords[:, 0].max():.1f} km, "
               f"y {coords[:, 1].min():.1f}..{coords[:, 1].max():.1f} km")


if __name__ == "__main__":
    sys.exit(main())
