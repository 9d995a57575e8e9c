"""
Monte Carlo Study Commands
"""

import logging
import os
from typing import List, Tuple

import click

from shared.middleware.errors import handle_command_errors
from shared.models import (
    Method,
    BiasMode,
    StudyScale,
    SimulationConfig,
    STUDY_SETTINGS,
)
from shared.utils.cli import METHOD_CHOICES, ensure_out_dir
from .service import run_study

logger = logging.getLogger(__name__)


def parse_settings(values) -> List[Tuple[int, int, int]]:
    """
    "paper" (alias "all") or J,T0,r triples; several triples may be separated
    by ';' or given repeatedly
    """
    triples = []
    for value in values:
        for chunk in str(value).split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            if chunk.lower() in ("paper", "all"):
                triples.extend(STUDY_SETTINGS)
                continue
            parts = chunk.split(",")
            try:
                J, t0, r = (int(p) for p in parts)
            except ValueError:
                raise ValueError(f"invalid setting {chunk!r}; expected J,T0,r") from None
            triples.append((J, t0, r))
    if not triples:
        raise ValueError("no settings given")
    return triples


def parse_methods(value: str) -> List[Method]:
    return [Method.parse(m.strip()) for m in value.split(",") if m.strip()]


@click.command("simulate")
@click.option("--settings", "settings", multiple=True, default=["paper"], show_default=True)
@click.option(
    "--scale",
    type=click.Choice(["desk", "paper", "full"]),
    default="desk",
    show_default=True,
    help="Replication counts; full is an alias of paper",
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--methods", type=str, default=",".join(METHOD_CHOICES), show_default=True)
@click.option("--n-param-sets", "n_param_sets", type=int, default=None, help="Override the scale")
@click.option("--n-shock-draws", "n_shock_draws", type=int, default=None, help="Override the scale")
@click.option(
    "--bias-mode",
    "bias_mode",
    type=click.Choice(["abs_mean", "mean_abs"]),
    default="abs_mean",
    show_default=True,
)
@click.option("--coverage-methods", "coverage_methods", type=str, default="nsc", show_default=True)
@click.option("--n-jobs", "n_jobs", type=int, default=None, help="Parallel parameter sets")
@click.option("--out", type=str, default=".", show_default=True, help="Output directory")
@click.pass_context
@handle_command_errors
def simulate_command(
    ctx,
    settings,
    scale,
    seed,
    methods,
    n_param_sets,
    n_shock_draws,
    bias_mode,
    coverage_methods,
    n_jobs,
    out,
):
    """
    Monte Carlo study table: J,T0,r,method,bias,sd,coverage
    """
    runtime = ctx.obj
    default_sets, default_draws = StudyScale.parse(scale).counts
    configs = [
        SimulationConfig(
            J=J,
            t0=t0,
            r=r,
            n_param_sets=n_param_sets or default_sets,
            n_shock_draws=n_shock_draws or default_draws,
            seed=seed,
            tuning_grid_step=runtime.grid_step,
        )
        for J, t0, r in parse_settings(settings)
    ]

    result = run_study(
        configs,
        parse_methods(methods),
        bias_mode=BiasMode(bias_mode),
        coverage_methods=parse_methods(coverage_methods),
        n_jobs=n_jobs or runtime.n_jobs,
        tol=runtime.solver_tol,
        max_iter=runtime.solver_max_iter,
    )

    out = ensure_out_dir(out)
    path = os.path.join(out, "simulation.csv")
    result.to_csv(path)
    click.echo(
        f"simulate: settings={len(configs)} rows={len(result.rows)} "
        f"failures={len(result.failures)} out={path}"
    )
