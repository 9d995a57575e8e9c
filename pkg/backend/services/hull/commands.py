"""
Convex Hull Diagnostic Commands
"""

import logging
import os

import click

from shared.middleware.errors import handle_command_errors
from shared.models import HullQuery, HullExperimentConfig
from shared.models.schemas import HullResultSchema
from shared.utils.cli import ensure_out_dir, panel_options, require, write_json
from services.panel.service import build_matching, load_panel, selection_for
from .service import hull_sample_experiment, in_convex_hull, write_experiment_csv

logger = logging.getLogger(__name__)


def _parse_periods(value: str):
    try:
        return [int(p) for p in value.split(",") if p.strip()]
    except ValueError:
        raise ValueError(f"--periods must be comma-separated counts, got {value!r}") from None


@click.command("hull")
@panel_options
@click.option("--experiment", is_flag=True, default=False, help="Run the minimal-donor-count experiment")
@click.option("--n-samples", "n_samples", type=int, default=100, show_default=True)
@click.option("--max-controls", "max_controls", type=int, default=10000, show_default=True)
@click.option("--periods", type=str, default="1,2,3,4,5", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--r", "degree", type=int, default=1, show_default=True)
@click.option("--out", type=str, default=".", show_default=True, help="Output directory")
@click.pass_obj
@handle_command_errors
def hull_command(
    settings,
    data,
    treated,
    t0,
    predictors,
    match,
    standardize,
    experiment,
    n_samples,
    max_controls,
    periods,
    seed,
    degree,
    out,
):
    """
    Check whether the treated unit lies in the donors' convex hull
    """
    out = ensure_out_dir(out)

    if experiment:
        config = HullExperimentConfig(
            n_samples=n_samples,
            max_controls=max_controls,
            periods=_parse_periods(periods),
            seed=seed,
            r=degree,
            tol=settings.hull_tol,
        )
        rows = hull_sample_experiment(config, n_jobs=settings.n_jobs)
        path = os.path.join(out, "hull_experiment.csv")
        write_experiment_csv(rows, path)
        medians = " ".join(f"{row.t0}:{row.median_min_controls:g}" for row in rows)
        click.echo(f"hull experiment: samples={n_samples} medians={medians} out={path}")
        return

    require(data=data, treated=treated, t0=t0)
    panel = load_panel(data, treated, t0, predictors)
    m = build_matching(panel, selection_for(panel, match), standardize)
    result = in_convex_hull(HullQuery(z1=m.z1, z0=m.z0, tol=settings.hull_tol))

    payload = result.to_dict()
    payload["treated"] = panel.treated_id
    if result.weights is not None:
        payload["weights"] = dict(zip(panel.donor_ids, payload["weights"]))
    errors = HullResultSchema().validate(payload)
    if errors:
        raise ValueError(f"hull result does not match its schema: {errors}")

    path = os.path.join(out, "hull.json")
    write_json(path, payload)
    click.echo(f"{result.verdict.value} objective={result.objective:.3g} out={path}")
