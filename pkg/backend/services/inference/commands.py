"""
Placebo Inference Commands
"""

import logging
import os

import click
import pandas as pd

from shared.middleware.errors import handle_command_errors
from shared.models import Method, CvScheme, TuningPolicy
from shared.models.schemas import PlaceboResultSchema
from shared.utils.cli import (
    ensure_out_dir,
    method_options,
    panel_options,
    parse_star,
    require,
    write_csv,
    write_json,
)
from services.panel.service import load_panel, selection_for
from services.tuning.service import resolve_tuning
from .service import permutation_test

logger = logging.getLogger(__name__)

PLACEBO_COLUMNS = ["unit", "pre_rmspe", "post_rmspe", "ratio"]


@click.command("placebo")
@panel_options
@method_options
@click.option(
    "--tuning-policy",
    "tuning_policy",
    type=click.Choice(["reuse", "reselect"]),
    default="reuse",
    show_default=True,
)
@click.option("--n-jobs", "n_jobs", type=int, default=None, help="Parallel placebo fits")
@click.option("--out", type=str, default=".", show_default=True, help="Output directory")
@click.pass_obj
@handle_command_errors
def placebo_command(
    settings,
    data,
    treated,
    t0,
    predictors,
    match,
    standardize,
    method,
    a_star,
    b_star,
    cv,
    tuning_policy,
    n_jobs,
    out,
):
    """
    Permutation test over post/pre RMSPE ratios
    """
    require(data=data, treated=treated, t0=t0)
    panel = load_panel(data, treated, t0, predictors)
    selection = selection_for(panel, match)
    method = Method.parse(method)
    scheme = CvScheme.parse(cv)
    policy = TuningPolicy(tuning_policy)
    n_jobs = n_jobs or settings.n_jobs
    solver = dict(tol=settings.solver_tol, max_iter=settings.solver_max_iter)

    tuning = None
    if policy is TuningPolicy.REUSE:
        tuning, _ = resolve_tuning(
            panel,
            method,
            parse_star(a_star),
            parse_star(b_star),
            scheme,
            settings.grid_step,
            selection,
            standardize,
            n_jobs,
            **solver,
        )

    result = permutation_test(
        panel,
        method,
        policy,
        tuning,
        scheme,
        settings.grid_step,
        selection,
        standardize,
        n_jobs,
        **solver,
    )

    payload = {**result.to_dict(), "method": method.value, "tuning_policy": policy.value}
    errors = PlaceboResultSchema().validate(payload)
    if errors:
        raise ValueError(f"placebo result does not match its schema: {errors}")

    frame = pd.DataFrame(
        [
            {
                "unit": r.unit_id,
                "pre_rmspe": r.pre_rmspe,
                "post_rmspe": r.post_rmspe,
                "ratio": r.ratio,
            }
            for r in result.records
        ],
        columns=PLACEBO_COLUMNS,
    )

    out = ensure_out_dir(out)
    write_csv(os.path.join(out, "placebo.csv"), frame)
    write_json(os.path.join(out, "placebo.json"), payload)

    click.echo(
        f"placebo: treated={result.treated_id} rank={result.treated_rank}/{result.n_valid} "
        f"p={result.p_value:.6g} out={out}"
    )
