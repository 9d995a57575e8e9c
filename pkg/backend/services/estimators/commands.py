"""
Estimation Commands
"""

import logging
import os

import click
import numpy as np
import pandas as pd

from shared.middleware.errors import handle_command_errors
from shared.models import Method, CvScheme, EffectEstimate
from shared.models.schemas import EstimateResultSchema
from shared.utils.cli import (
    ensure_out_dir,
    method_options,
    panel_options,
    parse_star,
    require,
    write_csv,
    write_json,
)
from services.panel.service import build_matching, load_panel, resolve_period, selection_for
from services.tuning.service import resolve_tuning
from services.inference.service import confidence_intervals, estimate_variance
from .service import (
    backdate,
    estimate_effect,
    fit_weights,
    leave_one_out,
    matching_discrepancies,
    realize_tuning,
    trim_window,
)

logger = logging.getLogger(__name__)

PLOT_COLUMNS = ["period", "treated", "synthetic", "gap", "ci_lo", "ci_hi"]
ROBUST_COLUMNS = ["period", "treated", "synthetic", "gap"]
LOO_COLUMNS = ["excluded", "period", "treated", "synthetic", "gap"]


def plot_frame(effect: EffectEstimate) -> pd.DataFrame:
    """Plot-ready series for one estimate"""
    n = len(effect.gap)
    empty = np.full(n, np.nan)
    return pd.DataFrame(
        {
            "period": effect.time_labels,
            "treated": effect.treated,
            "synthetic": effect.synthetic,
            "gap": effect.gap,
            "ci_lo": empty if effect.ci_lower is None else effect.ci_lower,
            "ci_hi": empty if effect.ci_upper is None else effect.ci_upper,
        },
        columns=PLOT_COLUMNS,
    )


@click.command("estimate")
@panel_options
@method_options
@click.option("--level", type=float, default=0.95, show_default=True, help="Confidence level")
@click.option("--out", type=str, default=".", show_default=True, help="Output directory")
@click.pass_obj
@handle_command_errors
def estimate_command(
    settings, data, treated, t0, predictors, match, standardize, method, a_star, b_star, cv, level, out
):
    """
    Fit synthetic control weights and write the result JSON and plot CSV
    """
    require(data=data, treated=treated, t0=t0)
    panel = load_panel(data, treated, t0, predictors)
    selection = selection_for(panel, match)
    method = Method.parse(method)
    solver = dict(tol=settings.solver_tol, max_iter=settings.solver_max_iter)

    tuning, searched = resolve_tuning(
        panel,
        method,
        parse_star(a_star),
        parse_star(b_star),
        CvScheme.parse(cv),
        settings.grid_step,
        selection,
        standardize,
        settings.n_jobs,
        **solver,
    )
    m = build_matching(panel, selection, standardize)
    w = fit_weights(panel, m, method, tuning, **solver)
    effect = estimate_effect(panel, w)
    if panel.n_donors >= 2:
        variance = estimate_variance(
            panel, method, tuning, selection, standardize, settings.n_jobs, **solver
        )
        effect = confidence_intervals(effect, variance, level)

    payload = {
        "treated": panel.treated_id,
        "method": method.value,
        "weights": w.as_mapping(),
        "tuning": {**w.tuning.to_dict(), "selected": searched},
        "pre_rmspe": w.pre_rmspe,
        "effect": effect.to_dict(),
        "discrepancies": matching_discrepancies(m, w),
    }
    errors = EstimateResultSchema().validate(payload)
    if errors:
        raise ValueError(f"estimate result does not match its schema: {errors}")

    out = ensure_out_dir(out)
    write_json(os.path.join(out, "estimate.json"), payload)
    write_csv(os.path.join(out, "estimate_plot.csv"), plot_frame(effect))

    click.echo(
        f"estimate: treated={panel.treated_id} method={method.value} "
        f"a*={w.tuning.a_star:g} b*={w.tuning.b_star:g} pre_rmspe={w.pre_rmspe:.6g} "
        f"mean_post_gap={float(np.mean(effect.post_gap)):.6g} out={out}"
    )


@click.command("robust")
@panel_options
@method_options
@click.option(
    "--mode", type=click.Choice(["backdate", "loo", "window"]), required=True, help="Robustness check"
)
@click.option("--new-t0", "new_t0", type=str, default=None, help="Backdated treatment (label or count)")
@click.option(
    "--first-period", "first_period", type=str, default=None, help="First kept period (label or index)"
)
@click.option("--out", type=str, default=".", show_default=True, help="Output directory")
@click.pass_obj
@handle_command_errors
def robust_command(
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
    mode,
    new_t0,
    first_period,
    out,
):
    """
    Backdating, leave-one-out and pretreatment-window checks with fixed tuning
    """
    require(data=data, treated=treated, t0=t0)
    panel = load_panel(data, treated, t0, predictors)
    selection = selection_for(panel, match)
    method = Method.parse(method)
    solver = dict(tol=settings.solver_tol, max_iter=settings.solver_max_iter)

    tuning, _ = resolve_tuning(
        panel,
        method,
        parse_star(a_star),
        parse_star(b_star),
        CvScheme.parse(cv),
        settings.grid_step,
        selection,
        standardize,
        settings.n_jobs,
        **solver,
    )
    out = ensure_out_dir(out)
    path = os.path.join(out, f"robust_{mode}.csv")

    if mode == "loo":
        estimates = leave_one_out(
            panel, method, tuning, selection, standardize, settings.n_jobs, **solver
        )
        frames = []
        for donor, effect in zip(panel.donor_ids, estimates):
            frame = plot_frame(effect)[ROBUST_COLUMNS]
            frame.insert(0, "excluded", donor)
            frames.append(frame)
        write_csv(path, pd.concat(frames, ignore_index=True)[LOO_COLUMNS])
        click.echo(f"robust: mode=loo series={len(estimates)} out={path}")
        return

    if mode == "backdate":
        require(new_t0=new_t0)
        shifted = backdate(panel, resolve_period(panel.time_labels, new_t0))
    else:
        require(first_period=first_period)
        shifted = trim_window(panel, resolve_period(panel.time_labels, first_period))

    # same normalized pair, realized on the shifted matching window
    m = build_matching(shifted, selection, standardize)
    realized = realize_tuning(
        m, method, tuning.a_star, tuning.b_star, tuning.scheme, tuning.grid_step, tuning.converged
    )
    w = fit_weights(shifted, m, method, realized, **solver)
    effect = estimate_effect(shifted, w)
    write_csv(path, plot_frame(effect)[ROBUST_COLUMNS])

    click.echo(
        f"robust: mode={mode} t0={shifted.t0} periods={shifted.n_periods} "
        f"pre_rmspe={w.pre_rmspe:.6g} out={path}"
    )
