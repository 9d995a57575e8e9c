"""
Permutation Inference and Confidence Intervals
"""

import logging
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from shared.middleware.logging import StructuredLogger
from shared.models import (
    PanelData,
    ColumnSelection,
    Method,
    CvScheme,
    TuningParams,
    EffectEstimate,
    TuningPolicy,
    UnitRatio,
    PermutationResult,
    VarianceEstimate,
    SynthControlError,
    EstimationInputError,
    Z_95,
)
from services.solvers.service import DEFAULT_MAX_ITER, DEFAULT_TOL
from services.estimators.service import estimate_effect, fit_normalized
from services.tuning.service import donor_prediction_errors, select_tuning

logger = logging.getLogger(__name__)
events = StructuredLogger(__name__)


def rmspe(errors: Sequence[float]) -> float:
    """Root mean squared prediction error"""
    values = np.asarray(errors, dtype=float).ravel()
    if values.size == 0:
        raise EstimationInputError("RMSPE of an empty window")
    return float(np.sqrt(np.mean(values ** 2)))


def _placebo_ratio(
    panel: PanelData,
    unit: int,
    method: Method,
    policy: TuningPolicy,
    a_star: float,
    b_star: float,
    scheme: CvScheme,
    grid_step: float,
    selection: Optional[ColumnSelection],
    standardize: bool,
    tol: float,
    max_iter: int,
) -> UnitRatio:
    pseudo = panel.with_treated(unit)
    if policy is TuningPolicy.RESELECT:
        tuning, _ = select_tuning(
            pseudo, method, scheme, grid_step, selection, standardize, tol=tol, max_iter=max_iter
        )
        a_star, b_star = tuning.a_star, tuning.b_star

    w = fit_normalized(pseudo, method, a_star, b_star, selection, standardize, tol, max_iter)
    effect = estimate_effect(pseudo, w)
    pre = rmspe(effect.pre_gap)
    post = rmspe(effect.post_gap)
    ratio = post / pre if pre > 0 else float("inf")
    return UnitRatio(unit_id=pseudo.treated_id, pre_rmspe=pre, post_rmspe=post, ratio=ratio)


def _safe_placebo_ratio(panel: PanelData, unit: int, *args) -> UnitRatio:
    try:
        return _placebo_ratio(panel, unit, *args)
    except SynthControlError as e:
        nan = float("nan")
        return UnitRatio(
            unit_id=panel.unit_ids[unit],
            pre_rmspe=nan,
            post_rmspe=nan,
            ratio=nan,
            failed=True,
            error=str(e),
        )


def permutation_test(
    panel: PanelData,
    method: Method,
    tuning_policy: TuningPolicy = TuningPolicy.REUSE,
    tuning: Optional[TuningParams] = None,
    scheme: CvScheme = CvScheme.CONTROL_UNITS,
    grid_step: float = 0.1,
    selection: Optional[ColumnSelection] = None,
    standardize: bool = False,
    n_jobs: int = 1,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> PermutationResult:
    """
    Reassign treatment to every unit in turn (all other units form the pool)
    and rank the treated unit's post/pre RMSPE ratio.

    Under the reuse policy every placebo fit uses the treated unit's (a*, b*),
    selected here when not given. A failing placebo fit is excluded from the
    denominator and reported as a warning; a failing treated fit is raised.
    """
    method = Method.parse(method)
    tuning_policy = TuningPolicy(tuning_policy)
    scheme = CvScheme.parse(scheme)

    if tuning is None and tuning_policy is TuningPolicy.REUSE:
        tuning, _ = select_tuning(
            panel, method, scheme, grid_step, selection, standardize, n_jobs, tol, max_iter
        )
    a_star = tuning.a_star if tuning else 0.0
    b_star = tuning.b_star if tuning else 0.0

    args = (
        method,
        tuning_policy,
        a_star,
        b_star,
        scheme,
        grid_step,
        selection,
        standardize,
        tol,
        max_iter,
    )
    treated = _placebo_ratio(panel, panel.treated_index, *args)

    placebos = Parallel(n_jobs=n_jobs)(
        delayed(_safe_placebo_ratio)(panel, u, *args) for u in panel.donor_indices
    )
    by_unit = {panel.treated_index: treated}
    by_unit.update(zip(panel.donor_indices, placebos))
    records = [by_unit[u] for u in range(panel.n_units)]

    warnings = []
    for record in records:
        if record.failed:
            message = f"placebo fit for unit {record.unit_id} failed: {record.error}"
            logger.warning(message)
            warnings.append(message)

    valid = [r for r in records if not r.failed]
    rank = sum(1 for r in valid if r.ratio >= treated.ratio)
    result = PermutationResult(
        records=records,
        treated_id=panel.treated_id,
        treated_rank=rank,
        p_value=rank / len(valid),
        warnings=warnings,
    )
    events.log_event(
        logging.INFO,
        "permutation_test",
        f"{method.value} placebo ranking done",
        treated=panel.treated_id,
        rank=rank,
        p_value=result.p_value,
        n_valid=len(valid),
    )
    return result


def estimate_variance(
    panel: PanelData,
    method: Method,
    tuning: TuningParams,
    selection: Optional[ColumnSelection] = None,
    standardize: bool = False,
    n_jobs: int = 1,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> VarianceEstimate:
    """
    Per-period variance: donor mean of squared donor-on-donor prediction errors over all T periods
    """
    errors = donor_prediction_errors(
        panel,
        method,
        tuning.a_star,
        tuning.b_star,
        selection,
        standardize,
        n_jobs,
        tol,
        max_iter,
    )
    squared = errors ** 2
    return VarianceEstimate(variance=squared.mean(axis=0), squared_errors=squared)


def confidence_intervals(
    e: EffectEstimate, v: VarianceEstimate, level: float = 0.95
) -> EffectEstimate:
    """gap_t -/+ z_{(1+level)/2} sqrt(variance_t)"""
    if not 0.0 < level < 1.0:
        raise EstimationInputError(f"confidence level must lie in (0, 1), got {level}")
    variance = np.asarray(v.variance, dtype=float)
    if variance.shape != e.gap.shape:
        raise EstimationInputError(
            f"variance has {variance.shape[0]} periods, estimate has {e.gap.shape[0]}"
        )

    z = Z_95 if level == 0.95 else float(stats.norm.ppf((1.0 + level) / 2.0))
    half_width = z * np.sqrt(variance)
    return replace(
        e,
        variance=variance,
        ci_lower=e.gap - half_width,
        ci_upper=e.gap + half_width,
        level=level,
    )
