"""
Cross-Validated Tuning Selection
"""

import logging
from typing import Callable, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from shared.models import (
    PanelData,
    ColumnSelection,
    Method,
    CvScheme,
    TuningParams,
    CvSurface,
    ConfigurationError,
    EstimationInputError,
    SolverConvergenceError,
)
from services.panel.service import build_matching
from services.solvers.service import DEFAULT_MAX_ITER, DEFAULT_TOL
from services.estimators.service import fit_normalized, realize_tuning, synthetic_outcomes

logger = logging.getLogger(__name__)

MAX_ROUNDS = 20


def _predict_donor(
    panel: PanelData,
    donor: int,
    method: Method,
    a_star: float,
    b_star: float,
    selection: Optional[ColumnSelection],
    standardize: bool,
    tol: float,
    max_iter: int,
) -> np.ndarray:
    pseudo = panel.donor_panel(donor)
    w = fit_normalized(pseudo, method, a_star, b_star, selection, standardize, tol, max_iter)
    return pseudo.treated_outcomes - synthetic_outcomes(pseudo, w)


def donor_prediction_errors(
    panel: PanelData,
    method: Method,
    a_star: float,
    b_star: float,
    selection: Optional[ColumnSelection] = None,
    standardize: bool = False,
    n_jobs: int = 1,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """
    J x T prediction errors: each donor predicted from the other donors, treated unit excluded
    """
    method = Method.parse(method)
    if panel.n_donors < 2:
        raise EstimationInputError("donor cross-prediction needs at least 2 donors")

    rows = Parallel(n_jobs=n_jobs)(
        delayed(_predict_donor)(
            panel, j, method, a_star, b_star, selection, standardize, tol, max_iter
        )
        for j in range(panel.n_donors)
    )
    return np.vstack(rows)


def cv_control_units(
    panel: PanelData,
    method: Method,
    a_star: float,
    b_star: float,
    selection: Optional[ColumnSelection] = None,
    standardize: bool = False,
    n_jobs: int = 1,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """Mean squared posttreatment prediction error over donors"""
    errors = donor_prediction_errors(
        panel, method, a_star, b_star, selection, standardize, n_jobs, tol, max_iter
    )
    return float(np.mean(errors[:, panel.t0:] ** 2))


def cv_pretreatment(
    panel: PanelData,
    method: Method,
    a_star: float,
    b_star: float,
    selection: Optional[ColumnSelection] = None,
    standardize: bool = False,
    n_jobs: int = 1,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """
    Leave-one-period-out error of the treated unit over the pretreatment window
    """
    method = Method.parse(method)
    if panel.t0 < 2:
        raise EstimationInputError("pretreatment cross-validation needs t0 >= 2")

    selection = selection or ColumnSelection.outcomes_only()
    periods = selection.resolved_periods(panel.t0)
    if not periods:
        raise EstimationInputError("pretreatment cross-validation needs matched outcome periods")

    def fold(s: int) -> float:
        w = fit_normalized(
            panel,
            method,
            a_star,
            b_star,
            selection.without_period(s, panel.t0),
            standardize,
            tol,
            max_iter,
        )
        return float(panel.treated_outcomes[s] - synthetic_outcomes(panel, w)[s])

    errors = Parallel(n_jobs=n_jobs)(delayed(fold)(s) for s in periods)
    return float(np.mean(np.square(errors)))


def _cv_function(scheme: CvScheme) -> Callable[..., float]:
    if scheme is CvScheme.CONTROL_UNITS:
        return cv_control_units
    return cv_pretreatment


def unit_grid(grid_step: float) -> List[float]:
    """{0, step, ..., 1}; the step must divide 1 evenly"""
    n_steps = int(round(1.0 / grid_step))
    if n_steps < 1 or abs(n_steps * grid_step - 1.0) > 1e-9:
        raise ConfigurationError(f"grid step {grid_step} does not divide 1 evenly")
    return [i / n_steps for i in range(n_steps + 1)]


def select_tuning(
    panel: PanelData,
    method: Method,
    scheme: CvScheme = CvScheme.CONTROL_UNITS,
    grid_step: float = 0.1,
    selection: Optional[ColumnSelection] = None,
    standardize: bool = False,
    n_jobs: int = 1,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    max_rounds: int = MAX_ROUNDS,
    fixed_a: Optional[float] = None,
    fixed_b: Optional[float] = None,
) -> Tuple[TuningParams, CvSurface]:
    """
    Coordinate search for (a*, b*) over the unit grid.

    Starts at b* = 0, scans a* with b* fixed and then b* with a* fixed, and
    repeats until the pair stops moving. Ties go to the smaller value.
    Each grid point is evaluated at most once. A coordinate passed as
    fixed_a or fixed_b is held at that value and never scanned.

    Grid points whose cross-validation fit fails to converge are recorded
    as +inf and the search moves on. With fewer than two donors there is
    nothing to cross-validate and the pair is returned unsearched.
    """
    method = Method.parse(method)
    scheme = CvScheme.parse(scheme)
    grid = unit_grid(grid_step)
    surface = CvSurface()

    a_star = 0.0 if fixed_a is None else fixed_a
    b_star = 0.0 if fixed_b is None else fixed_b
    tunes_a = method.tunes_a and fixed_a is None
    tunes_b = method.tunes_b and fixed_b is None

    if panel.n_donors < 2 and (tunes_a or tunes_b):
        logger.info(
            f"Skipping tuning search for {method.value}: weights are forced with "
            f"{panel.n_donors} donor"
        )
        tunes_a = tunes_b = False

    if not tunes_a and not tunes_b:
        m = build_matching(panel, selection, standardize)
        tuning = realize_tuning(m, method, a_star, b_star, scheme=scheme, grid_step=grid_step)
        surface.argmin = (tuning.a_star, tuning.b_star)
        return tuning, surface

    cv = _cv_function(scheme)

    def evaluate(pair: Tuple[float, float]) -> float:
        try:
            return cv(
                panel, method, pair[0], pair[1], selection, standardize, n_jobs, tol, max_iter
            )
        except SolverConvergenceError as e:
            logger.warning(
                f"Tuning grid point a*={pair[0]}, b*={pair[1]} for {method.value} failed, "
                f"scored as inf: {e}"
            )
            return float("inf")

    def scan(pairs: List[Tuple[float, float]]) -> Tuple[float, float]:
        for pair in pairs:
            if pair not in surface.values:
                surface.values[pair] = evaluate(pair)
        best = pairs[0]
        for pair in pairs[1:]:
            if surface.values[pair] < surface.values[best]:
                best = pair
        return best

    converged = False
    for round_no in range(1, max_rounds + 1):
        previous = (a_star, b_star)
        if tunes_a:
            a_star, _ = scan([(a, b_star) for a in grid])
        if tunes_b:
            _, b_star = scan([(a_star, b) for b in grid])

        surface.trace.append(
            {
                "round": round_no,
                "a_star": a_star,
                "b_star": b_star,
                "mspe": surface.values[(a_star, b_star)],
            }
        )
        if (a_star, b_star) == previous:
            converged = True
            break

    if not converged:
        logger.warning(
            f"Tuning search for {method.value} stopped after {max_rounds} rounds at "
            f"({a_star}, {b_star})"
        )
    if np.isinf(surface.values[(a_star, b_star)]):
        logger.warning(
            f"Every tuning grid point for {method.value} failed; keeping ({a_star}, {b_star})"
        )

    surface.argmin = (a_star, b_star)
    surface.converged = converged

    m = build_matching(panel, selection, standardize)
    tuning = realize_tuning(m, method, a_star, b_star, scheme, grid_step, converged)
    logger.info(
        f"Selected tuning for {method.value}: a*={a_star}, b*={b_star} "
        f"({len(surface.values)} grid points, {scheme.value})"
    )
    return tuning, surface


def resolve_tuning(
    panel: PanelData,
    method: Method,
    a_star: Optional[float] = None,
    b_star: Optional[float] = None,
    scheme: CvScheme = CvScheme.CONTROL_UNITS,
    grid_step: float = 0.1,
    selection: Optional[ColumnSelection] = None,
    standardize: bool = False,
    n_jobs: int = 1,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Tuple[TuningParams, bool]:
    """
    Tuning from explicit values, searching when either is None.

    An explicit value is held fixed while the missing one is scanned.
    Returns the realized tuning and whether a search ran.
    """
    method = Method.parse(method)
    scheme = CvScheme.parse(scheme)
    wanted = (a_star is None and method.tunes_a) or (b_star is None and method.tunes_b)
    searched = wanted and panel.n_donors >= 2

    if searched:
        return (
            select_tuning(
                panel,
                method,
                scheme,
                grid_step,
                selection,
                standardize,
                n_jobs,
                tol,
                max_iter,
                fixed_a=a_star,
                fixed_b=b_star,
            )[0],
            True,
        )

    m = build_matching(panel, selection, standardize)
    tuning = realize_tuning(m, method, a_star or 0.0, b_star or 0.0, scheme, grid_step)
    return tuning, False
