"""
Synthetic Control Weight Estimators
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import replace
from typing import Dict, List, Optional, Union

import numpy as np
from joblib import Parallel, delayed

from shared.models import (
    PanelData,
    MatchingMatrix,
    ColumnSelection,
    Method,
    CvScheme,
    SolverProblem,
    SolverResult,
    TuningParams,
    WeightVector,
    EffectEstimate,
    PanelValidationError,
    EstimationInputError,
)
from services.panel.service import build_matching
from services.solvers.service import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    eigen_scale,
    pairwise_distances,
    solve,
)

logger = logging.getLogger(__name__)


class BaseWeightEstimator(ABC):
    """Base class for method-specific weight programs"""

    def __init__(self, method: Method):
        self.method = method

    @abstractmethod
    def l1_multipliers(self, m: MatchingMatrix) -> np.ndarray:
        """Per-donor multipliers d_j of the L1 penalty"""
        pass

    def build_problem(self, m: MatchingMatrix, tuning: TuningParams) -> SolverProblem:
        tuning = tuning.for_method(self.method)
        return SolverProblem(
            z0=m.z0,
            z1=m.z1,
            a=tuning.a,
            b=tuning.b,
            d=self.l1_multipliers(m),
            nonneg=self.method.nonneg,
        )

    def fit(
        self,
        m: MatchingMatrix,
        tuning: TuningParams,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
    ) -> SolverResult:
        return solve(self.build_problem(m, tuning), tol=tol, max_iter=max_iter)


class OriginalEstimator(BaseWeightEstimator):
    """Simplex weights without penalties"""

    def __init__(self):
        super().__init__(Method.OSC)

    def l1_multipliers(self, m: MatchingMatrix) -> np.ndarray:
        return np.ones(m.n_donors)


class ElasticNetEstimator(BaseWeightEstimator):
    """Unweighted L1 plus L2 on affine weights"""

    def __init__(self):
        super().__init__(Method.ESC)

    def l1_multipliers(self, m: MatchingMatrix) -> np.ndarray:
        return np.ones(m.n_donors)


class PenalizedEstimator(BaseWeightEstimator):
    """L1 weighted by pairwise discrepancies, no L2"""

    def __init__(self, method: Method = Method.PSC):
        super().__init__(method)

    def l1_multipliers(self, m: MatchingMatrix) -> np.ndarray:
        return pairwise_distances(m)


class NonlinearEstimator(PenalizedEstimator):
    """Discrepancy-weighted L1 plus L2"""

    def __init__(self):
        super().__init__(Method.NSC)


class WeightEstimatorFactory:
    """Factory for method-specific estimators"""

    _estimators = {
        Method.OSC: OriginalEstimator,
        Method.ESC: ElasticNetEstimator,
        Method.PSC: PenalizedEstimator,
        Method.NSC: NonlinearEstimator,
    }

    @classmethod
    def get_estimator(cls, method: Union[Method, str]) -> BaseWeightEstimator:
        method = Method.parse(method)
        return cls._estimators[method]()


def realize_tuning(
    m: MatchingMatrix,
    method: Method,
    a_star: float = 0.0,
    b_star: float = 0.0,
    scheme: CvScheme = CvScheme.CONTROL_UNITS,
    grid_step: float = 0.1,
    converged: bool = True,
) -> TuningParams:
    """
    Realize a normalized pair on this matching matrix, dropping what the method does not use
    """
    a_star = a_star if method.tunes_a else 0.0
    b_star = b_star if method.tunes_b else 0.0
    if a_star == 0 and b_star == 0:
        tuning = TuningParams()
    else:
        tuning = eigen_scale(m, a_star, b_star)
    return replace(tuning, scheme=scheme, grid_step=grid_step, converged=converged)


def fit_weights(
    panel: PanelData,
    m: MatchingMatrix,
    method: Method,
    tuning: TuningParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> WeightVector:
    """
    Fit donor weights for one method with already-realized penalties
    """
    method = Method.parse(method)
    if m.n_donors != panel.n_donors:
        raise EstimationInputError(
            f"matching matrix has {m.n_donors} donors, panel has {panel.n_donors}"
        )

    estimator = WeightEstimatorFactory.get_estimator(method)
    result = estimator.fit(m, tuning, tol=tol, max_iter=max_iter)

    resid = m.z1 - m.z0.T @ result.w
    return WeightVector(
        w=result.w,
        method=method,
        tuning=tuning.for_method(method),
        pre_rmspe=float(np.sqrt(np.mean(resid ** 2))),
        donor_ids=panel.donor_ids,
        solver=result,
    )


def fit_normalized(
    panel: PanelData,
    method: Method,
    a_star: float = 0.0,
    b_star: float = 0.0,
    selection: Optional[ColumnSelection] = None,
    standardize: bool = False,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> WeightVector:
    """Build the matching matrix, realize (a*, b*) on it and fit"""
    method = Method.parse(method)
    m = build_matching(panel, selection, standardize)
    tuning = realize_tuning(m, method, a_star, b_star)
    return fit_weights(panel, m, method, tuning, tol=tol, max_iter=max_iter)


def synthetic_outcomes(panel: PanelData, w: WeightVector) -> np.ndarray:
    """Weighted donor outcome per period over the whole window"""
    weights = np.asarray(w.w, dtype=float)
    if weights.shape[0] != panel.n_donors:
        raise EstimationInputError(
            f"{weights.shape[0]} weights for {panel.n_donors} donors"
        )
    return panel.donor_outcomes.T @ weights


def estimate_effect(panel: PanelData, w: WeightVector) -> EffectEstimate:
    synthetic = synthetic_outcomes(panel, w)
    treated = np.array(panel.treated_outcomes)
    return EffectEstimate(
        gap=treated - synthetic,
        synthetic=synthetic,
        treated=treated,
        t0=panel.t0,
        time_labels=list(panel.time_labels),
    )


def backdate(panel: PanelData, new_t0: int) -> PanelData:
    """Move the treatment marker earlier; matching then uses only periods before new_t0"""
    if not 1 <= new_t0 < panel.t0:
        raise PanelValidationError(
            f"backdated t0 must satisfy 1 <= new_t0 < t0={panel.t0}, got {new_t0}"
        )
    return panel.with_t0(new_t0)


def trim_window(panel: PanelData, first_period: int) -> PanelData:
    """Drop the periods before first_period, shortening the pretreatment window"""
    if not 0 <= first_period < panel.t0:
        raise PanelValidationError(
            f"first period must satisfy 0 <= first_period < t0={panel.t0}, got {first_period}"
        )
    return PanelData(
        unit_ids=list(panel.unit_ids),
        time_labels=panel.time_labels[first_period:],
        outcomes=panel.outcomes[:, first_period:],
        treated_index=panel.treated_index,
        t0=panel.t0 - first_period,
        predictors=panel.predictors,
        predictor_names=list(panel.predictor_names),
    )


def _drop_donor_effect(
    panel: PanelData,
    donor: int,
    method: Method,
    tuning: TuningParams,
    selection: Optional[ColumnSelection],
    standardize: bool,
    tol: float,
    max_iter: int,
) -> EffectEstimate:
    reduced = panel.drop_units([panel.donor_indices[donor]])
    m = build_matching(reduced, selection, standardize)
    w = fit_weights(reduced, m, method, tuning, tol=tol, max_iter=max_iter)
    return estimate_effect(reduced, w)


def leave_one_out(
    panel: PanelData,
    method: Method,
    tuning: TuningParams,
    selection: Optional[ColumnSelection] = None,
    standardize: bool = False,
    n_jobs: int = 1,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> List[EffectEstimate]:
    """
    One estimate per excluded donor, in donor order, with the realized penalties held fixed
    """
    method = Method.parse(method)
    if panel.n_donors < 2:
        raise EstimationInputError("leave-one-out needs at least 2 donors")

    estimates = Parallel(n_jobs=n_jobs)(
        delayed(_drop_donor_effect)(
            panel, j, method, tuning, selection, standardize, tol, max_iter
        )
        for j in range(panel.n_donors)
    )
    logger.info(f"Leave-one-out finished: {len(estimates)} fits for {method.value}")
    return list(estimates)


def matching_discrepancies(m: MatchingMatrix, w: WeightVector) -> Dict[str, float]:
    """
    Aggregate discrepancy ||z1 - z0'w||, weighted pairwise discrepancy
    sum_j |w_j| ||z1 - z_j|| and the largest absolute weight
    """
    weights = np.asarray(w.w, dtype=float)
    return {
        "aggregate": float(np.linalg.norm(m.z1 - m.z0.T @ weights)),
        "pairwise": float(np.sum(np.abs(weights) * pairwise_distances(m))),
        "max_abs_weight": float(np.max(np.abs(weights))),
    }
