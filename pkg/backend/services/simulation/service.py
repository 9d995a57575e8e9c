"""
Monte Carlo Study Harness

Outcomes follow an interactive fixed effects model

    Y*_it = X_i'beta_t + mu_i'lambda_t + eps_it

rescaled to [0, 1] with the sample min/max and raised to the power r. The
treated unit (row 0) receives the true effects after t0.
"""

import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from shared.middleware.logging import StructuredLogger
from shared.models import (
    PanelData,
    ColumnSelection,
    Method,
    CvScheme,
    TuningParams,
    WeightVector,
    BiasMode,
    SimulationConfig,
    LatentParameters,
    SimulatedSample,
    ReplicationRecord,
    StudyRow,
    StudyResult,
    SynthControlError,
)
from services.solvers.service import DEFAULT_MAX_ITER, DEFAULT_TOL
from services.estimators.service import estimate_effect, fit_normalized
from services.tuning.service import select_tuning
from services.inference.service import confidence_intervals, estimate_variance

logger = logging.getLogger(__name__)
events = StructuredLogger(__name__)

UPPER = 2.0 * np.sqrt(3.0)

Transform = Callable[[np.ndarray, int], Tuple[np.ndarray, float, float]]
SeedLike = Union[int, np.random.SeedSequence]


def power_transform(latent: np.ndarray, r: int) -> Tuple[np.ndarray, float, float]:
    """((Y* - min) / (max - min))^r over the whole sample"""
    y_min, y_max = float(latent.min()), float(latent.max())
    span = y_max - y_min
    if span <= 0:
        return np.zeros_like(latent), y_min, y_max
    return ((latent - y_min) / span) ** r, y_min, y_max


def draw_parameters(
    rng: np.random.Generator, n_units: int, n_periods: int, k: int = 2, f: int = 4
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Unit characteristics X, mu ~ U[0, 2 sqrt 3] and time coefficients beta, lambda ~ N(10, 1)"""
    X = rng.uniform(0.0, UPPER, size=(n_units, k))
    mu = rng.uniform(0.0, UPPER, size=(n_units, f))
    beta = rng.normal(10.0, 1.0, size=(n_periods, k))
    lam = rng.normal(10.0, 1.0, size=(n_periods, f))
    return X, mu, beta, lam


def draw_outcomes(
    rng: np.random.Generator,
    n_units: int,
    n_periods: int,
    k: int = 2,
    f: int = 4,
    r: int = 1,
    noise_scale: float = 1.0,
) -> np.ndarray:
    """Untreated outcomes from a single generator (parameters and shocks together)"""
    X, mu, beta, lam = draw_parameters(rng, n_units, n_periods, k, f)
    eps = noise_scale * rng.standard_normal((n_units, n_periods))
    untreated, _, _ = power_transform(X @ beta.T + mu @ lam.T + eps, r)
    return untreated


def generate_sample(
    config: SimulationConfig,
    param_seed: SeedLike,
    shock_seed: SeedLike,
    transform: Optional[Transform] = None,
) -> SimulatedSample:
    """
    Draw one sample; parameters come from param_seed and shocks from shock_seed,
    so shock draws within a parameter set share X, mu, beta and lambda
    """
    transform = transform or power_transform
    n_units = config.J + 1
    n_periods = config.t0 + config.t_post

    X, mu, beta, lam = draw_parameters(
        np.random.default_rng(param_seed), n_units, n_periods, config.k, config.f
    )
    eps = config.noise_scale * np.random.default_rng(shock_seed).standard_normal(
        (n_units, n_periods)
    )

    latent = X @ beta.T + mu @ lam.T + eps
    untreated, y_min, y_max = transform(latent, config.r)

    tau = config.true_effects
    observed = untreated.copy()
    observed[0, config.t0:] += tau

    panel = PanelData(
        unit_ids=[f"unit{i}" for i in range(n_units)],
        time_labels=[str(t + 1) for t in range(n_periods)],
        outcomes=observed,
        treated_index=0,
        t0=config.t0,
        predictors=X,
        predictor_names=[f"x{i + 1}" for i in range(config.k)],
    )
    return SimulatedSample(
        panel=panel,
        true_effects=tau,
        latent=latent,
        untreated=untreated,
        parameters=LatentParameters(
            X=X, mu=mu, beta=beta, lam=lam, y_min=y_min, y_max=y_max, r=config.r
        ),
    )


def linear_bias(sample: SimulatedSample, w: WeightVector) -> np.ndarray:
    """
    Per-period error of the gap against the truth implied by the linear factor
    model (exact for r = 1 and zero noise):

        ((X_1 - sum_j w_j X_j)'beta_t + (mu_1 - sum_j w_j mu_j)'lambda_t) / (max - min)
    """
    p = sample.parameters
    weights = np.asarray(w.w, dtype=float)
    donors = sample.panel.donor_indices
    treated = sample.panel.treated_index

    x_gap = p.X[treated] - weights @ p.X[donors]
    mu_gap = p.mu[treated] - weights @ p.mu[donors]
    span = p.y_max - p.y_min
    return (p.beta @ x_gap + p.lam @ mu_gap) / span


def matching_selection(panel: PanelData) -> ColumnSelection:
    """Observed predictors plus every pretreatment outcome"""
    return ColumnSelection(periods=None, predictors=list(panel.predictor_names))


def _run_parameter_set(
    config: SimulationConfig,
    param_set: int,
    methods: List[Method],
    coverage_methods: List[Method],
    transform: Optional[Transform],
    tol: float,
    max_iter: int,
) -> Tuple[List[ReplicationRecord], Dict[str, Dict[str, float]]]:
    param_seed = np.random.SeedSequence([config.seed, param_set])

    def shock_seed(shock: int) -> np.random.SeedSequence:
        return np.random.SeedSequence([config.seed, param_set, shock])

    # tuning chosen once per parameter set, then held fixed across shock draws
    first = generate_sample(config, param_seed, shock_seed(0), transform)
    selection = matching_selection(first.panel)
    tuning: Dict[Method, Optional[TuningParams]] = {}
    tuning_errors: Dict[Method, str] = {}
    for method in methods:
        try:
            tuning[method], _ = select_tuning(
                first.panel,
                method,
                CvScheme.CONTROL_UNITS,
                config.tuning_grid_step,
                selection,
                tol=tol,
                max_iter=max_iter,
            )
        except SynthControlError as e:
            tuning[method] = None
            tuning_errors[method] = f"tuning selection failed: {e}"

    records = []
    for shock in range(config.n_shock_draws):
        sample = first if shock == 0 else generate_sample(
            config, param_seed, shock_seed(shock), transform
        )
        for method in methods:
            record = ReplicationRecord(
                setting=config.setting, method=method.value, param_set=param_set, shock=shock
            )
            records.append(record)
            if tuning[method] is None:
                record.failed, record.error = True, tuning_errors[method]
                continue
            try:
                params = tuning[method]
                w = fit_normalized(
                    sample.panel,
                    method,
                    params.a_star,
                    params.b_star,
                    selection,
                    tol=tol,
                    max_iter=max_iter,
                )
                effect = estimate_effect(sample.panel, w)
                record.errors = (effect.post_gap - sample.true_effects).tolist()

                if method in coverage_methods:
                    variance = estimate_variance(
                        sample.panel, method, params, selection, tol=tol, max_iter=max_iter
                    )
                    effect = confidence_intervals(effect, variance)
                    lower = effect.ci_lower[config.t0:]
                    upper = effect.ci_upper[config.t0:]
                    tau = sample.true_effects
                    record.covered = ((lower <= tau) & (tau <= upper)).tolist()
            except SynthControlError as e:
                record.failed, record.error = True, str(e)
                record.errors, record.covered = None, None
                logger.warning(
                    f"Replication {config.setting} param_set={param_set} shock={shock} "
                    f"{method.value} failed: {e}"
                )

    failed = sum(1 for r in records if r.failed)
    events.log_study_progress(config.setting, param_set, len(records) - failed, failed)

    chosen = {
        f"{config.J},{config.t0},{config.r}/{param_set}/{method.value}": {
            "a_star": params.a_star,
            "b_star": params.b_star,
        }
        for method, params in tuning.items()
        if params is not None
    }
    return records, chosen


def _aggregate(
    config: SimulationConfig,
    method: Method,
    records: List[ReplicationRecord],
    bias_mode: BiasMode,
) -> StudyRow:
    nan = float("nan")
    blocks = []
    covered = []
    for param_set in range(config.n_param_sets):
        rows = [
            r.errors
            for r in records
            if r.param_set == param_set and r.method == method.value and not r.failed
        ]
        if rows:
            blocks.append(np.asarray(rows, dtype=float))
        covered.extend(
            v
            for r in records
            if r.param_set == param_set and r.method == method.value and r.covered is not None
            for v in r.covered
        )

    if not blocks:
        bias = sd = nan
    else:
        if bias_mode is BiasMode.ABS_MEAN:
            bias = float(np.mean([np.abs(b.mean(axis=0)) for b in blocks]))
        else:
            bias = float(np.mean(np.abs(np.vstack(blocks))))
        spreads = [b.std(axis=0, ddof=1) for b in blocks if b.shape[0] > 1]
        sd = float(np.mean(spreads)) if spreads else nan
        bias, sd = 100.0 * bias, 100.0 * sd

    coverage = float(np.mean(covered)) if covered else nan
    return StudyRow(
        J=config.J, T0=config.t0, r=config.r, method=method.value, bias=bias, sd=sd, coverage=coverage
    )


def run_study(
    configs: Sequence[SimulationConfig],
    methods: Sequence[Method],
    bias_mode: BiasMode = BiasMode.ABS_MEAN,
    coverage_methods: Optional[Sequence[Method]] = None,
    n_jobs: int = 1,
    transform: Optional[Transform] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> StudyResult:
    """
    Run every (setting, parameter set) in parallel and aggregate per (setting, method).

    Bias is 100 x the mean over parameter sets and periods of |mean error over
    shock draws| (or 100 x mean |error| with BiasMode.MEAN_ABS). SD is 100 x the
    mean per-period, per-parameter-set standard deviation over shock draws.
    Coverage defaults to NSC only.
    """
    methods = [Method.parse(m) for m in methods]
    if coverage_methods is None:
        coverage_methods = [Method.NSC]
    coverage_methods = [Method.parse(m) for m in coverage_methods]
    bias_mode = BiasMode(bias_mode)

    tasks = [(config, param_set) for config in configs for param_set in range(config.n_param_sets)]
    task_index = [
        (index, param_set)
        for index, config in enumerate(configs)
        for param_set in range(config.n_param_sets)
    ]
    outputs = Parallel(n_jobs=n_jobs)(
        delayed(_run_parameter_set)(
            config, param_set, methods, coverage_methods, transform, tol, max_iter
        )
        for config, param_set in tasks
    )

    result = StudyResult()
    by_setting: Dict[int, List[ReplicationRecord]] = {i: [] for i in range(len(configs))}
    for (index, _), (records, chosen) in zip(task_index, outputs):
        by_setting[index].extend(records)
        result.ledger.extend(records)
        result.tuning.update(chosen)

    for index, config in enumerate(configs):
        for method in methods:
            result.rows.append(_aggregate(config, method, by_setting[index], bias_mode))

    if result.failures:
        logger.warning(f"{len(result.failures)} replications failed; see the study ledger")
    logger.info(f"Study finished: {len(configs)} settings x {len(methods)} methods")
    return result
