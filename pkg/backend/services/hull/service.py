"""
Convex Hull Membership Diagnostics
"""

import logging
from typing import List, Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.optimize import linprog

from shared.models import (
    HullVerdict,
    HullQuery,
    HullResult,
    HullExperimentConfig,
    HullExperimentRow,
    HullLPError,
)
from services.simulation.service import draw_outcomes

logger = logging.getLogger(__name__)

EXPERIMENT_COLUMNS = ["t0", "median_min_controls", "censored_fraction"]


def in_convex_hull(q: HullQuery) -> HullResult:
    """
    Phase-1 feasibility LP over x = [w, s+, s-]:

        min 1's+ + 1's-   s.t.  z0'w + s+ - s- = z1,  1'w = 1,  x >= 0

    Inside iff the optimum is within tol. Outside, the equality duals (y, nu)
    give a separating hyperplane: y'z1 + nu > 0 >= y'z_j + nu for every donor.
    """
    J, L = q.z0.shape
    c = np.concatenate([np.zeros(J), np.ones(2 * L)])
    A_eq = np.block(
        [
            [q.z0.T, np.eye(L), -np.eye(L)],
            [np.ones((1, J)), np.zeros((1, 2 * L))],
        ]
    )
    b_eq = np.concatenate([q.z1, [1.0]])

    res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise HullLPError(f"hull LP failed: {res.message}", res.status, int(res.nit))

    w = res.x[:J]
    residual = q.z1 - q.z0.T @ w
    objective = float(res.fun)

    if objective <= q.tol:
        return HullResult(
            verdict=HullVerdict.INSIDE,
            objective=objective,
            iterations=int(res.nit),
            weights=w,
            residual=residual,
        )

    duals = np.asarray(res.eqlin.marginals, dtype=float)
    return HullResult(
        verdict=HullVerdict.OUTSIDE,
        objective=objective,
        iterations=int(res.nit),
        residual=residual,
        normal=duals[:L],
        offset=float(duals[L]),
    )


def minimal_hull_size(
    z1: np.ndarray, z0: np.ndarray, cap: int, tol: float = 1e-7
) -> Optional[int]:
    """
    Smallest m such that z1 lies in the hull of the first m rows of z0;
    None when even the first `cap` rows do not suffice.

    Doubling then binary search; valid because adding rows never shrinks the hull.
    """
    z0 = np.atleast_2d(z0)
    cap = min(int(cap), z0.shape[0])

    def inside(m: int) -> bool:
        return in_convex_hull(HullQuery(z1=z1, z0=z0[:m], tol=tol)).inside

    hi = 1
    while True:
        size = min(hi, cap)
        if inside(size):
            break
        if size == cap:
            return None
        hi *= 2

    lo, hi = hi // 2, size
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if inside(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _experiment_sample(config: HullExperimentConfig, sample: int) -> List[Optional[int]]:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, sample]))
    n_periods = max(config.periods)
    outcomes = draw_outcomes(rng, config.max_controls + 1, n_periods, r=config.r)

    # treated path shifted to start at the donors' period-1 mean
    donors = outcomes[1:]
    treated = outcomes[0] - outcomes[0, 0] + donors[:, 0].mean()
    if config.shuffle:
        donors = donors[rng.permutation(donors.shape[0])]

    return [
        minimal_hull_size(treated[:p], donors[:, :p], config.max_controls, config.tol)
        for p in config.periods
    ]


def hull_sample_experiment(
    config: HullExperimentConfig, n_jobs: int = 1
) -> List[HullExperimentRow]:
    """
    Median minimal donor count needed to put the treated unit in the hull,
    per number of matched pretreatment periods. Censored samples count as max_controls.
    """
    sizes = Parallel(n_jobs=n_jobs)(
        delayed(_experiment_sample)(config, s) for s in range(config.n_samples)
    )

    rows = []
    for i, p in enumerate(config.periods):
        per_sample = [s[i] for s in sizes]
        censored = sum(1 for m in per_sample if m is None)
        filled = [config.max_controls if m is None else m for m in per_sample]
        rows.append(
            HullExperimentRow(
                t0=p,
                median_min_controls=float(np.median(filled)),
                censored_fraction=censored / len(filled),
                minimal_sizes=filled,
            )
        )
        logger.info(f"Hull experiment p={p}: median {rows[-1].median_min_controls}, censored {censored}")
    return rows


def write_experiment_csv(rows: List[HullExperimentRow], path: str):
    frame = pd.DataFrame([row.to_dict() for row in rows], columns=EXPERIMENT_COLUMNS)
    frame.to_csv(path, index=False, float_format="%.6f")
