"""
Penalized Constrained Least-Squares Solvers

All weight programs share one objective

    ||z1 - z0'w||^2 + a * sum_j d_j |w_j| + b * sum_j w_j^2,   sum_j w_j = 1 (and w >= 0)

solved by operator splitting: an exact affine-constrained ridge step alternating
with a soft-threshold (or simplex projection) step, coupled by a scaled dual
variable. Every few iterations an active-set refinement starting from the current
support solves the program exactly and is accepted once its fixed-point
residual falls below tolerance.
"""

import logging
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import linalg, optimize

from shared.middleware.logging import StructuredLogger
from shared.models import (
    MatchingMatrix,
    SolverProblem,
    SolverResult,
    EigenScaling,
    TuningParams,
    SolverConvergenceError,
    EstimationInputError,
)

logger = logging.getLogger(__name__)
events = StructuredLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10000
POLISH_EVERY = 10
BALANCE_EVERY = 10
EIGEN_ZERO = 1e-10
SINGULAR_ZERO = 1e-12
KKT_FACTOR = 10.0  # residual bound in units of tol, scaled by max(1, |q|)
REFINE_GATE = 1e-3  # full active-set refinement only once ADMM is this close
STALL_FACTOR = 100.0


def pairwise_distances(m: MatchingMatrix) -> np.ndarray:
    """Euclidean distance between z1 and every donor row of z0"""
    return np.linalg.norm(m.z0 - m.z1[np.newaxis, :], axis=1)


def soft_threshold(x: np.ndarray, kappa) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - kappa, 0.0)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1}"""
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - cssv / ind > 0)
    theta = cssv[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


@lru_cache(maxsize=256)
def _affine_basis(n: int) -> np.ndarray:
    """Orthonormal basis of {x : sum x = 0}, shape n x (n - 1)"""
    basis = linalg.null_space(np.ones((1, n)))
    basis.setflags(write=False)
    return basis


def _singular_cutoff(z0: np.ndarray) -> float:
    """Absolute threshold below which donor directions count as zero"""
    return SINGULAR_ZERO * max(1.0, float(np.linalg.norm(z0)))


def _affine_directions(problem: SolverProblem) -> np.ndarray:
    return problem.z0.T @ _affine_basis(problem.n_donors)


def _is_unique(problem: SolverProblem) -> bool:
    J = problem.n_donors
    if J == 1 or problem.b > 0:
        return True
    rank = np.linalg.matrix_rank(_affine_directions(problem), tol=_singular_cutoff(problem.z0))
    return int(rank) == J - 1


def _result(problem, w, iterations, primal, dual, polished) -> SolverResult:
    return SolverResult(
        w=w,
        objective=problem.objective(w),
        iterations=iterations,
        primal_residual=float(primal),
        dual_residual=float(dual),
        unique=_is_unique(problem),
        polished=polished,
    )


def _min_norm_affine(problem: SolverProblem) -> SolverResult:
    """
    Unpenalized, sign-unrestricted fit: the minimum-norm element of the minimizer set
    """
    J = problem.n_donors
    basis = _affine_basis(J)
    w0 = np.full(J, 1.0 / J)
    directions = _affine_directions(problem)
    sigma_max = float(np.linalg.norm(directions, 2))
    cutoff = _singular_cutoff(problem.z0)

    if sigma_max <= cutoff:
        # donors coincide; every feasible w fits equally well
        c = np.zeros(J - 1)
    else:
        rhs = problem.z1 - problem.z0.T @ w0
        c = np.linalg.lstsq(directions, rhs, rcond=cutoff / sigma_max)[0]
    # w0 is orthogonal to the basis, so the min-norm c gives the min-norm w
    w = w0 + basis @ c
    return _result(problem, w, 0, 0.0, 0.0, polished=True)


def _prox(v: np.ndarray, l: np.ndarray, nonneg: bool) -> np.ndarray:
    """argmin_x 1/2 ||x - v||^2 + sum_j l_j |x_j| over the feasible set"""
    if nonneg:
        return project_simplex(v - l)

    def excess(mu):
        return soft_threshold(v - mu, l).sum() - 1.0

    # sum is >= 2J at lo and <= -J at hi
    lo = float(v.min() - l.max()) - 2.0
    hi = float(v.max() + l.max()) + 1.0
    mu = optimize.brentq(excess, lo, hi, xtol=1e-15)
    return soft_threshold(v - mu, l)


def kkt_residual(P, q, l, w, nonneg) -> float:
    """
    Fixed-point residual ||w - prox(w - grad)||_inf of the normalized program;
    zero exactly at the optimum
    """
    return float(np.max(np.abs(w - _prox(w - (P @ w - q), l, nonneg))))


def _support_solve(P, q, l, S, signs):
    """Equality-constrained stationary point on support S with fixed signs"""
    k = S.size
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = P[np.ix_(S, S)]
    K[:k, k] = -1.0
    K[k, :k] = 1.0
    rhs = np.append(q[S] - l[S] * signs[S], 1.0)
    sol = np.linalg.lstsq(K, rhs, rcond=SINGULAR_ZERO)[0]

    w = np.zeros(P.shape[0])
    w[S] = sol[:k] + (1.0 - sol[:k].sum()) / k
    return w, sol[k]


def _polish(P, q, l, start, nonneg, kkt_tol, rounds) -> Optional[np.ndarray]:
    """
    Active-set refinement from the support of `start`: solve exactly on the support,
    drop entries that leave their sign, add the worst KKT violator; None unless the
    refined point passes the residual check
    """
    J = P.shape[0]
    support = start > 0 if nonneg else start != 0
    signs = np.ones(J) if nonneg else np.sign(start)
    if not support.any():
        support[int(np.argmax(start))] = True
        signs[int(np.argmax(start))] = 1.0

    for _ in range(rounds):
        S = np.flatnonzero(support)
        w, nu = _support_solve(P, q, l, S, signs)

        if nonneg:
            slack = w[S]
        else:
            slack = np.where(l[S] > 0, w[S] * signs[S], np.inf)
        if slack.min() < -kkt_tol:
            support[S[int(np.argmin(slack))]] = False
            if not support.any():
                return None
            continue

        grad = P @ w - q
        off = np.flatnonzero(~support)
        if off.size:
            if nonneg:
                violation = nu - (grad[off] + l[off])
            else:
                violation = np.abs(grad[off] - nu) - l[off]
            worst = int(np.argmax(violation))
            if violation[worst] > kkt_tol:
                j = off[worst]
                support[j] = True
                if not nonneg:
                    signs[j] = -np.sign(grad[j] - nu)
                continue

        if nonneg:
            w = np.maximum(w, 0.0)
            w = w / w.sum()
        if kkt_residual(P, q, l, w, nonneg) <= kkt_tol:
            return w
        return None
    return None


def _admm(problem: SolverProblem, tol: float, max_iter: int) -> SolverResult:
    J = problem.n_donors
    P = 2.0 * (problem.z0 @ problem.z0.T + problem.b * np.eye(J))
    q = 2.0 * (problem.z0 @ problem.z1)
    l = problem.a * problem.d

    scale = max(float(linalg.eigvalsh(P)[-1]), float(l.max()))
    if scale <= 0:
        # objective is constant on the feasible set
        return _result(problem, np.full(J, 1.0 / J), 0, 0.0, 0.0, polished=True)
    P, q, l = P / scale, q / scale, l / scale
    kkt_tol = KKT_FACTOR * tol * max(1.0, float(np.abs(q).max()))
    full_rounds = 2 * J + 2

    rho = 1.0
    ones = np.ones(J)

    def factorize(rho):
        factor = linalg.cho_factor(P + rho * np.eye(J))
        return factor, linalg.cho_solve(factor, ones)

    factor, e = factorize(rho)
    w = np.full(J, 1.0 / J)
    z = w.copy()
    u = np.zeros(J)
    primal = dual = np.inf

    for it in range(1, max_iter + 1):
        # affine-constrained ridge step
        y = linalg.cho_solve(factor, q + rho * (z - u))
        w = y + e * (1.0 - y.sum()) / e.sum()

        # shrinkage step
        z_prev = z
        if problem.nonneg:
            z = project_simplex(w + u - l / rho)
        else:
            z = soft_threshold(w + u, l / rho)
        u = u + w - z

        primal = np.max(np.abs(w - z))
        dual = rho * np.max(np.abs(z - z_prev))
        converged = max(primal, dual) <= tol

        if it % POLISH_EVERY == 0 or converged:
            rounds = full_rounds if max(primal, dual) <= REFINE_GATE else 1
            polished = _polish(P, q, l, z, problem.nonneg, kkt_tol, rounds)
            if polished is not None:
                return _result(problem, polished, it, primal, dual, polished=True)

        if converged:
            return _result(problem, z if problem.nonneg else w, it, primal, dual, polished=False)

        if it % BALANCE_EVERY == 0:
            if primal > 10.0 * dual:
                rho, u = rho * 2.0, u / 2.0
                factor, e = factorize(rho)
            elif dual > 10.0 * primal:
                rho, u = rho / 2.0, u * 2.0
                factor, e = factorize(rho)

    if max(primal, dual) <= REFINE_GATE:
        polished = _polish(P, q, l, z, problem.nonneg, kkt_tol, full_rounds)
        if polished is not None:
            return _result(problem, polished, max_iter, primal, dual, polished=True)

    # residuals stalled just above tol; keep the iterate if it is stationary to within tolerance
    iterate = z if problem.nonneg else w
    gap = kkt_residual(P, q, l, iterate, problem.nonneg)
    if gap <= STALL_FACTOR * kkt_tol:
        logger.warning(
            f"weight solver stalled for J={J} (primal={primal:.2e}, dual={dual:.2e}); "
            f"accepting iterate with KKT gap {gap:.2e}"
        )
        return _result(problem, iterate, max_iter, primal, dual, polished=False)

    raise SolverConvergenceError(
        f"weight solver did not converge for J={J}", max_iter, float(primal), float(dual)
    )


def solve(
    problem: SolverProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SolverResult:
    """
    Minimize the penalized objective over the affine set (or the simplex when nonneg)
    """
    J = problem.n_donors
    if J == 0:
        raise EstimationInputError("solver needs at least one donor")

    if J == 1:
        result = _result(problem, np.ones(1), 0, 0.0, 0.0, polished=True)
    elif problem.a == 0 and problem.b == 0 and not problem.nonneg:
        result = _min_norm_affine(problem)
    else:
        result = _admm(problem, tol, max_iter)

    events.log_solver_run(
        "simplex" if problem.nonneg else "affine",
        J,
        result.iterations,
        result.objective,
        result.unique,
    )
    return result


def eigen_scale(m: MatchingMatrix, a_star: float, b_star: float) -> TuningParams:
    """
    Map normalized (a*, b*) in [0, 1] to raw penalties via the ordered nonzero
    eigenvalues of z0 z0' (and z0 z0' + bI for a)
    """
    J, L = m.z0.shape
    eigenvalues = linalg.eigvalsh(m.z0 @ m.z0.T)
    lam_max = float(eigenvalues[-1]) if eigenvalues.size else 0.0
    n = min(J, L)

    if lam_max > 0:
        positive = eigenvalues[eigenvalues > EIGEN_ZERO * lam_max][-n:]
    else:
        positive = np.array([])
    shortfall = n - positive.size
    if shortfall:
        logger.warning(f"z0 z0' has {positive.size} positive eigenvalues, expected {n}")

    scaling = EigenScaling(
        eigenvalues=[float(v) for v in positive],
        n=n,
        shortfall=int(shortfall),
        n_donors=J,
    )
    a, b = scaling.realize(a_star, b_star)
    return TuningParams(a_star=a_star, b_star=b_star, a=a, b=b, scaling=scaling)
