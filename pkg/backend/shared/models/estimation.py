"""
Estimation Data Models
"""

import math
from enum import Enum
from dataclasses import dataclass, field
from typing import Optional, List, Dict, Any, Tuple

import numpy as np


class Method(Enum):
    """Synthetic control weight programs"""

    OSC = "osc"  # simplex weights, no penalties
    ESC = "esc"  # elastic net, unweighted L1
    PSC = "psc"  # L1 weighted by pairwise discrepancies, no L2
    NSC = "nsc"  # L1 weighted by pairwise discrepancies plus L2

    @property
    def nonneg(self) -> bool:
        return self is Method.OSC

    @property
    def distance_weighted(self) -> bool:
        return self in (Method.PSC, Method.NSC)

    @property
    def tunes_a(self) -> bool:
        return self is not Method.OSC

    @property
    def tunes_b(self) -> bool:
        return self in (Method.ESC, Method.NSC)

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, Method):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown method {value!r}; expected one of {[m.value for m in cls]}"
            ) from None


class CvScheme(Enum):
    """Cross-validation constructions for (a*, b*)"""

    CONTROL_UNITS = "control_units"
    PRETREATMENT_PERIODS = "pretreatment_periods"

    @classmethod
    def parse(cls, value) -> "CvScheme":
        if isinstance(value, CvScheme):
            return value
        aliases = {"controls": cls.CONTROL_UNITS, "pretreat": cls.PRETREATMENT_PERIODS}
        value = str(value).lower()
        if value in aliases:
            return aliases[value]
        return cls(value)


@dataclass
class SolverProblem:
    """min ||z1 - z0'w||^2 + a sum d_j|w_j| + b sum w_j^2  s.t. sum w = 1 (and w >= 0)"""

    z0: np.ndarray  # J x L
    z1: np.ndarray  # L
    a: float = 0.0
    b: float = 0.0
    d: Optional[np.ndarray] = None  # J, defaults to ones
    nonneg: bool = False

    def __post_init__(self):
        self.z0 = np.atleast_2d(np.asarray(self.z0, dtype=float))
        self.z1 = np.asarray(self.z1, dtype=float).ravel()
        if self.z0.shape[1] != self.z1.shape[0] and self.z0.shape[0] == self.z1.shape[0]:
            # a single column given as a flat vector
            self.z0 = self.z0.T
        if self.d is None:
            self.d = np.ones(self.z0.shape[0])
        self.d = np.asarray(self.d, dtype=float).ravel()
        if self.d.shape[0] != self.z0.shape[0]:
            raise ValueError(f"d has length {self.d.shape[0]} for {self.z0.shape[0]} donors")
        if self.a < 0 or self.b < 0:
            raise ValueError("penalties a and b must be nonnegative")
        if np.any(self.d < 0):
            raise ValueError("L1 multipliers d must be nonnegative")

    @property
    def n_donors(self) -> int:
        return self.z0.shape[0]

    def objective(self, w: np.ndarray) -> float:
        """Penalized objective at w"""
        resid = self.z1 - self.z0.T @ w
        return float(resid @ resid + self.a * np.sum(self.d * np.abs(w)) + self.b * np.sum(w * w))


@dataclass
class SolverResult:
    """Solved donor weights with convergence certificates"""

    w: np.ndarray
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    unique: bool
    polished: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "w": self.w.tolist(),
            "objective": self.objective,
            "iterations": self.iterations,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "unique": self.unique,
            "polished": self.polished,
        }


def rank_index(n: int, fraction: float) -> int:
    """0-based position of the ceil(n * fraction)-th smallest value"""
    k = math.ceil(n * fraction - 1e-9)
    return min(max(k, 1), n) - 1


@dataclass
class EigenScaling:
    """Nonzero eigenvalues used to map (a*, b*) to raw penalties"""

    eigenvalues: List[float]  # positive eigenvalues of z0 z0', ascending
    n: int  # min(J, L)
    shortfall: int  # n minus the number of positive eigenvalues
    n_donors: int
    b_index: Optional[int] = None  # 1-based index used for b
    a_index: Optional[int] = None  # 1-based index used for a
    n_prime: Optional[int] = None

    def realize(self, a_star: float, b_star: float) -> Tuple[float, float]:
        """Raw penalties (a, b) for a normalized pair"""
        lam = np.asarray(self.eigenvalues, dtype=float)
        b = 0.0
        if b_star > 0 and lam.size:
            idx = rank_index(lam.size, b_star)
            b = b_star * float(lam[idx])
            self.b_index = idx + 1

        if b > 0:
            # zero eigenvalues of z0 z0' become b once the ridge term is added
            lam_b = np.sort(np.concatenate([lam, np.zeros(self.n_donors - lam.size)]) + b)
        else:
            lam_b = lam
        self.n_prime = int(lam_b.size)

        a = 0.0
        if a_star > 0 and lam_b.size:
            idx = rank_index(lam_b.size, a_star)
            a = a_star * float(lam_b[idx])
            self.a_index = idx + 1
        return a, b

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eigenvalues": list(self.eigenvalues),
            "n": self.n,
            "shortfall": self.shortfall,
            "n_donors": self.n_donors,
            "b_index": self.b_index,
            "a_index": self.a_index,
            "n_prime": self.n_prime,
        }


@dataclass
class TuningParams:
    """Normalized tuning pair with realized penalties"""

    a_star: float = 0.0
    b_star: float = 0.0
    a: float = 0.0
    b: float = 0.0
    scaling: Optional[EigenScaling] = None
    scheme: CvScheme = CvScheme.CONTROL_UNITS
    grid_step: float = 0.1
    converged: bool = True

    def __post_init__(self):
        for name in ("a_star", "b_star"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    def for_method(self, method: Method) -> "TuningParams":
        """Zero out penalties the method does not use"""
        a_star, a = (self.a_star, self.a) if method.tunes_a else (0.0, 0.0)
        b_star, b = (self.b_star, self.b) if method.tunes_b else (0.0, 0.0)
        return TuningParams(
            a_star=a_star,
            b_star=b_star,
            a=a,
            b=b,
            scaling=self.scaling,
            scheme=self.scheme,
            grid_step=self.grid_step,
            converged=self.converged,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "a_star": self.a_star,
            "b_star": self.b_star,
            "a": self.a,
            "b": self.b,
            "scaling": self.scaling.to_dict() if self.scaling else None,
            "scheme": self.scheme.value,
            "grid_step": self.grid_step,
            "converged": self.converged,
        }


@dataclass
class CvSurface:
    """Evaluated cross-validation errors over the (a*, b*) grid"""

    values: Dict[Tuple[float, float], float] = field(default_factory=dict)
    argmin: Tuple[float, float] = (0.0, 0.0)
    trace: List[Dict[str, Any]] = field(default_factory=list)
    converged: bool = True

    @property
    def minimum(self) -> float:
        return self.values[self.argmin] if self.values else float("nan")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "values": [
                {"a_star": a, "b_star": b, "mspe": v} for (a, b), v in sorted(self.values.items())
            ],
            "argmin": list(self.argmin),
            "trace": list(self.trace),
            "converged": self.converged,
        }


@dataclass
class WeightVector:
    """Fitted donor weights for one method"""

    w: np.ndarray
    method: Method
    tuning: TuningParams
    pre_rmspe: float
    donor_ids: List[str] = field(default_factory=list)
    solver: Optional[SolverResult] = None

    def as_mapping(self) -> Dict[str, float]:
        return {donor: float(weight) for donor, weight in zip(self.donor_ids, self.w)}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "weights": self.as_mapping(),
            "method": self.method.value,
            "tuning": self.tuning.to_dict(),
            "pre_rmspe": self.pre_rmspe,
        }


@dataclass
class EffectEstimate:
    """Per-period gap between treated and synthetic outcomes"""

    gap: np.ndarray
    synthetic: np.ndarray
    treated: np.ndarray
    t0: int
    time_labels: List[str] = field(default_factory=list)
    variance: Optional[np.ndarray] = None
    ci_lower: Optional[np.ndarray] = None
    ci_upper: Optional[np.ndarray] = None
    level: float = 0.95

    @property
    def post_gap(self) -> np.ndarray:
        return self.gap[self.t0:]

    @property
    def pre_gap(self) -> np.ndarray:
        return self.gap[: self.t0]

    def to_dict(self) -> Dict[str, Any]:
        def _list(values):
            return None if values is None else [float(v) for v in values]

        return {
            "time_labels": list(self.time_labels),
            "t0": self.t0,
            "treated": _list(self.treated),
            "synthetic": _list(self.synthetic),
            "gap": _list(self.gap),
            "variance": _list(self.variance),
            "ci_lower": _list(self.ci_lower),
            "ci_upper": _list(self.ci_upper),
            "level": self.level,
        }
