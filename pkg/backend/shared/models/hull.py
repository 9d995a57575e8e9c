"""
Convex Hull Diagnostic Models
"""

from enum import Enum
from dataclasses import dataclass, field
from typing import Optional, List, Dict, Any

import numpy as np
from pydantic import BaseModel, Field, field_validator


class HullVerdict(Enum):
    """Hull membership outcome"""

    INSIDE = "inside"
    OUTSIDE = "outside"


@dataclass
class HullQuery:
    """Is z1 a convex combination of the rows of z0?"""

    z1: np.ndarray
    z0: np.ndarray
    tol: float = 1e-7

    def __post_init__(self):
        self.z1 = np.asarray(self.z1, dtype=float).ravel()
        self.z0 = np.asarray(self.z0, dtype=float)
        if self.z0.ndim == 1:
            self.z0 = self.z0.reshape(-1, 1)
        if self.z0.shape[0] < 1 or self.z1.shape[0] < 1:
            raise ValueError("hull query needs J >= 1 and L >= 1")
        if self.z0.shape[1] != self.z1.shape[0]:
            raise ValueError(
                f"z0 has {self.z0.shape[1]} columns but z1 has length {self.z1.shape[0]}"
            )


@dataclass
class HullResult:
    """Verdict of the phase-1 feasibility LP with its certificate"""

    verdict: HullVerdict
    objective: float
    iterations: int
    weights: Optional[np.ndarray] = None  # inside
    residual: Optional[np.ndarray] = None  # z1 - z0'w at the LP optimum
    normal: Optional[np.ndarray] = None  # separating direction y (outside)
    offset: Optional[float] = None  # y'z1 + offset > 0 >= y'z_j + offset

    @property
    def inside(self) -> bool:
        return self.verdict is HullVerdict.INSIDE

    def to_dict(self) -> Dict[str, Any]:
        def _list(values):
            return None if values is None else [float(v) for v in values]

        return {
            "verdict": self.verdict.value,
            "objective": self.objective,
            "iterations": self.iterations,
            "weights": _list(self.weights),
            "residual": _list(self.residual),
            "normal": _list(self.normal),
            "offset": self.offset,
        }


class HullExperimentConfig(BaseModel):
    """Settings for the minimal-donor-count experiment"""

    n_samples: int = Field(default=100, gt=0)
    max_controls: int = Field(default=10000, gt=0)
    periods: List[int] = Field(default_factory=lambda: [1, 2, 3, 4, 5])
    seed: int = 0
    r: int = 1
    tol: float = Field(default=1e-7, gt=0)
    shuffle: bool = True

    @field_validator("periods")
    @classmethod
    def _positive_periods(cls, value: List[int]) -> List[int]:
        if not value or any(p < 1 for p in value):
            raise ValueError("periods must be a nonempty list of positive counts")
        return sorted(set(value))

    @field_validator("r")
    @classmethod
    def _degree(cls, value: int) -> int:
        if value not in (1, 2):
            raise ValueError("r must be 1 or 2")
        return value


@dataclass
class HullExperimentRow:
    """Median minimal donor count for one number of matched periods"""

    t0: int
    median_min_controls: float
    censored_fraction: float
    minimal_sizes: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t0": self.t0,
            "median_min_controls": self.median_min_controls,
            "censored_fraction": self.censored_fraction,
        }
