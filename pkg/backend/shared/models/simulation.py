"""
Monte Carlo Study Models
"""

from enum import Enum
from dataclasses import dataclass, field
from typing import Optional, List, Dict, Any, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from .panel import PanelData

STUDY_COLUMNS = ["J", "T0", "r", "method", "bias", "sd", "coverage"]


class StudyScale(Enum):
    """Replication counts per setting"""

    DESK = "desk"  # 5 parameter sets x 50 shock draws
    PAPER = "paper"  # 20 parameter sets x 250 shock draws

    @property
    def counts(self) -> Tuple[int, int]:
        return (5, 50) if self is StudyScale.DESK else (20, 250)

    @classmethod
    def parse(cls, value) -> "StudyScale":
        if isinstance(value, StudyScale):
            return value
        value = str(value).lower()
        if value == "full":
            return cls.PAPER
        return cls(value)


class BiasMode(Enum):
    """Aggregation of per-replication errors into the bias column"""

    ABS_MEAN = "abs_mean"  # |mean over shock draws| per (parameter set, period)
    MEAN_ABS = "mean_abs"  # mean of |error| over everything


class SimulationConfig(BaseModel):
    """One Monte Carlo setting"""

    J: int = Field(gt=0)
    t0: int = Field(gt=0)
    r: int = 1
    n_param_sets: int = Field(default=5, gt=0)
    n_shock_draws: int = Field(default=50, gt=0)
    t_post: int = Field(default=10, gt=0)
    k: int = Field(default=2, gt=0)
    f: int = Field(default=4, gt=0)
    seed: int = 0
    tuning_grid_step: float = Field(default=0.1, gt=0, le=1)
    noise_scale: float = Field(default=1.0, ge=0)

    model_config = {"frozen": True}

    @field_validator("r")
    @classmethod
    def _degree(cls, value: int) -> int:
        if value not in (1, 2):
            raise ValueError("r must be 1 or 2")
        return value

    @property
    def setting(self) -> Tuple[int, int, int]:
        return (self.J, self.t0, self.r)

    @property
    def true_effects(self) -> np.ndarray:
        return 0.02 * np.arange(1, self.t_post + 1)


STUDY_SETTINGS = [(J, t0, r) for J in (25, 50) for t0 in (15, 30) for r in (1, 2)]


@dataclass
class LatentParameters:
    """Draws behind one simulated sample"""

    X: np.ndarray  # N x k observed predictors
    mu: np.ndarray  # N x f unobserved loadings
    beta: np.ndarray  # T x k
    lam: np.ndarray  # T x f
    y_min: float
    y_max: float
    r: int


@dataclass
class SimulatedSample:
    """Observed panel plus the truth it was generated from"""

    panel: PanelData
    true_effects: np.ndarray  # t_post
    latent: np.ndarray  # N x T, Y*
    untreated: np.ndarray  # N x T, Y0
    parameters: LatentParameters


@dataclass
class ReplicationRecord:
    """One (parameter set, shock draw, method) fit"""

    setting: Tuple[int, int, int]
    method: str
    param_set: int
    shock: int
    errors: Optional[List[float]] = None  # estimated minus true effect per posttreatment period
    covered: Optional[List[bool]] = None
    failed: bool = False
    error: Optional[str] = None


@dataclass
class StudyRow:
    """Table row for one (setting, method)"""

    J: int
    T0: int
    r: int
    method: str
    bias: float
    sd: float
    coverage: float  # nan when not computed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "J": self.J,
            "T0": self.T0,
            "r": self.r,
            "method": self.method,
            "bias": self.bias,
            "sd": self.sd,
            "coverage": self.coverage,
        }


@dataclass
class StudyResult:
    """Aggregated study table with its replication ledger"""

    rows: List[StudyRow] = field(default_factory=list)
    ledger: List[ReplicationRecord] = field(default_factory=list)
    tuning: Dict[str, Dict[str, float]] = field(default_factory=dict)

    @property
    def failures(self) -> List[ReplicationRecord]:
        return [r for r in self.ledger if r.failed]

    def row(self, J: int, t0: int, r: int, method: str) -> StudyRow:
        for row in self.rows:
            if (row.J, row.T0, row.r, row.method) == (J, t0, r, method):
                return row
        raise KeyError((J, t0, r, method))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([row.to_dict() for row in self.rows], columns=STUDY_COLUMNS)
        return frame

    def to_csv(self, path: str):
        frame = self.to_frame()
        frame.to_csv(path, index=False, float_format="%.6f", na_rep="")

