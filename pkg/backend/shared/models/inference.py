"""
Inference Data Models
"""

from enum import Enum
from dataclasses import dataclass, field
from typing import Optional, List, Dict, Any

import numpy as np

Z_95 = 1.959964


class TuningPolicy(Enum):
    """How placebo fits obtain their tuning pair"""

    REUSE = "reuse"
    RESELECT = "reselect"


@dataclass
class UnitRatio:
    """Placebo statistics for one pseudo-treated unit"""

    unit_id: str
    pre_rmspe: float
    post_rmspe: float
    ratio: float
    failed: bool = False
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "unit": self.unit_id,
            "pre_rmspe": self.pre_rmspe,
            "post_rmspe": self.post_rmspe,
            "ratio": self.ratio,
            "failed": self.failed,
            "error": self.error,
        }


@dataclass
class PermutationResult:
    """Post/pre RMSPE ratio distribution and the treated unit's rank"""

    records: List[UnitRatio]
    treated_id: str
    treated_rank: int
    p_value: float
    warnings: List[str] = field(default_factory=list)

    @property
    def n_valid(self) -> int:
        return sum(1 for r in self.records if not r.failed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "treated": self.treated_id,
            "treated_rank": self.treated_rank,
            "p_value": self.p_value,
            "n_units": len(self.records),
            "n_valid": self.n_valid,
            "failed_units": [r.unit_id for r in self.records if r.failed],
            "warnings": list(self.warnings),
        }


@dataclass
class VarianceEstimate:
    """Per-period variance from donor-on-donor prediction errors"""

    variance: np.ndarray  # T
    squared_errors: np.ndarray  # J x T
    z_level: float = Z_95

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variance": self.variance.tolist(),
            "z_level": self.z_level,
        }
