"""
Panel Data Models
"""

from dataclasses import dataclass, field, replace
from typing import Optional, List, Dict, Any

import numpy as np

from .errors import PanelValidationError


def _frozen_array(values, name: str, ndim: int) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.ndim != ndim:
        raise PanelValidationError(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PanelData:
    """Balanced panel of N units over T periods with one treated unit"""

    unit_ids: List[str]
    time_labels: List[str]
    outcomes: np.ndarray  # N x T
    treated_index: int
    t0: int  # number of pretreatment periods
    predictors: Optional[np.ndarray] = None  # N x k
    predictor_names: List[str] = field(default_factory=list)

    def __post_init__(self):
        object.__setattr__(self, "unit_ids", [str(u) for u in self.unit_ids])
        object.__setattr__(self, "time_labels", [str(t) for t in self.time_labels])
        object.__setattr__(self, "outcomes", _frozen_array(self.outcomes, "outcomes", 2))
        if self.predictors is not None:
            predictors = _frozen_array(self.predictors, "predictors", 2)
            object.__setattr__(self, "predictors", predictors)
            if not self.predictor_names:
                names = [f"p{i + 1}" for i in range(predictors.shape[1])]
                object.__setattr__(self, "predictor_names", names)
        object.__setattr__(self, "predictor_names", [str(p) for p in self.predictor_names])
        self.validate()

    def validate(self):
        """Check structural invariants"""
        n, t = self.outcomes.shape
        if n < 2:
            raise PanelValidationError(f"panel needs at least 2 units, got {n}")
        if len(self.unit_ids) != n:
            raise PanelValidationError(f"{len(self.unit_ids)} unit ids for {n} outcome rows")
        if len(set(self.unit_ids)) != n:
            duplicate = next(u for i, u in enumerate(self.unit_ids) if u in self.unit_ids[:i])
            raise PanelValidationError(f"duplicate unit id {duplicate!r}")
        if len(self.time_labels) != t:
            raise PanelValidationError(f"{len(self.time_labels)} time labels for {t} outcome columns")
        if len(set(self.time_labels)) != t:
            raise PanelValidationError("time labels must be unique")
        if not 1 <= self.t0 < t:
            raise PanelValidationError(f"t0 must satisfy 1 <= t0 < T={t}, got {self.t0}")
        if not 0 <= self.treated_index < n:
            raise PanelValidationError(f"treated index {self.treated_index} out of range for {n} units")

        missing = np.argwhere(~np.isfinite(self.outcomes))
        if missing.size:
            i, j = missing[0]
            raise PanelValidationError(
                f"missing outcome for unit {self.unit_ids[i]!r} at {self.time_labels[j]!r}"
            )

        if self.predictors is not None:
            if self.predictors.shape[0] != n:
                raise PanelValidationError(
                    f"predictors have {self.predictors.shape[0]} rows for {n} units"
                )
            if len(self.predictor_names) != self.predictors.shape[1]:
                raise PanelValidationError("predictor names do not match predictor columns")
            if len(set(self.predictor_names)) != len(self.predictor_names):
                raise PanelValidationError("predictor names must be unique")
            missing = np.argwhere(~np.isfinite(self.predictors))
            if missing.size:
                i, j = missing[0]
                raise PanelValidationError(
                    f"missing predictor {self.predictor_names[j]!r} for unit {self.unit_ids[i]!r}"
                )

    @property
    def n_units(self) -> int:
        return self.outcomes.shape[0]

    @property
    def n_periods(self) -> int:
        return self.outcomes.shape[1]

    @property
    def n_donors(self) -> int:
        return self.n_units - 1

    @property
    def n_post(self) -> int:
        return self.n_periods - self.t0

    @property
    def donor_indices(self) -> List[int]:
        return [i for i in range(self.n_units) if i != self.treated_index]

    @property
    def donor_ids(self) -> List[str]:
        return [self.unit_ids[i] for i in self.donor_indices]

    @property
    def treated_id(self) -> str:
        return self.unit_ids[self.treated_index]

    @property
    def treated_outcomes(self) -> np.ndarray:
        return self.outcomes[self.treated_index]

    @property
    def donor_outcomes(self) -> np.ndarray:
        """J x T outcomes in donor order"""
        return self.outcomes[self.donor_indices]

    @property
    def n_predictors(self) -> int:
        return 0 if self.predictors is None else self.predictors.shape[1]

    def with_treated(self, treated_index: int) -> "PanelData":
        """Same panel with another unit marked as treated"""
        return replace(self, treated_index=int(treated_index))

    def with_t0(self, t0: int) -> "PanelData":
        """Same panel with another treatment time"""
        return replace(self, t0=int(t0))

    def drop_units(self, indices: List[int]) -> "PanelData":
        """Remove units; the treated unit cannot be dropped"""
        drop = set(int(i) for i in indices)
        if self.treated_index in drop:
            raise PanelValidationError("cannot drop the treated unit")
        keep = [i for i in range(self.n_units) if i not in drop]
        return PanelData(
            unit_ids=[self.unit_ids[i] for i in keep],
            time_labels=list(self.time_labels),
            outcomes=self.outcomes[keep],
            treated_index=keep.index(self.treated_index),
            t0=self.t0,
            predictors=None if self.predictors is None else self.predictors[keep],
            predictor_names=list(self.predictor_names),
        )

    def donor_panel(self, pseudo_treated: int) -> "PanelData":
        """
        Panel of donors only, with donor `pseudo_treated` (donor position) marked as treated
        """
        donors = self.donor_indices
        return PanelData(
            unit_ids=self.donor_ids,
            time_labels=list(self.time_labels),
            outcomes=self.outcomes[donors],
            treated_index=int(pseudo_treated),
            t0=self.t0,
            predictors=None if self.predictors is None else self.predictors[donors],
            predictor_names=list(self.predictor_names),
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            "unit_ids": list(self.unit_ids),
            "time_labels": list(self.time_labels),
            "outcomes": self.outcomes.tolist(),
            "treated_index": self.treated_index,
            "t0": self.t0,
            "predictors": None if self.predictors is None else self.predictors.tolist(),
            "predictor_names": list(self.predictor_names),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PanelData":
        """Create from dictionary"""
        return cls(**data)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PanelData):
            return NotImplemented
        same_predictors = (self.predictors is None and other.predictors is None) or (
            self.predictors is not None
            and other.predictors is not None
            and np.array_equal(self.predictors, other.predictors)
        )
        return (
            self.unit_ids == other.unit_ids
            and self.time_labels == other.time_labels
            and np.array_equal(self.outcomes, other.outcomes)
            and self.treated_index == other.treated_index
            and self.t0 == other.t0
            and self.predictor_names == other.predictor_names
            and same_predictors
        )


@dataclass(frozen=True)
class ColumnRef:
    """One matching column: an observed predictor or a pretreatment outcome"""

    kind: str  # "predictor" | "outcome"
    name: str
    index: int

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "name": self.name, "index": self.index}


@dataclass(frozen=True)
class ColumnSelection:
    """Which predictors and pretreatment periods enter the matching matrix"""

    periods: Optional[List[int]] = None  # None -> all pretreatment periods
    predictors: Optional[List[str]] = None  # None -> no predictors

    @classmethod
    def outcomes_only(cls) -> "ColumnSelection":
        return cls(periods=None, predictors=[])

    @classmethod
    def predictors_only(cls, names: List[str]) -> "ColumnSelection":
        return cls(periods=[], predictors=list(names))

    def without_period(self, period: int, t0: int) -> "ColumnSelection":
        """Drop one pretreatment period (leave-one-period-out folds)"""
        periods = list(range(t0)) if self.periods is None else list(self.periods)
        return replace(self, periods=[p for p in periods if p != period])

    def resolved_periods(self, t0: int) -> List[int]:
        if self.periods is None:
            return list(range(t0))
        return [p for p in self.periods if p < t0]


@dataclass(frozen=True)
class MatchingMatrix:
    """Treated matching vector z1 (L) and donor matching matrix z0 (J x L)"""

    z1: np.ndarray
    z0: np.ndarray
    column_spec: List[ColumnRef]
    standardized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "z1", _frozen_array(self.z1, "z1", 1))
        z0 = np.array(self.z0, dtype=float)
        if z0.ndim == 1:
            z0 = z0.reshape(-1, 1)
        z0.setflags(write=False)
        object.__setattr__(self, "z0", z0)
        if self.z0.shape[1] != self.z1.shape[0]:
            raise PanelValidationError(
                f"z0 has {self.z0.shape[1]} columns but z1 has length {self.z1.shape[0]}"
            )
        if self.z1.shape[0] < 1:
            raise PanelValidationError("matching matrix needs at least one column")

    @property
    def n_donors(self) -> int:
        return self.z0.shape[0]

    @property
    def n_columns(self) -> int:
        return self.z1.shape[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "z1": self.z1.tolist(),
            "z0": self.z0.tolist(),
            "column_spec": [c.to_dict() for c in self.column_spec],
            "standardized": self.standardized,
        }
