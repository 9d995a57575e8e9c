"""
Panel Ingestion and Matching Service
"""

import logging
from typing import Optional, List, Tuple, Union

import numpy as np
import pandas as pd

from shared.models import (
    PanelData,
    MatchingMatrix,
    ColumnRef,
    ColumnSelection,
    PanelParseError,
    PanelValidationError,
    EstimationInputError,
)

logger = logging.getLogger(__name__)

SUPPORTED_LAYOUTS = ("wide",)


def _read_wide_table(path: str) -> Tuple[List[str], List[str], np.ndarray]:
    """
    Read "unit,<c1>,...,<cm>" with one row per unit into (header, unit ids, values)
    """
    try:
        raw = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as e:
        raise PanelParseError(f"{path} is empty") from e
    except pd.errors.ParserError as e:
        raise PanelParseError(f"malformed CSV {path}: {e}") from e

    if raw.shape[0] < 2 or raw.shape[1] < 2:
        raise PanelParseError(f"{path} needs a header row, at least one unit row and one value column")

    header = [str(h).strip() for h in raw.iloc[0, 1:]]
    body = raw.iloc[1:].reset_index(drop=True)
    unit_ids = [str(u).strip() if not pd.isna(u) else "" for u in body.iloc[:, 0]]

    for row, unit in enumerate(unit_ids):
        if not unit:
            raise PanelValidationError(f"missing unit label in {path} (row {row + 2})")

    cells = body.iloc[:, 1:].fillna("").astype(str).apply(lambda col: col.str.strip())
    blank = cells == ""
    if blank.to_numpy().any():
        row, col = np.argwhere(blank.to_numpy())[0]
        raise PanelValidationError(
            f"missing value for unit {unit_ids[row]!r} at column {header[col]!r} in {path} "
            f"(row {row + 2})"
        )

    numeric = cells.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().to_numpy()
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise PanelParseError(
            f"non-numeric value {cells.iat[row, col]!r} in {path}",
            row=int(row) + 2,
            column=header[col],
        )

    return header, unit_ids, numeric.to_numpy(dtype=float)


def resolve_period(time_labels: List[str], value: Union[str, int]) -> int:
    """
    Map a treatment time to the number of periods before it.

    A value equal to a time label names the first treated period; otherwise it
    must be an integer count of pretreatment periods.
    """
    text = str(value).strip()
    if text in time_labels:
        return time_labels.index(text)
    try:
        return int(text)
    except ValueError:
        raise PanelValidationError(
            f"unknown time label {text!r}; expected one of the panel's labels or an integer"
        ) from None


def resolve_unit(unit_ids: List[str], value: Union[str, int]) -> int:
    """Index of a unit label"""
    text = str(value).strip()
    if text not in unit_ids:
        raise PanelValidationError(f"unknown unit {text!r}")
    return unit_ids.index(text)


def load_panel(
    path: str,
    treated: Union[str, int],
    t0: Union[str, int],
    predictors_path: Optional[str] = None,
    layout: str = "wide",
) -> PanelData:
    """
    Load a wide outcome CSV (and optional predictor CSV) into a validated panel
    """
    if layout not in SUPPORTED_LAYOUTS:
        raise PanelValidationError(f"unsupported layout {layout!r}; only 'wide' is accepted")

    time_labels, unit_ids, outcomes = _read_wide_table(path)

    predictors = None
    predictor_names: List[str] = []
    if predictors_path:
        predictor_names, predictor_units, values = _read_wide_table(predictors_path)
        if len(set(predictor_units)) != len(predictor_units):
            raise PanelValidationError(f"duplicate unit id in {predictors_path}")
        if set(predictor_units) != set(unit_ids):
            missing = sorted(set(unit_ids) ^ set(predictor_units))
            raise PanelValidationError(
                f"predictor file units differ from outcome file units: {missing[:5]}"
            )
        order = [predictor_units.index(u) for u in unit_ids]
        predictors = values[order]

    panel = PanelData(
        unit_ids=unit_ids,
        time_labels=time_labels,
        outcomes=outcomes,
        treated_index=resolve_unit(unit_ids, treated),
        t0=resolve_period(time_labels, t0),
        predictors=predictors,
        predictor_names=predictor_names,
    )

    logger.info(
        f"Panel loaded from {path}: N={panel.n_units}, T={panel.n_periods}, "
        f"t0={panel.t0}, k={panel.n_predictors}"
    )
    return panel


def write_panel(panel: PanelData, path: str, predictors_path: Optional[str] = None):
    """
    Write a panel in the wide layout accepted by load_panel
    """
    frame = pd.DataFrame(panel.outcomes, columns=panel.time_labels)
    frame.insert(0, "unit", panel.unit_ids)
    frame.to_csv(path, index=False, encoding="utf-8")

    if predictors_path and panel.predictors is not None:
        pred = pd.DataFrame(panel.predictors, columns=panel.predictor_names)
        pred.insert(0, "unit", panel.unit_ids)
        pred.to_csv(predictors_path, index=False, encoding="utf-8")

    logger.info(f"Panel written to {path}")


def build_matching(
    panel: PanelData,
    selection: Optional[ColumnSelection] = None,
    standardize: bool = False,
) -> MatchingMatrix:
    """
    Build (z1, z0) from the selected predictors and pretreatment outcomes
    """
    selection = selection or ColumnSelection.outcomes_only()

    names = list(selection.predictors or [])
    unknown = [n for n in names if n not in panel.predictor_names]
    if unknown:
        raise PanelValidationError(f"unknown predictors {unknown}")

    periods = list(range(panel.t0)) if selection.periods is None else list(selection.periods)
    late = [p for p in periods if not 0 <= p < panel.t0]
    if late:
        raise PanelValidationError(
            f"matching periods {late} are not pretreatment (t0={panel.t0})"
        )

    columns = [
        ColumnRef("predictor", name, panel.predictor_names.index(name)) for name in names
    ] + [ColumnRef("outcome", panel.time_labels[p], p) for p in periods]
    if not columns:
        raise EstimationInputError("empty matching selection")

    data = np.column_stack(
        [
            panel.predictors[:, c.index] if c.kind == "predictor" else panel.outcomes[:, c.index]
            for c in columns
        ]
    )

    if standardize:
        scale = data.std(axis=0, ddof=1)
        flat = np.flatnonzero(scale <= 0)
        if flat.size:
            col = columns[flat[0]]
            raise EstimationInputError(f"cannot standardize zero-variance column {col.kind}:{col.name}")
        data = data / scale

    return MatchingMatrix(
        z1=data[panel.treated_index],
        z0=data[panel.donor_indices],
        column_spec=columns,
        standardized=standardize,
    )


MATCH_MODES = ("outcomes", "predictors", "both")


def selection_for(panel: PanelData, match: str = "outcomes") -> ColumnSelection:
    """Column selection for a named matching mode"""
    if match not in MATCH_MODES:
        raise PanelValidationError(f"unknown matching mode {match!r}; expected one of {MATCH_MODES}")
    if match == "outcomes":
        return ColumnSelection.outcomes_only()
    if not panel.predictor_names:
        raise PanelValidationError(f"matching mode {match!r} needs a predictor file")
    if match == "predictors":
        return ColumnSelection.predictors_only(panel.predictor_names)
    return ColumnSelection(periods=None, predictors=list(panel.predictor_names))
