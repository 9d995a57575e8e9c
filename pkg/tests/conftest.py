"""
Pytest configuration and fixtures
"""

import logging
import os
import sys

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

# Add the backend directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "backend"))

from shared.models import PanelData  # noqa: E402


def logistic(x):
    """Nonlinear outcome used in the two-donor interpolation examples"""
    return 5.0 / (1.0 + np.exp(3.0 - np.asarray(x, dtype=float)))


def linear(x):
    return 0.6 * np.asarray(x, dtype=float)


@pytest.fixture
def logistic_outcome():
    return logistic


@pytest.fixture
def one_predictor_panel():
    """
    Factory: treated A at X=5 plus donors with the given X values.

    Outcomes are outcome_fn(X) in both of two periods; t0 = 1.
    """

    def build(donor_x, outcome_fn=linear, names=None):
        xs = np.array([5.0] + list(donor_x))
        names = names or ["A"] + [chr(ord("B") + i) for i in range(len(donor_x))]
        y = outcome_fn(xs)
        return PanelData(
            unit_ids=names,
            time_labels=["1", "2"],
            outcomes=np.column_stack([y, y]),
            treated_index=0,
            t0=1,
            predictors=xs.reshape(-1, 1),
            predictor_names=["x"],
        )

    return build


def factor_panel(n_units=6, n_periods=8, t0=5, noise=0.1, seed=0, effect=0.0, rank=2):
    """Small interactive fixed effects panel; unit 0 treated"""
    rng = np.random.default_rng(seed)
    loadings = rng.uniform(0.0, 2.0, size=(n_units, rank))
    factors = rng.normal(1.0, 0.5, size=(n_periods, rank))
    outcomes = loadings @ factors.T + noise * rng.standard_normal((n_units, n_periods))
    outcomes[0, t0:] += effect
    return PanelData(
        unit_ids=[f"u{i}" for i in range(n_units)],
        time_labels=[f"t{t + 1}" for t in range(n_periods)],
        outcomes=outcomes,
        treated_index=0,
        t0=t0,
    )


@pytest.fixture
def make_panel():
    return factor_panel


@pytest.fixture
def small_panel():
    return factor_panel()


@pytest.fixture
def exact_panel():
    """
    Zero-noise rank-2 panel: every unit is an exact affine combination of any
    three others, so pretreatment fits are exact
    """
    return factor_panel(n_units=6, n_periods=8, t0=4, noise=0.0, seed=3)


@pytest.fixture
def write_panel_csv(tmp_path):
    """Write a wide outcome (and optional predictor) CSV; returns the paths"""

    def write(panel: PanelData, name="panel"):
        data = tmp_path / f"{name}.csv"
        frame = pd.DataFrame(panel.outcomes, columns=panel.time_labels)
        frame.insert(0, "unit", panel.unit_ids)
        frame.to_csv(data, index=False, float_format="%.17g")

        predictors = None
        if panel.predictors is not None:
            predictors = tmp_path / f"{name}_predictors.csv"
            pred = pd.DataFrame(panel.predictors, columns=panel.predictor_names)
            pred.insert(0, "unit", panel.unit_ids)
            pred.to_csv(predictors, index=False, float_format="%.17g")
        return str(data), None if predictors is None else str(predictors)

    return write


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def cli():
    from app import create_cli

    return create_cli()


@pytest.fixture(autouse=True)
def restore_root_logging():
    """setup_logging replaces root handlers; put them back after each test"""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)
