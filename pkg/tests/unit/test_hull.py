"""
Unit tests for the convex hull diagnostics
"""

import numpy as np
import pytest

from shared.models import HullQuery, HullVerdict, HullExperimentConfig, HullLPError
from services.hull.service import (
    EXPERIMENT_COLUMNS,
    hull_sample_experiment,
    in_convex_hull,
    minimal_hull_size,
    write_experiment_csv,
)

TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def _grid_l1_distance(z1, z0, step=0.01):
    """Smallest L1 distance from z1 to a simplex grid of combinations of three rows"""
    axis = np.arange(0.0, 1.0 + 1e-9, step)
    w1, w2 = np.meshgrid(axis, axis)
    keep = w1 + w2 <= 1.0 + 1e-9
    W = np.stack([w1[keep], w2[keep], 1.0 - w1[keep] - w2[keep]], axis=-1)
    return np.abs(z1 - W @ z0).sum(axis=-1).min()


class TestInConvexHull:
    """Test the feasibility LP"""

    def test_inside(self):
        """Test an interior point with its weights as certificate"""
        result = in_convex_hull(HullQuery(z1=[0.2, 0.2], z0=TRIANGLE))
        assert result.verdict is HullVerdict.INSIDE
        assert result.weights.sum() == pytest.approx(1.0)
        assert np.all(result.weights >= -1e-12)
        np.testing.assert_allclose(TRIANGLE.T @ result.weights, [0.2, 0.2], atol=1e-9)

    def test_vertex_is_inside(self):
        result = in_convex_hull(HullQuery(z1=[1.0, 0.0], z0=TRIANGLE))
        assert result.inside

    def test_outside_with_separating_hyperplane(self):
        """Test the dual certificate separates z1 from every donor"""
        z1 = np.array([1.0, 1.0])
        result = in_convex_hull(HullQuery(z1=z1, z0=TRIANGLE))

        assert result.verdict is HullVerdict.OUTSIDE
        assert result.objective == pytest.approx(1.0)
        assert result.weights is None
        assert result.normal @ z1 + result.offset > 0
        assert np.all(TRIANGLE @ result.normal + result.offset <= 1e-9)

    def test_single_donor(self):
        """Test J = 1: inside only at the donor itself"""
        assert in_convex_hull(HullQuery(z1=[2.0], z0=[[2.0]])).inside
        assert not in_convex_hull(HullQuery(z1=[2.5], z0=[[2.0]])).inside

    def test_scaling_invariance(self):
        """Test rescaling every vector keeps the verdict"""
        for z1 in ([0.2, 0.2], [0.6, 0.6]):
            base = in_convex_hull(HullQuery(z1=z1, z0=TRIANGLE))
            scaled = in_convex_hull(HullQuery(z1=10.0 * np.array(z1), z0=10.0 * TRIANGLE))
            assert base.verdict is scaled.verdict

    @pytest.mark.parametrize("seed", range(6))
    def test_agrees_with_grid(self, seed):
        """Test the LP optimum against a brute-force simplex grid"""
        rng = np.random.default_rng(seed)
        z0 = rng.normal(size=(3, 2))
        z1 = rng.normal(size=2)
        result = in_convex_hull(HullQuery(z1=z1, z0=z0))
        grid = _grid_l1_distance(z1, z0)

        assert result.objective <= grid + 1e-9
        assert grid - result.objective <= 0.01 * 2 * np.abs(z0).max() * 3

    def test_adding_donors_keeps_inside(self):
        """Test the hull never shrinks when a donor is added"""
        rng = np.random.default_rng(3)
        z0 = rng.normal(size=(12, 3))
        z1 = z0.mean(axis=0)
        verdicts = [in_convex_hull(HullQuery(z1=z1, z0=z0[:m])).inside for m in range(1, 13)]
        first = verdicts.index(True)
        assert all(verdicts[first:])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            HullQuery(z1=[1.0, 2.0, 3.0], z0=TRIANGLE)

    def test_lp_failure(self, mocker):
        """Test a solver failure surfaces as HullLPError"""
        failed = mocker.Mock(status=4, message="numerical difficulties", nit=7)
        mocker.patch("services.hull.service.linprog", return_value=failed)
        with pytest.raises(HullLPError) as info:
            in_convex_hull(HullQuery(z1=[0.2, 0.2], z0=TRIANGLE))
        assert info.value.status == 4


class TestMinimalHullSize:
    """Test the smallest donor prefix containing z1"""

    Z0 = np.array([5.0, 6.0, 7.0, 8.0, -1.0, 9.0, 10.0, 11.0, 12.0, 13.0]).reshape(-1, 1)

    def test_planted_size(self):
        """Test the first prefix with a donor below z1"""
        assert minimal_hull_size(np.array([0.0]), self.Z0, cap=10) == 5

    def test_first_donor_suffices(self):
        assert minimal_hull_size(np.array([5.0]), self.Z0, cap=10) == 1

    def test_censored(self):
        """Test None when the cap is reached first"""
        assert minimal_hull_size(np.array([0.0]), self.Z0, cap=4) is None
        assert minimal_hull_size(np.array([-5.0]), self.Z0, cap=10) is None

    def test_matches_linear_scan(self):
        """Test doubling plus bisection agrees with checking every prefix"""
        rng = np.random.default_rng(8)
        z0 = rng.normal(size=(40, 2))
        z1 = np.array([0.8, -0.3])
        scan = next(
            (m for m in range(1, 41) if in_convex_hull(HullQuery(z1=z1, z0=z0[:m])).inside),
            None,
        )
        assert minimal_hull_size(z1, z0, cap=40) == scan


class TestHullExperiment:
    """Test the minimal donor count experiment"""

    @pytest.fixture
    def config(self):
        return HullExperimentConfig(n_samples=5, max_controls=200, periods=[1, 2, 3], seed=0)

    def test_rows(self, config):
        """Test one row per period count with a median no smaller than two"""
        rows = hull_sample_experiment(config)
        assert [row.t0 for row in rows] == [1, 2, 3]
        assert all(len(row.minimal_sizes) == 5 for row in rows)
        assert all(2 <= row.median_min_controls <= 200 for row in rows)

    def test_medians_grow_with_periods(self, config):
        """Test matching more periods never needs fewer donors"""
        rows = hull_sample_experiment(config)
        medians = [row.median_min_controls for row in rows]
        assert medians == sorted(medians)
        for earlier, later in zip(rows, rows[1:]):
            assert all(a <= b for a, b in zip(earlier.minimal_sizes, later.minimal_sizes))

    def test_deterministic(self, config):
        first = hull_sample_experiment(config)
        second = hull_sample_experiment(config)
        assert [r.minimal_sizes for r in first] == [r.minimal_sizes for r in second]

    def test_censoring_is_filled(self):
        """Test censored samples count as the cap"""
        config = HullExperimentConfig(n_samples=3, max_controls=2, periods=[4], seed=1)
        row = hull_sample_experiment(config)[0]
        assert row.censored_fraction > 0
        assert max(row.minimal_sizes) == 2

    def test_csv(self, tmp_path, config):
        path = tmp_path / "hull_experiment.csv"
        write_experiment_csv(hull_sample_experiment(config), str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(EXPERIMENT_COLUMNS)
        assert len(lines) == 4
