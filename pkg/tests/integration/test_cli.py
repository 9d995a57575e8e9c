"""
Integration tests for the command-line interface
"""

import json

import pandas as pd
import pytest

from shared.models import SolverConvergenceError, STUDY_SETTINGS
from shared.models.schemas import EstimateResultSchema, PlaceboResultSchema
from services.simulation.commands import parse_settings

FAST = {"SYNTH_GRID_STEP": "0.5"}


@pytest.fixture
def two_donor_panel(one_predictor_panel, logistic_outcome, write_panel_csv):
    """Treated X=5 with donors at 6 and 7, nonlinear outcome"""
    return write_panel_csv(one_predictor_panel([6.0, 7.0], logistic_outcome))


@pytest.fixture
def small_csv(small_panel, write_panel_csv):
    data, _ = write_panel_csv(small_panel, "small")
    return data


def _panel_args(data, predictors=None, treated="A", t0="2"):
    args = ["--data", data, "--treated", treated, "--t0", t0]
    if predictors:
        args += ["--predictors", predictors]
    return args


@pytest.mark.integration
class TestEstimateCommand:
    """Test `estimate`"""

    def test_extrapolating_fit(self, runner, cli, two_donor_panel, tmp_path):
        """Test affine weights, intervals and both output files"""
        data, predictors = two_donor_panel
        result = runner.invoke(
            cli,
            ["estimate", *_panel_args(data, predictors), "--match", "predictors",
             "--method", "nsc", "--a-star", "0", "--b-star", "0", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert "estimate: treated=A method=nsc" in result.output

        payload = json.loads((tmp_path / "estimate.json").read_text())
        assert EstimateResultSchema().validate(payload) == {}
        assert payload["weights"] == pytest.approx({"B": 2.0, "C": -1.0}, abs=1e-8)
        assert payload["tuning"]["selected"] is False
        assert payload["effect"]["synthetic"][0] == pytest.approx(4.615673, abs=1e-5)
        assert payload["effect"]["ci_lower"] is not None
        assert payload["discrepancies"]["pairwise"] == pytest.approx(4.0, abs=1e-8)

        plot = pd.read_csv(tmp_path / "estimate_plot.csv")
        assert list(plot.columns) == ["period", "treated", "synthetic", "gap", "ci_lo", "ci_hi"]
        assert len(plot) == 2

    def test_t0_label_takes_precedence(self, runner, cli, two_donor_panel, tmp_path):
        """Test --t0 2 names period "2" (one pretreatment period), as the help says"""
        data, predictors = two_donor_panel
        result = runner.invoke(
            cli,
            ["estimate", *_panel_args(data, predictors, t0="2"), "--match", "predictors",
             "--method", "osc", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert json.loads((tmp_path / "estimate.json").read_text())["effect"]["t0"] == 1

        option = next(p for p in cli.commands["estimate"].params if p.name == "t0")
        assert "when no label matches" in option.help

    def test_simplex_fit(self, runner, cli, two_donor_panel, tmp_path):
        """Test OSC never searches and stays on the simplex"""
        data, predictors = two_donor_panel
        result = runner.invoke(
            cli,
            ["estimate", *_panel_args(data, predictors), "--match", "predictors",
             "--method", "osc", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads((tmp_path / "estimate.json").read_text())
        assert payload["weights"] == pytest.approx({"B": 1.0, "C": 0.0}, abs=1e-6)
        assert payload["pre_rmspe"] == pytest.approx(1.0, abs=1e-6)
        assert payload["tuning"]["a"] == 0.0

    def test_auto_tuning(self, runner, cli, small_csv, tmp_path):
        """Test omitted tuning values are searched"""
        result = runner.invoke(
            cli,
            ["estimate", *_panel_args(small_csv, treated="u0", t0="t6"), "--out", str(tmp_path)],
            env=FAST,
        )
        assert result.exit_code == 0, result.output
        tuning = json.loads((tmp_path / "estimate.json").read_text())["tuning"]
        assert tuning["selected"] is True
        assert tuning["a_star"] in (0.0, 0.5, 1.0)
        assert tuning["scheme"] == "control_units"


@pytest.mark.integration
class TestPlaceboCommand:
    def test_ranking_files(self, runner, cli, small_panel, small_csv, tmp_path):
        """Test one ratio row per unit and a consistent p-value"""
        result = runner.invoke(
            cli,
            ["placebo", *_panel_args(small_csv, treated="u0", t0="t6"),
             "--a-star", "0.2", "--b-star", "0.2", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output

        frame = pd.read_csv(tmp_path / "placebo.csv")
        assert list(frame.columns) == ["unit", "pre_rmspe", "post_rmspe", "ratio"]
        assert list(frame["unit"]) == small_panel.unit_ids

        payload = json.loads((tmp_path / "placebo.json").read_text())
        assert PlaceboResultSchema().validate(payload) == {}
        assert payload["tuning_policy"] == "reuse"
        assert payload["p_value"] == pytest.approx(payload["treated_rank"] / payload["n_valid"])


@pytest.fixture
def two_unit_csv(make_panel, write_panel_csv):
    """One treated unit and a single donor"""
    data, _ = write_panel_csv(make_panel(n_units=2), "pair")
    return data


@pytest.mark.integration
class TestSingleDonor:
    """Test commands on a panel whose weights are forced"""

    def test_estimate_with_auto_tuning(self, runner, cli, two_unit_csv, tmp_path):
        """Test auto tuning does not cross-validate a single donor"""
        result = runner.invoke(
            cli,
            ["estimate", *_panel_args(two_unit_csv, treated="u0", t0="t6"), "--out", str(tmp_path)],
            env=FAST,
        )
        assert result.exit_code == 0, result.output

        payload = json.loads((tmp_path / "estimate.json").read_text())
        assert EstimateResultSchema().validate(payload) == {}
        assert payload["weights"] == pytest.approx({"u1": 1.0})
        assert payload["tuning"]["selected"] is False
        assert (payload["tuning"]["a_star"], payload["tuning"]["b_star"]) == (0.0, 0.0)

        plot = pd.read_csv(tmp_path / "estimate_plot.csv")
        assert plot["ci_lo"].isna().all()

    def test_placebo_with_auto_tuning(self, runner, cli, two_unit_csv, tmp_path):
        """Test the two-unit permutation p-value is one of 1/2 or 1"""
        result = runner.invoke(
            cli,
            ["placebo", *_panel_args(two_unit_csv, treated="u0", t0="t6"), "--out", str(tmp_path)],
            env=FAST,
        )
        assert result.exit_code == 0, result.output

        payload = json.loads((tmp_path / "placebo.json").read_text())
        assert PlaceboResultSchema().validate(payload) == {}
        assert payload["n_valid"] == 2
        assert payload["p_value"] in (0.5, 1.0)


@pytest.mark.integration
class TestHullCommand:
    def test_outside(self, runner, cli, two_donor_panel, tmp_path):
        """Test a treated unit beyond every donor"""
        data, predictors = two_donor_panel
        result = runner.invoke(
            cli,
            ["hull", *_panel_args(data, predictors), "--match", "predictors", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert "outside objective=1" in result.output
        payload = json.loads((tmp_path / "hull.json").read_text())
        assert payload["verdict"] == "outside"
        assert payload["weights"] is None
        assert payload["normal"] is not None

    def test_inside(self, runner, cli, one_predictor_panel, write_panel_csv, tmp_path):
        """Test weights keyed by donor label"""
        data, predictors = write_panel_csv(one_predictor_panel([2.0, 6.0], names=["A", "D", "B"]))
        result = runner.invoke(
            cli,
            ["hull", *_panel_args(data, predictors), "--match", "predictors", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads((tmp_path / "hull.json").read_text())
        assert payload["verdict"] == "inside"
        assert payload["weights"] == pytest.approx({"D": 0.25, "B": 0.75}, abs=1e-7)

    def test_experiment(self, runner, cli, tmp_path):
        result = runner.invoke(
            cli,
            ["hull", "--experiment", "--n-samples", "3", "--max-controls", "50",
             "--periods", "1,2", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(tmp_path / "hull_experiment.csv")
        assert list(frame["t0"]) == [1, 2]

    def test_bad_periods(self, runner, cli, tmp_path):
        result = runner.invoke(cli, ["hull", "--experiment", "--periods", "1,x", "--out", str(tmp_path)])
        assert result.exit_code == 2
        assert "error: validation:" in result.output


@pytest.mark.integration
class TestSimulateCommand:
    ARGS = ["simulate", "--settings", "5,5,1", "--n-param-sets", "1", "--n-shock-draws", "2",
            "--methods", "osc,nsc"]

    def test_deterministic_table(self, runner, cli, tmp_path):
        """Test the same seed writes the same table"""
        first, second = tmp_path / "a", tmp_path / "b"
        for out in (first, second):
            result = runner.invoke(cli, [*self.ARGS, "--out", str(out)], env=FAST)
            assert result.exit_code == 0, result.output

        text = (first / "simulation.csv").read_text()
        assert text == (second / "simulation.csv").read_text()
        lines = text.splitlines()
        assert lines[0] == "J,T0,r,method,bias,sd,coverage"
        assert lines[1].startswith("5,5,1,osc,")
        assert lines[1].endswith(",")
        assert lines[2].startswith("5,5,1,nsc,")

    def test_bad_setting(self, runner, cli, tmp_path):
        result = runner.invoke(cli, ["simulate", "--settings", "5,5", "--out", str(tmp_path)])
        assert result.exit_code == 2
        assert "J,T0,r" in result.output

    @pytest.mark.parametrize("scale", ["paper", "full"])
    def test_scale_names(self, runner, cli, tmp_path, scale):
        """Test --scale paper and its full alias run with overridden counts"""
        result = runner.invoke(
            cli, [*self.ARGS, "--scale", scale, "--out", str(tmp_path)], env=FAST
        )
        assert result.exit_code == 0, result.output
        assert "settings=1" in result.output

    @pytest.mark.parametrize("keyword", ["paper", "PAPER", "all"])
    def test_paper_settings_keyword(self, keyword):
        """Test the keyword expands to the eight study settings"""
        triples = parse_settings([keyword])
        assert triples == STUDY_SETTINGS
        assert len(triples) == 8

    def test_settings_mix_keyword_and_triples(self):
        triples = parse_settings(["5,5,1;paper"])
        assert triples[0] == (5, 5, 1)
        assert triples[1:] == STUDY_SETTINGS


@pytest.mark.integration
class TestRobustCommand:
    """Test `robust`"""

    def _run(self, runner, cli, small_csv, tmp_path, *extra):
        return runner.invoke(
            cli,
            ["robust", *_panel_args(small_csv, treated="u0", t0="t6"),
             "--a-star", "0.2", "--b-star", "0.2", "--out", str(tmp_path), *extra],
        )

    def test_backdate(self, runner, cli, small_csv, tmp_path):
        result = self._run(runner, cli, small_csv, tmp_path, "--mode", "backdate", "--new-t0", "t3")
        assert result.exit_code == 0, result.output
        assert "t0=2" in result.output
        frame = pd.read_csv(tmp_path / "robust_backdate.csv")
        assert list(frame.columns) == ["period", "treated", "synthetic", "gap"]
        assert len(frame) == 8

    def test_window(self, runner, cli, small_csv, tmp_path):
        result = self._run(runner, cli, small_csv, tmp_path, "--mode", "window", "--first-period", "t2")
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(tmp_path / "robust_window.csv")
        assert list(frame["period"]) == [f"t{k}" for k in range(2, 9)]

    def test_leave_one_out(self, runner, cli, small_panel, small_csv, tmp_path):
        result = self._run(runner, cli, small_csv, tmp_path, "--mode", "loo")
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(tmp_path / "robust_loo.csv")
        assert list(frame.columns) == ["excluded", "period", "treated", "synthetic", "gap"]
        assert sorted(set(frame["excluded"])) == small_panel.donor_ids
        assert len(frame) == small_panel.n_donors * small_panel.n_periods

    def test_backdate_needs_new_t0(self, runner, cli, small_csv, tmp_path):
        result = self._run(runner, cli, small_csv, tmp_path, "--mode", "backdate")
        assert result.exit_code == 2
        assert "--new-t0" in result.output

    def test_backdate_must_precede_t0(self, runner, cli, small_csv, tmp_path):
        result = self._run(runner, cli, small_csv, tmp_path, "--mode", "backdate", "--new-t0", "t7")
        assert result.exit_code == 2


@pytest.mark.integration
class TestErrorsAndConfig:
    """Test exit codes and per-command defaults"""

    def test_missing_required_option(self, runner, cli, tmp_path):
        result = runner.invoke(cli, ["estimate", "--treated", "A", "--t0", "2", "--out", str(tmp_path)])
        assert result.exit_code == 2
        assert "error: validation: missing required option(s): --data" in result.output

    def test_missing_file(self, runner, cli, tmp_path):
        result = runner.invoke(
            cli, ["estimate", *_panel_args(str(tmp_path / "absent.csv")), "--out", str(tmp_path)]
        )
        assert result.exit_code == 4
        assert "error: io:" in result.output

    def test_unknown_treated(self, runner, cli, small_csv, tmp_path):
        result = runner.invoke(
            cli, ["estimate", *_panel_args(small_csv, treated="zz", t0="t6"), "--out", str(tmp_path)]
        )
        assert result.exit_code == 2
        assert "unknown unit 'zz'" in result.output

    def test_solver_failure(self, runner, cli, small_csv, tmp_path, mocker):
        mocker.patch(
            "services.estimators.service.solve",
            side_effect=SolverConvergenceError("weight solver did not converge", 10, 1.0, 1.0),
        )
        result = runner.invoke(
            cli,
            ["estimate", *_panel_args(small_csv, treated="u0", t0="t6"), "--method", "osc",
             "--out", str(tmp_path)],
        )
        assert result.exit_code == 3
        assert "error: solver:" in result.output

    def test_config_defaults_and_flag_override(self, runner, cli, two_donor_panel, tmp_path):
        """Test config values act as defaults that flags still override"""
        data, predictors = two_donor_panel
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"estimate": {"method": "osc", "match": "predictors"}}))
        args = ["--config", str(config), "estimate", *_panel_args(data, predictors),
                "--out", str(tmp_path)]

        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        assert "method=osc" in result.output

        result = runner.invoke(cli, [*args, "--method", "nsc", "--a-star", "0", "--b-star", "0"])
        assert result.exit_code == 0, result.output
        assert "method=nsc" in result.output

    def test_invalid_config(self, runner, cli, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"fit": {}}))
        result = runner.invoke(cli, ["--config", str(config), "hull", "--experiment"])
        assert result.exit_code == 2
        assert "error: config:" in result.output

    def test_log_level_option(self, runner, cli, two_donor_panel, tmp_path):
        data, predictors = two_donor_panel
        result = runner.invoke(
            cli,
            ["--log-level", "debug", "hull", *_panel_args(data, predictors), "--match", "predictors",
             "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
