"""
Unit tests for panel ingestion and matching matrices
"""

import numpy as np
import pytest

from shared.models import (
    ColumnSelection,
    PanelParseError,
    PanelValidationError,
    EstimationInputError,
)
from services.panel.service import (
    build_matching,
    load_panel,
    resolve_period,
    selection_for,
    write_panel,
)


@pytest.fixture
def panel_csv(tmp_path):
    def write(text, name="panel.csv"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


OUTCOMES = "unit,2001,2002,2003\nA,1,2,3\nB,2,3,4\nC,0.5,1.5,2.5\n"


class TestLoadPanel:
    """Test the wide CSV reader"""

    def test_load_by_label(self, panel_csv):
        """Test t0 given as the first treated period label"""
        panel = load_panel(panel_csv(OUTCOMES), "B", "2003")
        assert panel.unit_ids == ["A", "B", "C"]
        assert panel.time_labels == ["2001", "2002", "2003"]
        assert panel.treated_id == "B"
        assert panel.t0 == 2
        np.testing.assert_array_equal(panel.outcomes[2], [0.5, 1.5, 2.5])

    def test_load_by_count(self, panel_csv):
        """Test t0 given as a count of pretreatment periods"""
        text = "unit,p1,p2,p3\nA,1,2,3\nB,2,3,4\n"
        assert load_panel(panel_csv(text), "A", 1).t0 == 1

    def test_unknown_treated(self, panel_csv):
        """Test an unknown treated label"""
        with pytest.raises(PanelValidationError, match="unknown unit 'Z'"):
            load_panel(panel_csv(OUTCOMES), "Z", "2003")

    def test_t0_past_last_period(self, panel_csv):
        """Test no posttreatment period is rejected"""
        with pytest.raises(PanelValidationError):
            load_panel(panel_csv(OUTCOMES), "A", 3)

    def test_non_numeric_cell(self, panel_csv):
        """Test parse errors carry row and column"""
        text = "unit,2001,2002\nA,1,abc\nB,2,3\n"
        with pytest.raises(PanelParseError) as info:
            load_panel(panel_csv(text), "A", "2002")
        assert info.value.row == 2
        assert info.value.column == "2002"

    def test_blank_cell(self, panel_csv):
        """Test missing outcomes are not imputed"""
        text = "unit,2001,2002\nA,1,\nB,2,3\n"
        with pytest.raises(PanelValidationError, match="missing value for unit 'A'"):
            load_panel(panel_csv(text), "A", "2002")

    def test_duplicate_unit(self, panel_csv):
        """Test duplicate unit rows"""
        text = "unit,2001,2002\nA,1,2\nA,2,3\n"
        with pytest.raises(PanelValidationError, match="duplicate unit id 'A'"):
            load_panel(panel_csv(text), "A", "2002")

    def test_empty_file(self, panel_csv):
        """Test an empty file is a parse error"""
        with pytest.raises(PanelParseError):
            load_panel(panel_csv(""), "A", 1)

    def test_missing_file(self, tmp_path):
        """Test a missing file surfaces as an OS error"""
        with pytest.raises(OSError):
            load_panel(str(tmp_path / "absent.csv"), "A", 1)

    def test_predictors_are_aligned(self, panel_csv):
        """Test predictor rows are matched by unit label, not position"""
        predictors = panel_csv("unit,x,z\nC,30,3\nA,10,1\nB,20,2\n", "pred.csv")
        panel = load_panel(panel_csv(OUTCOMES), "A", "2003", predictors)
        assert panel.predictor_names == ["x", "z"]
        np.testing.assert_array_equal(panel.predictors[:, 0], [10.0, 20.0, 30.0])

    def test_predictor_units_must_match(self, panel_csv):
        """Test predictor files cover exactly the outcome units"""
        predictors = panel_csv("unit,x\nA,1\nB,2\n", "pred.csv")
        with pytest.raises(PanelValidationError, match="differ"):
            load_panel(panel_csv(OUTCOMES), "A", "2003", predictors)

    def test_unsupported_layout(self, panel_csv):
        """Test only the wide layout is accepted"""
        with pytest.raises(PanelValidationError, match="layout"):
            load_panel(panel_csv(OUTCOMES), "A", "2003", layout="long")

    def test_write_then_load(self, tmp_path, small_panel):
        """Test write_panel output is accepted by load_panel"""
        path = str(tmp_path / "out.csv")
        write_panel(small_panel, path)
        loaded = load_panel(path, small_panel.treated_id, small_panel.t0)
        assert loaded.unit_ids == small_panel.unit_ids
        np.testing.assert_allclose(loaded.outcomes, small_panel.outcomes)


class TestResolvePeriod:
    """Test treatment time resolution"""

    def test_label_wins_over_count(self):
        """Test a label that looks like a number is read as a label, not a count"""
        assert resolve_period(["1", "2", "3"], "2") == 1

    def test_count_when_no_label_matches(self):
        assert resolve_period(["1990", "1991", "1992"], "2") == 2

    def test_unknown_label(self):
        """Test a non-numeric unknown label"""
        with pytest.raises(PanelValidationError, match="unknown time label"):
            resolve_period(["a", "b"], "c")


class TestBuildMatching:
    """Test matching matrix construction"""

    def test_outcomes_only(self, small_panel):
        """Test default matching uses every pretreatment outcome"""
        m = build_matching(small_panel)
        assert m.n_columns == small_panel.t0
        assert m.n_donors == small_panel.n_donors
        np.testing.assert_array_equal(m.z1, small_panel.treated_outcomes[: small_panel.t0])
        assert [c.kind for c in m.column_spec] == ["outcome"] * small_panel.t0

    def test_predictors_then_outcomes(self, one_predictor_panel):
        """Test predictor columns come before outcome columns"""
        panel = one_predictor_panel([6.0, 7.0])
        m = build_matching(panel, ColumnSelection(periods=None, predictors=["x"]))
        assert [c.kind for c in m.column_spec] == ["predictor", "outcome"]
        np.testing.assert_allclose(m.z1, [5.0, 3.0])
        np.testing.assert_allclose(m.z0[:, 0], [6.0, 7.0])

    def test_posttreatment_period_rejected(self, small_panel):
        """Test matching on a posttreatment outcome"""
        with pytest.raises(PanelValidationError, match="not pretreatment"):
            build_matching(small_panel, ColumnSelection(periods=[small_panel.t0]))

    def test_unknown_predictor(self, small_panel):
        """Test unknown predictor names"""
        with pytest.raises(PanelValidationError, match="unknown predictors"):
            build_matching(small_panel, ColumnSelection(predictors=["gdp"]))

    def test_empty_selection(self, one_predictor_panel):
        """Test a selection with no columns"""
        with pytest.raises(EstimationInputError, match="empty"):
            build_matching(one_predictor_panel([6.0]), ColumnSelection(periods=[], predictors=[]))

    def test_standardize(self, small_panel):
        """Test every column has unit sample standard deviation"""
        m = build_matching(small_panel, standardize=True)
        stacked = np.vstack([m.z1, m.z0])
        np.testing.assert_allclose(stacked.std(axis=0, ddof=1), 1.0)
        assert m.standardized

    def test_standardize_constant_column(self, one_predictor_panel):
        """Test a zero-variance column cannot be standardized"""
        panel = one_predictor_panel([5.0, 5.0])
        with pytest.raises(EstimationInputError, match="zero-variance"):
            build_matching(panel, ColumnSelection.predictors_only(["x"]), standardize=True)


class TestSelectionFor:
    """Test named matching modes"""

    def test_modes(self, one_predictor_panel):
        """Test each mode's predictor and period choice"""
        panel = one_predictor_panel([6.0, 7.0])
        assert selection_for(panel, "outcomes") == ColumnSelection.outcomes_only()
        assert selection_for(panel, "predictors").resolved_periods(panel.t0) == []
        both = selection_for(panel, "both")
        assert both.predictors == ["x"] and both.periods is None

    def test_predictor_mode_needs_predictors(self, small_panel):
        """Test predictor matching without a predictor file"""
        with pytest.raises(PanelValidationError, match="needs a predictor file"):
            selection_for(small_panel, "both")

    def test_unknown_mode(self, small_panel):
        """Test an unknown mode name"""
        with pytest.raises(PanelValidationError):
            selection_for(small_panel, "all")
