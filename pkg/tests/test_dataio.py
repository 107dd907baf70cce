import numpy as np
import pytest

from bfma.dataio import AnalysisConfig, ParseError, content_id, read_dataset_csv


GOOD = "y,a,b\n1.0,0.5,2.0\n2.0,1.5,0.25\n0.5,-1.0,1.0\n1.5,0.0,0.5\n2.5,2.0,1.25\n"


class TestCsvContract:
    def test_first_column_is_default_outcome(self):
        data = read_dataset_csv(GOOD, AnalysisConfig(sigma2=1.0))
        assert data.names == ("a", "b")
        np.testing.assert_allclose(data.y, [1.0, 2.0, 0.5, 1.5, 2.5])

    def test_outcome_selected_by_name(self):
        data = read_dataset_csv(GOOD, AnalysisConfig(outcome="b", sigma2=1.0))
        assert data.names == ("y", "a")
        np.testing.assert_allclose(data.y, [2.0, 0.25, 1.0, 0.5, 1.25])

    def test_unknown_outcome_rejected(self):
        with pytest.raises(ParseError, match="outcome"):
            read_dataset_csv(GOOD, AnalysisConfig(outcome="zz", sigma2=1.0))

    def test_non_numeric_cell_rejected(self):
        with pytest.raises(ParseError):
            read_dataset_csv("y,a\n1.0,x\n2.0,3.0\n", AnalysisConfig(sigma2=1.0))

    def test_missing_values_rejected(self):
        with pytest.raises(ParseError, match="missing"):
            read_dataset_csv("y,a\n1.0,\n2.0,3.0\n", AnalysisConfig(sigma2=1.0))

    def test_single_column_rejected(self):
        with pytest.raises(ParseError, match="outcome column and at least one"):
            read_dataset_csv("y\n1.0\n2.0\n", AnalysisConfig(sigma2=1.0))

    def test_headerless_numbers_rejected(self):
        with pytest.raises(ParseError, match="header row required"):
            read_dataset_csv("1.0,2.0\n3.0,4.0\n5.0,6.0\n", AnalysisConfig(sigma2=1.0))

    def test_unknown_config_fields_rejected(self):
        with pytest.raises(ParseError, match="unknown config"):
            AnalysisConfig.from_dict({"mu": 0.1, "bogus": 1})


class TestContentId:
    def test_stable_and_sensitive(self):
        cfg = AnalysisConfig(sigma2=1.0)
        a = content_id(GOOD, cfg)
        assert a == content_id(GOOD, cfg)
        assert a != content_id(GOOD + "3.0,1.0,1.0\n", cfg)
        assert a != content_id(GOOD, AnalysisConfig(sigma2=1.0, mu=0.2))
