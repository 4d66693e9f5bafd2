"""
Tests for result tables and files
"""
import json

import numpy as np
import pytest

from heatnet.errors import OutputError
from heatnet.store import ResultStore, ResultTable, format_value, versions


class TestFormatValue:
    def test_floats_use_significant_digits(self):
        assert format_value(1.0 / 3.0, 6) == "0.333333"
        assert format_value(np.float64(12345.678), 4) == "1.235e+04"

    def test_special_values(self):
        assert format_value(float("nan")) == "nan"
        assert format_value(float("inf")) == "inf"
        assert format_value(-float("inf")) == "-inf"
        assert format_value(-0.0) == "0"

    def test_booleans_and_integers(self):
        assert format_value(True) == "true"
        assert format_value(np.bool_(False)) == "false"
        assert format_value(np.int64(7)) == "7"

    def test_text_is_quoted_when_needed(self):
        assert format_value("unstable") == "unstable"
        assert format_value("a,b") == '"a,b"'
        assert format_value(None) == ""


class TestResultTable:
    def test_csv_layout(self):
        table = ResultTable(
            columns=["omega_d", "r_full", "reason"],
            rows=[{"omega_d": 1.5, "r_full": 0.25, "reason": ""}, {"omega_d": 2.0, "reason": "unstable"}],
            metadata={"tolerance": 1e-7, "config_hash": "abc"},
        )
        lines = table.to_csv(6).splitlines()
        assert lines[:3] == ["# config_hash: abc", "# tolerance: 1e-07", "# rows: 2"]
        assert lines[3] == "omega_d,r_full,reason"
        assert lines[4] == "1.5,0.25,"
        assert lines[5] == "2,nan,unstable"
        assert table.column("omega_d") == [1.5, 2.0]
        assert len(table) == 2


class TestResultStore:
    def test_json_is_sorted_and_nan_free(self, tmp_path):
        store = ResultStore(str(tmp_path))
        path = store.write_json("report", {"b": float("nan"), "a": np.array([1.0, np.inf]), "c": np.bool_(True)})
        text = path.read_text()
        assert json.loads(text) == {"a": [1.0, None], "b": None, "c": True}
        assert text.index('"a"') < text.index('"b"')

    def test_table_written_with_precision(self, tmp_path):
        store = ResultStore(str(tmp_path / "nested" / "out"), precision=6)
        table = ResultTable(columns=["x"], rows=[{"x": 2.0 / 3.0}])
        path = store.write_table("values", table)
        assert path.name == "values.csv"
        assert path.read_text().splitlines()[-1] == "0.666667"

    def test_gnuplot_map_script(self, tmp_path):
        store = ResultStore(str(tmp_path))
        table = ResultTable(columns=["omega_d", "c0", "r_full"])
        text = store.write_gnuplot("rectification-map", table, "omega_d", "c0", "r_full").read_text()
        assert "splot 'rectification-map.csv' using 1:2:3" in text
        assert "set datafile separator ','" in text

    def test_gnuplot_line_script(self, tmp_path):
        store = ResultStore(str(tmp_path))
        table = ResultTable(columns=["t3", "e_dot", "a1"])
        text = store.write_gnuplot("transistor-static", table, "t3", "a1").read_text()
        assert "plot 'transistor-static.csv' using 1:3" in text

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OutputError) as info:
            ResultStore(str(blocker / "out"))
        assert info.value.exit_code == 5

    def test_versions(self):
        assert set(versions()) == {"heatnet", "numpy", "scipy"}
