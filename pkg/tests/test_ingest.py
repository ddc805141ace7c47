"""Tests for CSV ingestion."""

from __future__ import annotations

import pytest
from numpy.testing import assert_allclose

from lib.errors import EmptySampleError, InputError
from lib.ingest import read_column


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestReadColumn:

    def test_single_column_without_header(self, tmp_path):
        data = read_column(_write(tmp_path, "1.5\n2\n3e2\n"))
        assert_allclose(data.values, [1.5, 2.0, 300.0])
        assert data.name == "0"

    def test_named_column(self, tmp_path):
        data = read_column(_write(tmp_path, "date,loss\n2020-01-01,4.5\n2020-01-02,7\n"), "loss")
        assert_allclose(data.values, [4.5, 7.0])
        assert data.name == "loss"

    def test_column_by_position(self, tmp_path):
        data = read_column(_write(tmp_path, "1,10\n2,20\n"), "1")
        assert_allclose(data.values, [10.0, 20.0])

    def test_blank_lines_skipped(self, tmp_path):
        data = read_column(_write(tmp_path, "value\n1\n\n2\n\n3\n"))
        assert_allclose(data.values, [1.0, 2.0, 3.0])
        assert data.blank_lines == 2

    def test_non_numeric_cell_reports_line(self, tmp_path):
        with pytest.raises(InputError, match="Line 4"):
            read_column(_write(tmp_path, "value\n1\n2\nabc\n5\n"))

    def test_comma_decimal_rejected(self, tmp_path):
        with pytest.raises(InputError, match="Line 3"):
            read_column(_write(tmp_path, "value\n1\n\"1,5\"\n"))

    def test_non_finite_rejected(self, tmp_path):
        with pytest.raises(InputError, match="Line 2"):
            read_column(_write(tmp_path, "value\ninf\n2\n"))

    def test_missing_column(self, tmp_path):
        with pytest.raises(InputError, match="not found"):
            read_column(_write(tmp_path, "a,b\n1,2\n"), "c")

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="not found"):
            read_column(str(tmp_path / "absent.csv"))

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptySampleError):
            read_column(_write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        data = read_column(_write(tmp_path, "value\n"))
        assert data.values.size == 0
