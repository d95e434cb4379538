"""
Tests for TSV output with a provenance header.
"""

import io
import math
import os
import sys

import numpy as np
import pytest

# Add the package directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'fountain_lab'))

from core.tsv import TsvFormatError, format_tsv, parse_tsv, read_tsv, write_tsv


class TestFormat:
    """Test rendering."""

    def test_layout(self):
        """Test header line, column line and one row."""
        text = format_tsv({"seed": 3, "command": "bounds"}, ["delta", "upper"], [[0, 0.5]])
        lines = text.splitlines()
        assert lines[0] == '# config-json {"command": "bounds", "seed": 3}'
        assert lines[1] == "delta\tupper"
        assert lines[2] == "0\t0.5"

    def test_special_cells(self):
        """Test booleans, numpy scalars and non-finite floats."""
        text = format_tsv({}, ["a", "b", "c", "d"], [[True, np.int64(4), math.inf, float("nan")]])
        assert text.splitlines()[2] == "1\t4\tinf\tnan"

    def test_ragged_row(self):
        """Test that rows must match the columns."""
        with pytest.raises(TsvFormatError, match="cells for 2 columns"):
            format_tsv({}, ["a", "b"], [[1]])


class TestParse:
    """Test reading tables back."""

    def test_exact_floats(self):
        """Test that repr formatting preserves float values exactly."""
        value = 1.0 / 3.0
        table = parse_tsv(format_tsv({"seed": 1}, ["x", "pf"], [[1, value], [2, 1e-300]]))
        assert table.header == {"seed": 1}
        assert table.column("pf") == [value, 1e-300]
        assert table.column("x") == [1, 2]

    def test_text_cells(self):
        """Test that non-numeric cells stay strings."""
        table = parse_tsv(format_tsv({}, ["strategy", "mean"], [["max-reduced", 2.5]]))
        assert table.rows == [["max-reduced", 2.5]]

    def test_missing_header(self):
        """Test that the provenance line is required."""
        with pytest.raises(TsvFormatError, match="header"):
            parse_tsv("a\tb\n1\t2\n")

    def test_unknown_column(self):
        """Test column lookup errors."""
        table = parse_tsv(format_tsv({}, ["a"], [[1]]))
        with pytest.raises(TsvFormatError, match="No column"):
            table.column("b")

    def test_file_round_trip(self, tmp_path):
        """Test write_tsv and read_tsv through a file."""
        path = tmp_path / "out.tsv"
        with open(path, "w", encoding="utf-8") as handle:
            write_tsv(handle, {"command": "selftest"}, ["check", "passed"], [["hamming-t3", True]])
        table = read_tsv(str(path))
        assert table.header["command"] == "selftest"
        assert table.rows == [["hamming-t3", 1]]

    def test_stream_output(self):
        """Test writing to an in-memory stream."""
        stream = io.StringIO()
        write_tsv(stream, {}, ["a"], [[1], [2]])
        assert stream.getvalue().endswith("a\n1\n2\n")
