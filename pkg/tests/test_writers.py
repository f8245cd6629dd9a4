"""
Unit tests for the JSON and CSV report writers.
"""

import json
from fractions import Fraction

import numpy as np
import pytest

from schinzel_lab.models import ExperimentReport
from schinzel_lab.writers import (
    CsvReportWriter,
    JsonReportWriter,
    WriterError,
    create_writer,
    jsonable,
)


def _report(**kwargs) -> ExperimentReport:
    defaults = {"version": "0.1.0", "config": {"subcommand": "prob"}, "wall_time_s": 0.5}
    return ExperimentReport(**(defaults | kwargs))


class TestJsonable:
    """Test the conversion of result values."""

    def test_numbers_become_strings(self):
        """Test integers, floats and rationals are written as strings."""
        assert jsonable(Fraction(19, 32)) == "19/32"
        assert jsonable(2**70) == str(2**70)
        assert jsonable(np.int64(5)) == "5"
        assert jsonable(0.1) == "0.1"

    def test_booleans_and_none(self):
        """Test booleans and None are kept."""
        assert jsonable(True) is True
        assert jsonable(np.bool_(False)) is False
        assert jsonable(None) is None

    def test_containers(self):
        """Test nested containers and sets are converted in a stable order."""
        converted = jsonable({"a": [1, (2, 3)], "b": {3, 1}})
        assert converted == {"a": ["1", ["2", "3"]], "b": ["1", "3"]}

    def test_to_json_objects(self):
        """Test objects exposing to_json are expanded."""

        class Point:
            def to_json(self):
                return [1, 2]

        assert jsonable(Point()) == ["1", "2"]


class TestJsonWriter:
    """Test JSON reports."""

    def test_sorted_document(self):
        """Test keys are sorted and the schema fields are present."""
        text = JsonReportWriter().render(_report(results={"r_d": Fraction(19, 32), "d": 2}))
        document = json.loads(text)
        assert document["results"] == {"d": "2", "r_d": "19/32"}
        assert document["schema"] == "1"
        assert list(document) == sorted(document)

    def test_reruns_differ_only_in_wall_time(self):
        """Test two renders with different timings differ only in wall_time_s."""
        first = json.loads(JsonReportWriter().render(_report(results=1, wall_time_s=1.0)))
        second = json.loads(JsonReportWriter().render(_report(results=1, wall_time_s=2.0)))
        first.pop("wall_time_s")
        second.pop("wall_time_s")
        assert first == second

    def test_write_file(self, tmp_path):
        """Test writing to a file."""
        path = tmp_path / "report.json"
        JsonReportWriter(str(path)).write(_report(results={"x": 1}))
        assert json.loads(path.read_text())["results"] == {"x": "1"}

    def test_missing_directory(self, tmp_path):
        """Test a path in a missing directory is refused up front."""
        with pytest.raises(WriterError, match="does not exist"):
            JsonReportWriter(str(tmp_path / "absent" / "report.json"))


class TestCsvWriter:
    """Test CSV reports."""

    def test_rows(self):
        """Test declared columns and list cells."""
        report = _report(
            rows=[{"m": 1, "values": [2, 5]}, {"m": 2, "values": [5, 17]}], columns=["m", "values"]
        )
        lines = CsvReportWriter().render(report).splitlines()
        assert lines[0] == "m,values"
        assert lines[1] == '1,"[""2"", ""5""]"'

    def test_header_only(self):
        """Test an empty row list gives the header alone."""
        report = _report(rows=[], columns=["m", "reason"])
        assert CsvReportWriter().render(report) == "m,reason\n"

    def test_scalar_results(self):
        """Test scalar results become one row."""
        report = _report(results={"d": 2, "r_d": Fraction(19, 32), "checks": [1]})
        assert CsvReportWriter().render(report).splitlines() == ["d,r_d", "2,19/32"]


class TestCreateWriter:
    """Test the writer factory."""

    def test_formats(self):
        """Test each supported format."""
        assert isinstance(create_writer("json"), JsonReportWriter)
        assert isinstance(create_writer("csv"), CsvReportWriter)

    def test_unsupported(self):
        """Test unknown formats raise ValueError."""
        with pytest.raises(ValueError, match="Unsupported output format"):
            create_writer("xml")
