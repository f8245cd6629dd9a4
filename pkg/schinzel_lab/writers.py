"""
Report writers for experiment results.

Numbers and rationals are written as strings so that no precision is lost and
reruns produce identical bytes.
"""

import json
import sys
from abc import ABC, abstractmethod
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd

from .bernoulli import fraction_str
from .logger import logger
from .models import ExperimentReport


class WriterError(Exception):
    """Raised when a report cannot be serialized or written."""

    pass


def jsonable(value: Any) -> Any:
    """Convert a result payload to JSON-safe values with every number as a string."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        return fraction_str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [jsonable(v) for v in items]
    if hasattr(value, "to_json"):
        return jsonable(value.to_json())
    return str(value)


class ReportWriter(ABC):
    """Base writer; ``path`` of None means stdout."""

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self.validate()

    def validate(self):
        """Check that the output location is usable. Raise WriterError if not."""
        if self.path is None:
            return
        parent = Path(self.path).parent
        if not parent.exists():
            raise WriterError(f"Output directory does not exist: {parent}")

    @abstractmethod
    def render(self, report: ExperimentReport) -> str:
        """Serialize the report to text."""
        pass

    def write(self, report: ExperimentReport) -> None:
        text = self.render(report)
        try:
            if self.path is None:
                sys.stdout.write(text)
                sys.stdout.flush()
            else:
                Path(self.path).write_text(text, encoding="utf-8")
                logger.info(f"Report written to {self.path}")
        except OSError as e:
            logger.error(f"Failed to write report: {e}")
            raise WriterError(f"Failed to write report to {self.path}: {e}") from e


class JsonReportWriter(ReportWriter):
    """Versioned JSON document with sorted keys."""

    def render(self, report: ExperimentReport) -> str:
        document = report.payload()
        document["wall_time_s"] = report.wall_time_s
        try:
            return json.dumps(jsonable(document), sort_keys=True, indent=2) + "\n"
        except (TypeError, ValueError) as e:
            raise WriterError(f"Report is not serializable: {e}") from e


class CsvReportWriter(ReportWriter):
    """
    Flat rows of the report.

    Uses ``report.rows`` when present; otherwise the scalar results become a
    single row. An empty row list gives the header only.
    """

    def render(self, report: ExperimentReport) -> str:
        rows = report.rows
        if rows is None:
            results = jsonable(report.results)
            if isinstance(results, dict):
                rows = [{k: v for k, v in results.items() if not isinstance(v, (dict, list))}]
            else:
                rows = [{"value": results}]
        columns = _columns(rows, report.columns)
        records = [{k: _cell(row.get(k)) for k in columns} for row in rows]
        frame = pd.DataFrame(records, columns=columns)
        return frame.to_csv(index=False, lineterminator="\n")


def _columns(rows: list[dict], declared: Optional[list[str]]) -> list[str]:
    if declared:
        return list(declared)
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return columns


def _cell(value: Any) -> Any:
    value = jsonable(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return value


def create_writer(fmt: str, path: Optional[str] = None) -> ReportWriter:
    """
    Factory function to create the writer for an output format.

    Raises:
        ValueError: If the format is unsupported
    """
    writers = {
        "json": JsonReportWriter,
        "csv": CsvReportWriter,
    }
    if fmt not in writers:
        raise ValueError(f"Unsupported output format: {fmt}")
    return writers[fmt](path)
