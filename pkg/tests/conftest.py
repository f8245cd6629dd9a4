"""
Shared pytest fixtures.

Budgets come from the environment, so every test starts without an override.
"""

import textwrap
from pathlib import Path

import pytest

# Project root
PROJECT_ROOT = Path(__file__).parent.parent


@pytest.fixture(autouse=True)
def clean_budget_env(monkeypatch):
    """Drop any budget override inherited from the shell."""
    monkeypatch.delenv("SCHINZEL_LAB_BUDGET", raising=False)


@pytest.fixture
def catalogue_path(tmp_path):
    """A small experiment catalogue on disk."""
    path = tmp_path / "experiments.yml"
    path.write_text(
        textwrap.dedent(
            """
            experiments:
              prob_rd_2:
                subcommand: prob
                task: rd
                d: 2
              moments_l3:
                subcommand: model-verify
                task: moments
                ell: 3
                degrees: [1]
              twin_search:
                subcommand: bundle
                task: search
                coefficients: [1, 1, -1]
                polys: [[0, 1], [2, 1]]
                groups: [1, 1, 0]
                bound: 100
            """
        ),
        encoding="utf-8",
    )
    return path


@pytest.fixture
def shipped_catalogue():
    """The catalogue that ships with the repository."""
    return PROJECT_ROOT / "configs" / "experiments.yml"
