"""
Unit tests for the command-line front end.

Tests flag parsing, catalogue runs and the exit-code contract.
"""

import json
from fractions import Fraction

import pytest

from schinzel_lab.cli import (
    EXIT_BUDGET,
    EXIT_INVARIANT,
    EXIT_OK,
    EXIT_USAGE,
    build_parser,
    config_from_args,
    main,
)


def _stdout_json(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


class TestParser:
    """Test argument parsing into ExperimentConfig."""

    def test_list_flags(self):
        """Test comma and semicolon lists."""
        args = build_parser().parse_args(
            ["bundle", "--polys", "0,1;2,1", "--groups", "1,1,0", "--coefficients=-1,1,1"]
        )
        config = config_from_args(args)
        assert config.polys == [[0, 1], [2, 1]]
        assert config.groups == [1, 1, 0]
        assert config.coefficients == [-1, 1, 1]

    def test_empty_prime_group(self):
        """Test a trailing empty prime group is kept."""
        args = build_parser().parse_args(["conic", "--task", "q", "--primes", "3;5;"])
        assert config_from_args(args).primes == [[3], [5], []]

    def test_rd_flag(self):
        """Test --rd selects the task and degree."""
        config = config_from_args(build_parser().parse_args(["prob", "--rd", "5"]))
        assert (config.task, config.d) == ("rd", 5)

    def test_lower_bound_flag(self):
        """Test --lower-bound selects the other prob task."""
        config = config_from_args(build_parser().parse_args(["prob", "--lower-bound", "3"]))
        assert (config.task, config.d) == ("lower-bound", 3)

    def test_unset_flags_keep_defaults(self):
        """Test flags left out fall back to the model defaults."""
        config = config_from_args(build_parser().parse_args(["density"]))
        assert config.degrees == [1]
        assert config.truncation == 1_000_000

    def test_flags_before_subcommand(self):
        """Test shared flags may come before the subcommand."""
        config = config_from_args(build_parser().parse_args(["--seed", "9", "prob", "--rd", "2"]))
        assert config.seed == 9


class TestMain:
    """Test main() end to end on small inputs."""

    def test_prob_rd(self, capsys):
        """Test the exact r_2 report on stdout."""
        assert main(["prob", "--rd", "2"]) == EXIT_OK
        document = _stdout_json(capsys)
        assert document["results"]["r_d"] == "19/32"
        assert document["tool"] == "schinzel-lab"

    def test_model_verify(self, capsys):
        """Test the moment checks for ell = 3."""
        assert main(["model-verify", "--ell", "3", "--degrees", "1"]) == EXIT_OK
        assert _stdout_json(capsys)["results"]["all_equal"] is True

    def test_negative_coefficient(self, capsys):
        """Test the equals form for a negative first coefficient."""
        assert main(["conic", "--coefficients=-1,1,2"]) == EXIT_OK
        assert _stdout_json(capsys)["results"]["conic"] == ["-1", "1", "2"]

    def test_catalogue_run(self, catalogue_path, capsys):
        """Test running a named catalogue entry."""
        code = main(["--config", str(catalogue_path), "--experiment", "prob_rd_2"])
        assert code == EXIT_OK
        assert _stdout_json(capsys)["results"]["r_d"] == "19/32"

    def test_catalogue_override(self, catalogue_path, capsys):
        """Test command-line flags override stored values."""
        code = main(["--config", str(catalogue_path), "--experiment", "prob_rd_2", "--d", "4"])
        assert code == EXIT_OK
        assert _stdout_json(capsys)["results"]["r_d"] == "39/64"

    def test_out_file(self, tmp_path):
        """Test --out writes the report to a file."""
        path = tmp_path / "report.json"
        assert main(["prob", "--rd", "3", "--out", str(path)]) == EXIT_OK
        assert json.loads(path.read_text())["results"]["r_d"] == "39/64"

    def test_csv_rows(self, capsys):
        """Test the bundle search log as CSV."""
        argv = [
            "bundle",
            "--coefficients=1,1,-1",
            "--polys",
            "0,1;2,1",
            "--groups",
            "1,1,0",
            "--bound",
            "100",
            "--format",
            "csv",
        ]
        assert main(argv) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "m,reason"
        assert lines[-1] == "17,solved"

    def test_version(self):
        """Test --version exits through argparse."""
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0


class TestExitCodes:
    """Test the mapping of failures to exit codes."""

    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["prob", "--nope"],
            ["plot"],
            ["conic", "--coefficients=1,0,-2"],
            ["dispersion", "-H", "2"],
            ["--config", "experiments.yml"],
        ],
    )
    def test_usage(self, argv):
        """Test usage and validation problems exit with 1."""
        assert main(argv) == EXIT_USAGE

    def test_unknown_experiment(self, catalogue_path):
        """Test an unknown catalogue name exits with 1."""
        assert main(["--config", str(catalogue_path), "--experiment", "nope"]) == EXIT_USAGE

    def test_missing_catalogue(self, tmp_path):
        """Test a missing catalogue file exits with 1."""
        argv = ["--config", str(tmp_path / "absent.yml"), "--experiment", "prob_rd_2"]
        assert main(argv) == EXIT_USAGE

    def test_missing_out_directory(self, tmp_path):
        """Test an unwritable report path exits with 1."""
        assert main(["prob", "--rd", "2", "--out", str(tmp_path / "no" / "r.json")]) == EXIT_USAGE

    def test_budget(self, monkeypatch):
        """Test an exhausted enumeration budget exits with 2."""
        monkeypatch.setenv("SCHINZEL_LAB_BUDGET", "enumeration=10")
        argv = ["pair-corr", "-H", "50", "--d", "1", "--mode", "exhaustive"]
        assert main(argv) == EXIT_BUDGET

    def test_invariant(self, mocker):
        """Test a failed cross-check exits with 3."""
        mocker.patch("schinzel_lab.runner.rd_enumerate", return_value=Fraction(1, 2))
        assert main(["prob", "--rd", "2"]) == EXIT_INVARIANT
