"""
Unit tests for x^2 + a y^2 = f(t): the solver, the mod-4 probability and the
sampled solvability proportion.
"""

from fractions import Fraction

import pytest

from schinzel_lab.chatelet import (
    ChateletSpec,
    local_obstruction,
    lower_bound,
    rd_enumerate,
    rd_exact,
    solvability_proportion,
    solve_chatelet,
    splits,
    splitting_modulus,
    wilson_interval,
)
from schinzel_lab.errors import BudgetExceededError, HypothesisError
from schinzel_lab.polyff import IntPoly


class TestSolver:
    """Test the first-solution search."""

    def test_fast_path(self):
        """Test t^2 + 1 is solved at m = 1 through the prime value 2."""
        solution = solve_chatelet(ChateletSpec(1, IntPoly((1, 0, 1))), 10)
        assert (solution.m, solution.x, solution.y) == (1, 1, 1)
        assert solution.path == "fast"

    def test_full_path(self):
        """Test t + 3 is solved at m = 1 through 4 = 2^2 + 0^2."""
        solution = solve_chatelet(ChateletSpec(1, IntPoly((3, 1))), 10)
        assert (solution.m, solution.x, solution.y) == (1, 2, 0)
        assert solution.path == "full"

    def test_other_form(self):
        """Test x^2 + 2 y^2 = 11 at m = 1."""
        solution = solve_chatelet(ChateletSpec(2, IntPoly((10, 1))), 10)
        assert (solution.m, solution.x, solution.y) == (1, 3, 1)
        assert solution.spec.guaranteed

    def test_best_effort_form(self):
        """Test forms with class number above one are flagged."""
        solution = solve_chatelet(ChateletSpec(5, IntPoly((1, 0, 1))), 50)
        assert solution.to_json()["best_effort"] is True
        if solution.found:
            assert solution.x**2 + 5 * solution.y**2 == solution.m**2 + 1

    def test_log(self):
        """Test skipped inputs are logged with a reason."""
        solution = solve_chatelet(ChateletSpec(1, IntPoly((-5, 1))), 10)
        assert solution.log[0] == (1, "negative value")
        assert solution.m == 5
        assert solution.scanned == 5

    def test_congruence_obstruction(self):
        """Test f = 4t + 3 is skipped without scanning."""
        solution = solve_chatelet(ChateletSpec(1, IntPoly((3, 4))), 100)
        assert not solution.found
        assert solution.obstruction == "all values = 3 mod 4"
        assert solution.scanned == 0

    def test_square_obstruction(self):
        """Test 3 (t^2 + 1) is never a sum of two squares."""
        assert local_obstruction(ChateletSpec(1, IntPoly((3, 0, 3)))) is not None
        assert local_obstruction(ChateletSpec(1, IntPoly((1, 0, 1)))) is None

    def test_progression(self):
        """Test only m = n0 mod M are scanned."""
        spec = ChateletSpec(1, IntPoly((1, 0, 1)), anchor=0, modulus=2)
        solution = solve_chatelet(spec, 10)
        assert solution.m == 2
        assert solution.x**2 + solution.y**2 == 5

    def test_spec_validation(self):
        """Test a and the leading coefficient are checked."""
        with pytest.raises(HypothesisError, match="a >= 1"):
            ChateletSpec(0, IntPoly((1, 1)))
        with pytest.raises(HypothesisError, match="leading"):
            ChateletSpec(1, IntPoly((1, -1)))

    def test_splits(self):
        """Test split primes of x^2 + y^2 and the splitting modulus."""
        assert splits(13, 1)
        assert not splits(7, 1)
        assert splitting_modulus(3) == 12


class TestModFourProbability:
    """Test r_d and the lower bound."""

    @pytest.mark.parametrize(
        "d,expected",
        [
            (0, Fraction(1, 4)),
            (1, Fraction(11, 16)),
            (2, Fraction(19, 32)),
            (3, Fraction(39, 64)),
            (7, Fraction(39, 64)),
            (12, Fraction(39, 64)),
        ],
    )
    def test_rd_exact(self, d, expected):
        """Test r_d for small degrees and its stable value for d >= 3."""
        assert rd_exact(d) == expected

    @pytest.mark.parametrize("d", range(0, 7))
    def test_rd_enumeration_agrees(self, d):
        """Test the value-vector count against listing coefficient vectors."""
        assert rd_enumerate(d) == rd_exact(d)

    def test_rd_limits(self):
        """Test the degree range of r_d."""
        with pytest.raises(ValueError):
            rd_exact(-1)
        with pytest.raises(BudgetExceededError):
            rd_exact(13)

    def test_lower_bound(self):
        """Test the bound at d = 2 is 19/32 times the product over p >= 3."""
        table = lower_bound(2, truncation=10_000)
        assert table.r_d == Fraction(19, 32)
        assert table.value == pytest.approx(19 / 32 * 0.95075, abs=1e-4)
        assert table.tail_low <= table.value <= table.tail_high

    def test_lower_bound_needs_d2(self):
        """Test d = 1 is refused."""
        with pytest.raises(HypothesisError, match="d >= 2"):
            lower_bound(1)


class TestProportion:
    """Test the sampled solvability proportion."""

    def test_records(self):
        """Test one record per sample and consistent counts."""
        report = solvability_proportion(2, 20, 50, 40, seed=1)
        assert len(report.records) == 40
        assert report.solvable == sum(1 for r in report.records if r["solvable"])
        low, high = report.interval
        assert low <= report.proportion <= high
        assert [r["sample"] for r in report.records] == [str(i) for i in range(40)]

    def test_reproducible(self):
        """Test the same seed gives the same records."""
        first = solvability_proportion(2, 20, 50, 30, seed=5)
        second = solvability_proportion(2, 20, 50, 30, seed=5)
        assert first.records == second.records

    @pytest.mark.slow
    def test_threads_do_not_change_records(self):
        """Test the draws do not depend on the worker count."""
        single = solvability_proportion(2, 30, 100, 60, seed=3, threads=1)
        double = solvability_proportion(2, 30, 100, 60, seed=3, threads=2)
        assert single.records == double.records

    def test_wilson(self):
        """Test the Wilson interval edge cases."""
        assert wilson_interval(0, 0) == (0.0, 1.0)
        low, high = wilson_interval(50, 100)
        assert low < 0.5 < high
        assert wilson_interval(0, 10)[0] == 0.0
