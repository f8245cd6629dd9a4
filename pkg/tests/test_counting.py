"""
Unit tests for prime-value counting: theta, least prime inputs, pair
correlation and the dispersion of the Bateman-Horn error.
"""

import math

import numpy as np
import pytest

from schinzel_lab.arith import is_prime
from schinzel_lab.counting import (
    bdh_exceptional_fraction,
    dispersion,
    evaluate_rows,
    least_prime_inputs,
    least_prime_value,
    linnik_experiment,
    pair_correlation,
    pair_main_term,
    prime_hit_fraction,
    progression,
    theorem_cool_fraction,
    theta,
)
from schinzel_lab.errors import BudgetExceededError, HypothesisError
from schinzel_lab.polyff import CoeffBox, IntPoly, PolyTuple, coefficient_matrix, enumerate_box
from schinzel_lab.series import singular_series

TWINS = PolyTuple.of([0, 1], [2, 1])


class TestTheta:
    """Test progressions and theta."""

    def test_progression(self):
        """Test 1 <= m <= x with m = n0 mod M."""
        assert list(progression(10, anchor=1, modulus=4)) == [1, 5, 9]
        assert list(progression(10, anchor=0, modulus=4)) == [4, 8]
        assert list(progression(10.7)) == list(range(1, 11))
        assert list(progression(0.5)) == []

    def test_twin_hits(self):
        """Test the twin prime inputs up to 100."""
        value = theta(TWINS, 100)
        assert value.hits == (3, 5, 11, 17, 29, 41, 59, 71)
        expected = math.fsum(math.log(m) * math.log(m + 2) for m in value.hits)
        assert value.value == pytest.approx(expected)
        assert not value.probable

    def test_progression_restricts_hits(self):
        """Test only inputs in the progression are counted."""
        value = theta(TWINS, 100, anchor=5, modulus=6)
        assert value.hits == (5, 11, 17, 29, 41, 59, 71)

    def test_probable_flag(self):
        """Test values above 2^64 set the probable-prime flag."""
        P = PolyTuple.of([2**89 - 2, 1])
        assert theta(P, 1).probable


class TestLeastPrime:
    """Test S_C(P) and least prime values."""

    def test_inputs_with_bound(self):
        """Test the inputs m <= 10 where m^2 + 1 is prime."""
        hits = least_prime_inputs(PolyTuple.of([1, 0, 1]), 2.0, m_bound=10)
        assert hits.hits == (1, 2, 4, 6, 10)
        assert hits.least == 1

    def test_inputs_from_height(self):
        """Test the bound (log |P|)^C when no explicit bound is given."""
        polys = PolyTuple.of([3, 0, 1])
        hits = least_prime_inputs(polys, 8.0)
        assert hits.bound == pytest.approx(math.log(3) ** 8)
        assert hits.hits == (2,)

    def test_small_height_needs_bound(self):
        """Test |P| < 3 without an explicit bound is refused."""
        with pytest.raises(HypothesisError, match="height >= 3"):
            least_prime_inputs(PolyTuple.of([1, 0, 1]), 2.0)

    @pytest.mark.parametrize(
        "coeffs,expected",
        [((1, 0, 1), (1, 2)), ((-1, 0, 1), (2, 3)), ((5, 6), (1, 11)), ((-3, -3, 1), (5, 7))],
    )
    def test_least_prime_value(self, coeffs, expected):
        """Test the least prime value over m >= 1, including values past small m."""
        assert least_prime_value(IntPoly(coeffs)) == expected

    def test_least_prime_value_step_cap(self):
        """Test a fixed even divisor exhausts the step cap."""
        with pytest.raises(BudgetExceededError, match="within 50 inputs"):
            least_prime_value(IntPoly((2, 2)), max_steps=50)

    def test_linnik_records(self):
        """Test every record carries its least prime and compares it with the bound."""
        result = linnik_experiment(1, 20, 10, 1.0, seed=1)
        assert result["samples"] == str(len(result["records"]))
        for record in result["records"]:
            assert is_prime(int(record["least_prime"]))
            assert record["within_bound"] == (
                int(record["least_prime"]) <= float(record["bound"])
            )
        assert 0.0 <= float(result["fraction"]) <= 1.0

    def test_linnik_keeps_values_above_bound(self):
        """Test a prime value beyond |P| (log |P|)^d is recorded rather than dropped."""
        result = linnik_experiment(2, 3, 40, 0.0, seed=5)
        outside = [r for r in result["records"] if not r["within_bound"]]
        assert all(r["least_prime"] is not None for r in result["records"])
        assert all(int(r["least_prime"]) > float(r["bound"]) for r in outside)
        record = next(r for r in result["records"] if r["poly"] == ["-3", "-3", "1"])
        assert record["least_prime"] == "7"
        assert record["m"] == "5"
        assert record["within_bound"] is False

    def test_hit_fraction(self):
        """Test most linear Schinzel polynomials hit a prime quickly."""
        box = CoeffBox((1,), 50)
        fraction = prime_hit_fraction(box, m_bound=50, samples=50, seed=3)
        assert 0.5 < fraction <= 1.0
        assert fraction == prime_hit_fraction(box, m_bound=50, samples=50, seed=3)


class TestPairCorrelation:
    """Test G_{k,m}(H; d)."""

    def test_small_value(self):
        """Test the exhaustive sum for H = 2, d = 1, (k, m) = (1, 2)."""
        expected = 2 * math.log(2) * math.log(3) + math.log(2) ** 2 + math.log(3) * math.log(5)
        value = pair_correlation(2, 1, 1, 2, mode="exhaustive")
        assert value.exact == pytest.approx(expected)
        assert value.main_term == 8.0

    def test_main_term_factor(self):
        """Test the prod p/(p-1) over p | k - m."""
        assert pair_main_term(10, 1, 1, 7) == pytest.approx(2 * 100 * 2 * 1.5)

    def test_auto_picks_exhaustive(self):
        """Test auto mode enumerates small boxes."""
        assert pair_correlation(5, 1, 1, 3).mode == "exhaustive"

    def test_sampled(self):
        """Test the stratified estimate reports its error and is reproducible."""
        first = pair_correlation(200, 1, 1, 2, mode="sampled", samples=2000, seed=9)
        second = pair_correlation(200, 1, 1, 2, mode="sampled", samples=2000, seed=9)
        assert first.mode == "sampled"
        assert first.standard_error is not None and first.standard_error >= 0
        assert first.exact == second.exact

    @pytest.mark.parametrize("k,m", [(2, 2), (0, 1)])
    def test_invalid_shifts(self, k, m):
        """Test k = m and non-positive shifts are refused."""
        with pytest.raises(HypothesisError):
            pair_correlation(5, 1, k, m)

    def test_unknown_mode(self):
        """Test an unknown mode raises ValueError."""
        with pytest.raises(ValueError, match="Unknown mode"):
            pair_correlation(5, 1, 1, 2, mode="grid")

    def test_budget(self, monkeypatch):
        """Test the enumeration budget is honoured."""
        monkeypatch.setenv("SCHINZEL_LAB_BUDGET", "enumeration=10")
        with pytest.raises(BudgetExceededError):
            pair_correlation(5, 1, 1, 2, mode="exhaustive")


class TestDispersion:
    """Test R(x, H), V(x, H) and the per-row evaluation."""

    def test_rows_match_scalar(self):
        """Test the vectorized theta and series agree with the scalar functions."""
        box = CoeffBox((1, 1), 3)
        coeffs = coefficient_matrix(box)
        thetas, series = evaluate_rows(coeffs, box.degrees, 30.0, 0, 1)
        for r, polys in enumerate(enumerate_box(box)):
            assert thetas[r] == pytest.approx(theta(polys, 30.0).value)
            assert series[r] == pytest.approx(singular_series(polys, 30.0).value)

    def test_exact_path_matches_sieve(self, monkeypatch):
        """Test the exact fallback gives the same numbers as the sieve lookup."""
        box = CoeffBox((1,), 5)
        coeffs = coefficient_matrix(box)
        sieved = evaluate_rows(coeffs, box.degrees, 20.0, 1, 2)
        monkeypatch.setenv("SCHINZEL_LAB_BUDGET", "sieve=100")
        exact = evaluate_rows(coeffs, box.degrees, 20.0, 1, 2)
        assert np.allclose(sieved[0], exact[0])
        assert np.allclose(sieved[1], exact[1])

    def test_cauchy_schwarz(self):
        """Test R^2 <= V and the tuple count."""
        report = dispersion(CoeffBox((1,), 5), 20.0)
        assert report.tuples == 55
        assert report.R**2 <= report.V * (1 + 1e-12)
        assert report.seed is None

    def test_rows_kept(self):
        """Test per-tuple rows are returned on request."""
        box = CoeffBox((1,), 4)
        report = dispersion(box, 20.0, keep_rows=True)
        assert len(report.rows) == box.size()
        first = report.rows[0]
        c0, c1 = (int(c) for c in first["coefficients"].split())
        assert float(first["theta"]) == pytest.approx(theta(PolyTuple.of([c0, c1]), 20.0).value)

    @pytest.mark.slow
    def test_threads_do_not_change_result(self):
        """Test the reduction is the same with one or two worker processes."""
        box = CoeffBox((1,), 30)
        single = dispersion(box, 50.0, threads=1)
        double = dispersion(box, 50.0, threads=2)
        assert single.to_json() == double.to_json()

    def test_sampled_reproducible(self):
        """Test sampled dispersion with a fixed seed."""
        box = CoeffBox((2,), 50)
        first = dispersion(box, 30.0, mode="sampled", samples=200, seed=4)
        second = dispersion(box, 30.0, mode="sampled", samples=200, seed=4)
        assert first.tuples == 200
        assert first.to_json() == second.to_json()

    def test_hypotheses(self):
        """Test the argument checks."""
        box = CoeffBox((1,), 5)
        with pytest.raises(HypothesisError, match="x >= 3"):
            dispersion(box, 2.0)
        with pytest.raises(HypothesisError, match="samples >= 100"):
            dispersion(box, 10.0, mode="sampled", samples=50)
        with pytest.raises(ValueError, match="Unknown mode"):
            dispersion(box, 10.0, mode="grid")

    def test_budget(self, monkeypatch):
        """Test boxes above the enumeration budget are refused."""
        monkeypatch.setenv("SCHINZEL_LAB_BUDGET", "enumeration=10")
        with pytest.raises(BudgetExceededError):
            dispersion(CoeffBox((1,), 5), 20.0)

    def test_exceptional_fractions(self):
        """Test both sampled fractions lie in [0, 1] and validate their exponents."""
        box = CoeffBox((1,), 50)
        assert 0.0 <= bdh_exceptional_fraction(box, 100.0, 0.3, seed=1, samples=50) <= 1.0
        assert 0.0 <= theorem_cool_fraction(box, 1.0, seed=1, samples=50) <= 1.0
        with pytest.raises(HypothesisError):
            bdh_exceptional_fraction(box, 100.0, 0.6, seed=1)
        with pytest.raises(HypothesisError):
            theorem_cool_fraction(box, 0.0, seed=1)
