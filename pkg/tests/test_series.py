"""
Unit tests for singular series, density constants and box proportions.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from schinzel_lab.errors import HypothesisError
from schinzel_lab.polyff import CoeffBox, PolyTuple, coefficient_matrix, enumerate_box, is_schinzel
from schinzel_lab.series import (
    bouniakowsky_density,
    box_schinzel_proportion,
    cutoff_primes,
    dispersion_main_term,
    gamma_product,
    residue_tuple_vanishes,
    schinzel_density,
    schinzel_rows,
    odd_prime_product,
    series_floor_diag,
    singular_series,
)

T2_PLUS_1 = PolyTuple.of([1, 0, 1])


class TestSingularSeries:
    """Test the truncated singular series."""

    def test_t2_plus_1(self):
        """Test S(x) = 21/16 for t^2 + 1 when log x lies in [7, 11)."""
        series = singular_series(T2_PLUS_1, math.exp(8))
        assert series.exact == Fraction(21, 16)
        assert series.primes_used == 4
        assert series.gcd_indicator

    def test_cutoff_is_natural_log(self):
        """Test the primes are those up to log x, not x."""
        assert cutoff_primes(math.exp(8)) == [2, 3, 5, 7]
        assert cutoff_primes(math.exp(8), modulus=6) == [5, 7]
        assert cutoff_primes(0.5) == []

    def test_gcd_indicator(self):
        """Test the series is zero when gcd(M, prod P_i(n0)) > 1."""
        assert singular_series(T2_PLUS_1, 1000.0, anchor=0, modulus=4).gcd_indicator
        blocked = singular_series(T2_PLUS_1, 1000.0, anchor=1, modulus=4)
        assert not blocked.gcd_indicator
        assert blocked.exact == 0

    def test_prefactor(self):
        """Test M^(n-1)/phi(M)^n for the twin tuple modulo 3."""
        series = singular_series(PolyTuple.of([0, 1], [2, 1]), 100.0, anchor=2, modulus=3)
        assert series.prefactor == Fraction(3, 4)

    def test_floor_diag_positive(self):
        """Test the scaled series of a Schinzel tuple is positive."""
        result = series_floor_diag(T2_PLUS_1, 1e6)
        assert result["positive"] is True
        assert result["exponent"] == "1"
        assert float(result["scaled"]) > 0

    def test_floor_diag_scale(self):
        """Test the scaling factor is (log log x)^(d - n), not (log x)^(d - n)."""
        result = series_floor_diag(T2_PLUS_1, 1e6)
        expected = float(result["series"]["value"]) * math.log(math.log(1e6))
        assert float(result["scaled"]) == pytest.approx(expected)

    def test_floor_diag_hypotheses(self):
        """Test each hypothesis of the floor statement is checked."""
        with pytest.raises(HypothesisError, match="x > e"):
            series_floor_diag(T2_PLUS_1, 2.0)
        with pytest.raises(HypothesisError, match="schinzel"):
            series_floor_diag(PolyTuple.of([0, 1], [1, 1]), 1e6)
        with pytest.raises(HypothesisError, match="gcd"):
            series_floor_diag(T2_PLUS_1, 1e6, anchor=1, modulus=4)


class TestDensityConstants:
    """Test the Euler products and their tail intervals."""

    def test_linear_density(self):
        """Test the d = 1 constant brackets 6 / pi^2."""
        density = schinzel_density([1], truncation=10_000)
        assert density.contains(6 / math.pi**2)
        assert density.tail_low <= density.value == density.tail_high

    def test_quadratic_density(self):
        """Test the d = 2 constant is about 0.713."""
        assert schinzel_density([2], truncation=10_000).value == pytest.approx(0.7131, abs=1e-3)

    def test_bouniakowsky_matches_schinzel(self):
        """Test the single-polynomial constants coincide."""
        left = bouniakowsky_density(1, truncation=10_000).value
        right = schinzel_density([1], truncation=10_000).value
        assert left == pytest.approx(right, rel=1e-12)

    def test_odd_prime_product(self):
        """Test the product over p >= 3 at d = 2."""
        assert odd_prime_product(2, truncation=10_000).value == pytest.approx(0.95075, abs=1e-4)

    def test_odd_prime_product_needs_d2(self):
        """Test d = 1 is refused."""
        with pytest.raises(HypothesisError, match="d >= 2"):
            odd_prime_product(1)

    def test_modulus_drops_primes(self):
        """Test primes dividing M leave the product."""
        full = schinzel_density([1], truncation=1000).value
        odd = schinzel_density([1], modulus=2, truncation=1000).value
        assert odd == pytest.approx(full / (1 - 1 / 4), rel=1e-12)

    def test_gamma_product(self):
        """Test gamma_1(2) gamma_1(3) = 7/4."""
        assert gamma_product(1, math.exp(4)) == Fraction(7, 4)

    def test_dispersion_main_term(self):
        """Test the main term for a box without congruences."""
        x = math.exp(4)
        assert dispersion_main_term(CoeffBox((1,), 5), x) == pytest.approx(1.75 * x * x)

    def test_dispersion_main_term_blocked(self):
        """Test residues failing the gcd condition give zero."""
        box = CoeffBox((1,), 8, modulus=2, residues=((0, 1),), anchor=0)
        assert dispersion_main_term(box, 100.0) == 0.0


class TestBoxProportion:
    """Test the vectorized Schinzel test and box proportions."""

    @pytest.mark.parametrize("degrees,height", [((1, 1), 3), ((2,), 3), ((1, 2), 2)])
    def test_rows_match_scalar_test(self, degrees, height):
        """Test schinzel_rows agrees with is_schinzel on every tuple."""
        box = CoeffBox(degrees, height)
        flags = schinzel_rows(coefficient_matrix(box), box.degrees)
        expected = np.array([bool(is_schinzel(polys)) for polys in enumerate_box(box)])
        assert (flags == expected).all()

    def test_exhaustive_counts(self):
        """Test the exhaustive count matches a direct count."""
        box = CoeffBox((1,), 6)
        result = box_schinzel_proportion(box, truncation=1000)
        direct = sum(1 for polys in enumerate_box(box) if is_schinzel(polys))
        assert result["schinzel"] == str(direct)
        assert result["tuples"] == str(box.size())

    def test_sampled_mode(self):
        """Test sampling draws the requested number and is reproducible."""
        box = CoeffBox((2,), 40)
        first = box_schinzel_proportion(box, mode="sampled", samples=500, seed=3, truncation=1000)
        second = box_schinzel_proportion(box, mode="sampled", samples=500, seed=3, truncation=1000)
        assert first["tuples"] == "500"
        assert first == second

    def test_unknown_mode(self):
        """Test an unknown mode raises ValueError."""
        with pytest.raises(ValueError, match="Unknown mode"):
            box_schinzel_proportion(CoeffBox((1,), 2), mode="grid")

    def test_residue_tuple_vanishes(self):
        """Test (t, t + 1) covers F_2 while (t,) alone does not."""
        assert residue_tuple_vanishes([[0, 1], [1, 1]], 2)
        assert not residue_tuple_vanishes([[0, 1]], 2)

    def test_blocked_residue_box_predicts_zero(self):
        """Test a residue tuple vanishing mod a prime of M predicts zero."""
        box = CoeffBox((1, 1), 6, modulus=2, residues=((0, 1), (1, 1)))
        result = box_schinzel_proportion(box, truncation=1000)
        assert result["predicted"] == "0.0"
        assert result["schinzel"] == "0"
