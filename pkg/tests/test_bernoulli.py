"""
Unit tests for the finite-field Bernoulli model.

Closed forms are checked against exhaustive enumeration of small Omega spaces.
"""

from fractions import Fraction
from itertools import product

import pytest

from schinzel_lab.bernoulli import (
    OmegaSpec,
    c_ell,
    covariance,
    euler_factor_table,
    expectation_of_product,
    fraction_str,
    g_factor,
    gamma,
    gamma_upper_bound,
    joint_exhaustive,
    joint_prob,
    second_moment_closed_form,
    vanishing_distribution,
    verify_gamma_moment,
    verify_independence,
    verify_joint,
    verify_moments,
)
from schinzel_lab.errors import BudgetExceededError


class TestOmegaSpec:
    """Test the probability space descriptor."""

    def test_size(self):
        """Test |Omega| = ell^(d + n)."""
        assert OmegaSpec(3, (1, 2)).size == 3**5

    def test_needs_prime(self):
        """Test composite ell is refused."""
        with pytest.raises(ValueError, match="needs a prime"):
            OmegaSpec(4, (1,))

    def test_needs_positive_degrees(self):
        """Test zero degrees are refused."""
        with pytest.raises(ValueError, match="degrees"):
            OmegaSpec(3, (0,))


class TestClosedForms:
    """Test the exact closed forms."""

    def test_g_factor_small(self):
        """Test G(d, 0) = 1 and G(d, 1) = 1 - 1/ell."""
        assert g_factor(5, 2, 0) == 1
        assert g_factor(5, 2, 1) == Fraction(4, 5)

    @pytest.mark.parametrize(
        "ell,n,expected", [(3, 1, Fraction(14, 27)), (2, 1, Fraction(3, 8))]
    )
    def test_second_moment(self, ell, n, expected):
        """Test the closed-form second moment."""
        assert second_moment_closed_form(ell, n) == expected

    def test_gamma_values(self):
        """Test gamma_1(2) = 3/2 and gamma_1(3) = 7/6."""
        assert gamma(2, 1) == Fraction(3, 2)
        assert gamma(3, 1) == Fraction(7, 6)

    def test_gamma_upper_bound(self):
        """Test gamma stays under its bound for a range of primes."""
        for ell in (3, 5, 7, 11, 13):
            for n in (1, 2, 3):
                assert gamma(ell, n) <= gamma_upper_bound(ell, n)

    def test_c_ell_linear(self):
        """Test only the zero polynomial of degree <= 1 vanishes on F_ell."""
        assert c_ell(3, (1,)) == Fraction(1, 9)
        assert c_ell(5, (1,)) == Fraction(1, 25)

    def test_c_ell_quadratic_mod_2(self):
        """Test 0 and t^2 + t vanish on F_2."""
        assert c_ell(2, (2,)) == Fraction(1, 4)

    def test_c_ell_in_unit_interval(self):
        """Test c_ell is a probability for primes up to 50 and degrees up to 6."""
        for ell in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47):
            for d in range(1, 7):
                value = c_ell(ell, (d,))
                assert 0 <= value <= 1

    def test_joint_all_nonvanishing(self):
        """Test P(X = (1, 1, 1)) = 2/9 for one linear polynomial over F_3."""
        assert joint_prob(OmegaSpec(3, (1,)), (1, 1, 1)) == Fraction(2, 9)

    def test_joint_sums_to_one(self):
        """Test the joint law is a probability distribution."""
        spec = OmegaSpec(3, (1, 1))
        total = sum(joint_prob(spec, bits) for bits in product((0, 1), repeat=3))
        assert total == 1

    def test_joint_rejects_bad_vector(self):
        """Test the 0/1 vector length is checked."""
        with pytest.raises(ValueError, match="0/1 vector"):
            joint_prob(OmegaSpec(3, (1,)), (1, 1))

    def test_fraction_str(self):
        """Test the p/q rendering keeps integers explicit."""
        assert fraction_str(Fraction(3, 8)) == "3/8"
        assert fraction_str(Fraction(2)) == "2/1"

    def test_euler_factor_table(self):
        """Test the Euler table collects c_ell and gamma."""
        table = euler_factor_table(3, (1,))
        assert table.c_ell == Fraction(1, 9)
        assert table.gamma_n == Fraction(7, 6)


class TestExhaustive:
    """Test exhaustive enumeration against the closed forms."""

    def test_distribution_total(self):
        """Test the bitmask histogram covers Omega."""
        spec = OmegaSpec(3, (1, 1))
        assert sum(vanishing_distribution(spec).values()) == spec.size

    @pytest.mark.parametrize(
        "ell,degrees", [(2, (1,)), (3, (1,)), (3, (2,)), (3, (1, 1)), (5, (1,)), (2, (2, 1))]
    )
    def test_moments_agree(self, ell, degrees):
        """Test every moment check holds exactly."""
        report = verify_moments(OmegaSpec(ell, degrees))
        assert report.all_equal

    def test_second_moment_value(self):
        """Test the exhaustive second moment for ell = 3, d = 1."""
        report = verify_moments(OmegaSpec(3, (1,)))
        assert report.check("second_moment").exhaustive == Fraction(14, 27)

    def test_moments_anchor(self):
        """Test the anchored moment does not depend on the anchor."""
        spec = OmegaSpec(3, (1,))
        for anchor in range(3):
            assert verify_moments(spec, anchor=anchor).check("anchored_moment").equal

    def test_expectation_of_product(self):
        """Test one linear polynomial over F_3 is nonzero at 0 and at 1 with probability 4/9."""
        spec = OmegaSpec(3, (1,))
        assert expectation_of_product(spec, [0]) == Fraction(2, 3)
        assert expectation_of_product(spec, [0, 1]) == Fraction(4, 9)

    def test_covariance_zero(self):
        """Test X_k and X_m are uncorrelated."""
        spec = OmegaSpec(5, (1,))
        assert covariance(spec, 0, 3) == 0

    def test_independence(self):
        """Test the single-polynomial independence statements."""
        assert all(check.equal for check in verify_independence(3, 1))
        assert all(check.equal for check in verify_independence(5, 2))

    def test_joint(self):
        """Test the closed-form joint law against counting."""
        spec = OmegaSpec(3, (1, 1))
        assert all(check.equal for check in verify_joint(spec))
        assert joint_exhaustive(spec)[(1, 1, 1)] == joint_prob(spec, (1, 1, 1))

    def test_budget(self):
        """Test enumeration refuses spaces over budget."""
        with pytest.raises(BudgetExceededError, match="exceeds the budget"):
            vanishing_distribution(OmegaSpec(5, (2, 2)), budget=10)

    def test_gamma_moment(self):
        """Test the squared normalized moment over Z/6."""
        check = verify_gamma_moment(6, [1])
        assert check.equal

    def test_gamma_moment_needs_squarefree(self):
        """Test non-squarefree moduli are refused."""
        with pytest.raises(ValueError, match="squarefree"):
            verify_gamma_moment(4, [1])

    def test_gamma_moment_budget(self):
        """Test the gamma moment enumeration honours its budget."""
        with pytest.raises(BudgetExceededError):
            verify_gamma_moment(30, [2, 2], budget=1000)
