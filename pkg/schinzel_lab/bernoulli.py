"""
Bernoulli model of Euler factors, in exact rational arithmetic.

A tuple of random polynomials over F_ell (deg P_i <= d_i, uniform measure) gives
Bernoulli variables X_m = 1 when no P_i vanishes at m. This module evaluates the
closed forms G_ell(d, s), c_ell, gamma_n(ell) and the joint law of (X_m), and
checks them against exhaustive enumeration of all tuples.

No floating point is used anywhere in this module.
"""

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import comb, prod
from typing import Optional, Sequence

import numpy as np

from .arith import factorize, is_prime
from .config import get_budgets
from .errors import BudgetExceededError
from .logger import logger

_CHUNK = 1 << 18


@dataclass(frozen=True)
class OmegaSpec:
    """The probability space of tuples over F_ell with deg P_i <= d_i."""

    ell: int
    degrees: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        if not is_prime(self.ell):
            raise ValueError(f"OmegaSpec needs a prime, got {self.ell}")
        if not self.degrees or any(d < 1 for d in self.degrees):
            raise ValueError(f"OmegaSpec degrees must be >= 1, got {self.degrees}")

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def total_degree(self) -> int:
        return sum(self.degrees)

    @property
    def size(self) -> int:
        return self.ell ** (self.total_degree + self.n)


def fraction_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def g_factor(ell: int, d: int, s: int) -> Fraction:
    """G_ell(d, s) = sum_{r=0..s} C(s, r) (-1)^r ell^(-min(r, d+1))."""
    return sum(
        (Fraction((-1) ** r * comb(s, r), ell ** min(r, d + 1)) for r in range(s + 1)),
        Fraction(0),
    )


def c_ell(ell: int, degrees: Sequence[int]) -> Fraction:
    """Probability that the tuple vanishes identically as a function on F_ell."""
    return sum(
        (
            (-1) ** s
            * comb(ell, s)
            * prod((g_factor(ell, d, s) for d in degrees), start=Fraction(1))
            for s in range(ell + 1)
        ),
        Fraction(0),
    )


def gamma(ell: int, n: int) -> Fraction:
    """gamma_n(ell) = 1 - 1/ell + ell^(n-1) / (ell-1)^n."""
    return 1 - Fraction(1, ell) + Fraction(ell ** (n - 1), (ell - 1) ** n)


def gamma_upper_bound(ell: int, n: int) -> Fraction:
    return 1 + Fraction(n * 2 ** (n + 1), ell * (ell - 1))


def joint_prob(spec: OmegaSpec, bits: Sequence[int]) -> Fraction:
    """
    P(X_m = bits[m] for every m in F_ell), in closed form.

    The subset sum over the zeros of ``bits`` collapses by cardinality since G
    depends only on the size of the subset.
    """
    if len(bits) != spec.ell or any(b not in (0, 1) for b in bits):
        raise ValueError(f"Need a 0/1 vector of length {spec.ell}, got {list(bits)}")
    ones = sum(bits)
    zeros = spec.ell - ones
    return sum(
        (
            (-1) ** a
            * comb(zeros, a)
            * prod((g_factor(spec.ell, d, ones + a) for d in spec.degrees), start=Fraction(1))
            for a in range(zeros + 1)
        ),
        Fraction(0),
    )


def second_moment_closed_form(ell: int, n: int) -> Fraction:
    q = 1 - Fraction(1, ell)
    return q ** (2 * n) * (q + 1 / (ell * q**n))


@dataclass(frozen=True)
class EulerFactorTable:
    """Exact Euler-factor quantities at one prime."""

    ell: int
    degrees: tuple[int, ...]
    g_values: dict[int, tuple[Fraction, ...]]
    c_ell: Fraction
    gamma_n: Fraction

    def __post_init__(self):
        if not 0 <= self.c_ell <= 1:
            raise ValueError(f"c_ell = {self.c_ell} outside [0, 1]")
        if self.gamma_n <= 0:
            raise ValueError(f"gamma_n = {self.gamma_n} must be positive")

    def to_json(self) -> dict:
        return {
            "ell": str(self.ell),
            "degrees": [str(d) for d in self.degrees],
            "G": {str(d): [fraction_str(g) for g in values] for d, values in self.g_values.items()},
            "c_ell": fraction_str(self.c_ell),
            "one_minus_c_ell": fraction_str(1 - self.c_ell),
            "gamma_n": fraction_str(self.gamma_n),
        }


def euler_factor_table(ell: int, degrees: Sequence[int]) -> EulerFactorTable:
    degrees = tuple(degrees)
    return EulerFactorTable(
        ell=ell,
        degrees=degrees,
        g_values={
            d: tuple(g_factor(ell, d, s) for s in range(ell + 1)) for d in sorted(set(degrees))
        },
        c_ell=c_ell(ell, degrees),
        gamma_n=gamma(ell, len(degrees)),
    )


# ---------------------------------------------------------------------------
# Exhaustive enumeration
# ---------------------------------------------------------------------------


def _root_masks(ell: int, degree: int) -> np.ndarray:
    """
    Root bitmask (bit s set when P(s) = 0) of every P over F_ell with deg <= degree.

    Row order is the lexicographic order of (c_0, ..., c_degree).
    """
    count = ell ** (degree + 1)
    s = np.arange(ell, dtype=np.int64)
    weights = np.left_shift(np.int64(1), s)
    out = np.empty(count, dtype=np.int64)
    for start in range(0, count, _CHUNK):
        index = np.arange(start, min(start + _CHUNK, count), dtype=np.int64)
        digits = np.unravel_index(index, (ell,) * (degree + 1))
        value = np.zeros((len(index), ell), dtype=np.int64)
        for c in reversed(digits):
            value = (value * s + c[:, None]) % ell
        out[start : start + len(index)] = ((value == 0) * weights).sum(axis=1)
    return out


def _mask_distribution(ell: int, degree: int) -> Counter:
    masks, counts = np.unique(_root_masks(ell, degree), return_counts=True)
    return Counter({int(m): int(c) for m, c in zip(masks, counts)})


def _or_convolve(left: Counter, right: Counter) -> Counter:
    out: Counter = Counter()
    for a, ca in left.items():
        for b, cb in right.items():
            out[a | b] += ca * cb
    return out


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def _check_budget(spec: OmegaSpec, budget: Optional[int]) -> None:
    budget = get_budgets().enumeration if budget is None else budget
    if spec.size > budget:
        raise BudgetExceededError(
            f"Exhaustive enumeration of {spec.ell}^{spec.total_degree + spec.n} = {spec.size} "
            f"tuples exceeds the budget of {budget}"
        )


def vanishing_distribution(spec: OmegaSpec, budget: Optional[int] = None) -> Counter:
    """
    Number of tuples per union-of-roots bitmask, over all of Omega.

    Each polynomial is enumerated on its own and the tuple law is the OR
    convolution of the per-polynomial laws.
    """
    _check_budget(spec, budget)
    dist: Counter = Counter({0: 1})
    for d in spec.degrees:
        dist = _or_convolve(dist, _mask_distribution(spec.ell, d))
    assert sum(dist.values()) == spec.size
    return dist


def joint_exhaustive(
    spec: OmegaSpec, budget: Optional[int] = None
) -> dict[tuple[int, ...], Fraction]:
    """Exhaustive law of (X_0, ..., X_{ell-1}) keyed by the 0/1 vector."""
    dist = vanishing_distribution(spec, budget)
    out = {}
    for bits in product((0, 1), repeat=spec.ell):
        mask = sum(1 << m for m, bit in enumerate(bits) if bit == 0)
        out[bits] = Fraction(dist.get(mask, 0), spec.size)
    return out


def expectation_of_product(
    spec: OmegaSpec, subset: Sequence[int], dist: Optional[Counter] = None
) -> Fraction:
    """Exhaustive E[prod_{m in subset} X_m]."""
    dist = vanishing_distribution(spec) if dist is None else dist
    hit = sum(1 << m for m in subset)
    good = sum(c for mask, c in dist.items() if mask & hit == 0)
    return Fraction(good, spec.size)


def covariance(spec: OmegaSpec, k: int, m: int, dist: Optional[Counter] = None) -> Fraction:
    """Exhaustive Cov(X_k, X_m)."""
    dist = vanishing_distribution(spec) if dist is None else dist
    return expectation_of_product(spec, [k, m], dist) - expectation_of_product(
        spec, [k], dist
    ) * expectation_of_product(spec, [m], dist)


@dataclass(frozen=True)
class MomentCheck:
    """An exhaustive value next to the closed form it should equal."""

    name: str
    exhaustive: Fraction
    closed_form: Fraction

    @property
    def equal(self) -> bool:
        return self.exhaustive == self.closed_form

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "exhaustive": fraction_str(self.exhaustive),
            "closed_form": fraction_str(self.closed_form),
            "equal": self.equal,
        }


@dataclass
class MomentReport:
    spec: OmegaSpec
    checks: list[MomentCheck] = field(default_factory=list)

    @property
    def all_equal(self) -> bool:
        return all(c.equal for c in self.checks)

    def check(self, name: str) -> MomentCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "ell": str(self.spec.ell),
            "degrees": [str(d) for d in self.spec.degrees],
            "tuples": str(self.spec.size),
            "all_equal": self.all_equal,
            "checks": [c.to_json() for c in self.checks],
        }


def verify_moments(
    spec: OmegaSpec, anchor: int = 0, budget: Optional[int] = None, product_checks: bool = True
) -> MomentReport:
    """
    Exhaustive moments of 1 - Z/ell against their closed forms.

    Reports the first moment, the second moment, the mean of
    1(all P_i(anchor) != 0) * (1 - Z/ell), c_ell against the count of tuples
    vanishing everywhere, and for ell <= 7 the product formula over every
    subset together with the pairwise covariances.
    """
    dist = vanishing_distribution(spec, budget)
    ell, n, total = spec.ell, spec.n, spec.size
    logger.info(f"Verifying moments for ell={ell}, degrees={spec.degrees} over {total} tuples")

    first = Fraction(0)
    second = Fraction(0)
    anchored = Fraction(0)
    for mask, count in dist.items():
        x = 1 - Fraction(_popcount(mask), ell)
        first += count * x
        second += count * x * x
        if not mask >> (anchor % ell) & 1:
            anchored += count * x

    q = 1 - Fraction(1, ell)
    closed_second = second_moment_closed_form(ell, n)
    full = (1 << ell) - 1
    report = MomentReport(spec)
    report.checks.extend(
        [
            MomentCheck("first_moment", first / total, q**n),
            MomentCheck("second_moment", second / total, closed_second),
            MomentCheck("anchored_moment", anchored / total, closed_second),
            MomentCheck("c_ell", Fraction(dist.get(full, 0), total), c_ell(ell, spec.degrees)),
            MomentCheck(
                "second_moment_over_gamma", second / total / q ** (2 * n), gamma(ell, n)
            ),
        ]
    )

    if product_checks and ell <= 7:
        for size in range(ell + 1):
            for subset in combinations(range(ell), size):
                report.checks.append(
                    MomentCheck(
                        f"product_formula{list(subset)}",
                        expectation_of_product(spec, subset, dist),
                        prod((g_factor(ell, d, size) for d in spec.degrees), start=Fraction(1)),
                    )
                )
        for k, m in combinations(range(ell), 2):
            report.checks.append(
                MomentCheck(f"covariance[{k},{m}]", covariance(spec, k, m, dist), Fraction(0))
            )

    if not report.all_equal:
        failed = [c.name for c in report.checks if not c.equal]
        logger.warning(f"Moment checks failed for ell={ell}: {failed}")
    return report


def verify_independence(ell: int, d: int, budget: Optional[int] = None) -> list[MomentCheck]:
    """
    For one polynomial of degree <= d: E[prod_{m in J} Y_m] = (1 - 1/ell)^#J
    whenever #J <= d + 1, and E[prod_{m in J} (1 - Y_m)] = ell^(-min(#J, d+1))
    for every J.
    """
    spec = OmegaSpec(ell, (d,))
    dist = vanishing_distribution(spec, budget)
    q = 1 - Fraction(1, ell)
    checks = []
    for size in range(ell + 1):
        for subset in combinations(range(ell), size):
            hit = sum(1 << m for m in subset)
            vanishing = sum(c for mask, c in dist.items() if mask & hit == hit)
            checks.append(
                MomentCheck(
                    f"vanishing{list(subset)}",
                    Fraction(vanishing, spec.size),
                    Fraction(1, ell ** min(size, d + 1)),
                )
            )
            if size <= d + 1:
                checks.append(
                    MomentCheck(
                        f"independence{list(subset)}",
                        expectation_of_product(spec, subset, dist),
                        q**size,
                    )
                )
    return checks


def verify_joint(spec: OmegaSpec, budget: Optional[int] = None) -> list[MomentCheck]:
    """Closed-form joint law against exhaustive counting, for every 0/1 vector."""
    exhaustive = joint_exhaustive(spec, budget)
    checks = [
        MomentCheck(f"joint{''.join(map(str, bits))}", value, joint_prob(spec, bits))
        for bits, value in exhaustive.items()
    ]
    checks.append(
        MomentCheck("joint_total", sum((c.closed_form for c in checks), Fraction(0)), Fraction(1))
    )
    return checks


def verify_gamma_moment(
    modulus: int, degrees: Sequence[int], budget: Optional[int] = None
) -> MomentCheck:
    """
    For squarefree m: the sum over all tuples over Z/m (deg P_i <= d_i) of
    prod_{ell | m} ((1 - Z_ell/ell) / (1 - 1/ell)^n)^2 equals
    m^(n+d) prod_{ell | m} gamma_n(ell).

    The left side is enumerated literally over Z/m; the reductions modulo each
    ell | m are looked up in per-prime root tables.
    """
    fac = factorize(modulus)
    if not fac.is_squarefree():
        raise ValueError(f"verify_gamma_moment needs a squarefree modulus, got {modulus}")
    degrees = tuple(degrees)
    n, d = len(degrees), sum(degrees)
    total = modulus ** (n + d)
    budget = get_budgets().enumeration if budget is None else budget
    if total > budget:
        raise BudgetExceededError(f"{modulus}^{n + d} = {total} tuples exceed the budget {budget}")

    primes = fac.primes
    tables = {ell: [_root_masks(ell, deg) for deg in degrees] for ell in primes}
    shape = (modulus,) * (n + d)

    # Z_ell per tuple, for every ell | m, grouped into a joint histogram.
    histogram: Counter = Counter()
    for start in range(0, total, _CHUNK):
        index = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        digits = np.unravel_index(index, shape)
        z_columns = []
        for ell in primes:
            union = np.zeros(len(index), dtype=np.int64)
            offset = 0
            for deg, table in zip(degrees, tables[ell]):
                reduced = tuple(digits[offset + j] % ell for j in range(deg + 1))
                union |= table[np.ravel_multi_index(reduced, (ell,) * (deg + 1))]
                offset += deg + 1
            z = np.zeros(len(index), dtype=np.int64)
            for s in range(ell):
                z += (union >> s) & 1
            z_columns.append(z)
        rows, counts = np.unique(np.stack(z_columns, axis=1), axis=0, return_counts=True)
        for row, count in zip(rows, counts):
            histogram[tuple(int(z) for z in row)] += int(count)

    lhs = Fraction(0)
    for zs, count in histogram.items():
        weight = Fraction(1)
        for ell, z in zip(primes, zs):
            weight *= ((1 - Fraction(z, ell)) / (1 - Fraction(1, ell)) ** n) ** 2
        lhs += count * weight

    rhs = total * prod((gamma(ell, n) for ell in primes), start=Fraction(1))
    return MomentCheck(f"gamma_moment[m={modulus}]", lhs, rhs)
