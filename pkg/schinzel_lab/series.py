"""
Truncated singular series and density constants.

Exact rationals are used for every finite product over small primes; long
Euler products over primes up to the truncation point are accumulated as a
compensated sum of logarithms in ascending prime order, and reported together
with a rigorous two-sided tail interval.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .arith import euler_phi, factorize, primes_up_to
from .bernoulli import c_ell, fraction_str, gamma
from .errors import HypothesisError, InvariantViolationError
from .logger import logger
from .polyff import (
    CoeffBox,
    PolyTuple,
    coefficient_matrix,
    is_schinzel,
    sample_coefficients,
    tuple_z_count,
)

DEFAULT_TRUNCATION = 1_000_000

# Primes up to this bound enter density constants as exact rationals.
EXACT_PRIME_LIMIT = 100


@dataclass(frozen=True)
class SeriesValue:
    """Truncated singular series at x, with its exact finite product."""

    value: float
    exact: Fraction
    exact_part: Fraction
    prefactor: Fraction
    x: float
    cutoff: float
    anchor: int
    modulus: int
    gcd_indicator: bool
    primes_used: int

    def to_json(self) -> dict:
        return {
            "value": repr(self.value),
            "exact": fraction_str(self.exact),
            "exact_part": fraction_str(self.exact_part),
            "prefactor": fraction_str(self.prefactor),
            "x": repr(self.x),
            "cutoff": repr(self.cutoff),
            "anchor": str(self.anchor),
            "modulus": str(self.modulus),
            "gcd_indicator": self.gcd_indicator,
            "primes_used": str(self.primes_used),
        }


@dataclass(frozen=True)
class DensityConstant:
    """
    Euler product truncated at ``truncation`` with the interval that contains
    the untruncated value.
    """

    value: float
    exact_part: Fraction
    truncation: int
    tail_low: float
    tail_high: float
    count_coefficient: float

    def __post_init__(self):
        if self.tail_bound < 0:
            raise InvariantViolationError("Negative tail bound")

    @property
    def tail_bound(self) -> float:
        return self.tail_high - self.tail_low

    def contains(self, value: float) -> bool:
        return self.tail_low <= value <= self.tail_high

    def to_json(self) -> dict:
        return {
            "value": repr(self.value),
            "exact_part": fraction_str(self.exact_part),
            "truncation": str(self.truncation),
            "tail_low": repr(self.tail_low),
            "tail_high": repr(self.tail_high),
            "tail_bound": repr(self.tail_bound),
            "count_coefficient": repr(self.count_coefficient),
        }


def cutoff_primes(x: float, modulus: int = 1) -> list[int]:
    """Primes ell <= log x (natural log, closed inequality) not dividing M."""
    if x < 1:
        return []
    return [ell for ell in primes_up_to(math.floor(math.log(x))) if modulus % ell]


def singular_series(polys: PolyTuple, x: float, anchor: int = 0, modulus: int = 1) -> SeriesValue:
    """
    S_P(x) = 1(gcd(M, prod P_i(n0)) = 1) * M^(n-1)/phi(M)^n
             * prod over ell not dividing M, ell <= log x of (1 - Z(ell)/ell) / (1 - 1/ell)^n.
    """
    n = polys.n
    cutoff = math.log(x) if x > 0 else float("-inf")
    prefactor = Fraction(modulus ** (n - 1), euler_phi(modulus) ** n)
    indicator = math.gcd(modulus, math.prod(polys.values(anchor))) == 1
    primes = cutoff_primes(x, modulus)

    exact_part = Fraction(1)
    if indicator:
        for ell in primes:
            z = tuple_z_count(polys, ell).count
            exact_part *= (1 - Fraction(z, ell)) / (1 - Fraction(1, ell)) ** n
    exact = prefactor * exact_part if indicator else Fraction(0)

    return SeriesValue(
        value=float(exact),
        exact=exact,
        exact_part=exact_part,
        prefactor=prefactor,
        x=float(x),
        cutoff=cutoff,
        anchor=anchor,
        modulus=modulus,
        gcd_indicator=indicator,
        primes_used=len(primes),
    )


def series_floor_diag(polys: PolyTuple, x: float, anchor: int = 0, modulus: int = 1) -> dict:
    """
    S_P(x) * (log log x)^(d - n) for a Schinzel tuple with the gcd condition.

    The scaled value stays bounded away from zero; only positivity is asserted.
    """
    if x <= math.e:
        raise HypothesisError("x > e", f"log log x must be positive, got x={x}")
    verdict = is_schinzel(polys)
    if not verdict:
        raise HypothesisError("schinzel", f"{polys} fails at prime {verdict.witness}")
    series = singular_series(polys, x, anchor, modulus)
    if not series.gcd_indicator:
        raise HypothesisError("gcd", f"gcd(M, prod P_i(n0)) != 1 for M={modulus}, n0={anchor}")
    if series.exact <= 0:
        logger.error(f"Non-positive singular series {series.exact} for Schinzel tuple {polys}")
        raise InvariantViolationError(f"Singular series {series.exact} <= 0 for {polys}")

    exponent = polys.total_degree - polys.n
    scaled = series.value * math.log(math.log(x)) ** exponent
    return {
        "series": series.to_json(),
        "exponent": str(exponent),
        "scaled": repr(scaled),
        "positive": True,
    }


def _log_product(primes: np.ndarray, exponents: Sequence[int]) -> float:
    """Compensated sum of log(1 - p^-e) over the primes, for every e in exponents."""
    if primes.size == 0:
        return 0.0
    p = primes.astype(np.float64)
    terms = []
    for e in exponents:
        terms.extend(np.log1p(-(p ** -float(e))).tolist())
    return math.fsum(terms)


def _tail_factor(truncation: int, degrees: Sequence[int]) -> float:
    """
    Lower bound for prod over primes ell > L of prod_i (1 - ell^-(d_i+1)).

    Uses sum_{ell > L} ell^-(d+1) <= L^-d / d and log(1-u) >= -u/(1-u).
    """
    eps = sum(truncation ** -float(d) / d for d in degrees)
    u = truncation ** -2.0
    return math.exp(-eps / (1 - u))


def schinzel_density(
    degrees: Sequence[int], modulus: int = 1, truncation: int = DEFAULT_TRUNCATION
) -> DensityConstant:
    """
    prod over ell not dividing M of (1 - c_ell): the proportion of Schinzel tuples.

    Primes up to max(L, d) use the exact c_ell; beyond d the factor is
    prod_i (1 - ell^-(d_i+1)), which yields the tail interval. The count of
    Schinzel tuples in Poly(H) is about count_coefficient * H^(d+n).
    """
    degrees = tuple(degrees)
    n, d = len(degrees), sum(degrees)
    L = max(int(truncation), d, 2)
    primes = [ell for ell in primes_up_to(L) if modulus % ell]

    exact_part = Fraction(1)
    float_primes = []
    for ell in primes:
        if ell <= d:
            exact_part *= 1 - c_ell(ell, degrees)
        elif ell <= EXACT_PRIME_LIMIT:
            for di in degrees:
                exact_part *= 1 - Fraction(1, ell ** (di + 1))
        else:
            float_primes.append(ell)

    log_value = math.log(float(exact_part)) if exact_part > 0 else float("-inf")
    log_value += _log_product(np.array(float_primes, dtype=np.int64), [di + 1 for di in degrees])
    value = math.exp(log_value)
    low = value * _tail_factor(L, degrees)

    logger.debug(f"schinzel_density degrees={degrees} M={modulus} L={L}: {value:.12f}")
    return DensityConstant(
        value=value,
        exact_part=exact_part,
        truncation=L,
        tail_low=low,
        tail_high=value,
        count_coefficient=2**d * value / modulus ** (d + n),
    )


def bouniakowsky_density(d: int, truncation: int = DEFAULT_TRUNCATION) -> DensityConstant:
    """Density of degree-d Bouniakowsky polynomials: prod over ell of (1 - ell^-min(ell, d+1))."""
    return _min_exponent_product(d, truncation, first_prime=2)


def odd_prime_product(d: int, truncation: int = DEFAULT_TRUNCATION) -> DensityConstant:
    """prod over primes p >= 3 of (1 - p^-min(p, d+1)), for d >= 2."""
    if d < 2:
        raise HypothesisError("d >= 2", f"got d={d}")
    return _min_exponent_product(d, truncation, first_prime=3)


def _min_exponent_product(d: int, truncation: int, first_prime: int) -> DensityConstant:
    L = max(int(truncation), d + 1, first_prime)
    primes = [p for p in primes_up_to(L) if p >= first_prime]
    exact_part = Fraction(1)
    float_primes = []
    for p in primes:
        if p <= EXACT_PRIME_LIMIT:
            exact_part *= 1 - Fraction(1, p ** min(p, d + 1))
        else:
            float_primes.append(p)
    value = math.exp(
        math.log(float(exact_part)) + _log_product(np.array(float_primes, dtype=np.int64), [d + 1])
    )
    return DensityConstant(
        value=value,
        exact_part=exact_part,
        truncation=L,
        tail_low=value * _tail_factor(L, [d]),
        tail_high=value,
        count_coefficient=2**d * value,
    )


def gamma_product(n: int, x: float, modulus: int = 1) -> Fraction:
    """prod over ell not dividing M, ell <= log x of gamma_n(ell)."""
    return math.prod((gamma(ell, n) for ell in cutoff_primes(x, modulus)), start=Fraction(1))


def dispersion_main_term(box: CoeffBox, x: float) -> float:
    """
    Predicted mean over the box of each of theta^2, S*theta*x and (S*x)^2.

    For a box without coefficient congruences this is
    x^2 M^(n-2) / phi(M)^n * prod gamma_n(ell); with congruences the prefactor
    is (M^(n-1)/phi(M)^n)^2, or 0 when the residue tuple fails the gcd condition.
    """
    n, M = box.n, box.modulus
    gammas = gamma_product(n, x, M)
    phi = euler_phi(M)
    if box.residues is None:
        prefactor = Fraction(M**n, M**2 * phi**n)
    else:
        values = [sum(c * box.anchor**j for j, c in enumerate(q)) for q in box.residues]
        if math.gcd(M, math.prod(values)) != 1:
            return 0.0
        prefactor = Fraction(M ** (n - 1), phi**n) ** 2
    return float(prefactor * gammas) * x * x


def _vanishing_rows(coeffs: np.ndarray, degrees: Sequence[int], ell: int) -> np.ndarray:
    """Rows of the coefficient matrix whose product vanishes on all of F_ell."""
    s = np.arange(ell, dtype=np.int64)
    union = np.zeros((coeffs.shape[0], ell), dtype=bool)
    offset = 0
    for d in degrees:
        value = np.zeros((coeffs.shape[0], ell), dtype=np.int64)
        for j in range(d, -1, -1):
            value = (value * s + (coeffs[:, offset + j] % ell)[:, None]) % ell
        union |= value == 0
        offset += d + 1
    return union.all(axis=1)


def schinzel_rows(coeffs: np.ndarray, degrees: Sequence[int]) -> np.ndarray:
    """
    Vectorized Schinzel test over the rows of a flat coefficient matrix.

    A row fails when a leading coefficient is <= 0, when the product vanishes on
    F_ell for some ell <= d, or when some content has a prime factor above d.
    """
    d = sum(degrees)
    ok = np.ones(coeffs.shape[0], dtype=bool)
    offset = 0
    small = primes_up_to(d)
    for di in degrees:
        block = coeffs[:, offset : offset + di + 1]
        ok &= block[:, -1] > 0
        content = np.gcd.reduce(np.abs(block), axis=1)
        for ell in small:
            while True:
                divisible = (content % ell == 0) & (content > 0)
                if not divisible.any():
                    break
                content = np.where(divisible, content // ell, content)
        ok &= content == 1
        offset += di + 1
    for ell in small:
        ok &= ~_vanishing_rows(coeffs, degrees, ell)
    return ok


def box_schinzel_proportion(
    box: CoeffBox,
    mode: str = "exhaustive",
    samples: int = 100_000,
    seed: int = 0,
    truncation: int = DEFAULT_TRUNCATION,
    chunk: int = 1 << 18,
) -> dict:
    """
    Observed share of Schinzel tuples in Poly(H) next to the predicted density.

    The prediction is prod over ell not dividing M of (1 - c_ell), or 0 when the
    residue tuple already vanishes identically modulo a prime dividing M.
    """
    if mode == "exhaustive":
        total = box.size()
        hits = 0
        for start in range(0, total, chunk):
            matrix = coefficient_matrix(box, start, start + chunk)
            hits += int(schinzel_rows(matrix, box.degrees).sum())
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        matrix = sample_coefficients(box, samples, rng)
        total = matrix.shape[0]
        hits = int(schinzel_rows(matrix, box.degrees).sum())
    else:
        raise ValueError(f"Unknown mode '{mode}'")

    density = schinzel_density(box.degrees, box.modulus, truncation)
    predicted = density.value
    if box.residues is not None:
        for ell in factorize(box.modulus).primes:
            if residue_tuple_vanishes(box.residues, ell):
                predicted = 0.0
    observed = hits / total if total else 0.0
    logger.info(
        f"Schinzel proportion in box H={box.height}: {observed:.5f} (predicted {predicted:.5f})"
    )
    return {
        "mode": mode,
        "tuples": str(total),
        "schinzel": str(hits),
        "observed": repr(observed),
        "predicted": repr(predicted),
        "relative_error": repr(abs(observed - predicted) / predicted) if predicted else None,
        "density": density.to_json(),
    }


def residue_tuple_vanishes(residues: Sequence[Sequence[int]], ell: int) -> bool:
    """True when the product of the residue polynomials vanishes on all of F_ell."""
    covered = set()
    for q in residues:
        for s in range(ell):
            if sum(c * pow(s, j, ell) for j, c in enumerate(q)) % ell == 0:
                covered.add(s)
    return len(covered) == ell

