"""
x^2 + a y^2 = f(t): prime finding plus norm representation.

Covers the exact mod-4 probability r_d, the lower bound for the share of
solvable f of degree d, and the sampled solvability proportion over P_d(H).
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist
from typing import Optional

import numpy as np

from .arith import cornacchia, is_prime, two_squares
from .bernoulli import fraction_str
from .config import get_budgets
from .counting import progression
from .engine import ShardEngine
from .errors import BudgetExceededError, HypothesisError, InvariantViolationError
from .logger import logger
from .polyff import CoeffBox, IntPoly, sample_coefficients
from .series import DEFAULT_TRUNCATION, odd_prime_product

# x^2 + a y^2 has class number one for these a, so every prime it can represent is represented.
CLASS_NUMBER_ONE_FORMS = (1, 2, 3, 4, 7)

RD_MAX_DEGREE = 12

# Odd primes q = 3 mod 4 screened for local obstructions modulo q^2.
_SCREEN_PRIMES = (3, 7, 11, 19, 23)


@dataclass(frozen=True)
class ChateletSpec:
    """The equation x^2 + a y^2 = f(m) over m = n0 mod M."""

    a: int
    f: IntPoly
    anchor: int = 0
    modulus: int = 1

    def __post_init__(self):
        if self.a < 1:
            raise HypothesisError("a >= 1", f"got a={self.a}")
        if self.f.leading <= 0:
            raise HypothesisError("positive leading coefficient", f"f = {self.f}")
        if self.modulus < 1:
            raise ValueError(f"modulus must be >= 1, got {self.modulus}")

    @property
    def guaranteed(self) -> bool:
        """Representation of split primes is guaranteed only for the class-number-one forms."""
        return self.a in CLASS_NUMBER_ONE_FORMS

    def to_json(self) -> dict:
        return {
            "a": str(self.a),
            "f": self.f.to_json(),
            "anchor": str(self.anchor),
            "modulus": str(self.modulus),
        }


def splitting_modulus(a: int) -> int:
    """M with p = 1 mod M forcing (-a / p) = 1."""
    if a < 1:
        raise ValueError(f"a must be >= 1, got {a}")
    return 4 * a


def splits(p: int, a: int) -> bool:
    """Whether the prime p can be written as x^2 + a y^2 (decided by Cornacchia)."""
    return cornacchia(a, p) is not None


@dataclass
class ChateletSolution:
    """First m with x^2 + a y^2 = f(m), with the path that found it and the scan log."""

    spec: ChateletSpec
    m: Optional[int] = None
    x: Optional[int] = None
    y: Optional[int] = None
    path: Optional[str] = None
    scanned: int = 0
    log: list[tuple[int, str]] = field(default_factory=list)
    obstruction: Optional[str] = None

    @property
    def found(self) -> bool:
        return self.m is not None

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "found": self.found,
            "m": None if self.m is None else str(self.m),
            "x": None if self.x is None else str(self.x),
            "y": None if self.y is None else str(self.y),
            "path": self.path,
            "scanned": str(self.scanned),
            "best_effort": not self.spec.guaranteed,
            "obstruction": self.obstruction,
            "log": [{"m": str(m), "reason": reason} for m, reason in self.log],
        }


def _progression_classes(anchor: int, modulus: int, period: int) -> list[int]:
    """Residues mod ``period`` met by m = anchor mod modulus, m >= 1."""
    return sorted({(anchor + modulus * k) % period for k in range(period)})


def _obstructed_mod_power_of_two(f: IntPoly, anchor: int, modulus: int) -> bool:
    """Every value is 2^e k with k = 3 mod 4, checked modulo 32."""
    for r in _progression_classes(anchor, modulus, 32):
        v = f(r) % 32
        if v == 0:
            return False
        e = (v & -v).bit_length() - 1
        if e > 3 or (v >> e) % 4 != 3:
            return False
    return True


def _obstructed_mod_square(f: IntPoly, q: int, anchor: int, modulus: int) -> bool:
    """q divides every value exactly once (q = 3 mod 4)."""
    for r in _progression_classes(anchor, modulus, q * q):
        v = f(r) % (q * q)
        if v == 0 or v % q:
            return False
    return True


def local_obstruction(spec: ChateletSpec) -> Optional[str]:
    """
    A congruence reason why x^2 + y^2 = f(m) has no solution on the progression, or None.

    Only the sum-of-two-squares form is screened.
    """
    if spec.a != 1:
        return None
    if all(spec.f(r) % 4 == 3 for r in _progression_classes(spec.anchor, spec.modulus, 4)):
        return "all values = 3 mod 4"
    if _obstructed_mod_power_of_two(spec.f, spec.anchor, spec.modulus):
        return "all values are 2^e k with k = 3 mod 4"
    for q in _SCREEN_PRIMES:
        if _obstructed_mod_square(spec.f, q, spec.anchor, spec.modulus):
            return f"{q} divides every value exactly once"
    return None


def _fast_path(a: int, value: int) -> Optional[tuple[int, int]]:
    if value < 2 or not is_prime(value):
        return None
    return cornacchia(a, value)


def _full_path(value: int, max_iterations: Optional[int]) -> Optional[tuple[int, int]]:
    odd = value
    while odd and odd % 2 == 0:
        odd //= 2
    if odd % 4 == 3:
        return None
    return two_squares(value, max_iterations)


def solve_chatelet(
    spec: ChateletSpec,
    m_bound: int,
    full_path: bool = True,
    max_iterations: Optional[int] = None,
    keep_log: bool = True,
) -> ChateletSolution:
    """
    First m <= m_bound on the progression with x^2 + a y^2 = f(m).

    The fast path takes prime values and applies Cornacchia; the full path
    (a = 1 only) factors f(m) and composes two-square representations.

    Raises:
        FactoringBudgetError: if the full path cannot factor a value
    """
    result = ChateletSolution(spec)
    if full_path and spec.a == 1:
        reason = local_obstruction(spec)
        if reason is not None:
            result.obstruction = reason
            logger.debug(f"f = {spec.f} skipped: {reason}")
            return result

    for m in progression(m_bound, spec.anchor, spec.modulus):
        value = spec.f(m)
        result.scanned += 1
        if value < 0:
            if keep_log:
                result.log.append((m, "negative value"))
            continue
        found, path = _fast_path(spec.a, value), "fast"
        if found is None and full_path and spec.a == 1:
            found, path = _full_path(value, max_iterations), "full"
        if found is None:
            if keep_log:
                result.log.append((m, "no representation"))
            continue
        x, y = found
        if spec.a == 1 and y > x:
            x, y = y, x
        if x * x + spec.a * y * y != value:
            raise InvariantViolationError(f"{x}^2 + {spec.a}*{y}^2 != f({m}) = {value}")
        result.m, result.x, result.y, result.path = m, x, y, path
        return result
    return result


# ---------------------------------------------------------------------------
# The mod-4 probability r_d
# ---------------------------------------------------------------------------


def _value_vector_counts(d: int) -> dict[tuple[int, int, int, int], int]:
    """How many f in (Z/4)[t], deg f <= d, have each (f(0), f(1), f(2), f(3)) mod 4."""
    counts = {(0, 0, 0, 0): 1}
    for i in range(d + 1):
        powers = tuple(pow(j, i, 4) for j in range(4))
        nxt: dict[tuple[int, int, int, int], int] = {}
        for state, count in counts.items():
            for c in range(4):
                key = tuple((s + c * p) % 4 for s, p in zip(state, powers))
                nxt[key] = nxt.get(key, 0) + count
        counts = nxt
    return counts


def rd_exact(d: int) -> Fraction:
    """
    Share of f in (Z/4)[t] with deg f <= d taking the value 1 mod 4 somewhere.

    Counted over the 4^4 value vectors, so it is exact for every d.
    """
    if d < 0:
        raise ValueError(f"d must be >= 0, got {d}")
    if d > RD_MAX_DEGREE:
        raise BudgetExceededError(f"r_d is enumerated for d <= {RD_MAX_DEGREE}, got {d}")
    counts = _value_vector_counts(d)
    good = sum(count for state, count in counts.items() if 1 in state)
    return Fraction(good, 4 ** (d + 1))


def rd_enumerate(d: int) -> Fraction:
    """r_d by listing all 4^(d+1) coefficient vectors."""
    total = 4 ** (d + 1)
    if total > get_budgets().enumeration:
        raise BudgetExceededError(f"4^{d + 1} coefficient vectors exceed the enumeration budget")
    digits = np.stack(np.unravel_index(np.arange(total), (4,) * (d + 1)), axis=1)
    hit = np.zeros(total, dtype=bool)
    for j in range(4):
        powers = np.array([pow(j, i, 4) for i in range(d + 1)], dtype=np.int64)
        hit |= (digits @ powers) % 4 == 1
    return Fraction(int(hit.sum()), total)


@dataclass(frozen=True)
class ProbTable:
    """Lower bound (38 + 1(d >= 3))/64 * prod_{p >= 3} (1 - p^-min(p, d+1))."""

    d: int
    r_d: Fraction
    product: float
    value: float
    tail_low: float
    tail_high: float
    truncation: int

    def __post_init__(self):
        if not 0 <= self.r_d <= 1:
            raise InvariantViolationError(f"r_d = {self.r_d} outside [0, 1]")

    def to_json(self) -> dict:
        return {
            "d": str(self.d),
            "r_d": fraction_str(self.r_d),
            "product": repr(self.product),
            "value": repr(self.value),
            "tail_low": repr(self.tail_low),
            "tail_high": repr(self.tail_high),
            "truncation": str(self.truncation),
        }


def lower_bound(d: int, truncation: int = DEFAULT_TRUNCATION) -> ProbTable:
    """Limit share of P_d(H) known to give x^2 + y^2 = f(t) an integer solution."""
    if d < 2:
        raise HypothesisError("d >= 2", f"got d={d}")
    r = Fraction(38 + (d >= 3), 64)
    if d <= RD_MAX_DEGREE and rd_exact(d) != r:
        raise InvariantViolationError(f"r_{d} = {rd_exact(d)} differs from {r}")
    product = odd_prime_product(d, truncation)
    scale = float(r)
    return ProbTable(
        d=d,
        r_d=r,
        product=product.value,
        value=scale * product.value,
        tail_low=scale * product.tail_low,
        tail_high=scale * product.tail_high,
        truncation=product.truncation,
    )


# ---------------------------------------------------------------------------
# Sampled solvability proportion
# ---------------------------------------------------------------------------


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class _ProportionShard:
    coeffs: tuple[tuple[int, ...], ...]
    m_bound: int
    first: int


def _proportion_shard(shard: _ProportionShard) -> list[dict]:
    records = []
    for offset, coeffs in enumerate(shard.coeffs):
        f = IntPoly(coeffs)
        solution = solve_chatelet(ChateletSpec(1, f), shard.m_bound, keep_log=False)
        records.append(
            {
                "sample": str(shard.first + offset),
                "f": f.to_json(),
                "solvable": solution.found,
                "m": None if solution.m is None else str(solution.m),
                "x": None if solution.x is None else str(solution.x),
                "y": None if solution.y is None else str(solution.y),
                "path": solution.path,
                "skipped": solution.obstruction,
            }
        )
    return records


@dataclass
class ProportionReport:
    d: int
    H: int
    m_bound: int
    samples: int
    seed: int
    solvable: int
    interval: tuple[float, float]
    records: list[dict] = field(default_factory=list, repr=False)

    @property
    def proportion(self) -> float:
        return self.solvable / self.samples if self.samples else 0.0

    @property
    def skipped(self) -> int:
        return sum(1 for r in self.records if r["skipped"])

    def to_json(self) -> dict:
        return {
            "d": str(self.d),
            "H": str(self.H),
            "m_bound": str(self.m_bound),
            "samples": str(self.samples),
            "seed": str(self.seed),
            "solvable": str(self.solvable),
            "proportion": repr(self.proportion),
            "wilson_low": repr(self.interval[0]),
            "wilson_high": repr(self.interval[1]),
            "skipped_by_congruence": str(self.skipped),
        }


def solvability_proportion(
    d: int, H: int, m_bound: int, samples: int, seed: int, threads: int = 1
) -> ProportionReport:
    """
    Share of f drawn uniformly from P_d(H) for which x^2 + y^2 = f(m) is solved with m <= m_bound.

    Sample i uses its own generator spawned from ``seed``, so the draws do not
    depend on the thread count.
    """
    box = CoeffBox((d,), H)
    children = np.random.SeedSequence(seed).spawn(samples)
    coeffs = [
        tuple(int(c) for c in sample_coefficients(box, 1, np.random.default_rng(child))[0])
        for child in children
    ]
    chunk = max(1, math.ceil(samples / (4 * threads)))
    shards = [
        _ProportionShard(tuple(coeffs[i : i + chunk]), m_bound, i)
        for i in range(0, samples, chunk)
    ]
    logger.info(f"Solvability proportion d={d} H={H}: {samples} samples, m <= {m_bound}")
    with ShardEngine(threads) as engine:
        records = [r for part in engine.map(_proportion_shard, shards) for r in part]
    solvable = sum(1 for r in records if r["solvable"])
    report = ProportionReport(
        d=d,
        H=H,
        m_bound=m_bound,
        samples=samples,
        seed=seed,
        solvable=solvable,
        interval=wilson_interval(solvable, samples),
        records=records,
    )
    logger.info(f"Solvable share {report.proportion:.4f} ({report.skipped} skipped by congruence)")
    return report
