"""
Prime-value counting over polynomial tuples and coefficient boxes.

theta_P(x), the least-prime sets S_C(P), the pair correlation G_{k,m}(H; d)
and the dispersion R(x, H), V(x, H) of the Bateman-Horn error over Poly(H).
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .arith import (
    euler_phi,
    factorize,
    is_prime,
    is_probable_regime,
    mangoldt,
    mangoldt_table,
    prime_sieve,
)
from .config import get_budgets
from .engine import ShardEngine
from .errors import BudgetExceededError, HypothesisError, InvariantViolationError
from .logger import logger
from .polyff import (
    CoeffBox,
    IntPoly,
    PolyTuple,
    box_shards,
    coefficient_matrix,
    sample_coefficients,
    sample_schinzel,
)
from .series import cutoff_primes, dispersion_main_term, singular_series

EXHAUSTIVE_PAIR_MAX_DEGREE = 2
EXHAUSTIVE_PAIR_MAX_HEIGHT = 2000

_CELLS_PER_CHUNK = 4_000_000
_ROWS_PER_SHARD = 1 << 16


def progression(x: float, anchor: int = 0, modulus: int = 1) -> range:
    """Natural numbers 1 <= m <= x with m = n0 mod M."""
    if x < 1:
        return range(0)
    first = (anchor - 1) % modulus + 1
    return range(first, math.floor(x) + 1, modulus)


@dataclass(frozen=True)
class ThetaValue:
    """theta_P(x) = sum over m <= x, m = n0 mod M with all P_i(m) prime of prod log P_i(m)."""

    value: float
    hits: tuple[int, ...]
    x: float
    anchor: int
    modulus: int
    probable: bool = False

    def to_json(self) -> dict:
        return {
            "value": repr(self.value),
            "hits": [str(m) for m in self.hits],
            "x": repr(self.x),
            "anchor": str(self.anchor),
            "modulus": str(self.modulus),
            "probable_prime_used": self.probable,
        }


def prime_inputs(polys: PolyTuple, ms: Sequence[int]) -> tuple[list[int], bool]:
    """The m in ``ms`` where every P_i(m) is prime, and whether a probable-prime test was needed."""
    hits, probable = [], False
    for m in ms:
        values = polys.values(m)
        if all(is_prime(v) for v in values):
            hits.append(m)
            probable = probable or any(is_probable_regime(v) for v in values)
    return hits, probable


def theta(polys: PolyTuple, x: float, anchor: int = 0, modulus: int = 1) -> ThetaValue:
    """Exact theta_P(x); primality is decided value by value."""
    hits, probable = prime_inputs(polys, progression(x, anchor, modulus))
    value = math.fsum(math.prod(math.log(v) for v in polys.values(m)) for m in hits)
    return ThetaValue(value, tuple(hits), float(x), anchor, modulus, probable)


@dataclass(frozen=True)
class HitList:
    """S_C(P): inputs m <= (log |P|)^C with all P_i(m) prime."""

    bound: float
    hits: tuple[int, ...]

    @property
    def least(self) -> Optional[int]:
        return self.hits[0] if self.hits else None

    def to_json(self) -> dict:
        return {
            "bound": repr(self.bound),
            "hits": [str(m) for m in self.hits],
            "least": None if self.least is None else str(self.least),
        }


def least_prime_inputs(
    polys: PolyTuple,
    C: float,
    anchor: int = 0,
    modulus: int = 1,
    m_bound: Optional[float] = None,
) -> HitList:
    """
    S_C(P) as a sorted hit list.

    The bound is (log |P|)^C, which needs |P| >= 3; an explicit ``m_bound``
    replaces it (and lifts the height requirement).
    """
    if m_bound is None:
        if polys.height < 3:
            raise HypothesisError("height >= 3", f"|P| = {polys.height} gives no positive bound")
        m_bound = math.log(polys.height) ** C
    hits, _ = prime_inputs(polys, progression(m_bound, anchor, modulus))
    return HitList(float(m_bound), tuple(hits))


def _increasing_from(P: IntPoly) -> int:
    """An m0 >= 1 with P increasing on [m0, oo), from the Cauchy bound on the roots of P'."""
    if P.degree == 1:
        return 1
    derivative = [j * c for j, c in enumerate(P.coeffs)][1:]
    lead = derivative[-1]
    return 1 + math.ceil(max(abs(c) for c in derivative[:-1]) / lead)


def least_prime_value(P: IntPoly, max_steps: Optional[int] = None) -> tuple[int, int]:
    """
    (m, P(m)) for the least prime value of P over m >= 1.

    The scan stops once P is increasing past the best prime found so far.

    Raises:
        BudgetExceededError: if no prime value turns up within ``max_steps``
            evaluations (default: the enumeration budget)
    """
    if max_steps is None:
        max_steps = get_budgets().enumeration
    m0 = _increasing_from(P)
    best: Optional[tuple[int, int]] = None
    for m in range(1, max_steps + 1):
        value = P(m)
        if m >= m0 and best is not None and value >= best[1]:
            return best
        if value > 1 and (best is None or value < best[1]) and is_prime(value):
            best = (m, value)
    raise BudgetExceededError(f"No least prime value of {P} settled within {max_steps} inputs")


def linnik_experiment(d: int, H: int, samples: int, epsilon: float, seed: int) -> dict:
    """
    Least prime values of sampled Bouniakowsky polynomials against |P| (log |P|)^(d + epsilon).

    Every record carries the least prime value, whether or not it lies under the bound.
    """
    box = CoeffBox((d,), H)
    polys = sample_schinzel(box, samples, seed)
    records = []
    within = 0
    for tup in polys:
        P = tup.polys[0]
        height = P.height
        bound = height * math.log(height) ** (d + epsilon) if height >= 2 else 0.0
        m, value = least_prime_value(P)
        ok = value <= bound
        within += ok
        records.append(
            {
                "poly": P.to_json(),
                "height": str(height),
                "bound": repr(bound),
                "m": str(m),
                "least_prime": str(value),
                "within_bound": ok,
            }
        )
    fraction = within / len(polys) if polys else 0.0
    logger.info(f"Linnik experiment d={d} H={H}: {within}/{len(polys)} within bound")
    return {
        "d": str(d),
        "height": str(H),
        "epsilon": repr(epsilon),
        "seed": str(seed),
        "samples": str(len(polys)),
        "fraction": repr(fraction),
        "records": records,
    }


# ---------------------------------------------------------------------------
# Pair correlation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairCorrValue:
    """G_{k,m}(H; d) next to 2^d H^(d+1) prod_{p | k-m} p/(p-1)."""

    H: int
    d: int
    k: int
    m: int
    exact: float
    main_term: float
    mode: str = "exhaustive"
    standard_error: Optional[float] = None
    samples: Optional[int] = None

    @property
    def ratio(self) -> float:
        return self.exact / self.main_term

    def to_json(self) -> dict:
        return {
            "H": str(self.H),
            "d": str(self.d),
            "k": str(self.k),
            "m": str(self.m),
            "value": repr(self.exact),
            "main_term": repr(self.main_term),
            "ratio": repr(self.ratio),
            "mode": self.mode,
            "standard_error": None if self.standard_error is None else repr(self.standard_error),
            "samples": None if self.samples is None else str(self.samples),
        }


def pair_main_term(H: int, d: int, k: int, m: int) -> float:
    factor = 1.0
    for p in factorize(abs(k - m)).primes:
        factor *= p / (p - 1)
    return 2**d * float(H) ** (d + 1) * factor


def _value_bound(H: int, d: int, point: int) -> int:
    return H * sum(point**j for j in range(d + 1))


@lru_cache(maxsize=4)
def _mangoldt_cached(limit: int) -> np.ndarray:
    return mangoldt_table(limit)


def _pair_exhaustive(H: int, d: int, k: int, m: int, limit: int) -> float:
    table = _mangoldt_cached(limit)
    outer_ranges = [range(-H, H + 1)] * (d - 1) + [range(1, H + 1)]
    sizes = tuple(len(r) for r in outer_ranges)
    total = math.prod(sizes)
    starts = np.array([r.start for r in outer_ranges], dtype=np.int64)
    powers_k = np.array([k**j for j in range(1, d + 1)], dtype=np.int64)
    powers_m = np.array([m**j for j in range(1, d + 1)], dtype=np.int64)
    c0 = np.arange(-H, H + 1, dtype=np.int64)
    chunk = max(1, _CELLS_PER_CHUNK // len(c0))

    partials = []
    for start in range(0, total, chunk):
        index = np.arange(start, min(start + chunk, total), dtype=np.int64)
        outer = np.stack(np.unravel_index(index, sizes), axis=1).astype(np.int64) + starts
        vk = (outer @ powers_k)[:, None] + c0[None, :]
        vm = (outer @ powers_m)[:, None] + c0[None, :]
        lam_k = table[np.clip(vk, 0, None)]
        lam_m = table[np.clip(vm, 0, None)]
        partials.append(float(np.sum(lam_k * lam_m)))
    return math.fsum(partials)


def _values_at(rows: list[list[int]], point: int, fits: bool) -> np.ndarray:
    values = [sum(c * point**j for j, c in enumerate(row)) for row in rows]
    return np.array(values, dtype=np.int64 if fits else object)


def _pair_stratified(
    H: int, d: int, k: int, m: int, samples: int, seed: int, limit: int
) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    strata = min(H, 20)
    edges = [1 + (H * s) // strata for s in range(strata + 1)]
    per_stratum = max(2, samples // strata)
    table = _mangoldt_cached(limit) if _value_bound(H, d, max(k, m)) <= limit else None

    def lam(values: np.ndarray) -> np.ndarray:
        if table is not None:
            return table[np.clip(values, 0, None)]
        return np.array([mangoldt(int(v)) for v in values], dtype=np.float64)

    estimate, variance = 0.0, 0.0
    for low, high in zip(edges[:-1], edges[1:]):
        if high <= low:
            continue
        lead = rng.integers(low, high, size=per_stratum)
        lower = rng.integers(-H, H + 1, size=(per_stratum, d))
        coeffs = np.concatenate([lower, lead[:, None]], axis=1).tolist()
        values = lam(_values_at(coeffs, k, table is not None)) * lam(
            _values_at(coeffs, m, table is not None)
        )
        stratum_size = (high - low) * (2 * H + 1) ** d
        estimate += stratum_size * float(values.mean())
        variance += stratum_size**2 * float(values.var(ddof=1)) / per_stratum
    return estimate, math.sqrt(variance)


def pair_correlation(
    H: int,
    d: int,
    k: int,
    m: int,
    mode: str = "auto",
    samples: int = 100_000,
    seed: int = 0,
) -> PairCorrValue:
    """
    G_{k,m}(H; d) = sum over deg P = d, |P| <= H, P > 0 of Lambda(P(k)) Lambda(P(m)).

    ``auto`` enumerates exhaustively for d <= 2 and H <= 2000 when the box fits
    the enumeration budget, and falls back to a stratified sample otherwise.
    """
    if k == m or k < 1 or m < 1:
        raise HypothesisError("k != m, k, m >= 1", f"got k={k}, m={m}")
    budgets = get_budgets()
    size = H * (2 * H + 1) ** d
    limit = max(_value_bound(H, d, k), _value_bound(H, d, m))
    small = d <= EXHAUSTIVE_PAIR_MAX_DEGREE and H <= EXHAUSTIVE_PAIR_MAX_HEIGHT
    if mode == "auto":
        mode = "exhaustive" if small and size <= budgets.enumeration else "sampled"

    main = pair_main_term(H, d, k, m)
    if mode == "exhaustive":
        if size > budgets.enumeration:
            raise BudgetExceededError(f"Pair correlation box of {size} polynomials exceeds budget")
        if limit > budgets.sieve_limit:
            raise BudgetExceededError(f"Values up to {limit} exceed the sieve limit")
        logger.info(f"Pair correlation H={H} d={d} (k,m)=({k},{m}): exhaustive over {size}")
        return PairCorrValue(H, d, k, m, _pair_exhaustive(H, d, k, m, limit), main)
    if mode == "sampled":
        estimate, se = _pair_stratified(H, d, k, m, samples, seed, min(limit, budgets.sieve_limit))
        return PairCorrValue(H, d, k, m, estimate, main, "sampled", se, samples)
    raise ValueError(f"Unknown mode '{mode}'")


# ---------------------------------------------------------------------------
# Dispersion
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4)
def _sieve_cached(limit: int) -> np.ndarray:
    return prime_sieve(limit)


def _row_value_bound(coeffs: np.ndarray, degrees: Sequence[int], x: float) -> int:
    if coeffs.size == 0:
        return 0
    top = max(1, math.floor(x))
    return int(np.abs(coeffs).max()) * sum(top**j for j in range(max(degrees) + 1))


def evaluate_rows(
    coeffs: np.ndarray, degrees: Sequence[int], x: float, anchor: int, modulus: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    theta_P(x) and S_P(x) for every row of a flat coefficient matrix.

    Values are looked up in a sieve when they fit the budget; otherwise every
    row is evaluated exactly, one tuple at a time.
    """
    rows = coeffs.shape[0]
    degrees = tuple(degrees)
    n = len(degrees)
    bound = _row_value_bound(coeffs, degrees, x)
    limit = get_budgets().sieve_limit

    if bound > limit or bound >= 2**62:
        logger.debug(f"Values up to {bound} exceed the sieve; evaluating {rows} rows exactly")
        thetas = np.zeros(rows)
        series = np.zeros(rows)
        for r in range(rows):
            polys = _split_row(coeffs[r], degrees)
            thetas[r] = theta(polys, x, anchor, modulus).value
            series[r] = singular_series(polys, x, anchor, modulus).value
        return thetas, series

    sieve = _sieve_cached(max(bound, 2))
    thetas = np.zeros(rows)
    for m in progression(x, anchor, modulus):
        all_prime = np.ones(rows, dtype=bool)
        logs = np.ones(rows)
        offset = 0
        for d in degrees:
            powers = np.array([m**j for j in range(d + 1)], dtype=np.int64)
            values = coeffs[:, offset : offset + d + 1] @ powers
            prime = (values > 1) & sieve[np.clip(values, 0, None)]
            all_prime &= prime
            logs *= np.log(np.where(prime, values, 2).astype(np.float64))
            offset += d + 1
        thetas += np.where(all_prime, logs, 0.0)

    series = np.full(rows, float(Fraction(modulus ** (n - 1), euler_phi(modulus) ** n)))
    for p in factorize(modulus).primes:
        series *= ~_vanishes_at(coeffs, degrees, anchor % p, p)
    for ell in cutoff_primes(x, modulus):
        z = _union_root_count(coeffs, degrees, ell)
        factors = np.array([(1 - j / ell) / (1 - 1 / ell) ** n for j in range(ell + 1)])
        series *= factors[z]
    return thetas, series


def _split_row(row: np.ndarray, degrees: Sequence[int]) -> PolyTuple:
    polys, offset = [], 0
    for d in degrees:
        polys.append(IntPoly(tuple(int(c) for c in row[offset : offset + d + 1])))
        offset += d + 1
    return PolyTuple(tuple(polys))


def _vanishes_at(coeffs: np.ndarray, degrees: Sequence[int], point: int, p: int) -> np.ndarray:
    """Rows where some P_i(point) = 0 mod p."""
    hit = np.zeros(coeffs.shape[0], dtype=bool)
    offset = 0
    for d in degrees:
        value = np.zeros(coeffs.shape[0], dtype=np.int64)
        for j in range(d, -1, -1):
            value = (value * point + coeffs[:, offset + j]) % p
        hit |= value == 0
        offset += d + 1
    return hit


def _union_root_count(coeffs: np.ndarray, degrees: Sequence[int], ell: int) -> np.ndarray:
    union = np.zeros((coeffs.shape[0], ell), dtype=bool)
    for s in range(ell):
        union[:, s] = _vanishes_at(coeffs, degrees, s, ell)
    return union.sum(axis=1)


@dataclass(frozen=True)
class _DispersionShard:
    degrees: tuple[int, ...]
    x: float
    anchor: int
    modulus: int
    coeffs: Optional[np.ndarray] = None
    box: Optional[CoeffBox] = None
    start: int = 0
    stop: int = 0
    keep_rows: bool = False


def _dispersion_shard(shard: _DispersionShard) -> dict:
    coeffs = shard.coeffs
    if coeffs is None:
        coeffs = coefficient_matrix(shard.box, shard.start, shard.stop)
    thetas, series = evaluate_rows(coeffs, shard.degrees, shard.x, shard.anchor, shard.modulus)
    predicted = series * shard.x
    residual = thetas - predicted
    out = {
        "count": int(coeffs.shape[0]),
        "abs": math.fsum(np.abs(residual).tolist()),
        "sq": math.fsum((residual * residual).tolist()),
        "theta2": math.fsum((thetas * thetas).tolist()),
        "cross": math.fsum((thetas * predicted).tolist()),
        "series2": math.fsum((predicted * predicted).tolist()),
        "rows": None,
    }
    if shard.keep_rows:
        out["rows"] = [
            {
                "coefficients": " ".join(str(int(c)) for c in coeffs[r]),
                "theta": repr(float(thetas[r])),
                "series": repr(float(series[r])),
                "residual": repr(float(residual[r])),
            }
            for r in range(coeffs.shape[0])
        ]
    return out


@dataclass
class DispersionReport:
    """R(x, H) and V(x, H) over Poly(H), with the three dispersion sums."""

    H: int
    x: float
    mode: str
    seed: Optional[int]
    tuples: int
    R: float
    V: float
    theta_sq_mean: float
    cross_mean: float
    series_sq_mean: float
    predicted_main: float
    exponent: float
    window: tuple[float, float]
    rows: Optional[list[dict]] = field(default=None, repr=False)

    @property
    def ratio(self) -> float:
        """R / (x / sqrt(log x))."""
        return self.R / (self.x / math.sqrt(math.log(self.x)))

    @property
    def r_over_x(self) -> float:
        return self.R / self.x

    @property
    def in_window(self) -> bool:
        return self.window[0] <= self.exponent <= self.window[1]

    def to_json(self) -> dict:
        return {
            "H": str(self.H),
            "x": repr(self.x),
            "mode": self.mode,
            "seed": None if self.seed is None else str(self.seed),
            "tuples": str(self.tuples),
            "R": repr(self.R),
            "V": repr(self.V),
            "R_over_x": repr(self.r_over_x),
            "ratio": repr(self.ratio),
            "theta_sq_mean": repr(self.theta_sq_mean),
            "cross_mean": repr(self.cross_mean),
            "series_sq_mean": repr(self.series_sq_mean),
            "predicted_main": repr(self.predicted_main),
            "exponent": repr(self.exponent),
            "window": [repr(self.window[0]), repr(self.window[1])],
            "in_window": self.in_window,
        }


def dispersion(
    box: CoeffBox,
    x: float,
    mode: str = "exhaustive",
    seed: int = 0,
    samples: int = 1000,
    threads: int = 1,
    window: Optional[tuple[float, float]] = None,
    keep_rows: bool = False,
) -> DispersionReport:
    """
    Mean absolute and mean squared Bateman-Horn error theta_P(x) - S_P(x) x over Poly(H).

    Shards are laid out independently of ``threads`` and reduced in order.
    """
    if x < 3:
        raise HypothesisError("x >= 3", f"got x={x}")
    if mode == "exhaustive":
        total = box.size()
        if total > get_budgets().enumeration:
            raise BudgetExceededError(f"Box of {total} tuples exceeds the enumeration budget")
        pieces = max(1, math.ceil(total / _ROWS_PER_SHARD))
        shards = [
            _DispersionShard(
                box.degrees,
                x,
                box.anchor,
                box.modulus,
                box=box,
                start=a,
                stop=b,
                keep_rows=keep_rows,
            )
            for a, b in box_shards(box, pieces)
        ]
    elif mode == "sampled":
        if samples < 100:
            raise HypothesisError("samples >= 100", f"got {samples}")
        matrix = sample_coefficients(box, samples, np.random.default_rng(seed))
        shards = [
            _DispersionShard(
                box.degrees,
                x,
                box.anchor,
                box.modulus,
                coeffs=matrix[a : a + _ROWS_PER_SHARD],
                keep_rows=keep_rows,
            )
            for a in range(0, matrix.shape[0], _ROWS_PER_SHARD)
        ]
    else:
        raise ValueError(f"Unknown mode '{mode}'")

    logger.info(f"Dispersion H={box.height} x={x:.4f} mode={mode} over {len(shards)} shards")
    with ShardEngine(threads) as engine:
        partials = engine.map(_dispersion_shard, shards)

    count = sum(p["count"] for p in partials)
    if count == 0:
        raise HypothesisError("non-empty box", "Poly(H) is empty for this box")

    def mean(key: str) -> float:
        return math.fsum(p[key] for p in partials) / count

    R, V = mean("abs"), mean("sq")
    if R * R > V * (1 + 1e-12):
        raise InvariantViolationError(f"Cauchy-Schwarz failed: R^2={R * R} > V={V}")

    exponent = math.log(x) / math.log(math.log(box.height)) if box.height >= 3 else float("nan")
    rows = [row for p in partials for row in (p["rows"] or [])] if keep_rows else None
    return DispersionReport(
        H=box.height,
        x=float(x),
        mode=mode,
        seed=seed if mode == "sampled" else None,
        tuples=count,
        R=R,
        V=V,
        theta_sq_mean=mean("theta2"),
        cross_mean=mean("cross"),
        series_sq_mean=mean("series2"),
        predicted_main=dispersion_main_term(box, x),
        exponent=exponent,
        window=window if window is not None else (exponent, exponent),
        rows=rows,
    )


def _tuples_matrix(tuples: Sequence[PolyTuple]) -> np.ndarray:
    return np.array([[c for P in t.polys for c in P.coeffs] for t in tuples], dtype=np.int64)


def bdh_exceptional_fraction(
    box: CoeffBox, x: float, c: float, seed: int, samples: int = 1000
) -> float:
    """Share of sampled Schinzel tuples with |theta - S x| > x / (log x)^c."""
    if not 0 < c < 0.5:
        raise HypothesisError("0 < c < 1/2", f"got c={c}")
    tuples = sample_schinzel(box, samples, seed)
    if not tuples:
        return 0.0
    thetas, series = evaluate_rows(_tuples_matrix(tuples), box.degrees, x, box.anchor, box.modulus)
    threshold = x / math.log(x) ** c
    exceptional = int(np.count_nonzero(np.abs(thetas - series * x) > threshold))
    logger.info(f"BDH exceptional fraction: {exceptional}/{len(tuples)} above {threshold:.4f}")
    return exceptional / len(tuples)


def theorem_cool_fraction(box: CoeffBox, A: float, seed: int, samples: int = 1000) -> float:
    """
    Share of sampled Schinzel tuples (height >= 3) with #S_{n+A}(P) >= (log |P|)^(A/3).

    Counting stops as soon as the threshold is reached.
    """
    if A <= 0:
        raise HypothesisError("A > 0", f"got A={A}")
    tuples = [t for t in sample_schinzel(box, samples, seed) if t.height >= 3]
    if not tuples:
        return 0.0
    good = 0
    for polys in tuples:
        log_height = math.log(polys.height)
        needed = log_height ** (A / 3)
        found = 0
        for m in progression(log_height ** (polys.n + A), box.anchor, box.modulus):
            if all(is_prime(v) for v in polys.values(m)):
                found += 1
                if found >= needed:
                    break
        good += found >= needed
    return good / len(tuples)


def prime_hit_fraction(box: CoeffBox, m_bound: int, samples: int, seed: int) -> float:
    """Share of sampled Schinzel tuples with some m <= m_bound, m = n0 mod M, all P_i(m) prime."""
    tuples = sample_schinzel(box, samples, seed)
    if not tuples:
        return 0.0
    ms = progression(m_bound, box.anchor, box.modulus)
    hits = sum(1 for polys in tuples if any(all(is_prime(v) for v in polys.values(m)) for m in ms))
    logger.info(f"Prime hit fraction: {hits}/{len(tuples)} with m <= {m_bound}")
    return hits / len(tuples)
