"""
Integer polynomials, reduction modulo primes and coefficient boxes.

Covers root counting over F_ell, the Bouniakowsky / Schinzel classification and
enumeration or seeded sampling of the box Poly(H).
"""

import math
from dataclasses import dataclass
from functools import reduce
from itertools import islice, product
from typing import Iterator, Optional, Sequence

import numpy as np

from .arith import factorize, is_prime, primes_up_to

# Above this modulus root counting falls back to a Python loop.
_NUMPY_ROOT_LIMIT = 1 << 31


@dataclass(frozen=True)
class IntPoly:
    """Integer polynomial c0 + c1 t + ... + cd t^d, stored constant term first."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("IntPoly needs at least one coefficient")
        if self.coeffs[-1] == 0:
            raise ValueError(f"Leading coefficient of {list(self.coeffs)} is zero")
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))

    @classmethod
    def from_json(cls, values: Sequence) -> "IntPoly":
        return cls(tuple(int(v) for v in values))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1]

    @property
    def height(self) -> int:
        return max(abs(c) for c in self.coeffs)

    @property
    def content(self) -> int:
        return reduce(math.gcd, self.coeffs)

    def __call__(self, m: int) -> int:
        value = 0
        for c in reversed(self.coeffs):
            value = value * m + c
        return value

    def __mul__(self, other: "IntPoly") -> "IntPoly":
        out = [0] * (self.degree + other.degree + 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return IntPoly(tuple(out))

    def reduce(self, ell: int) -> tuple[int, ...]:
        """Coefficients modulo ell (constant first)."""
        return tuple(c % ell for c in self.coeffs)

    def to_json(self) -> list[str]:
        return [str(c) for c in self.coeffs]

    def __str__(self) -> str:
        terms = []
        for power, c in enumerate(self.coeffs):
            if c == 0:
                continue
            monomial = "" if power == 0 else ("t" if power == 1 else f"t^{power}")
            coefficient = str(c) if (abs(c) != 1 or power == 0) else ("-" if c < 0 else "")
            terms.append(f"{coefficient}{monomial}")
        return " + ".join(reversed(terms)).replace("+ -", "- ") or "0"


def evaluate(P: IntPoly, m: int) -> int:
    """Horner evaluation with exact (unbounded) integers."""
    return P(m)


@dataclass(frozen=True)
class PolyTuple:
    """An n-tuple of integer polynomials (P_1, ..., P_n)."""

    polys: tuple[IntPoly, ...]

    def __post_init__(self):
        if not self.polys:
            raise ValueError("PolyTuple needs n >= 1 polynomials")
        object.__setattr__(self, "polys", tuple(self.polys))

    @classmethod
    def of(cls, *coeff_lists: Sequence[int]) -> "PolyTuple":
        return cls(tuple(IntPoly(tuple(c)) for c in coeff_lists))

    @classmethod
    def from_json(cls, values: Sequence[Sequence]) -> "PolyTuple":
        return cls(tuple(IntPoly.from_json(v) for v in values))

    @property
    def n(self) -> int:
        return len(self.polys)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(P.degree for P in self.polys)

    @property
    def total_degree(self) -> int:
        return sum(self.degrees)

    @property
    def height(self) -> int:
        return max(P.height for P in self.polys)

    def product(self) -> IntPoly:
        return reduce(lambda a, b: a * b, self.polys)

    def values(self, m: int) -> tuple[int, ...]:
        return tuple(P(m) for P in self.polys)

    def to_json(self) -> list[list[str]]:
        return [P.to_json() for P in self.polys]

    def __str__(self) -> str:
        return "(" + ", ".join(str(P) for P in self.polys) + ")"


@dataclass(frozen=True)
class LocalRootCount:
    """Z_P(ell): number of roots of P in F_ell."""

    ell: int
    count: int

    def __post_init__(self):
        if not 0 <= self.count <= self.ell:
            raise ValueError(f"Root count {self.count} outside [0, {self.ell}]")

    @property
    def vanishes_identically(self) -> bool:
        return self.count == self.ell


@dataclass(frozen=True)
class SchinzelVerdict:
    """Outcome of a Bouniakowsky/Schinzel test; ``witness`` is the offending prime, if any."""

    holds: bool
    witness: Optional[int] = None

    def __bool__(self) -> bool:
        return self.holds


def root_mask(P: IntPoly, ell: int) -> np.ndarray:
    """Boolean array over F_ell marking the roots of P modulo ell."""
    reduced = P.reduce(ell)
    if ell < _NUMPY_ROOT_LIMIT:
        s = np.arange(ell, dtype=np.int64)
        value = np.zeros(ell, dtype=np.int64)
        for c in reversed(reduced):
            value = (value * s + c) % ell
        return value == 0
    mask = np.zeros(ell, dtype=bool)
    for s in range(ell):
        value = 0
        for c in reversed(reduced):
            value = (value * s + c) % ell
        mask[s] = value == 0
    return mask


def root_set(P: IntPoly, ell: int) -> frozenset[int]:
    return frozenset(int(s) for s in np.flatnonzero(root_mask(P, ell)))


def z_count(P: IntPoly, ell: int) -> LocalRootCount:
    """Number of s in F_ell with P(s) = 0 mod ell."""
    return LocalRootCount(ell=ell, count=int(np.count_nonzero(root_mask(P, ell))))


def tuple_z_count(polys: PolyTuple, ell: int) -> LocalRootCount:
    """Z of the product P_1...P_n, i.e. the size of the union of the root sets."""
    mask = np.zeros(ell, dtype=bool)
    for P in polys.polys:
        mask |= root_mask(P, ell)
    return LocalRootCount(ell=ell, count=int(np.count_nonzero(mask)))


def _first_vanishing_prime(polys: PolyTuple, contents: Sequence[int]) -> Optional[int]:
    # a prime dividing some content kills the product on all of F_ell
    content_primes = set()
    for content in contents:
        content_primes.update(factorize(abs(content)).primes)
    for ell in primes_up_to(polys.total_degree):
        if ell in content_primes or tuple_z_count(polys, ell).vanishes_identically:
            return ell
    return min(content_primes, default=None)


def is_bouniakowsky(P: IntPoly) -> SchinzelVerdict:
    """
    Positive leading coefficient and no prime ell with P vanishing on all of F_ell.

    Only primes ell <= deg P and the prime factors of the content need checking.
    """
    if P.leading <= 0:
        return SchinzelVerdict(False)
    witness = _first_vanishing_prime(PolyTuple((P,)), [P.content])
    return SchinzelVerdict(witness is None, witness)


def is_schinzel(polys: PolyTuple) -> SchinzelVerdict:
    """Schinzel test: positive leading coefficients and the product never vanishes identically."""
    if any(P.leading <= 0 for P in polys.polys):
        return SchinzelVerdict(False)
    witness = _first_vanishing_prime(polys, [P.content for P in polys.polys])
    return SchinzelVerdict(witness is None, witness)


@dataclass(frozen=True)
class CoeffBox:
    """
    The box Poly(H): tuples with deg P_i = d_i, |P| <= H, positive leading
    coefficients and P_i = Q_i mod M coefficientwise.

    ``residues`` of None leaves the coefficients unconstrained; ``modulus`` and
    ``anchor`` then only describe the progression n = n0 mod M used for counting.
    """

    degrees: tuple[int, ...]
    height: int
    modulus: int = 1
    residues: Optional[tuple[tuple[int, ...], ...]] = None
    anchor: int = 0

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        if not self.degrees or any(d < 1 for d in self.degrees):
            raise ValueError(f"Box degrees must be >= 1, got {self.degrees}")
        if self.height < 1:
            raise ValueError(f"Box height must be >= 1, got {self.height}")
        if self.modulus < 1:
            raise ValueError(f"Box modulus must be >= 1, got {self.modulus}")
        if self.residues is not None:
            residues = tuple(tuple(int(c) for c in q) for q in self.residues)
            if len(residues) != len(self.degrees):
                raise ValueError("One residue polynomial per degree is required")
            for q, d in zip(residues, self.degrees):
                if len(q) > d + 1:
                    raise ValueError(f"Residue polynomial {q} has degree above {d}")
            object.__setattr__(self, "residues", residues)

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def total_degree(self) -> int:
        return sum(self.degrees)

    def coefficient_ranges(self) -> list[range]:
        """Admissible values of every coefficient, polynomial by polynomial, constant first."""
        ranges = []
        for i, d in enumerate(self.degrees):
            for j in range(d + 1):
                low = 1 if j == d else -self.height
                high = self.height
                if self.residues is None or self.modulus == 1:
                    ranges.append(range(low, high + 1))
                    continue
                q = self.residues[i]
                r = (q[j] if j < len(q) else 0) % self.modulus
                start = low + (r - low) % self.modulus
                ranges.append(range(start, high + 1, self.modulus))
        return ranges

    def size(self) -> int:
        """Closed-form cardinality of the box."""
        return math.prod(len(r) for r in self.coefficient_ranges())

    def split(self, flat: Sequence[int]) -> PolyTuple:
        """Cut a flat coefficient vector into the tuple it encodes."""
        polys, offset = [], 0
        for d in self.degrees:
            polys.append(IntPoly(tuple(int(c) for c in flat[offset : offset + d + 1])))
            offset += d + 1
        return PolyTuple(tuple(polys))

    def contains(self, polys: PolyTuple) -> bool:
        if polys.degrees != self.degrees:
            return False
        flat = [c for P in polys.polys for c in P.coeffs]
        return all(c in r for c, r in zip(flat, self.coefficient_ranges()))

    def to_json(self) -> dict:
        return {
            "degrees": [str(d) for d in self.degrees],
            "height": str(self.height),
            "modulus": str(self.modulus),
            "anchor": str(self.anchor),
            "residues": None
            if self.residues is None
            else [[str(c) for c in q] for q in self.residues],
        }


def box_cardinality(degrees: Sequence[int], height: int) -> int:
    """Size of Poly(H) for M = 1: prod over i of H * (2H + 1)**d_i."""
    return math.prod(height * (2 * height + 1) ** d for d in degrees)


def enumerate_box(box: CoeffBox, start: int = 0, stop: Optional[int] = None) -> Iterator[PolyTuple]:
    """
    Yield the members of Poly(H) in lexicographic coefficient order.

    ``start``/``stop`` select a contiguous index range so that shards can be
    consumed (and restarted) independently.
    """
    for flat in islice(product(*box.coefficient_ranges()), start, stop):
        yield box.split(flat)


def box_shards(box: CoeffBox, count: int) -> list[tuple[int, int]]:
    """Split the index range of the box into ``count`` contiguous (start, stop) pieces."""
    total = box.size()
    count = max(1, min(count, total)) if total else 1
    edges = [total * k // count for k in range(count + 1)]
    return [(edges[k], edges[k + 1]) for k in range(count)]


def coefficient_matrix(box: CoeffBox, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
    """
    Flat coefficient vectors for box indices [start, stop) as an int64 array.

    Row order matches ``enumerate_box``.
    """
    ranges = box.coefficient_ranges()
    sizes = tuple(len(r) for r in ranges)
    total = math.prod(sizes)
    stop = total if stop is None else min(stop, total)
    if stop <= start:
        return np.zeros((0, len(ranges)), dtype=np.int64)
    digits = np.unravel_index(np.arange(start, stop, dtype=np.int64), sizes)
    starts = np.array([r.start for r in ranges], dtype=np.int64)
    steps = np.array([r.step for r in ranges], dtype=np.int64)
    return np.stack(digits, axis=1).astype(np.int64) * steps + starts


def sample_coefficients(box: CoeffBox, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` flat coefficient vectors uniformly from the box."""
    ranges = box.coefficient_ranges()
    sizes = np.array([len(r) for r in ranges], dtype=np.int64)
    if count <= 0 or (sizes == 0).any():
        return np.zeros((0, len(ranges)), dtype=np.int64)
    picks = rng.integers(0, sizes, size=(count, len(ranges)))
    starts = np.array([r.start for r in ranges], dtype=np.int64)
    steps = np.array([r.step for r in ranges], dtype=np.int64)
    return picks * steps + starts


def sample_box(box: CoeffBox, count: int, seed: int) -> list[PolyTuple]:
    """Draw ``count`` tuples uniformly from Poly(H) with a seeded generator."""
    rng = np.random.default_rng(seed)
    return [box.split(row) for row in sample_coefficients(box, count, rng)]


def sample_schinzel(
    box: CoeffBox, count: int, seed: int, max_draws: Optional[int] = None
) -> list[PolyTuple]:
    """
    Rejection-sample Schinzel tuples from the box.

    Stops after ``max_draws`` draws (default 50 * count) even if fewer were found.
    """
    rng = np.random.default_rng(seed)
    max_draws = 50 * count if max_draws is None else max_draws
    found: list[PolyTuple] = []
    drawn = 0
    while len(found) < count and drawn < max_draws:
        batch = min(max(count - len(found), 16) * 2, max_draws - drawn)
        for row in sample_coefficients(box, batch, rng):
            drawn += 1
            polys = box.split(row)
            if is_schinzel(polys):
                found.append(polys)
                if len(found) == count:
                    break
        if box.size() == 0:
            break
    return found


def is_prime_tuple(values: Sequence[int]) -> bool:
    return all(is_prime(v) for v in values)
