"""
Diagonal conics a x^2 + b y^2 + c z^2 = 0.

Local and global solvability through Hilbert symbols, the subset-sum indicator
Q of a conic whose coefficients carry known prime factors, rational points by
Lagrange descent, and the conic-bundle experiments built on prime values of
polynomial tuples.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterator, Optional, Sequence

import numpy as np

from .arith import Place, crt, factorize, hilbert, is_prime, jacobi, sqrt_mod, squarefree_part
from .counting import progression
from .errors import HypothesisError, InvariantViolationError
from .logger import logger
from .polyff import PolyTuple

_REDUCTION_STEPS = 200
_PENCIL_DIRECTIONS = [
    w for w in product(range(-2, 3), repeat=3) if any(w) and math.gcd(*w) == 1
]


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectivePoint:
    """Primitive integer point (x : y : z)."""

    x: int
    y: int
    z: int

    def __post_init__(self):
        if self.x == 0 and self.y == 0 and self.z == 0:
            raise ValueError("Projective point cannot be (0, 0, 0)")
        if math.gcd(self.x, self.y, self.z) != 1:
            raise ValueError(f"Point ({self.x}, {self.y}, {self.z}) is not primitive")

    @classmethod
    def primitive(cls, x: int, y: int, z: int) -> "ProjectivePoint":
        g = math.gcd(x, y, z)
        return cls(abs(x) // g, abs(y) // g, abs(z) // g)

    def satisfies(self, a: int, b: int, c: int) -> bool:
        return a * self.x**2 + b * self.y**2 + c * self.z**2 == 0

    def to_json(self) -> list[str]:
        return [str(self.x), str(self.y), str(self.z)]


@dataclass(frozen=True)
class ConicSpec:
    """
    The conic a1 pi1 x^2 + a2 pi2 y^2 + a3 pi3 z^2 = 0 with pi_i the product of
    the primes in group i.
    """

    a: tuple[int, int, int]
    primes: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]

    def __post_init__(self):
        a = tuple(int(v) for v in self.a)
        primes = tuple(tuple(int(p) for p in group) for group in self.primes)
        if len(a) != 3 or len(primes) != 3:
            raise ValueError("ConicSpec needs three coefficients and three prime groups")
        if 0 in a:
            raise HypothesisError("nonzero a_i", f"got {a}")
        if not factorize(abs(math.prod(a))).is_squarefree():
            raise HypothesisError("a1 a2 a3 squarefree", f"got {a}")
        if not primes[0] or not primes[1]:
            raise HypothesisError("n1 > 0 and n2 > 0", f"group sizes {[len(g) for g in primes]}")
        for p in (p for group in primes for p in group):
            if not is_prime(p):
                raise HypothesisError("prime p_ij", f"{p} is not prime")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "primes", primes)

    @property
    def n(self) -> int:
        return sum(len(group) for group in self.primes)

    @property
    def pi(self) -> tuple[int, int, int]:
        return tuple(math.prod(group) for group in self.primes)

    @property
    def coefficients(self) -> tuple[int, int, int]:
        return tuple(a * p for a, p in zip(self.a, self.pi))

    @property
    def bad_primes(self) -> list[int]:
        """Primes dividing 2 a1 a2 a3."""
        return sorted({2, *factorize(abs(math.prod(self.a))).primes})

    def all_primes(self) -> list[int]:
        return [p for group in self.primes for p in group]

    def to_json(self) -> dict:
        return {
            "a": [str(v) for v in self.a],
            "primes": [[str(p) for p in group] for group in self.primes],
            "coefficients": [str(v) for v in self.coefficients],
        }


@dataclass(frozen=True)
class NuProfile:
    """Residues nu_ij modulo 8 |a1 a2 a3| making every p | 2 a1 a2 a3 harmless."""

    a: tuple[int, int, int]
    nu: tuple[tuple[int, ...], ...]
    modulus: int

    def __post_init__(self):
        for value in (v for group in self.nu for v in group):
            if math.gcd(value, 2 * math.prod(self.a)) != 1:
                raise InvariantViolationError(f"nu = {value} is not coprime to 2 a1 a2 a3")

    @property
    def groups(self) -> tuple[int, ...]:
        return tuple(len(group) for group in self.nu)

    def to_json(self) -> dict:
        return {
            "a": [str(v) for v in self.a],
            "nu": [[str(v) for v in group] for group in self.nu],
            "modulus": str(self.modulus),
        }


@dataclass(frozen=True)
class ConicSolution:
    """Either a rational point or the place where the conic is locally obstructed."""

    a: int
    b: int
    c: int
    point: Optional[ProjectivePoint] = None
    obstruction: Optional[Place] = None

    @property
    def solvable(self) -> bool:
        return self.point is not None

    def to_json(self) -> dict:
        return {
            "conic": [str(self.a), str(self.b), str(self.c)],
            "point": None if self.point is None else self.point.to_json(),
            "obstruction": None if self.obstruction is None else str(self.obstruction),
        }


# ---------------------------------------------------------------------------
# Local and global solvability
# ---------------------------------------------------------------------------


def local_solvable(a: int, b: int, c: int, v: Place) -> bool:
    """a x^2 + b y^2 + c z^2 = 0 has a nontrivial point over Q_v iff (-ac, -bc)_v = 1."""
    if a == 0 or b == 0 or c == 0:
        raise ValueError("Conic coefficients must be nonzero")
    return hilbert(-a * c, -b * c, v) == 1


def _prime_factors(n: int, known_primes: Sequence[int] = ()) -> set[int]:
    n = abs(n)
    found = set()
    for p in known_primes:
        if n % p == 0:
            found.add(p)
            while n % p == 0:
                n //= p
    if n > 1:
        found.update(factorize(n).primes)
    return found


def relevant_places(a: int, b: int, c: int, known_primes: Sequence[int] = ()) -> list[Place]:
    """The real place, then 2 and every prime dividing abc in ascending order."""
    primes = {2} | _prime_factors(a * b * c, known_primes)
    return [Place.infinity()] + [Place(p) for p in sorted(primes)]


def obstructed_places(a: int, b: int, c: int, known_primes: Sequence[int] = ()) -> list[Place]:
    """
    Places without a local point. Their number is always even.

    Raises:
        InvariantViolationError: if the Hilbert product formula fails
    """
    bad = [v for v in relevant_places(a, b, c, known_primes) if not local_solvable(a, b, c, v)]
    if len(bad) % 2:
        raise InvariantViolationError(f"Odd number of obstructed places for ({a}, {b}, {c})")
    return bad


def obstruction(a: int, b: int, c: int, known_primes: Sequence[int] = ()) -> Optional[Place]:
    """First place (real place first) where the conic has no local point, or None."""
    bad = obstructed_places(a, b, c, known_primes)
    return bad[0] if bad else None


def is_globally_solvable(a: int, b: int, c: int, known_primes: Sequence[int] = ()) -> bool:
    """Hasse-Minkowski: a point over Q exists iff one exists at every place."""
    return obstruction(a, b, c, known_primes) is None


# ---------------------------------------------------------------------------
# Q indicator and the nu profile
# ---------------------------------------------------------------------------


def _numerators(a: Sequence[int], pi: Sequence[int]) -> tuple[int, int, int]:
    """-a_i' a_i'' pi_i' pi_i'' for i = 1, 2, 3."""
    return tuple(-a[j] * a[k] * pi[j] * pi[k] for j, k in ((1, 2), (0, 2), (0, 1)))


def check_q_hypotheses(spec: ConicSpec) -> None:
    """Raise HypothesisError naming the first failed hypothesis of the Q criterion."""
    a = spec.a
    if all(v > 0 for v in a) or all(v < 0 for v in a):
        raise HypothesisError("mixed signs", f"a = {a} all share one sign")
    primes = spec.all_primes()
    if len(set(primes)) != len(primes):
        raise HypothesisError("distinct primes", f"p_ij = {primes} repeat")
    bad = spec.bad_primes
    for p in primes:
        if p in bad:
            raise HypothesisError("p_ij coprime to 2 a1 a2 a3", f"{p} divides 2 a1 a2 a3")
    A, B, C = spec.coefficients
    for p in bad:
        if not local_solvable(A, B, C, Place(p)):
            raise HypothesisError("local solvability", f"no Q_{p}-point on {spec.coefficients}")


def subset_terms(spec: ConicSpec) -> Iterator[tuple[tuple[frozenset, ...], int]]:
    """
    Every subset triple (S1, S2, S3) with its symbol product, excluding the empty
    and the full triple.
    """
    full = tuple(frozenset(range(len(g))) for g in spec.primes)
    empty = (frozenset(), frozenset(), frozenset())
    choices = [product((False, True), repeat=len(g)) for g in spec.primes]
    for bits in product(*choices):
        subsets = tuple(frozenset(j for j, on in enumerate(b) if on) for b in bits)
        if subsets == empty or subsets == full:
            continue
        yield subsets, t_sign(spec.a, spec.primes, subsets)


def q_value(spec: ConicSpec) -> Fraction:
    """Q = 2^-n (2 + sum of the symbol products over the proper nonempty subset triples)."""
    return Fraction(2 + sum(sign for _, sign in subset_terms(spec)), 2**spec.n)


def q_indicator(spec: ConicSpec) -> int:
    """
    Q in {0, 1}; equals 1 exactly when the conic has a rational point.

    Raises:
        HypothesisError: if mixed signs, distinctness or local solvability at
            p | 2 a1 a2 a3 fails
        InvariantViolationError: if Q lands outside {0, 1}
    """
    check_q_hypotheses(spec)
    q = q_value(spec)
    if q not in (0, 1):
        raise InvariantViolationError(f"Q = {q} is not 0 or 1 for {spec.to_json()}")
    return int(q)


def _mu_nu(a: Sequence[int]) -> tuple[int, int]:
    """Odd (mu, nu) with (-a1 a3 nu, -a2 a3 mu)_2 = 1."""
    u, w = -a[0] * a[2], -a[1] * a[2]
    two = Place(2)
    if hilbert(u, w, two) == 1:
        return 1, 1
    if u % 2 == 0:
        return 5, 1
    if w % 2 == 0:
        return 1, 5
    return -1, 1


def _odd_part(n: int) -> int:
    n = abs(n)
    while n % 2 == 0:
        n //= 2
    return n


def nu_profile(a1: int, a2: int, a3: int, n1: int, n2: int, n3: int) -> NuProfile:
    """
    Residues nu_ij modulo 8 |a1 a2 a3| such that pairwise distinct primes
    p_ij = nu_ij make the conic locally solvable at every p | 2 a1 a2 a3.

    nu_ij = 1 except nu_11 and nu_21, which solve
        nu_11 = 1 mod a1, -a1 a3 nu_11 = 1 mod a2, -a1 a2 nu_11 = 1 mod a3, nu_11 = nu mod 8
        -a2 a3 nu_21 = 1 mod a1, nu_21 = 1 mod a2, nu_21 = 1 mod a3, nu_21 = mu mod 8
    """
    a = (a1, a2, a3)
    if 0 in a or not factorize(abs(a1 * a2 * a3)).is_squarefree():
        raise HypothesisError("a1 a2 a3 squarefree", f"got {a}")
    if n1 < 1 or n2 < 1 or n3 < 0:
        raise HypothesisError("n1 > 0 and n2 > 0", f"groups ({n1}, {n2}, {n3})")
    mu, nu = _mu_nu(a)
    odd = [_odd_part(v) for v in a]

    def solve(units: Sequence[int], eight: int) -> int:
        residues, moduli = [eight % 8], [8]
        for unit, m in zip(units, odd):
            if m > 1:
                residues.append(pow(unit, -1, m))
                moduli.append(m)
        return crt(residues, moduli)[0]

    nu11 = solve([1, -a1 * a3, -a1 * a2], nu)
    nu21 = solve([-a2 * a3, 1, 1], mu)
    modulus = 8 * abs(a1 * a2 * a3)
    groups = (
        (nu11,) + (1,) * (n1 - 1),
        (nu21,) + (1,) * (n2 - 1),
        (1,) * n3,
    )
    return NuProfile(a, groups, modulus)


def sample_profile_primes(
    profile: NuProfile, count: int, seed: int, span: int = 10_000
) -> list[tuple[tuple[int, ...], ...]]:
    """Draw ``count`` groupings of pairwise distinct primes p_ij = nu_ij mod the profile modulus."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        used: set[int] = set()
        groups = []
        for group in profile.nu:
            chosen = []
            for residue in group:
                while True:
                    p = residue % profile.modulus + profile.modulus * int(rng.integers(0, span))
                    if p not in used and is_prime(p):
                        break
                used.add(p)
                chosen.append(p)
            groups.append(tuple(chosen))
        out.append(tuple(groups))
    return out


# ---------------------------------------------------------------------------
# Rational points
# ---------------------------------------------------------------------------


def _sqrt_mod_squarefree(a: int, n: int, known_primes: Sequence[int]) -> Optional[int]:
    """r with r^2 = a mod n for squarefree n >= 1, or None."""
    if n == 1:
        return 0
    residues, moduli = [], []
    for p in sorted(_prime_factors(n, known_primes)):
        r = sqrt_mod(a, p)
        if r is None:
            return None
        residues.append(r)
        moduli.append(p)
    return crt(residues, moduli)[0]


def _remove_gcd(*values: int) -> tuple[int, ...]:
    g = math.gcd(*values)
    return tuple(v // g for v in values) if g else values


def _descent(A: int, B: int, known_primes: Sequence[int]) -> Optional[tuple[int, int, int]]:
    """Nontrivial (w, y, z) with w^2 = A y^2 + B z^2 for squarefree A, B, or None."""
    if abs(A) > abs(B):
        found = _descent(B, A, known_primes)
        return None if found is None else (found[0], found[2], found[1])
    if A == 1:
        return 1, 1, 0
    if B == 1:
        return 1, 0, 1
    if B == -1:
        return None

    r = _sqrt_mod_squarefree(A, abs(B), known_primes)
    if r is None:
        return None
    if r > abs(B) // 2:
        r -= abs(B)
    Q = (r * r - A) // B
    if Q == 0:
        B0, d = 1, 0
    else:
        s, d = squarefree_part(Q)
        B0 = s
    found = _descent(A, B0, known_primes)
    if found is None:
        return None
    W, X, Y = found
    return _remove_gcd(-A * X + r * W, r * X - W, Y * B0 * d)


def _normalize(a: int, b: int, c: int, known_primes: Sequence[int]):
    """
    Reduce to squarefree pairwise coprime coefficients.

    Returns the reduced triple and the integer scaling (sx, sy, sz) taking a
    reduced point to a point of the original conic.
    """
    scale = [1, 1, 1]
    coeffs = [a, b, c]
    for i, v in enumerate(coeffs):
        s, r = _squarefree_with_hints(v, known_primes)
        coeffs[i] = s
        scale[i] = r
    lcm = math.lcm(*scale)
    scale = [lcm // r for r in scale]

    g = math.gcd(*coeffs)
    coeffs = [v // g for v in coeffs]
    changed = True
    while changed:
        changed = False
        for i, j, k in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
            g = math.gcd(coeffs[i], coeffs[j])
            if g > 1:
                coeffs[i] //= g
                coeffs[j] //= g
                coeffs[k] *= g
                scale[k] *= g
                changed = True
    return tuple(coeffs), tuple(scale)


def _squarefree_with_hints(n: int, known_primes: Sequence[int]) -> tuple[int, int]:
    s, r = (1 if n > 0 else -1), 1
    rest = abs(n)
    for p in sorted(set(known_primes)):
        e = 0
        while rest % p == 0:
            rest //= p
            e += 1
        r *= p ** (e // 2)
        if e % 2:
            s *= p
    if rest > 1:
        s2, r2 = squarefree_part(rest)
        s *= s2
        r *= r2
    return s, r


def _key(x: int, y: int, z: int) -> tuple[int, int]:
    return abs(x * y * z), max(abs(x), abs(y), abs(z))


def holzer_reduce(a: int, b: int, c: int, point: ProjectivePoint) -> ProjectivePoint:
    """
    Shrink a point of a normalized conic to Holzer size.

    The coefficients must be squarefree, pairwise coprime and of mixed signs.
    Written as A X^2 + B Y^2 = C Z^2 with A, B, C > 0, each step takes the
    chord through P in a direction U with X v - Y u = C; the second
    intersection is divisible by C, and its Z at most Z/4 + AB/Z. The result
    satisfies 3 Z^2 <= 4 AB, hence 3 X^2 <= 4 BC and 3 Y^2 <= 4 AC.

    Raises:
        HypothesisError: if the signs are not mixed or two coefficients share a factor
        InvariantViolationError: if a step fails to shrink Z
    """
    coeffs = [a, b, c]
    if 0 in coeffs or all(v > 0 for v in coeffs) or all(v < 0 for v in coeffs):
        raise HypothesisError("mixed signs", f"conic ({a}, {b}, {c})")
    if math.gcd(a, b) != 1 or math.gcd(a, c) != 1 or math.gcd(b, c) != 1:
        raise HypothesisError("pairwise coprime", f"conic ({a}, {b}, {c})")
    if not point.satisfies(a, b, c):
        raise ValueError(f"{point} is not on ({a}, {b}, {c})")
    if sum(v < 0 for v in coeffs) == 2:
        coeffs = [-v for v in coeffs]
    k = next(i for i, v in enumerate(coeffs) if v < 0)
    i, j = (m for m in range(3) if m != k)
    A, B, C = coeffs[i], coeffs[j], -coeffs[k]
    coords = (point.x, point.y, point.z)
    X, Y, Z = abs(coords[i]), abs(coords[j]), abs(coords[k])

    while 3 * Z * Z > 4 * A * B:
        s = 1 if Y == 0 else pow(X, -1, Y)
        t = 0 if Y == 0 else (1 - s * X) // Y
        u, v = -C * t, C * s
        L = A * u * X + B * v * Y
        w = (2 * L + C * Z) // (2 * C * Z)
        form = A * u * u + B * v * v - C * w * w
        polar = L - C * w * Z
        chord = ProjectivePoint.primitive(
            form * X - 2 * polar * u, form * Y - 2 * polar * v, form * Z - 2 * polar * w
        )
        if chord.z >= Z:
            raise InvariantViolationError(f"Chord step did not shrink Z on ({a}, {b}, {c})")
        X, Y, Z = chord.x, chord.y, chord.z

    out = [0, 0, 0]
    out[i], out[j], out[k] = X, Y, Z
    return ProjectivePoint(*out)


def reduce_point(a: int, b: int, c: int, point: ProjectivePoint) -> ProjectivePoint:
    """
    Polish a point by walking the pencil of lines through it.

    The second intersection of the line through P in direction w is
    q(w) P - 2 b(P, w) w, for the small directions w in _PENCIL_DIRECTIONS. A step
    is taken while it strictly lowers (|xyz|, max |coord|) without raising
    max |coord|; among such steps the lexicographically smallest
    (|xyz|, max, |x|, |y|, |z|) wins. This is a local search: the result need not
    minimize |xyz| over the conic.
    """
    current = (point.x, point.y, point.z)
    for _ in range(_REDUCTION_STEPS):
        best = None
        here = _key(*current)
        for w in _PENCIL_DIRECTIONS:
            qw = a * w[0] ** 2 + b * w[1] ** 2 + c * w[2] ** 2
            bw = a * current[0] * w[0] + b * current[1] * w[1] + c * current[2] * w[2]
            candidate = tuple(qw * p - 2 * bw * wi for p, wi in zip(current, w))
            if not any(candidate):
                continue
            candidate = ProjectivePoint.primitive(*candidate)
            triple = (candidate.x, candidate.y, candidate.z)
            key = _key(*triple)
            rank = key + triple
            if key < here and key[1] <= here[1] and (best is None or rank < best[0]):
                best = (rank, triple)
        if best is None:
            break
        current = best[1]
    return ProjectivePoint.primitive(*current)


def solve_conic(a: int, b: int, c: int, known_primes: Sequence[int] = ()) -> ConicSolution:
    """
    A primitive point on a x^2 + b y^2 + c z^2 = 0, or the obstructing place.

    ``known_primes`` are prime factors of abc that need not be rediscovered
    by factoring. The descent point is brought to Holzer size on the normalized
    conic, scaled back and polished by ``reduce_point``.

    Raises:
        InvariantViolationError: if descent fails on a locally solvable conic
        FactoringBudgetError: if factoring an unknown cofactor runs out of budget
    """
    place = obstruction(a, b, c, known_primes)
    if place is not None:
        logger.debug(f"Conic ({a}, {b}, {c}) obstructed at {place}")
        return ConicSolution(a, b, c, obstruction=place)

    (ra, rb, rc), scale = _normalize(a, b, c, known_primes)
    # X^2 = -ab y^2 - ac z^2 with X = a x
    hints = list(known_primes) + list(_prime_factors(a * b * c, known_primes))
    found = _descent(-ra * rb, -ra * rc, hints)
    if found is None:
        raise InvariantViolationError(f"Descent failed on locally solvable conic ({a}, {b}, {c})")
    X, y, z = found
    start = ProjectivePoint.primitive(X, ra * y, ra * z)
    if not start.satisfies(ra, rb, rc):
        raise InvariantViolationError(f"Descent point {start} is not on ({ra}, {rb}, {rc})")
    reduced = holzer_reduce(ra, rb, rc, start)
    point = ProjectivePoint.primitive(
        reduced.x * scale[0], reduced.y * scale[1], reduced.z * scale[2]
    )
    if not point.satisfies(a, b, c):
        raise InvariantViolationError(f"Scaled point {point} is not on ({a}, {b}, {c})")
    point = reduce_point(a, b, c, point)
    if not point.satisfies(a, b, c):
        raise InvariantViolationError(f"Reduced point {point} is not on ({a}, {b}, {c})")
    return ConicSolution(a, b, c, point=point)


# ---------------------------------------------------------------------------
# Reciprocity bookkeeping for the subset sums
# ---------------------------------------------------------------------------


def reciprocity_sign(p: int, q: int) -> int:
    """(-1)^((p-1)(q-1)/4) for odd p, q."""
    if p % 2 == 0 or q % 2 == 0:
        raise ValueError(f"reciprocity_sign needs odd arguments, got {p}, {q}")
    return -1 if ((p - 1) // 2) * ((q - 1) // 2) % 2 else 1


def t_sign(
    a: Sequence[int], values: Sequence[Sequence[int]], subsets: Sequence[frozenset]
) -> int:
    """prod_i ( -a_i' a_i'' pi_i' pi_i'' / pi(S_i) ) for the prime values grouped by i."""
    pi = tuple(math.prod(group) for group in values)
    numerators = _numerators(a, pi)
    sign = 1
    for i, S in enumerate(subsets):
        sign *= jacobi(numerators[i], math.prod(values[i][j] for j in S))
    return sign


def t_sign_rewritten(
    a: Sequence[int], values: Sequence[Sequence[int]], subsets: Sequence[frozenset]
) -> int:
    """
    The same summand with pi_i split as pi(S_i) pi(S_i^c): symbols over the
    complements, times reciprocity_sign(p, q) for every p in S_i, q in S_i', i < i'.
    """
    inside = [[values[i][j] for j in sorted(S)] for i, S in enumerate(subsets)]
    outside = [
        math.prod(v for j, v in enumerate(values[i]) if j not in subsets[i]) for i in range(3)
    ]
    numerators = _numerators(a, outside)
    sign = 1
    for i in range(3):
        sign *= jacobi(numerators[i], math.prod(inside[i]))
    for i, k in ((0, 1), (0, 2), (1, 2)):
        for p in inside[i]:
            for q in inside[k]:
                sign *= reciprocity_sign(p, q)
    return sign


# ---------------------------------------------------------------------------
# Conic bundles over prime values
# ---------------------------------------------------------------------------


def group_values(values: Sequence[int], groups: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    out, offset = [], 0
    for size in groups:
        out.append(tuple(values[offset : offset + size]))
        offset += size
    return tuple(out)


def _check_groups(polys: PolyTuple, groups: Sequence[int]) -> None:
    if len(groups) != 3 or sum(groups) != polys.n:
        raise HypothesisError(
            "grouping", f"groups {tuple(groups)} do not split {polys.n} polynomials"
        )
    if groups[0] < 1 or groups[1] < 1 or groups[2] < 0:
        raise HypothesisError("n1 > 0 and n2 > 0", f"groups {tuple(groups)}")


def _classify(a: Sequence[int], values: Sequence[int], groups: Sequence[int]) -> Optional[str]:
    """Why m is excluded from the conic-bundle analysis, or None."""
    if not all(is_prime(v) for v in values):
        return "not all prime"
    if len(set(values)) != len(values):
        return "non-distinct primes"
    two_a = 2 * math.prod(a)
    if any(two_a % p == 0 for p in values):
        return "prime divides 2 a1 a2 a3"
    return None


@dataclass
class BundleAttempt:
    m: int
    reason: str

    def to_json(self) -> dict:
        return {"m": str(self.m), "reason": self.reason}


@dataclass
class BundleResult:
    """First m with a rational point on the fibre, and the log of every attempt."""

    m: Optional[int]
    spec: Optional[ConicSpec]
    point: Optional[ProjectivePoint]
    attempts: list[BundleAttempt] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.point is not None

    def to_json(self) -> dict:
        return {
            "found": self.found,
            "m": None if self.m is None else str(self.m),
            "conic": None if self.spec is None else self.spec.to_json(),
            "point": None if self.point is None else self.point.to_json(),
            "attempts": [a.to_json() for a in self.attempts],
        }


def bundle_search(
    a: Sequence[int],
    polys: PolyTuple,
    groups: Sequence[int],
    anchor: int = 0,
    modulus: int = 1,
    m_bound: int = 1000,
) -> BundleResult:
    """
    Smallest m <= m_bound, m = n0 mod M, where every P_ij(m) is prime, the primes
    are pairwise distinct and a1 pi1 x^2 + a2 pi2 y^2 + a3 pi3 z^2 = 0 has a rational point.
    """
    _check_groups(polys, groups)
    a = tuple(a)
    attempts: list[BundleAttempt] = []
    for m in progression(m_bound, anchor, modulus):
        values = polys.values(m)
        reason = _classify(a, values, groups)
        if reason is not None:
            attempts.append(BundleAttempt(m, reason))
            continue
        spec = ConicSpec(a, group_values(values, groups))
        A, B, C = spec.coefficients
        known = spec.all_primes()
        fixed = [Place.infinity()] + [Place(p) for p in spec.bad_primes]
        local = [v for v in fixed if not local_solvable(A, B, C, v)]
        if local:
            attempts.append(BundleAttempt(m, f"locally obstructed at {local[0]}"))
            continue
        place = obstruction(A, B, C, known)
        q = q_indicator(spec)
        if (q == 1) != (place is None):
            raise InvariantViolationError(f"Q = {q} disagrees with the local test at m={m}")
        if q == 0:
            attempts.append(BundleAttempt(m, f"Q = 0 (obstructed at {place})"))
            continue
        solution = solve_conic(A, B, C, known)
        attempts.append(BundleAttempt(m, "solved"))
        logger.info(f"Conic bundle fibre at m={m} has point {solution.point.to_json()}")
        return BundleResult(m, spec, solution.point, attempts)
    logger.info(f"No solvable fibre for m <= {m_bound} ({len(attempts)} attempts)")
    return BundleResult(None, None, None, attempts)


@dataclass
class IdentityReport:
    """Both sides of C = 2^-(n-1) theta + 2^-n sum T over the qualifying m."""

    counted: float
    theta: float
    t_sums: dict[str, float]
    rhs: float
    holds: bool
    qualifying: list[int]
    excluded: list[BundleAttempt]
    mismatches: list[int]

    def to_json(self) -> dict:
        return {
            "C": repr(self.counted),
            "theta": repr(self.theta),
            "T": {key: repr(v) for key, v in sorted(self.t_sums.items())},
            "rhs": repr(self.rhs),
            "holds": self.holds,
            "qualifying": [str(m) for m in self.qualifying],
            "excluded": [e.to_json() for e in self.excluded],
            "mismatches": [str(m) for m in self.mismatches],
        }


def _subset_label(subsets: Sequence[frozenset]) -> str:
    return "|".join(",".join(str(j + 1) for j in sorted(S)) or "-" for S in subsets)


def identity_check(
    a: Sequence[int],
    polys: PolyTuple,
    groups: Sequence[int],
    x: float,
    anchor: int = 0,
    modulus: int = 1,
) -> IdentityReport:
    """
    Check C_P(x) = 2^-(n-1) theta_P(x) + 2^-n sum' T_S,P(x) term by term.

    Only m whose prime values are pairwise distinct, prime to 2 a1 a2 a3 and
    locally solvable at p | 2 a1 a2 a3 take part; the rest are listed with a
    reason. Each qualifying m contributes the same weight prod log P_ij(m) to
    every sum, so the identity is checked exactly on the coefficients.
    """
    _check_groups(polys, groups)
    a = tuple(a)
    if all(v > 0 for v in a) or all(v < 0 for v in a):
        raise HypothesisError("mixed signs", f"a = {a} all share one sign")
    n = polys.n
    excluded: list[BundleAttempt] = []
    qualifying: list[int] = []
    counted, theta_terms, mismatches = [], [], []
    t_terms: dict[str, list[float]] = {}

    for m in progression(x, anchor, modulus):
        values = polys.values(m)
        reason = _classify(a, values, groups)
        if reason == "not all prime":
            continue
        if reason is not None:
            excluded.append(BundleAttempt(m, reason))
            continue
        spec = ConicSpec(a, group_values(values, groups))
        A, B, C = spec.coefficients
        local = [p for p in spec.bad_primes if not local_solvable(A, B, C, Place(p))]
        if local:
            excluded.append(BundleAttempt(m, f"locally obstructed at {local[0]}"))
            continue

        weight = math.prod(math.log(v) for v in values)
        indicator = int(is_globally_solvable(A, B, C, spec.all_primes()))
        signs = {}
        consistent = True
        for subsets, sign in subset_terms(spec):
            signs[_subset_label(subsets)] = sign
            consistent &= sign == t_sign_rewritten(a, spec.primes, subsets)
        rhs = Fraction(2 + sum(signs.values()), 2**n)
        if rhs != indicator or not consistent:
            mismatches.append(m)
        qualifying.append(m)
        counted.append(indicator * weight)
        theta_terms.append(weight)
        for label, sign in signs.items():
            t_terms.setdefault(label, []).append(sign * weight)

    t_sums = {label: math.fsum(terms) for label, terms in t_terms.items()}
    theta_value = math.fsum(theta_terms)
    rhs_value = theta_value / 2 ** (n - 1) + math.fsum(t_sums.values()) / 2**n
    if mismatches:
        logger.error(f"Subset-sum identity fails at m = {mismatches}")
    return IdentityReport(
        counted=math.fsum(counted),
        theta=theta_value,
        t_sums=t_sums,
        rhs=rhs_value,
        holds=not mismatches,
        qualifying=qualifying,
        excluded=excluded,
        mismatches=mismatches,
    )
