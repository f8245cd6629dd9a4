"""
Integer arithmetic primitives.

Primality, factorization, residue symbols, modular square roots, CRT, Hilbert
symbols, Cornacchia and the von Mangoldt functions. Everything here is pure.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Optional

import numpy as np

from .config import get_budgets
from .errors import FactoringBudgetError

TRIAL_DIVISION_LIMIT = 100_000

# Deterministic for every n < 3.3 * 10**24, hence for n < 2**64.
MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

DETERMINISTIC_LIMIT = 2**64


# ---------------------------------------------------------------------------
# Sieves
# ---------------------------------------------------------------------------


def prime_sieve(limit: int) -> np.ndarray:
    """Boolean array ``is_prime[0..limit]``."""
    if limit < 1:
        return np.zeros(max(limit + 1, 0), dtype=bool)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return is_prime


@lru_cache(maxsize=8)
def _primes_cached(limit: int) -> tuple[int, ...]:
    return tuple(int(p) for p in np.flatnonzero(prime_sieve(limit)))


def primes_up_to(limit: int) -> list[int]:
    """All primes p <= limit in increasing order."""
    if limit < 2:
        return []
    return list(_primes_cached(int(limit)))


def mangoldt_table(limit: int) -> np.ndarray:
    """Float array with ``table[n] = Λ(n)`` for 0 <= n <= limit."""
    table = np.zeros(max(limit + 1, 1), dtype=np.float64)
    for p in _primes_cached(max(int(limit), 1)):
        log_p = math.log(p)
        q = p
        while q <= limit:
            table[q] = log_p
            q *= p
    return table


_SMALL_PRIMES = primes_up_to(TRIAL_DIVISION_LIMIT)
_SMALL_PRIME_SET = frozenset(_SMALL_PRIMES)


# ---------------------------------------------------------------------------
# Primality
# ---------------------------------------------------------------------------


def _strong_probable_prime(n: int, base: int) -> bool:
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    x = pow(base, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def _strong_lucas_probable_prime(n: int) -> bool:
    """Strong Lucas test with Selfridge's parameter choice (n odd, not a square)."""
    if math.isqrt(n) ** 2 == n:
        return False

    D = 5
    while True:
        j = jacobi(D, n)
        if j == -1:
            break
        if j == 0 and abs(D) != n:
            return False
        D = -D - 2 if D > 0 else -D + 2
    P, Q = 1, (1 - D) // 4

    d, s = n + 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1

    def halve(v: int) -> int:
        v %= n
        return (v + n) // 2 if v % 2 else v // 2

    U, V, Qk = 1, P, Q % n
    for bit in bin(d)[3:]:
        U, V = U * V % n, (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if bit == "1":
            U, V = halve(P * U + V), halve(D * U + P * V)
            Qk = Qk * Q % n

    if U == 0 or V == 0:
        return True
    for _ in range(s - 1):
        V = (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if V == 0:
            return True
    return False


def is_prime(n: int) -> bool:
    """
    Primality test.

    Deterministic below 2**64 (fixed Miller-Rabin witnesses). Above that a
    Baillie-PSW test is used; callers that need to flag this should consult
    ``is_probable_regime``.
    """
    if n < 2:
        return False
    if n <= TRIAL_DIVISION_LIMIT:
        return n in _SMALL_PRIME_SET
    for p in _SMALL_PRIMES[:50]:
        if n % p == 0:
            return False
    if n < DETERMINISTIC_LIMIT:
        return all(_strong_probable_prime(n, a) for a in MR_WITNESSES)
    return _strong_probable_prime(n, 2) and _strong_lucas_probable_prime(n)


def is_probable_regime(n: int) -> bool:
    """True when is_prime(n) relies on a probable-prime test."""
    return abs(n) >= DETERMINISTIC_LIMIT


# ---------------------------------------------------------------------------
# Factorization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Factorization:
    """Prime factorization ``value = prod(p**e)`` with strictly increasing primes."""

    value: int
    factors: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        product = 1
        previous = 1
        for p, e in self.factors:
            if p <= previous or e < 1:
                raise ValueError(f"Malformed factorization of {self.value}: {self.factors}")
            previous = p
            product *= p**e
        if product != self.value:
            raise ValueError(f"Factors {self.factors} do not multiply to {self.value}")

    @property
    def primes(self) -> list[int]:
        return [p for p, _ in self.factors]

    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)

    def to_list(self) -> list[list[str]]:
        return [[str(p), str(e)] for p, e in self.factors]


def pollard_brent(n: int, max_iterations: int, seed: int = 1) -> int:
    """
    Find a nontrivial factor of the composite n with Brent's cycle detection.

    Raises:
        FactoringBudgetError: if no factor is found within ``max_iterations`` steps
    """
    if n % 2 == 0:
        return 2
    iterations = 0
    for c in range(seed, seed + 32):
        y, r, q, g = 2, 1, 1, 1
        m = 128
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            iterations += r
            if iterations > max_iterations:
                raise FactoringBudgetError(
                    f"Pollard-rho exceeded {max_iterations} iterations on {n}"
                )
            r *= 2
        if g == n:
            # Backtrack one step at a time over the last block.
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g
    raise FactoringBudgetError(f"Pollard-rho found no factor of {n}")


def _split(n: int, max_iterations: int, out: dict[int, int]) -> None:
    if n == 1:
        return
    if is_prime(n):
        out[n] = out.get(n, 0) + 1
        return
    root = math.isqrt(n)
    if root * root == n:
        _split(root, max_iterations, out)
        _split(root, max_iterations, out)
        return
    factor = pollard_brent(n, max_iterations)
    _split(factor, max_iterations, out)
    _split(n // factor, max_iterations, out)


def factorize(n: int, max_iterations: Optional[int] = None) -> Factorization:
    """
    Factor n >= 1: trial division to 10**5, then Pollard-Brent.

    Args:
        n: Positive integer
        max_iterations: Pollard-rho iteration cap (default: configured factoring budget)

    Raises:
        ValueError: if n < 1
        FactoringBudgetError: if the budget is exhausted
    """
    if n < 1:
        raise ValueError(f"factorize needs n >= 1, got {n}")
    if max_iterations is None:
        max_iterations = get_budgets().factor_iterations

    found: dict[int, int] = {}
    rest = n
    for p in _SMALL_PRIMES:
        if p * p > rest:
            break
        if rest % p == 0:
            e = 0
            while rest % p == 0:
                rest //= p
                e += 1
            found[p] = e
    if rest > 1:
        if rest <= TRIAL_DIVISION_LIMIT**2:
            found[rest] = found.get(rest, 0) + 1
        else:
            _split(rest, max_iterations, found)

    return Factorization(value=n, factors=tuple(sorted(found.items())))


def valuation(n: int, p: int) -> int:
    """Exponent of p in the nonzero integer n."""
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    n, v = abs(n), 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def squarefree_part(n: int) -> tuple[int, int]:
    """Return (s, r) with n = s * r**2 and s squarefree (sign kept on s)."""
    if n == 0:
        raise ValueError("squarefree part of 0 is undefined")
    s, r = (1 if n > 0 else -1), 1
    for p, e in factorize(abs(n)).factors:
        r *= p ** (e // 2)
        if e % 2:
            s *= p
    return s, r


def mobius(n: int) -> int:
    """Möbius function for n >= 1."""
    if n < 1:
        raise ValueError(f"mobius needs n >= 1, got {n}")
    fac = factorize(n)
    if not fac.is_squarefree():
        return 0
    return -1 if len(fac.factors) % 2 else 1


def euler_phi(n: int) -> int:
    result = n
    for p, _ in factorize(n).factors:
        result -= result // p
    return result


# ---------------------------------------------------------------------------
# Residue symbols and square roots
# ---------------------------------------------------------------------------


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd positive n."""
    if n <= 0 or n % 2 == 0:
        raise ValueError(f"Jacobi symbol needs odd positive n, got {n}")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def symbol(a: int, b: int) -> int:
    """
    Legendre-Jacobi symbol (a/b) for any b >= 1.

    Even b is allowed: each factor 2 of b contributes (a/2), taken as 0 for even a
    and 1 for odd a.
    """
    if b < 1:
        raise ValueError(f"symbol needs b >= 1, got {b}")
    twos = (b & -b).bit_length() - 1
    odd = b >> twos
    if twos and a % 2 == 0:
        return 0
    return jacobi(a, odd)


def sqrt_mod(a: int, p: int) -> Optional[int]:
    """
    Square root of a modulo the prime p (Tonelli-Shanks).

    Returns the smaller of the two roots, or None when a is a nonresidue.
    """
    a %= p
    if p == 2 or a == 0:
        return a
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        r = pow(a, (p + 1) // 4, p)
        return min(r, p - r)

    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return min(r, p - r)


def sqrt_mod_prime_power(a: int, p: int, k: int) -> Optional[int]:
    """Square root of a unit a modulo p**k for odd p, by Hensel lifting."""
    r = sqrt_mod(a, p)
    if r is None or r == 0:
        return None if a % p else 0
    modulus = p
    for _ in range(1, k):
        modulus *= p
        r = (r - (r * r - a) * pow(2 * r, -1, modulus)) % modulus
    return r


def crt(residues: list[int], moduli: list[int]) -> tuple[int, int]:
    """Chinese remainder theorem for pairwise coprime moduli; returns (r, M)."""
    r, modulus = 0, 1
    for a, m in zip(residues, moduli):
        if math.gcd(modulus, m) != 1:
            raise ValueError(f"CRT moduli not coprime: {modulus} and {m}")
        r += modulus * ((a - r) * pow(modulus, -1, m) % m)
        modulus *= m
    return r % modulus, modulus


# ---------------------------------------------------------------------------
# Hilbert symbols
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Place:
    """A place of Q: a finite prime, or the real place when ``prime`` is None."""

    prime: Optional[int] = None

    def __post_init__(self):
        if self.prime is not None and not is_prime(self.prime):
            raise ValueError(f"Place needs a prime, got {self.prime}")

    @classmethod
    def infinity(cls) -> "Place":
        return cls(None)

    @property
    def is_real(self) -> bool:
        return self.prime is None

    def __str__(self) -> str:
        return "inf" if self.prime is None else str(self.prime)


def hilbert(a: int, b: int, v: Place) -> int:
    """Hilbert symbol (a, b)_v for nonzero integers a, b."""
    if a == 0 or b == 0:
        raise ValueError("Hilbert symbol needs nonzero arguments")
    if v.is_real:
        return -1 if a < 0 and b < 0 else 1

    p = v.prime
    alpha, beta = valuation(a, p), valuation(b, p)
    u, w = a // p**alpha, b // p**beta

    if p == 2:
        def eps(t: int) -> int:
            return ((t % 8) - 1) // 2 % 2

        def omega(t: int) -> int:
            return ((t % 8) ** 2 - 1) // 8 % 2

        exponent = eps(u) * eps(w) + alpha * omega(w) + beta * omega(u)
        return -1 if exponent % 2 else 1

    sign = -1 if (alpha * beta * ((p - 1) // 2)) % 2 else 1
    if beta % 2:
        sign *= jacobi(u, p)
    if alpha % 2:
        sign *= jacobi(w, p)
    return sign


def relevant_primes(*values: int) -> list[int]:
    """2 and every prime dividing one of the nonzero values."""
    primes = {2}
    for value in values:
        primes.update(factorize(abs(value)).primes)
    return sorted(primes)


# ---------------------------------------------------------------------------
# Binary quadratic forms
# ---------------------------------------------------------------------------


def cornacchia(d: int, p: int) -> Optional[tuple[int, int]]:
    """
    Solve x**2 + d*y**2 = p for a prime p, with x >= 0 and y >= 1.

    Returns None when no representation exists.
    """
    if d < 1:
        raise ValueError(f"cornacchia needs d >= 1, got {d}")
    if d > p:
        return None
    if d == p:
        return 0, 1
    if p == 2:
        return (1, 1) if d == 1 else None
    r = sqrt_mod(-d, p)
    if r is None:
        return None
    if 2 * r < p:
        r = p - r
    a, b = p, r
    limit = math.isqrt(p)
    while b > limit:
        a, b = b, a % b
    rest = p - b * b
    if rest % d:
        return None
    c = rest // d
    y = math.isqrt(c)
    if y * y != c or y == 0:
        return None
    return b, y


def two_squares(n: int, max_iterations: Optional[int] = None) -> Optional[tuple[int, int]]:
    """
    Write n = x**2 + y**2 with x, y >= 0, or return None.

    Decided from the factorization of n; representations of the prime factors
    are composed with the Gaussian product identity.
    """
    if n < 0:
        return None
    if n == 0:
        return 0, 0

    x, y = 1, 0
    for p, e in factorize(n, max_iterations).factors:
        if p % 4 == 3:
            if e % 2:
                return None
            scale = p ** (e // 2)
            x, y = x * scale, y * scale
            continue
        a, b = (1, 1) if p == 2 else cornacchia(1, p)
        for _ in range(e):
            x, y = x * a - y * b, x * b + y * a
    return abs(x), abs(y)


# ---------------------------------------------------------------------------
# von Mangoldt
# ---------------------------------------------------------------------------


def mangoldt(n: int) -> float:
    """Λ(n): log p when n = p**k, 0 otherwise (0 for n <= 1)."""
    if n <= 1:
        return 0.0
    fac = factorize(n)
    if len(fac.factors) == 1:
        return math.log(fac.factors[0][0])
    return 0.0


def mangoldt_truncated(n: int, z: float) -> float:
    """Λ_z(n) = -sum over d | n, d <= z of μ(d) log d (0 for n <= 0)."""
    if z < 1:
        raise ValueError(f"truncation z must be >= 1, got {z}")
    if n <= 0:
        return 0.0
    primes = factorize(n).primes
    total = 0.0
    for size in range(1, len(primes) + 1):
        for subset in combinations(primes, size):
            d = math.prod(subset)
            if d <= z:
                total -= (-1) ** size * math.log(d)
    return total
