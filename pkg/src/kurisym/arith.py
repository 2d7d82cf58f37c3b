"""Small integer helpers shared by the curve, symbol and sweep layers."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd

from sympy import factorint, isprime, primerange

__all__ = [
    "valuation",
    "legendre",
    "kronecker",
    "primitive_root",
    "primes_upto",
    "is_prime",
    "prime_factors",
    "euler_phi",
    "rational_valuation",
]


def valuation(n: int, p: int) -> int | float:
    """p-adic valuation of an integer; ``inf`` for zero."""
    if n == 0:
        return float("inf")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def rational_valuation(x: Fraction | int, p: int) -> int | float:
    x = Fraction(x)
    if x == 0:
        return float("inf")
    return valuation(x.numerator, p) - valuation(x.denominator, p)


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a|p) for an odd prime p."""
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a|n) for n > 0."""
    if n <= 0:
        raise ValueError("kronecker symbol needs n > 0")
    result = 1
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            result = -result
    # Jacobi symbol for the odd part
    a %= n
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


@lru_cache(maxsize=None)
def prime_factors(n: int) -> tuple[int, ...]:
    return tuple(sorted(factorint(abs(n)))) if abs(n) > 1 else ()


def euler_phi(n: int) -> int:
    r = n
    for q in prime_factors(n):
        r -= r // q
    return r


@lru_cache(maxsize=4096)
def primitive_root(ell: int) -> int:
    """Smallest positive generator of (Z/ell)^x for a prime ell."""
    if ell == 2:
        return 1
    qs = prime_factors(ell - 1)
    for g in range(2, ell):
        if all(pow(g, (ell - 1) // q, ell) != 1 for q in qs):
            return g
    raise ValueError(f"{ell} is not prime")


def primes_upto(bound: int) -> list[int]:
    return list(primerange(2, bound + 1))


def is_prime(n: int) -> bool:
    return bool(isprime(n))


def coprime(a: int, b: int) -> bool:
    return gcd(a, b) == 1
