"""Exact elliptic-curve arithmetic over Q and finite fields.

Minimal models, Tate's algorithm, Frobenius traces (naive counting for
small primes, baby-step/giant-step above ``BSGS_THRESHOLD``), local
p-torsion of E(Q_p) and a three-valued mod-p surjectivity heuristic.
"""

from __future__ import annotations

import enum
import random
import re
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from math import gcd, isqrt
from pathlib import Path

import numpy as np
from sympy import Poly, factor_list, factorint, symbols
from sympy.ntheory.residue_ntheory import sqrt_mod

from .arith import legendre, prime_factors, primes_upto, valuation

BSGS_THRESHOLD = 1 << 14


class SingularCurveError(ValueError):
    """Raised for a Weierstrass equation with zero discriminant."""


class BadReductionError(ValueError):
    """Raised when an operation needs good reduction at a prime."""


class Reduction(str, enum.Enum):
    GOOD = "good"
    SPLIT_MULT = "split_mult"
    NONSPLIT_MULT = "nonsplit_mult"
    ADDITIVE = "additive"


class ReductionAtP(str, enum.Enum):
    GOOD_ORDINARY = "good_ordinary"
    GOOD_SUPERSINGULAR = "good_supersingular"
    MULTIPLICATIVE = "multiplicative"
    ADDITIVE = "additive"


class Verdict3(str, enum.Enum):
    YES = "yes"
    NO = "no"
    INCONCLUSIVE = "inconclusive"


class Surjectivity(str, enum.Enum):
    SURJECTIVE = "surjective"
    NOT_SURJECTIVE = "not_surjective"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class WeierstrassModel:
    """y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6 with integer coefficients."""

    a1: int
    a2: int
    a3: int
    a4: int
    a6: int

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4", "a6"):
            if not isinstance(getattr(self, name), int):
                raise TypeError(f"{name} must be an integer")
        if self.disc == 0:
            raise SingularCurveError(f"singular Weierstrass equation {self.ainvs}")

    @property
    def ainvs(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def b2(self) -> int:
        return self.a1 * self.a1 + 4 * self.a2

    @property
    def b4(self) -> int:
        return self.a1 * self.a3 + 2 * self.a4

    @property
    def b6(self) -> int:
        return self.a3 * self.a3 + 4 * self.a6

    @property
    def b8(self) -> int:
        a1, a2, a3, a4, a6 = self.ainvs
        return a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4

    @property
    def c4(self) -> int:
        return self.b2 * self.b2 - 24 * self.b4

    @property
    def c6(self) -> int:
        return -self.b2 ** 3 + 36 * self.b2 * self.b4 - 216 * self.b6

    @cached_property
    def disc(self) -> int:
        b2, b4, b6, b8 = self.b2, self.b4, self.b6, self.b8
        return -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @property
    def j_invariant(self):
        from fractions import Fraction

        return Fraction(self.c4 ** 3, self.disc)

    def __str__(self) -> str:
        return ",".join(str(a) for a in self.ainvs)

    @classmethod
    def from_list(cls, coeffs) -> "WeierstrassModel":
        coeffs = [int(c) for c in coeffs]
        if len(coeffs) == 2:
            coeffs = [0, 0, 0] + coeffs
        if len(coeffs) != 5:
            raise ValueError("expected 5 a-invariants (or 2 for short form)")
        return cls(*coeffs)


def transform(W: WeierstrassModel, r: int = 0, s: int = 0, t: int = 0, u: int = 1) -> WeierstrassModel:
    """Apply x = u^2 x' + r, y = u^3 y' + s u^2 x' + t; division by u must be exact."""
    a1, a2, a3, a4, a6 = W.ainvs
    n1 = a1 + 2 * s
    n2 = a2 - s * a1 + 3 * r - s * s
    n3 = a3 + r * a1 + 2 * t
    n4 = a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t
    n6 = a6 + r * a4 + r * r * a2 + r ** 3 - t * a3 - t * t - r * t * a1
    out = []
    for k, n in zip((1, 2, 3, 4, 6), (n1, n2, n3, n4, n6)):
        q, rem = divmod(n, u ** k)
        if rem:
            raise ValueError(f"non-integral transform by u={u}")
        out.append(q)
    return WeierstrassModel(*out)


# ---------------------------------------------------------------------------
# Tate's algorithm


@dataclass(frozen=True)
class LocalData:
    prime: int
    conductor_exponent: int
    kodaira: str
    tamagawa: int
    reduction: Reduction

    def as_dict(self) -> dict:
        return {
            "prime": self.prime,
            "f": self.conductor_exponent,
            "kodaira": self.kodaira,
            "c": self.tamagawa,
            "reduction": self.reduction.value,
        }


def _nroots_mod(coeffs: list[int], p: int) -> int:
    """Number of roots in F_p of a polynomial given high-to-low."""
    coeffs = [c % p for c in coeffs]
    deg = len(coeffs) - 1
    if deg == 2 and p != 2 and coeffs[0]:
        a, b, c = coeffs
        return 1 + legendre(b * b - 4 * a * c, p)
    n = 0
    for x in range(p):
        acc = 0
        for c in coeffs:
            acc = (acc * x + c) % p
        n += acc == 0
    return n


def _has_root(coeffs: list[int], p: int) -> bool:
    return _nroots_mod(coeffs, p) > 0


def _exact_div(a: int, b: int) -> int:
    q, r = divmod(a, b)
    assert r == 0, "Tate's algorithm lost integrality"
    return q


def _tate(W: WeierstrassModel, p: int) -> tuple[LocalData, WeierstrassModel]:
    """Tate's algorithm at p; returns local data and a model minimal at p.

    The returned model is related to ``W`` by integral transformations and
    divisions by p, so it stays integral.
    """
    C = W
    while True:
        n = valuation(C.disc, p)
        if n == 0:
            return LocalData(p, 0, "I0", 1, Reduction.GOOD), C
        a1, a2, a3, a4, a6 = C.ainvs
        b2, b4, b6 = C.b2, C.b4, C.b6
        c4, c6 = C.c4, C.c6
        # move the singular point to (0, 0)
        if p == 2:
            if b2 % 2 == 0:
                r = a4 % 2
                t = (r * (1 + a2 + a4) + a6) % 2
            else:
                r = a3 % 2
                t = (r + a4) % 2
        elif p == 3:
            r = (-b6) % 3 if b2 % 3 == 0 else (-b2 * b4) % 3
            t = (a1 * r + a3) % 3
        else:
            inv12 = pow(12, -1, p)
            if c4 % p == 0:
                r = (-b2 * inv12) % p
            else:
                r = (-(c6 + b2 * c4) * pow(12 * c4, -1, p)) % p
            t = (-(a1 * r + a3) * pow(2, -1, p)) % p
        C = transform(C, r, 0, t)
        a1, a2, a3, a4, a6 = C.ainvs
        b2, b6, b8 = C.b2, C.b6, C.b8
        assert a3 % p == 0 and a4 % p == 0 and a6 % p == 0

        if c4 % p:
            # multiplicative: split iff the tangent slopes at the node are rational
            if p >= 5:
                split = legendre(-c6, p) == 1
            else:
                split = _has_root([1, a1, -a2], p)
            if split:
                return LocalData(p, 1, f"I{n}", n, Reduction.SPLIT_MULT), C
            return LocalData(p, 1, f"I{n}", 2 if n % 2 == 0 else 1, Reduction.NONSPLIT_MULT), C

        if valuation(a6, p) < 2:
            return LocalData(p, n, "II", 1, Reduction.ADDITIVE), C
        if valuation(b8, p) < 3:
            return LocalData(p, n - 1, "III", 2, Reduction.ADDITIVE), C
        if valuation(b6, p) < 3:
            c = 3 if _has_root([1, a3 // p, -(a6 // (p * p))], p) else 1
            return LocalData(p, n - 2, "IV", c, Reduction.ADDITIVE), C

        # p | a1, a2;  p^2 | a3, a4;  p^3 | a6
        if p == 2:
            s = a2 % 2
            t = 2 * ((a6 // 4) % 2)
        else:
            inv2 = pow(2, -1, p)
            s = (-a1 * inv2) % p
            t = (-a3 * inv2) % (p * p)
        C = transform(C, 0, s, t)
        a1, a2, a3, a4, a6 = C.ainvs
        assert a1 % p == 0 and a2 % p == 0
        assert a3 % (p * p) == 0 and a4 % (p * p) == 0 and a6 % p ** 3 == 0

        b = a2 // p
        c = a4 // (p * p)
        d = a6 // p ** 3
        w = 27 * d * d - b * b * c * c + 4 * b ** 3 * d - 18 * b * c * d + 4 * c ** 3
        x = 3 * c - b * b
        if w % p:
            cp = 1 + _nroots_mod([1, b, c, d], p)
            return LocalData(p, n - 4, "I0*", cp, Reduction.ADDITIVE), C

        if x % p:
            # double root of the cubic: type I_m*
            if p == 2:
                r = c
            elif p == 3:
                r = b * c
            else:
                r = (b * c - 9 * d) * pow(2 * x, -1, p)
            C = transform(C, p * (r % p), 0, 0)
            ix = iy = 3
            mx = my = p * p
            while True:
                a1, a2, a3, a4, a6 = C.ainvs
                xa2 = _exact_div(a2, p)
                xa3 = _exact_div(a3, my)
                xa4 = _exact_div(a4, p * mx)
                xa6 = _exact_div(a6, mx * my)
                if (xa3 * xa3 + 4 * xa6) % p:
                    cp = 4 if _has_root([1, xa3, -xa6], p) else 2
                    break
                if p == 2:
                    t = my * xa6
                else:
                    t = my * ((-xa3 * pow(2, -1, p)) % p)
                C = transform(C, 0, 0, t)
                my *= p
                iy += 1
                a1, a2, a3, a4, a6 = C.ainvs
                xa2 = _exact_div(a2, p)
                xa3 = _exact_div(a3, my)
                xa4 = _exact_div(a4, p * mx)
                xa6 = _exact_div(a6, p * mx * mx)
                if (xa4 * xa4 - 4 * xa2 * xa6) % p:
                    cp = 4 if _has_root([xa2, xa4, xa6], p) else 2
                    break
                if p == 2:
                    r = mx * ((xa6 * xa2) % 2)
                else:
                    r = mx * ((-xa4 * pow(2 * xa2, -1, p)) % p)
                C = transform(C, r, 0, 0)
                mx *= p
                ix += 1
            m = ix + iy - 5
            return LocalData(p, n - ix - iy + 1, f"I{m}*", cp, Reduction.ADDITIVE), C

        # triple root: IV*, III*, II* or non-minimal
        if p == 2:
            rp = b
        elif p == 3:
            rp = -d
        else:
            rp = -b * pow(3, -1, p)
        C = transform(C, p * (rp % p), 0, 0)
        a1, a2, a3, a4, a6 = C.ainvs
        x3 = _exact_div(a3, p * p)
        x6 = _exact_div(a6, p ** 4)
        if (x3 * x3 + 4 * x6) % p:
            cp = 3 if _has_root([1, x3, -x6], p) else 1
            return LocalData(p, n - 6, "IV*", cp, Reduction.ADDITIVE), C
        if p == 2:
            t = x6
        else:
            t = x3 * pow(2, -1, p)
        C = transform(C, 0, 0, -p * p * (t % p))
        a1, a2, a3, a4, a6 = C.ainvs
        assert a3 % p ** 3 == 0 and a6 % p ** 5 == 0
        if valuation(a4, p) < 4:
            return LocalData(p, n - 7, "III*", 2, Reduction.ADDITIVE), C
        if valuation(a6, p) < 6:
            return LocalData(p, n - 8, "II*", 1, Reduction.ADDITIVE), C
        # not minimal: scale by u = p and start over
        C = transform(C, 0, 0, 0, p)


def tate_local_data(W_min: WeierstrassModel, ell: int) -> LocalData:
    """Local data (Kodaira type, f, c) at ell for a model minimal at ell."""
    if W_min.disc % ell:
        return LocalData(ell, 0, "I0", 1, Reduction.GOOD)
    return _tate(W_min, ell)[0]


def _reduce_standard(W: WeierstrassModel) -> WeierstrassModel:
    """Normalize to a1, a3 in {0, 1} and a2 in {-1, 0, 1} by a u = 1 change."""
    W = transform(W, 0, (W.a1 % 2 - W.a1) // 2, 0)
    W = transform(W, -((W.a2 + 1) // 3), 0, 0)
    return transform(W, 0, 0, (W.a3 % 2 - W.a3) // 2)


def minimal_model(W: WeierstrassModel) -> WeierstrassModel:
    """Global minimal model in reduced form (a1,a3 in {0,1}, a2 in {-1,0,1})."""
    C = W
    for q in prime_factors(W.disc):
        if valuation(C.disc, q) >= 12:
            C = _tate(C, q)[1]
    return _reduce_standard(C)


def is_minimal_at(W: WeierstrassModel, q: int) -> bool:
    return valuation(_tate(W, q)[1].disc, q) == valuation(W.disc, q)


# ---------------------------------------------------------------------------
# point counting


def _count_naive(W: WeierstrassModel, ell: int) -> int:
    """#E~(F_ell) including infinity, by direct enumeration."""
    if ell == 2:
        a1, a2, a3, a4, a6 = (a % 2 for a in W.ainvs)
        n = 1
        for x in range(2):
            for y in range(2):
                if (y * y + a1 * x * y + a3 * y - x ** 3 - a2 * x * x - a4 * x - a6) % 2 == 0:
                    n += 1
        return n
    b2, b4, b6 = W.b2 % ell, W.b4 % ell, W.b6 % ell
    x = np.arange(ell, dtype=np.int64)
    g = (4 * x + b2) % ell
    g = (g * x + 2 * b4) % ell
    g = (g * x + b6) % ell
    squares = np.zeros(ell, dtype=bool)
    squares[(x * x) % ell] = True
    chi = np.where(g == 0, 0, np.where(squares[g], 1, -1))
    return int(ell + 1 + chi.sum())


class _ShortCurve:
    """y^2 = x^3 + A x + B over F_ell (ell > 3), affine points or None."""

    def __init__(self, A: int, B: int, ell: int):
        self.A, self.B, self.ell = A % ell, B % ell, ell

    def add(self, P, Q):
        if P is None:
            return Q
        if Q is None:
            return P
        ell = self.ell
        x1, y1 = P
        x2, y2 = Q
        if x1 == x2:
            if (y1 + y2) % ell == 0:
                return None
            lam = (3 * x1 * x1 + self.A) * pow(2 * y1, -1, ell) % ell
        else:
            lam = (y2 - y1) * pow(x2 - x1, -1, ell) % ell
        x3 = (lam * lam - x1 - x2) % ell
        return x3, (lam * (x1 - x3) - y1) % ell

    def neg(self, P):
        return None if P is None else (P[0], (-P[1]) % self.ell)

    def mul(self, k: int, P):
        if k < 0:
            return self.mul(-k, self.neg(P))
        R = None
        while k:
            if k & 1:
                R = self.add(R, P)
            P = self.add(P, P)
            k >>= 1
        return R

    def random_point(self, rng: random.Random):
        ell = self.ell
        while True:
            x = rng.randrange(ell)
            rhs = (x * x * x + self.A * x + self.B) % ell
            if rhs == 0:
                return x, 0
            if legendre(rhs, ell) == 1:
                return x, sqrt_mod(rhs, ell)

    def order(self, P, lo: int, hi: int) -> int:
        """Exact order of P, given that some multiple lies in [lo, hi]."""
        w = isqrt(hi - lo) + 1
        baby = {}
        R = None
        for j in range(w):
            baby.setdefault(R, j)
            R = self.add(R, P)
        step = self.mul(w, P)
        R = self.mul(lo, P)
        m = None
        for i in range((hi - lo) // w + 2):
            j = baby.get(self.neg(R))
            if j is not None:
                m = lo + i * w + j
                break
            R = self.add(R, step)
        if m is None:
            raise ArithmeticError("no multiple of the point in the Hasse interval")
        for q in factorint(m):
            while m % q == 0 and self.mul(m // q, P) is None:
                m //= q
        return m


def _count_bsgs(W: WeierstrassModel, ell: int) -> int:
    """#E~(F_ell) by baby-step/giant-step on point orders (Mestre's twist trick)."""
    c4, c6 = W.c4, W.c6
    E = _ShortCurve(-27 * c4, -54 * c6, ell)
    nonres = next(d for d in range(2, ell) if legendre(d, ell) == -1)
    Et = _ShortCurve(-27 * c4 * nonres ** 2, -54 * c6 * nonres ** 3, ell)
    lo = ell + 1 - isqrt(4 * ell)
    hi = ell + 1 + isqrt(4 * ell) + 1
    rng = random.Random(ell)
    L, Lt = 1, 1
    for _ in range(64):
        L = _lcm(L, E.order(E.random_point(rng), lo, hi))
        cands = {m for m in range(lo - lo % L, hi + 1, L) if lo <= m <= hi}
        Lt = _lcm(Lt, Et.order(Et.random_point(rng), lo, hi))
        cands &= {2 * ell + 2 - m for m in range(lo - lo % Lt, hi + 1, Lt) if lo <= m <= hi}
        if len(cands) == 1:
            return cands.pop()
    raise ArithmeticError(f"point count at {ell} not determined")


def _lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


@lru_cache(maxsize=1 << 16)
def _count(W: WeierstrassModel, ell: int) -> int:
    if ell < BSGS_THRESHOLD or ell <= 3:
        return _count_naive(W, ell)
    return _count_bsgs(W, ell)


def frobenius_trace(W: WeierstrassModel, ell: int) -> int:
    """a_ell = ell + 1 - #E~(F_ell) for a prime of good reduction of the model."""
    if W.disc % ell == 0:
        raise BadReductionError(f"model has bad reduction at {ell}; use nonsingular_count")
    a = ell + 1 - _count(W, ell)
    assert a * a <= 4 * ell, "Hasse bound violated"
    return a


def count_points_fp2(W: WeierstrassModel, p: int) -> int:
    """#E~(F_{p^2}) by enumerating x in F_{p^2} = F_p[i]/(i^2 - n), p odd."""
    if p == 2:
        raise ValueError("p must be odd")
    if W.disc % p == 0:
        raise BadReductionError(f"bad reduction at {p}")
    nr = next(d for d in range(2, p) if legendre(d, p) == -1) if p > 2 else 1
    q = p * p
    u = np.arange(q, dtype=np.int64)
    x0, x1 = u // p, u % p  # x = x0 + x1 i

    def mul(a0, a1, b0, b1):
        return (a0 * b0 + nr * a1 * b1) % p, (a0 * b1 + a1 * b0) % p

    b2, b4, b6 = W.b2 % p, W.b4 % p, W.b6 % p
    g0, g1 = (4 * x0 + b2) % p, (4 * x1) % p
    g0, g1 = mul(g0, g1, x0, x1)
    g0 = (g0 + 2 * b4) % p
    g0, g1 = mul(g0, g1, x0, x1)
    g0 = (g0 + b6) % p
    # the norm map F_{p^2}^x -> F_p^x sends squares onto squares exactly
    norm = (g0 * g0 - nr * g1 * g1) % p
    squares = np.zeros(p, dtype=bool)
    r = np.arange(p, dtype=np.int64)
    squares[(r * r) % p] = True
    zero = (g0 == 0) & (g1 == 0)
    chi = np.where(zero, 0, np.where(squares[norm], 1, -1))
    return int(q + 1 + chi.sum())


def nonsingular_count(W_min: WeierstrassModel, ell: int, local: LocalData | None = None) -> int:
    """#E~_ns(F_ell) for the reduction of a model minimal at ell."""
    local = local or tate_local_data(W_min, ell)
    if local.reduction is Reduction.GOOD:
        return ell + 1 - frobenius_trace(W_min, ell)
    if local.reduction is Reduction.SPLIT_MULT:
        return ell - 1
    if local.reduction is Reduction.NONSPLIT_MULT:
        return ell + 1
    return ell


def bad_prime_trace(local: LocalData) -> int:
    """Hecke eigenvalue at a bad prime read off the reduction type."""
    return {Reduction.SPLIT_MULT: 1, Reduction.NONSPLIT_MULT: -1, Reduction.ADDITIVE: 0}[local.reduction]


# ---------------------------------------------------------------------------
# division polynomials and local torsion

_X = symbols("x")


@lru_cache(maxsize=64)
def division_polynomial(W: WeierstrassModel, n: int) -> Poly:
    """f_n in Z[x]: psi_n for odd n, psi_n / psi_2 for even n."""
    b2, b4, b6, b8 = W.b2, W.b4, W.b6, W.b8
    x = _X
    g = Poly(4 * x ** 3 + b2 * x ** 2 + 2 * b4 * x + b6, x, domain="ZZ")
    f = {
        0: Poly(0, x, domain="ZZ"),
        1: Poly(1, x, domain="ZZ"),
        2: Poly(1, x, domain="ZZ"),
        3: Poly(3 * x ** 4 + b2 * x ** 3 + 3 * b4 * x ** 2 + 3 * b6 * x + b8, x, domain="ZZ"),
        4: Poly(
            2 * x ** 6 + b2 * x ** 5 + 5 * b4 * x ** 4 + 10 * b6 * x ** 3 + 10 * b8 * x ** 2
            + (b2 * b8 - b4 * b6) * x + (b4 * b8 - b6 * b6),
            x,
            domain="ZZ",
        ),
    }
    g2 = g * g

    def get(k):
        if k in f:
            return f[k]
        m = k // 2
        if k % 2:
            if m % 2 == 0:
                val = g2 * get(m + 2) * get(m) ** 3 - get(m - 1) * get(m + 1) ** 3
            else:
                val = get(m + 2) * get(m) ** 3 - g2 * get(m - 1) * get(m + 1) ** 3
        else:
            val = get(m) * (get(m + 2) * get(m - 1) ** 2 - get(m - 2) * get(m + 1) ** 2)
        f[k] = val
        return val

    return get(n)


def _poly_eval_mod(coeffs: list[int], x: int, mod: int) -> int:
    acc = 0
    for c in coeffs:
        acc = (acc * x + c) % mod
    return acc


def _poly_shift_scale(coeffs: list[int], r: int, p: int) -> list[int]:
    """Coefficients (high-to-low) of f(r + p*y) as a polynomial in y."""
    poly = Poly(coeffs, _X, domain="ZZ").compose(Poly(r + p * _X, _X, domain="ZZ"))
    out = [int(c) for c in poly.all_coeffs()]
    return out


def zp_roots(coeffs: list[int], p: int, depth: int, precision: int = 40):
    """Roots in Z_p of an integer polynomial (high-to-low coefficients).

    Returns ``(roots, unresolved)``: roots known modulo p**precision and the
    number of residue branches left open once ``depth`` digits were spent
    separating clustered roots.
    """
    roots: list[int] = []
    unresolved = 0
    mod = p ** precision
    stack = [(coeffs, 0, 1, 0)]
    while stack:
        f, base, scale, level = stack.pop()
        fprime = [c * (len(f) - 1 - i) for i, c in enumerate(f[:-1])]
        for r in range(p):
            if _poly_eval_mod(f, r, p):
                continue
            if fprime and _poly_eval_mod(fprime, r, p):
                # simple root: Newton lifting
                x = r
                k = 1
                while k < precision:
                    k = min(2 * k, precision)
                    m = p ** k
                    x = (x - _poly_eval_mod(f, x, m) * pow(_poly_eval_mod(fprime, x, m), -1, m)) % m
                roots.append((base + scale * x) % mod)
                continue
            if level + 1 > depth:
                unresolved += 1
                continue
            g = _poly_shift_scale(f, r, p)
            v = min(valuation(c, p) for c in g if c)
            g = [c // p ** v for c in g]
            stack.append((g, base + scale * r, scale * p, level + 1))
    return sorted(roots), unresolved


@dataclass(frozen=True)
class LocalTorsion:
    """p^t = #E(Q_p)[p^infinity]; ``exact`` is False for a lower bound only."""

    t: int
    exact: bool


def local_p_torsion_order(W_min: WeierstrassModel, p: int, depth: int = 8) -> LocalTorsion:
    """Exponent t with p^t = #E(Q_p)[p^inf] for good reduction at an odd prime p.

    For p > 2 with good reduction E(Q_p)[p^inf] injects into E~(F_p), whose
    p-part is at most p, so t is 0 or 1 and is read off the Z_p-roots of the
    p-division polynomial whose y-coordinate lies in Q_p.
    """
    if p == 2:
        raise ValueError("p must be odd")
    if W_min.disc % p == 0:
        raise BadReductionError(f"local torsion needs good reduction at {p}")
    if _count(W_min, p) % p:
        return LocalTorsion(0, True)
    precision = depth + 12
    roots, unresolved = zp_roots([int(c) for c in division_polynomial(W_min, p).all_coeffs()], p, depth, precision)
    mod = p ** precision
    b2, b4, b6 = W_min.b2, W_min.b4, W_min.b6
    good = 0
    for x in roots:
        gx = _poly_eval_mod([4, b2, 2 * b4, b6], x, mod)
        v = valuation(gx, p) if gx else precision
        if v >= precision - 1:
            continue
        if v % 2 == 0 and legendre(gx // p ** v, p) == 1:
            good += 1
    count = 1 + 2 * good
    t = 1 if count == p else 0
    assert count in (1, p), "E(Q_p)[p] must have order 1 or p"
    return LocalTorsion(t, unresolved == 0 or t == 1)


def rational_p_torsion_x(W: WeierstrassModel, p: int) -> list:
    """Rational roots of the p-division polynomial (x-coordinates of rational p-torsion up to sign)."""
    _, factors = factor_list(division_polynomial(W, p))
    out = []
    for fac, _ in factors:
        if fac.degree() == 1:
            a, b = fac.all_coeffs()
            from fractions import Fraction

            out.append(Fraction(-int(b), int(a)))
    return sorted(out)


def mod_p_surjectivity_heuristic(W: WeierstrassModel, p: int, sample_bound: int = 1000) -> Surjectivity:
    """Three-valued verdict on surjectivity of the mod-p Galois representation.

    ``surjective`` needs Frobenius witnesses excluding the Borel, both Cartan
    normalizers and the exceptional images (p >= 5 only). ``not_surjective``
    needs a rational root of the p-division polynomial.
    """
    Wm = W
    irreducible = split_nonzero = exceptional = False
    for ell in primes_upto(sample_bound):
        if ell == p or Wm.disc % ell == 0:
            continue
        a = frobenius_trace(Wm, ell)
        d = (a * a - 4 * ell) % p
        if a % p:
            s = legendre(d, p)
            if s == -1:
                irreducible = True
            elif s == 1:
                split_nonzero = True
        u = a * a * pow(ell, -1, p) % p
        if u not in (0, 1, 2, 4) and (u * u - 3 * u + 1) % p:
            exceptional = True
        if p >= 5 and irreducible and split_nonzero and exceptional:
            return Surjectivity.SURJECTIVE
    if not irreducible and p <= 13 and rational_p_torsion_x(W, p):
        return Surjectivity.NOT_SURJECTIVE
    return Surjectivity.INCONCLUSIVE


def cm_suspect(W_min: WeierstrassModel, bound: int = 600) -> bool:
    """Heuristic: a_ell vanishes for a large share of good primes."""
    zeros = total = 0
    for ell in primes_upto(bound):
        if W_min.disc % ell == 0:
            continue
        total += 1
        zeros += frobenius_trace(W_min, ell) == 0
    return total > 0 and zeros * 3 > total


# ---------------------------------------------------------------------------
# the per-curve record


@dataclass(frozen=True)
class HypothesisFlags:
    sur: Verdict3
    manin_ok: Verdict3
    cm_suspect: bool = False

    def as_dict(self) -> dict:
        return {"sur": self.sur.value, "manin_ok": self.manin_ok.value, "cm_suspect": self.cm_suspect}


@dataclass(frozen=True)
class CurveArithmetic:
    minimal_model: WeierstrassModel
    N: int
    local: tuple[LocalData, ...]
    tam_E: int
    p: int
    reduction_at_p: ReductionAtP
    t: LocalTorsion | None
    flags: HypothesisFlags
    epsilon: int | None = None

    def local_at(self, ell: int) -> LocalData:
        for ld in self.local:
            if ld.prime == ell:
                return ld
        return LocalData(ell, 0, "I0", 1, Reduction.GOOD)

    def a(self, ell: int) -> int:
        """Hecke eigenvalue a_ell (good or bad prime)."""
        if self.N % ell == 0:
            return bad_prime_trace(self.local_at(ell))
        return frobenius_trace(self.minimal_model, ell)

    def with_epsilon(self, epsilon: int) -> "CurveArithmetic":
        return replace(self, epsilon=epsilon)

    def as_dict(self) -> dict:
        return {
            "ainvs": list(self.minimal_model.ainvs),
            "N": self.N,
            "tam_E": self.tam_E,
            "local": [ld.as_dict() for ld in self.local],
            "reduction_at_p": self.reduction_at_p.value,
            "t": None if self.t is None else {"t": self.t.t, "exact": self.t.exact},
            "flags": self.flags.as_dict(),
            "epsilon": self.epsilon,
        }


def reduction_type_at_p(curve: CurveArithmetic, p: int) -> ReductionAtP:
    if curve.N % p == 0:
        ld = curve.local_at(p)
        if ld.reduction is Reduction.ADDITIVE:
            return ReductionAtP.ADDITIVE
        return ReductionAtP.MULTIPLICATIVE
    if frobenius_trace(curve.minimal_model, p) % p:
        return ReductionAtP.GOOD_ORDINARY
    return ReductionAtP.GOOD_SUPERSINGULAR


def analyze_curve(W: WeierstrassModel, p: int, sur_sample: int = 1000) -> CurveArithmetic:
    """Minimal model, local data, Tam_E, reduction at p, t and hypothesis flags."""
    if p % 2 == 0 or p < 3:
        raise ValueError("p must be an odd prime")
    Wm = minimal_model(W)
    local = tuple(tate_local_data(Wm, q) for q in prime_factors(Wm.disc))
    local = tuple(ld for ld in local if ld.reduction is not Reduction.GOOD)
    N = 1
    tam = 1
    for ld in local:
        N *= ld.prime ** ld.conductor_exponent
        tam *= ld.tamagawa
    sur = mod_p_surjectivity_heuristic(Wm, p, sur_sample)
    flags = HypothesisFlags(
        sur={Surjectivity.SURJECTIVE: Verdict3.YES, Surjectivity.NOT_SURJECTIVE: Verdict3.NO}.get(
            sur, Verdict3.INCONCLUSIVE
        ),
        manin_ok=Verdict3.YES if N % (p * p) else Verdict3.INCONCLUSIVE,
        cm_suspect=cm_suspect(Wm),
    )
    curve = CurveArithmetic(Wm, N, local, tam, p, ReductionAtP.ADDITIVE, None, flags)
    red = reduction_type_at_p(curve, p)
    t = local_p_torsion_order(Wm, p) if N % p else None
    return replace(curve, reduction_at_p=red, t=t)


# ---------------------------------------------------------------------------
# curve-table ingestion

_TABLE_ROW = re.compile(
    r"^\s*(?P<N>\d+)\s+(?P<cls>[a-z]+)\s+(?P<num>\d+)\s+\[(?P<ainvs>[-\d,\s]+)\]\s*(?P<rest>.*)$"
)


@dataclass(frozen=True)
class TableCurve:
    label: str
    conductor: int
    model: WeierstrassModel
    fields: tuple[str, ...] = field(default_factory=tuple)


def read_curve_table(path: str | Path) -> list[TableCurve]:
    """Parse rows ``N class num [a1,a2,a3,a4,a6] extra...`` (Cremona table layout)."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0]
        if not line.strip():
            continue
        m = _TABLE_ROW.match(line)
        if not m:
            raise ValueError(f"bad curve-table row: {line!r}")
        ainvs = [int(a) for a in m["ainvs"].split(",")]
        out.append(
            TableCurve(
                label=f"{m['N']}{m['cls']}{m['num']}",
                conductor=int(m["N"]),
                model=WeierstrassModel(*ainvs),
                fields=tuple(m["rest"].split()),
            )
        )
    return out
