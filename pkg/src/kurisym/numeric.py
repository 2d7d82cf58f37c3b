"""Floating-point cross-checks: the real period by AGM and L(E,1) by a rapidly
convergent series.  Only recognized rationals and booleans leave this module."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .arith import primes_upto, valuation
from .curves import CurveArithmetic, WeierstrassModel

__all__ = [
    "AnalyticData",
    "real_period",
    "dirichlet_coefficients",
    "l_value_approx",
    "l_series_pair",
    "root_number_estimate",
    "analytic_data",
    "delta_one_crosscheck",
    "InsufficientTermsError",
]

mpmath.mp.dps = 30


class InsufficientTermsError(ValueError):
    pass


@dataclass(frozen=True)
class AnalyticData:
    omega_plus: float
    l_value: float
    precision: float

    @property
    def ratio(self) -> float:
        return self.l_value / self.omega_plus


def real_period(W: WeierstrassModel) -> float:
    """Omega^+ = integral of |dx/(2y + a1 x + a3)| over E(R)."""
    b2, b4, b6 = W.b2, W.b4, W.b6
    # 4x^3 + b2 x^2 + 2 b4 x + b6 = 4 (x - e1)(x - e2)(x - e3)
    roots = mpmath.polyroots([4, b2, 2 * b4, b6], maxsteps=200, extraprec=60)
    if W.disc > 0:
        e3, e2, e1 = sorted(mpmath.re(r) for r in roots)
        w1 = mpmath.pi / mpmath.agm(mpmath.sqrt(e1 - e3), mpmath.sqrt(e1 - e2))
        return float(2 * w1)
    e1 = next(mpmath.re(r) for r in roots if abs(mpmath.im(r)) < mpmath.mpf(10) ** -20)
    a = 3 * e1 + mpmath.mpf(b2) / 4
    b = mpmath.sqrt(3 * e1 * e1 + b2 * e1 / 2 + mpmath.mpf(b4) / 2)
    return float(2 * mpmath.pi / mpmath.agm(2 * mpmath.sqrt(b), mpmath.sqrt(2 * b + a)))


def dirichlet_coefficients(curve: CurveArithmetic, M: int) -> list[int]:
    """a_1..a_M (index 0 unused), multiplicative with the Hecke recursion at good primes."""
    a = [0] * (M + 1)
    a[1] = 1 if M >= 1 else 0
    prime_power_value: dict[int, int] = {}
    for ell in primes_upto(M):
        al = curve.a(ell)
        bad = curve.N % ell == 0
        prev, cur = 1, al
        q = ell
        while q <= M:
            prime_power_value[q] = cur
            prev, cur = cur, (al * cur if bad else al * cur - ell * prev)
            q *= ell
    # smallest prime factor sieve
    spf = list(range(M + 1))
    for i in range(2, int(M**0.5) + 1):
        if spf[i] == i:
            for j in range(i * i, M + 1, i):
                if spf[j] == j:
                    spf[j] = i
    for n in range(2, M + 1):
        ell = spf[n]
        q = ell
        m = n // ell
        while m % ell == 0:
            m //= ell
            q *= ell
        a[n] = prime_power_value[q] * a[m]
    return a


def _tail_bound(N: int, M: int, t: float) -> float:
    # |a_n| / n <= d(n)/sqrt(n) <= 1 is enough for the exponential tail
    c = 2 * mpmath.pi * t / mpmath.sqrt(N)
    return float(2 * mpmath.exp(-c * (M + 1)) / (1 - mpmath.exp(-c)))


def l_series_pair(curve: CurveArithmetic, terms: int, t: float = 1.0) -> tuple[float, float, float]:
    """(A(t), A(1/t), tail) with A(t) = sum a_n/n exp(-2 pi n t / sqrt N)."""
    a = dirichlet_coefficients(curve, terms)
    sq = mpmath.sqrt(curve.N)
    def A(s):
        x = mpmath.exp(-2 * mpmath.pi * s / sq)
        total, xn = mpmath.mpf(0), mpmath.mpf(1)
        for n in range(1, terms + 1):
            xn *= x
            if a[n]:
                total += mpmath.mpf(a[n]) / n * xn
        return total
    tail = max(_tail_bound(curve.N, terms, t), _tail_bound(curve.N, terms, 1 / t))
    return float(A(t)), float(A(1 / t)), tail


def root_number_estimate(curve: CurveArithmetic, terms: int | None = None) -> int:
    """Sign of the functional equation read off L(E,1) = A(t) + eps A(1/t) at two t."""
    terms = terms or _terms_for(curve.N, 1e-15, 0.8)
    x1, y1, _ = l_series_pair(curve, terms, 1.25)
    x2, y2, _ = l_series_pair(curve, terms, 0.9)
    # eps = (x1 - x2) / (y2 - y1)
    eps = (x1 - x2) / (y2 - y1)
    if abs(abs(eps) - 1) > 1e-6:
        raise ArithmeticError(f"root number estimate {eps} is not +-1")
    return 1 if eps > 0 else -1


def _terms_for(N: int, tol: float, t: float = 1.0) -> int:
    M = 10
    while _tail_bound(N, M, t) > tol:
        M = int(M * 1.5) + 1
    return M


SPLIT_T = 1.1


def l_value_approx(curve: CurveArithmetic, terms: int | None = None, epsilon: int | None = None,
                   tol: float = 1e-12) -> tuple[float, float]:
    """(L(E,1), error bound) from L(E,1) = A(t) + eps A(1/t).

    t is kept away from 1 so that a vanishing value is observed numerically
    rather than forced by cancellation of two equal sums.
    """
    if epsilon is None:
        epsilon = curve.epsilon if curve.epsilon is not None else root_number_estimate(curve)
    t = SPLIT_T
    needed = _terms_for(curve.N, tol, 1 / t)
    if terms is None:
        terms = needed
    x, y, tail = l_series_pair(curve, terms, t)
    if tail > tol:
        raise InsufficientTermsError(f"{terms} terms give tail {tail:.3g} > {tol:.3g}; need about {needed}")
    return x + epsilon * y, 2 * tail


def analytic_data(curve: CurveArithmetic, tol: float = 1e-12) -> AnalyticData:
    L, err = l_value_approx(curve, tol=tol)
    return AnalyticData(real_period(curve.minimal_model), L, err)


def delta_one_crosscheck(sym, curve: CurveArithmetic, tol: float = 1e-6) -> dict:
    """Compare [0/1] with L(E,1)/Omega^+; ok iff their ratio is a p-adic unit."""
    from .modsym import evaluate

    exact = evaluate(sym, 0, 1)
    data = analytic_data(curve)
    if abs(data.l_value) < max(tol, 10 * data.precision):
        return {"skipped": True, "note": "L(E,1) numerically zero", "l_value": data.l_value}
    numeric = data.ratio
    if exact == 0:
        return {"skipped": False, "ratio": None, "ok": False, "note": "exact value is zero but L(E,1) is not"}
    ratio = Fraction(float(exact) / numeric).limit_denominator(10**4)
    p = sym.p
    unit = ratio != 0 and (p is None or (valuation(ratio.numerator, p) == 0 and valuation(ratio.denominator, p) == 0))
    close = abs(float(exact) / float(ratio) - numeric) <= tol * abs(numeric)
    return {
        "skipped": False,
        "ratio": str(ratio),
        "ok": bool(unit and close),
        "relative_error": abs(float(exact) / float(ratio) - numeric) / abs(numeric),
        "numeric": numeric,
    }
