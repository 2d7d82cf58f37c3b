"""Heegner-side arithmetic: hypotheses for an imaginary quadratic field,
inert Kolyvagin primes, p-adic unit roots and the predicted indices."""

from __future__ import annotations

from dataclasses import dataclass, field

from .arith import kronecker, prime_factors, primes_upto, valuation
from .curves import CurveArithmetic, ReductionAtP, count_points_fp2, frobenius_trace, nonsingular_count

__all__ = [
    "HeegnerSetup",
    "HeegnerPrime",
    "UnitRoot",
    "SupersingularError",
    "check_heegner_hypotheses",
    "enumerate_heegner_primes",
    "unit_root",
    "stabilization_valuation",
    "lambda_index_prediction",
    "is_fundamental_discriminant",
]


class SupersingularError(ValueError):
    """p divides a_p, so x^2 - a_p x + p has no unit root."""


def is_fundamental_discriminant(D: int) -> bool:
    """True when D (a nonzero integer, of either sign) is a fundamental discriminant."""
    if D % 4 == 1:
        return all(valuation(D, q) == 1 for q in prime_factors(D))
    if D % 4 == 0:
        m = D // 4
        if m % 4 not in (2, 3):
            return False
        return all(valuation(m, q) == 1 for q in prime_factors(m))
    return False


@dataclass(frozen=True)
class HeegnerSetup:
    D_K: int
    p: int
    heeg_ok: bool
    disc_ok: bool
    p_unramified: bool
    good_ordinary: bool
    p_split_in_K: bool

    def flags(self) -> dict:
        return {
            "heeg_ok": self.heeg_ok,
            "disc_ok": self.disc_ok,
            "p_unramified": self.p_unramified,
            "good_ordinary": self.good_ordinary,
            "p_split_in_K": self.p_split_in_K,
        }

    def caveats(self) -> list[str]:
        out = []
        if not self.heeg_ok:
            out.append("some prime dividing N does not split in K")
        if not self.disc_ok:
            out.append("D_K is even or equal to 3 (unit group larger than {+-1} or 2 ramified)")
        if not self.p_unramified:
            out.append("p ramifies in K")
        if not self.good_ordinary:
            out.append("reduction at p is not good ordinary")
        return out


def check_heegner_hypotheses(curve: CurveArithmetic, D_K: int, p: int) -> HeegnerSetup:
    """Kronecker-symbol checks for K = Q(sqrt(-D_K))."""
    if D_K <= 0 or not is_fundamental_discriminant(-D_K):
        raise ValueError(f"-{D_K} is not a fundamental discriminant")
    disc = -D_K
    heeg = all(kronecker(disc, ell) == 1 for ell in prime_factors(curve.N))
    ordinary = curve.N % p != 0 and frobenius_trace(curve.minimal_model, p) % p != 0
    return HeegnerSetup(
        D_K=D_K,
        p=p,
        heeg_ok=heeg,
        disc_ok=D_K % 2 == 1 and D_K != 3,
        p_unramified=D_K % p != 0,
        good_ordinary=ordinary,
        p_split_in_K=kronecker(disc, p) == 1,
    )


@dataclass(frozen=True)
class HeegnerPrime:
    ell: int
    a_ell: int
    e: int

    def as_dict(self) -> dict:
        return {"ell": self.ell, "a_ell": self.a_ell, "e": self.e}


def enumerate_heegner_primes(curve: CurveArithmetic, D_K: int, p: int, ell_max: int) -> list[HeegnerPrime]:
    """Primes l <= ell_max inert in K, prime to Np, with p | l + 1 and p | a_l."""
    out = []
    for ell in primes_upto(ell_max):
        if (ell + 1) % p or curve.N % ell == 0 or ell == p:
            continue
        if kronecker(-D_K, ell) != -1:
            continue
        a = frobenius_trace(curve.minimal_model, ell)
        if a % p:
            continue
        e = min(valuation(ell + 1, p), valuation(a, p))
        out.append(HeegnerPrime(ell, a, int(e)))
    return out


@dataclass(frozen=True)
class UnitRoot:
    p: int
    a_p: int
    k: int
    alpha: int
    beta: int

    def digits(self) -> list[int]:
        """Base-p digits of alpha, least significant first."""
        out, x = [], self.alpha
        for _ in range(self.k):
            out.append(x % self.p)
            x //= self.p
        return out


def unit_root(a_p: int, p: int, k: int) -> UnitRoot:
    """Unit root of x^2 - a_p x + p modulo p^k by Newton iteration from a_p."""
    if a_p % p == 0:
        raise SupersingularError(f"p = {p} divides a_p = {a_p}")
    mod = p**k
    alpha = a_p % p
    prec = 1
    while prec < k:
        prec = min(2 * prec, k)
        m = p**prec
        f = (alpha * alpha - a_p * alpha + p) % m
        df = (2 * alpha - a_p) % m  # = alpha - beta, a unit
        alpha = (alpha - f * pow(df, -1, m)) % m
    alpha %= mod
    return UnitRoot(p, a_p, k, alpha, (a_p - alpha) % mod)


def stabilization_valuation(curve: CurveArithmetic, p: int, split_in_K: bool, k: int = 20) -> int:
    """v_p of the Euler-like factor at p, computed two ways and checked to agree.

    split: v_p((alpha-1)^2 (beta-1)^2) = 2 v_p(#E~(F_p)).
    inert: v_p((p+1)^2 - a_p^2) = v_p(#E~(F_{p^2})).
    """
    if curve.N % p == 0:
        raise ValueError("p must be a prime of good reduction")
    W = curve.minimal_model
    a_p = frobenius_trace(W, p)
    root = unit_root(a_p, p, k)
    mod = p**k
    if split_in_K:
        from_roots = (root.alpha - 1) * (root.beta - 1) % mod
        v_roots = 2 * _valuation_mod(from_roots, p, k)
        v_count = 2 * valuation(nonsingular_count(W, p), p)
    else:
        from_roots = (p + 1) ** 2 - (root.alpha + root.beta) ** 2
        v_roots = _valuation_mod(from_roots % mod, p, k)
        v_count = valuation(count_points_fp2(W, p), p)
    if v_roots != v_count:
        raise ArithmeticError("unit-root and point-count valuations disagree")
    return int(v_count)


def _valuation_mod(x: int, p: int, k: int) -> int:
    if x % p**k == 0:
        raise ArithmeticError(f"valuation exceeds working precision p^{k}")
    return int(valuation(x, p))


@dataclass
class HeegnerReport:
    setup: HeegnerSetup
    primes: list[HeegnerPrime]
    alpha: UnitRoot | None
    heeg_prediction: int
    lambda_prediction: int | None
    caveats: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "D_K": self.setup.D_K,
            "flags": self.setup.flags(),
            "primes": [q.as_dict() for q in self.primes],
            "alpha_p": None if self.alpha is None else self.alpha.digits(),
            "predictions": {"heeg": self.heeg_prediction, "lambda": self.lambda_prediction},
            "caveats": list(self.caveats),
        }


def lambda_index_prediction(curve: CurveArithmetic, p: int, split_in_K: bool) -> dict:
    """Predicted indices: ord_p(Tam_E), and that plus the stabilization valuation."""
    tam = int(valuation(curve.tam_E, p))
    stab = stabilization_valuation(curve, p, split_in_K)
    return {"M_inf_heeg_predicted": tam, "M_inf_lambda_predicted": tam + stab}


def heegner_report(curve: CurveArithmetic, D_K: int, p: int, ell_max: int = 1000, k: int = 20) -> HeegnerReport:
    setup = check_heegner_hypotheses(curve, D_K, p)
    primes = enumerate_heegner_primes(curve, D_K, p, ell_max)
    caveats = setup.caveats()
    tam = int(valuation(curve.tam_E, p))
    if setup.good_ordinary:
        alpha = unit_root(frobenius_trace(curve.minimal_model, p), p, k)
        lam = lambda_index_prediction(curve, p, setup.p_split_in_K)["M_inf_lambda_predicted"]
    else:
        alpha, lam = None, None
        caveats.append("no lambda-adic prediction without good ordinary reduction")
    if curve.reduction_at_p is not ReductionAtP.GOOD_ORDINARY and setup.good_ordinary:
        caveats.append("reduction type at p inconsistent")
    return HeegnerReport(setup, primes, alpha, tam, lam, caveats)
