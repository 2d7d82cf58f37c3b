"""Kolyvagin primes, the sums delta_n and the divisibility indices M(n), M_r.

delta_n = sum over a in (Z/n)^x of [a/n] * prod_{l | n} log_l(a), read in
Z/p^{e_n} where p^{e_l} generates (l - 1, a_l - l - 1) Z_p.  For n = 1 the
sum is the single value [0/1].
"""

from __future__ import annotations

import enum
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .arith import euler_phi, primes_upto, primitive_root, valuation
from .curves import CurveArithmetic, ReductionAtP, Verdict3
from .modsym import EigenSymbol, evaluate, evaluate_many, symbol_from_dict, symbol_to_dict

__all__ = [
    "KolyvaginPrime",
    "DeltaResult",
    "SearchReport",
    "Verdict",
    "BudgetExceeded",
    "VANISHES",
    "enumerate_kolyvagin_primes",
    "discrete_log_p_part",
    "log_table",
    "delta",
    "sweep",
    "sha_prediction",
    "candidate_products",
    "caveats_for",
]

VANISHES = "VANISHES"
DEFAULT_BUDGET = 10**9
CHUNK = 1 << 20


class Verdict(str, enum.Enum):
    CONSISTENT_WITNESS = "CONSISTENT_WITNESS"
    COUNTEREXAMPLE_SIGNAL = "COUNTEREXAMPLE_SIGNAL"
    INCONCLUSIVE = "INCONCLUSIVE"


class BudgetExceeded(RuntimeError):
    def __init__(self, work: int, budget: int):
        super().__init__(f"sweep needs about {work} symbol evaluations, budget is {budget}")
        self.work = work
        self.budget = budget


@dataclass(frozen=True)
class KolyvaginPrime:
    ell: int
    a_ell: int
    e: int
    eta: int

    def as_dict(self) -> dict:
        return {"ell": self.ell, "a_ell": self.a_ell, "e": self.e, "eta": self.eta}


def enumerate_kolyvagin_primes(curve: CurveArithmetic, p: int, m: int = 1, ell_max: int = 1000) -> list[KolyvaginPrime]:
    """Primes l <= ell_max with l = 1 mod p, l not dividing Np, a_l = l + 1 mod p and e_l >= m."""
    out = []
    for ell in primes_upto(ell_max):
        if ell % p != 1 or curve.N % ell == 0:
            continue
        a = curve.a(ell)
        if (a - ell - 1) % p:
            continue
        e = min(valuation(ell - 1, p), valuation(a - ell - 1, p))
        if e >= m:
            out.append(KolyvaginPrime(ell, a, int(e), primitive_root(ell)))
    return out


def discrete_log_p_part(ell: int, eta: int, a: int, p: int, e: int) -> int:
    """log_eta(a) mod p^e by Pohlig-Hellman in the p-Sylow of F_ell^x."""
    if a % ell == 0:
        raise ValueError("a must be a unit mod ell")
    v = valuation(ell - 1, p)
    if e > v:
        raise ValueError(f"p^{e} does not divide ell - 1")
    if e == 0:
        return 0
    cof = (ell - 1) // p**v
    g = pow(eta, cof, ell)  # generator of the order-p^v subgroup
    h = pow(a, cof, ell)
    gamma = pow(g, p ** (v - 1), ell)  # order p
    digits_of = {pow(gamma, k, ell): k for k in range(p)}
    x = 0
    for k in range(v):
        # strip the known part and push to the order-p subgroup
        t = h * pow(g, -x, ell) % ell
        d = digits_of[pow(t, p ** (v - 1 - k), ell)]
        x += d * p**k
    return x % p**e


@lru_cache(maxsize=256)
def _log_table_cached(ell: int, eta: int, p: int) -> np.ndarray:
    v = valuation(ell - 1, p)
    cof = (ell - 1) // p**v
    g = pow(eta, cof, ell)
    sub = np.zeros(ell, dtype=np.int64)
    x = 1
    for k in range(p**v):
        sub[x] = k
        x = x * g % ell
    proj = _powmod_array(np.arange(ell, dtype=np.int64), cof, ell)
    table = sub[proj]
    table[0] = 0
    table.setflags(write=False)
    return table


def log_table(ell: int, eta: int, p: int) -> np.ndarray:
    """Array L with L[a] = log_eta(a) mod p^v for 0 < a < ell (v = v_p(ell - 1))."""
    return _log_table_cached(ell, eta, p)


def _powmod_array(base: np.ndarray, exp: int, mod: int) -> np.ndarray:
    result = np.ones_like(base)
    b = base % mod
    while exp:
        if exp & 1:
            result = result * b % mod
        b = b * b % mod
        exp >>= 1
    return result


@dataclass(frozen=True)
class DeltaResult:
    n: int
    factors: tuple[KolyvaginPrime, ...]
    e_n: int | None  # None for n = 1, where delta_1 is read in Z_(p)
    residue: int | Fraction
    M: int | str

    @property
    def nu(self) -> int:
        return len(self.factors)

    @property
    def vanishes(self) -> bool:
        return self.M == VANISHES

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "factors": [f.ell for f in self.factors],
            "e_n": self.e_n,
            "residue": str(self.residue),
            "M": self.M,
        }


def _units_mod(n: int, factors: tuple[int, ...], start: int, stop: int) -> np.ndarray:
    a = np.arange(start, stop, dtype=np.int64)
    mask = np.ones(a.shape[0], dtype=bool)
    for ell in factors:
        mask &= a % ell != 0
    return a[mask]


def delta(sym: EigenSymbol, factors: list[KolyvaginPrime] | tuple[KolyvaginPrime, ...], p: int,
          log_tables: dict[int, np.ndarray] | None = None) -> DeltaResult:
    """delta_n for n = prod of ``factors``, reduced modulo p^{e_n}.

    ``log_tables`` may override the per-prime logarithm lifts (for instance
    to use another primitive root); by default the p-Sylow logarithm of
    base eta_l is used.
    """
    factors = tuple(sorted(factors, key=lambda f: f.ell))
    ells = tuple(f.ell for f in factors)
    if len(set(ells)) != len(ells):
        raise ValueError("factors must be distinct primes")
    if sym.p != p:
        raise ValueError(f"symbol is not normalized at p={p}")
    if not factors:
        d1 = evaluate(sym, 0, 1)
        return DeltaResult(1, (), None, d1, VANISHES if d1 == 0 else int(valuation(d1.numerator, p) - valuation(d1.denominator, p)))
    _, D = sym.integer_table()
    if D % p == 0:
        raise ValueError("symbol values are not p-integral")
    n = 1
    for ell in ells:
        n *= ell
    e = min(f.e for f in factors)
    mod = p**e
    tables = [(log_tables or {}).get(f.ell) for f in factors]
    tables = [t if t is not None else log_table(f.ell, f.eta, p) for t, f in zip(tables, factors)]
    # [a/n] = [(n-a)/n] for a plus symbol, and n is odd: pair a with n - a
    total = 0
    wide = _too_wide(tables)
    for start in range(1, (n + 1) // 2, CHUNK):
        a = _units_mod(n, ells, start, min((n + 1) // 2, start + CHUNK))
        S, _ = evaluate_many(sym, a, n)
        total += _exact_dot(S, _weights(a, ells, tables, wide) + _weights(n - a, ells, tables, wide))
    residue = total * pow(D, -1, mod) % mod
    M = VANISHES if residue == 0 else int(valuation(residue, p))
    return DeltaResult(n, factors, e, residue, M)


def _weights(a: np.ndarray, ells, tables, wide: bool) -> np.ndarray:
    weight = np.ones(a.shape[0], dtype=object if wide else np.int64)
    for ell, t in zip(ells, tables):
        weight = weight * t[a % ell]
    return weight


def _too_wide(tables) -> bool:
    bound = 1
    for t in tables:
        bound *= int(np.abs(t).max()) + 1
    return bound >= 1 << 39


def _exact_dot(S: np.ndarray, w: np.ndarray) -> int:
    if w.dtype == object:
        return int(np.dot(S.astype(object), w))
    smax = int(np.abs(S).max(initial=0))
    wmax = int(np.abs(w).max(initial=0))
    if smax * wmax * max(1, S.shape[0]) < 1 << 62:
        return int(np.dot(S, w))
    return int(np.dot(S.astype(object), w.astype(object)))


# ---------------------------------------------------------------------------
# sweeps


def candidate_products(primes: list[KolyvaginPrime], r_max: int):
    """(r, factor tuple) for r = 0..r_max, lexicographic in sorted factors."""
    for r in range(r_max + 1):
        yield from ((r, combo) for combo in itertools.combinations(primes, r))


@dataclass
class SearchReport:
    p: int
    ell_max: int
    r_max: int
    m: int
    epsilon: int
    tam_ord: int
    deltas: list[DeltaResult] = field(default_factory=list)
    M_table: dict[int, int | str] = field(default_factory=dict)
    M_inf_upper: int | None = None
    rho: int | None = None
    verdict: Verdict = Verdict.INCONCLUSIVE
    sha_prediction: int | None = None
    caveats: list[str] = field(default_factory=list)
    wrong_parity: list[DeltaResult] = field(default_factory=list)
    work: int = 0

    def as_dict(self) -> dict:
        return {
            "bounds": {"ell_max": self.ell_max, "r_max": self.r_max, "m": self.m},
            "p": self.p,
            "epsilon": self.epsilon,
            "ord_p_tam": self.tam_ord,
            "deltas": [d.as_dict() for d in self.deltas],
            "M_table": {str(r): v for r, v in sorted(self.M_table.items())},
            "M_inf_upper": self.M_inf_upper,
            "rho": self.rho,
            "verdict": self.verdict.value,
            "sha_prediction": self.sha_prediction,
            "caveats": list(self.caveats),
            "wrong_parity": {
                "evaluated": len(self.wrong_parity),
                "nonvanishing": [d.as_dict() for d in self.wrong_parity if not d.vanishes],
            },
            "work": self.work,
        }


_WORKER_SYMBOL: EigenSymbol | None = None


def _worker_init(data: dict) -> None:
    global _WORKER_SYMBOL
    _WORKER_SYMBOL = symbol_from_dict(data)


def _worker_delta(args):
    factors, p = args
    return delta(_WORKER_SYMBOL, factors, p)


def caveats_for(curve: CurveArithmetic, p: int) -> list[str]:
    out = []
    if p == 3:
        out.append("p = 3: the refined conjecture is stated for p > 3")
    if curve.N % p == 0:
        out.append(f"p divides the conductor ({curve.reduction_at_p.value} reduction)")
    elif curve.reduction_at_p is ReductionAtP.GOOD_SUPERSINGULAR:
        out.append("supersingular reduction at p")
    if curve.flags.sur is not Verdict3.YES:
        out.append(f"mod-p surjectivity {curve.flags.sur.value}")
    if curve.flags.manin_ok is not Verdict3.YES:
        out.append("p^2 divides N: Manin constant not known to be prime to p")
    if curve.flags.cm_suspect:
        out.append("curve looks CM")
    if curve.t is not None and curve.t.t:
        out.append("p is anomalous: E(Q_p) has p-torsion")
    return out


def sweep(sym: EigenSymbol, curve: CurveArithmetic, p: int, ell_max: int, r_max: int, m: int = 1,
          epsilon: int | None = None, diagnostic_parity: bool = False, workers: int = 1,
          budget: int = DEFAULT_BUDGET) -> SearchReport:
    """Evaluate delta_n over products of at most r_max Kolyvagin primes <= ell_max."""
    if epsilon is None:
        epsilon = curve.epsilon
    if epsilon not in (1, -1):
        raise ValueError("root number must be known before sweeping")
    primes = enumerate_kolyvagin_primes(curve, p, m, ell_max)
    jobs = []
    work = 0
    for r, combo in candidate_products(primes, r_max):
        right = (-1) ** r == epsilon
        if not right and not diagnostic_parity:
            continue
        n = 1
        for f in combo:
            n *= f.ell
        work += euler_phi(n)
        jobs.append((right, combo))
    if work > budget:
        raise BudgetExceeded(work, budget)

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_worker_init,
                                 initargs=(symbol_to_dict(sym),)) as pool:
            results = list(pool.map(_worker_delta, [(combo, p) for _, combo in jobs], chunksize=1))
    else:
        results = [delta(sym, combo, p) for _, combo in jobs]

    report = SearchReport(p, ell_max, r_max, m, epsilon, int(valuation(curve.tam_E, p)), work=work)
    report.caveats = caveats_for(curve, p)
    for (right, _), res in zip(jobs, results):
        (report.deltas if right else report.wrong_parity).append(res)

    for r in range(r_max + 1):
        if (-1) ** r != epsilon:
            continue
        at_r = [d for d in report.deltas if d.nu == r]
        if not at_r:
            continue
        finite = [d.M for d in at_r if not d.vanishes]
        report.M_table[r] = min(finite) if finite else VANISHES
        if finite and report.rho is None:
            report.rho = r
    finite = [v for v in report.M_table.values() if v != VANISHES]
    report.M_inf_upper = min(finite) if finite else None
    if report.M_inf_upper is None:
        report.verdict = Verdict.INCONCLUSIVE
    elif report.M_inf_upper < report.tam_ord:
        report.verdict = Verdict.COUNTEREXAMPLE_SIGNAL
    elif report.M_inf_upper == report.tam_ord:
        report.verdict = Verdict.CONSISTENT_WITNESS
    else:
        report.verdict = Verdict.INCONCLUSIVE
    report.sha_prediction = sha_prediction(report)
    if any(not d.vanishes for d in report.wrong_parity):
        report.caveats.append("wrong-parity delta_n did not vanish")
    return report


def sha_prediction(report: SearchReport) -> int | None:
    """M_rho - M_inf_upper: a conditional prediction of ord_p #Sha."""
    if report.rho is None or report.M_inf_upper is None:
        return None
    return int(report.M_table[report.rho]) - report.M_inf_upper
