"""Plus-quotient modular symbols for Gamma_0(N) and the eigensymbol of a curve.

Manin symbols (c:d) in P^1(Z/N) stand for the path g{0, oo} = {b/d, a/c},
where g = [[a, b], [c, d]] in SL_2(Z) is any lift.  The plus quotient kills
x - x*[[-1, 0], [0, 1]].  Everything here is exact; no floats are used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd

import numpy as np

from .arith import primes_upto, valuation
from .linalg import SparseEliminator, nullspace, solve_left_combination

__all__ = [
    "P1List",
    "ManinSymbolSpace",
    "EigenSymbol",
    "EigenspaceError",
    "build_plus_space",
    "hecke_matrix",
    "heilbronn_merel",
    "rational_eigensymbol",
    "evaluate",
    "evaluate_path",
    "evaluate_many",
    "normalize_p_integral",
    "atkin_lehner_sign",
    "symbol_to_dict",
    "symbol_from_dict",
]


class EigenspaceError(ValueError):
    """The Hecke probes did not cut out a single rational eigenline."""


# ---------------------------------------------------------------------------
# P^1(Z/N)


class P1List:
    """Canonical representatives of P^1(Z/N) with an N x N lookup table."""

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("level must be positive")
        self.N = N
        units = [u for u in range(1, N + 1) if gcd(u, N) == 1] if N > 1 else [1]
        seen = np.full((N, N), -1, dtype=np.int64)
        orbits: list[tuple[int, int]] = []
        members: list[list[tuple[int, int]]] = []
        for c in range(N):
            for d in range(N):
                if seen[c, d] >= 0 or gcd(gcd(c, d), N) != 1:
                    continue
                orbit = sorted({(u * c % N, u * d % N) for u in units})
                for cc, dd in orbit:
                    seen[cc, dd] = len(orbits)
                orbits.append(orbit[0])
                members.append(orbit)
        # (1:0) first so that the first table entry is [0/1]
        order = sorted(range(len(orbits)), key=lambda i: (orbits[i] != (1 % N, 0), orbits[i]))
        relabel = {old: new for new, old in enumerate(order)}
        self.reps: list[tuple[int, int]] = [orbits[i] for i in order]
        self.index = np.full((N, N), -1, dtype=np.int64)
        for old, orbit in enumerate(members):
            for cc, dd in orbit:
                self.index[cc, dd] = relabel[old]

    def __len__(self) -> int:
        return len(self.reps)

    def index_of(self, c: int, d: int) -> int:
        return int(self.index[c % self.N, d % self.N])


def lift_to_sl2(c: int, d: int, N: int) -> tuple[int, int, int, int]:
    """Integers (a, b, c', d') with ad' - bc' = 1 and (c', d') = (c, d) mod N."""
    c %= N
    d %= N
    if N == 1:
        return 1, 0, 0, 1
    if c == 0:
        c = N
    while gcd(c, d) != 1:
        d += N
    g, x, y = _xgcd(d, c)  # x*d + y*c = 1
    return x, -y, c, d


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def cusp_key(u: int, v: int, N: int, plus: bool = True) -> tuple[int, int]:
    """Gamma_0(N)-class of the cusp u/v (optionally modulo u/v ~ -u/v)."""
    if v < 0:
        u, v = -u, -v
    g0 = gcd(u, v)
    if g0 > 1:
        u, v = u // g0, v // g0
    d = gcd(v, N)
    g = gcd(d, N // d)
    if g == 1:
        return d, 0
    s = pow(u, -1, v) if v > 1 else 0
    x = s * pow(v // d, -1, g) % g
    if plus:
        x = min(x, -x % g)
    return d, x


# ---------------------------------------------------------------------------
# the space


@dataclass(frozen=True, eq=False)
class ManinSymbolSpace:
    """Plus quotient of the Manin-symbol space of level N.

    ``rel[i]`` expresses generator i as a sparse combination of the free
    generators ``free`` (column j of a coordinate vector is ``free[j]``).
    """

    N: int
    p1: P1List
    free: tuple[int, ...]
    rel: tuple[dict[int, Fraction], ...]
    boundary: tuple[dict[tuple[int, int], int], ...]  # per free generator
    cuspidal_basis: tuple[tuple[Fraction, ...], ...]

    @property
    def dimension(self) -> int:
        return len(self.free)

    @property
    def cuspidal_dimension(self) -> int:
        return len(self.cuspidal_basis)

    @property
    def generators(self) -> list[tuple[int, int]]:
        return self.p1.reps

    def reduce_symbol(self, c: int, d: int) -> dict[int, Fraction]:
        i = self.p1.index_of(c, d)
        return self.rel[i] if i >= 0 else {}

    def symbol_boundary(self, i: int, plus: bool = True) -> dict[tuple[int, int], int]:
        c, d = self.p1.reps[i]
        a, b, c1, d1 = lift_to_sl2(c, d, self.N)
        out: dict[tuple[int, int], int] = {}
        for key, sgn in ((cusp_key(a, c1, self.N, plus), 1), (cusp_key(b, d1, self.N, plus), -1)):
            out[key] = out.get(key, 0) + sgn
        return {k: v for k, v in out.items() if v}


@lru_cache(maxsize=32)
def build_plus_space(N: int) -> ManinSymbolSpace:
    """Solve the 2-term, 3-term and plus relations on P^1(Z/N)."""
    p1 = P1List(N)
    n = len(p1)
    elim = SparseEliminator()
    idx = p1.index_of
    for i, (c, d) in enumerate(p1.reps):
        for r in ([(i, 1), (idx(d, -c), 1)], [(i, 1), (idx(-c, d), -1)]):
            merged: dict[int, Fraction] = {}
            for k, v in r:
                merged[k] = merged.get(k, 0) + v
            elim.add(merged)
        tri: dict[int, Fraction] = {}
        for k in (i, idx(d, -c - d), idx(-c - d, c)):
            tri[k] = tri.get(k, 0) + 1
        elim.add(tri)
    free = tuple(j for j in range(n) if j not in elim.rows)
    col = {g: j for j, g in enumerate(free)}
    rel = []
    for i in range(n):
        if i in elim.rows:
            rel.append({col[g]: -v for g, v in elim.rows[i].items() if g != i})
        else:
            rel.append({col[i]: Fraction(1)})

    space = ManinSymbolSpace(N, p1, free, tuple(rel), (), ())
    bnd = tuple(space.symbol_boundary(g) for g in free)
    cusps = sorted({k for b in bnd for k in b})
    cusp_col = {k: j for j, k in enumerate(cusps)}
    rows = [[Fraction(0)] * len(free) for _ in cusps]
    for j, b in enumerate(bnd):
        for k, v in b.items():
            rows[cusp_col[k]][j] += v
    kernel = nullspace(rows, len(free)) if free else []
    return ManinSymbolSpace(N, p1, free, tuple(rel), bnd, tuple(tuple(v) for v in kernel))


# ---------------------------------------------------------------------------
# Hecke operators


@lru_cache(maxsize=64)
def heilbronn_merel(q: int) -> tuple[tuple[int, int, int, int], ...]:
    """Matrices [[a, b], [c, d]] with a > b >= 0, d > c >= 0, ad - bc = q."""
    out = []
    for a in range(1, q + 1):
        for d in range(1, q + 1):
            bc = a * d - q
            if bc < 0:
                continue
            if bc == 0:
                out.extend((a, 0, c, d) for c in range(d))
                out.extend((a, b, 0, d) for b in range(1, a))
                continue
            for b in range(1, a):
                if bc % b == 0 and bc // b < d:
                    out.append((a, b, bc // b, d))
    return tuple(out)


def _apply_heilbronn(space: ManinSymbolSpace, g: int, q: int) -> dict[int, Fraction]:
    c, d = space.p1.reps[g]
    N = space.N
    acc: dict[int, Fraction] = {}
    for a, b, cc, dd in heilbronn_merel(q):
        i = space.p1.index_of(c * a + d * cc, c * b + d * dd)
        if i < 0:
            continue
        for j, v in space.rel[i].items():
            acc[j] = acc.get(j, 0) + v
    return {j: v for j, v in acc.items() if v}


def hecke_matrix(space: ManinSymbolSpace, q: int, cuspidal: bool = False) -> list[list[Fraction]]:
    """Matrix of T_q (U_q when q | N); column j is the image of basis vector j.

    With ``cuspidal=True`` the matrix is taken on the plus cuspidal basis.
    """
    k = space.dimension
    cols = [_apply_heilbronn(space, g, q) for g in space.free]
    full = [[Fraction(0)] * k for _ in range(k)]
    for j, img in enumerate(cols):
        for i, v in img.items():
            full[i][j] = v
    if not cuspidal:
        return full
    basis = [list(v) for v in space.cuspidal_basis]
    images = []
    for v in basis:
        images.append([sum((full[i][j] * v[j] for j in range(k) if v[j]), Fraction(0)) for i in range(k)])
    coords = [solve_left_combination(basis, w) for w in images]
    m = len(basis)
    return [[coords[j][i] for j in range(m)] for i in range(m)]


# ---------------------------------------------------------------------------
# the eigensymbol


@dataclass(frozen=True, eq=False)
class EigenSymbol:
    """Rational plus eigensymbol: one value per Manin generator."""

    N: int
    value_table: tuple[Fraction, ...]
    probe_eigenvalues: dict[int, int]
    normalization_content: Fraction = Fraction(1)
    p: int | None = None
    p1: P1List = field(repr=False, default=None)
    _int_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def value(self, c: int, d: int) -> Fraction:
        i = self.p1.index_of(c, d)
        return self.value_table[i] if i >= 0 else Fraction(0)

    def scaled(self, factor: Fraction, p: int | None = None) -> "EigenSymbol":
        return EigenSymbol(
            self.N,
            tuple(v * factor for v in self.value_table),
            dict(self.probe_eigenvalues),
            self.normalization_content * factor,
            p if p is not None else self.p,
            self.p1,
        )

    def integer_table(self) -> tuple[np.ndarray, int]:
        """(D * table as an N x N int64 lookup, D) with D the common denominator."""
        if "int" not in self._int_cache:
            D = 1
            for v in self.value_table:
                D = D * v.denominator // gcd(D, v.denominator)
            ints = [int(v * D) for v in self.value_table]
            if max((abs(x) for x in ints), default=0) >= 1 << 40:
                raise OverflowError("symbol values too large for the vectorized path")
            lut = np.zeros(self.N * self.N, dtype=np.int64)
            flat = self.p1.index.reshape(-1)
            ok = flat >= 0
            lut[ok] = np.asarray(ints, dtype=np.int64)[flat[ok]]
            self._int_cache["int"] = (lut, D)
        return self._int_cache["int"]


def _functional_on_generators(space: ManinSymbolSpace, phi: list[Fraction]) -> list[Fraction]:
    return [sum((v * phi[j] for j, v in r.items()), Fraction(0)) for r in space.rel]


def _eigen_functional(space: ManinSymbolSpace, probes: dict[int, int]) -> list[list[Fraction]]:
    k = space.dimension
    rows = []
    for q, a in probes.items():
        T = hecke_matrix(space, q)
        # phi T = a phi, i.e. rows of (T^t - a) annihilate phi
        for j in range(k):
            rows.append([T[i][j] - (a if i == j else 0) for i in range(k)])
    return nullspace(rows, k)


def _cycle_gcd(space: ManinSymbolSpace, values: list[Fraction]) -> Fraction:
    """Generator of the image of H_1(X_0(N), Z) under the symbol values.

    Manin symbols are the edges of a graph whose vertices are the
    Gamma_0(N)-classes of cusps; integral cycles of that graph are exactly
    the integral homology, so it suffices to take fundamental cycles.
    """
    N = space.N
    adj: dict[tuple[int, int], list[tuple[tuple[int, int], Fraction]]] = {}
    edges = []
    for i, (c, d) in enumerate(space.p1.reps):
        a, b, c1, d1 = lift_to_sl2(c, d, N)
        tail, head = cusp_key(b, d1, N, plus=False), cusp_key(a, c1, N, plus=False)
        edges.append((tail, head, values[i]))
        adj.setdefault(tail, []).append((head, values[i]))
        adj.setdefault(head, []).append((tail, -values[i]))
    potential: dict[tuple[int, int], Fraction] = {}
    for root in sorted(adj):
        if root in potential:
            continue
        potential[root] = Fraction(0)
        stack = [root]
        while stack:
            u = stack.pop()
            for w, val in adj[u]:
                if w not in potential:
                    potential[w] = potential[u] + val
                    stack.append(w)
    g = Fraction(0)
    for tail, head, val in edges:
        cyc = potential[tail] + val - potential[head]
        if cyc:
            g = Fraction(gcd(g.numerator * cyc.denominator, cyc.numerator * g.denominator), g.denominator * cyc.denominator)
    return g


def rational_eigensymbol(space: ManinSymbolSpace, curve, probe_primes: list[int] | None = None,
                         max_probe: int = 97) -> EigenSymbol:
    """Plus eigensymbol of the newform attached to ``curve`` (conductor N).

    Scaled so that integral homology maps onto (1/2)Z, which makes
    [0/1] = L(E,1)/Omega^+ for an optimal curve with Manin constant 1, and
    signed so that the first nonzero table entry is positive.
    """
    if curve.N != space.N:
        raise EigenspaceError(f"curve has conductor {curve.N}, space has level {space.N}")
    good = [q for q in primes_upto(max_probe) if space.N % q]
    probes = list(probe_primes) if probe_primes else []
    queue = [q for q in good if q not in probes]
    used: dict[int, int] = {}
    kernel: list[list[Fraction]] = []
    for q in probes:
        used[q] = curve.a(q)
    while True:
        if used:
            kernel = _eigen_functional(space, used)
            if len(kernel) == 1:
                break
            if not kernel:
                raise EigenspaceError("no eigensymbol with these eigenvalues at this level")
        if not queue:
            raise EigenspaceError(f"eigenspace still has dimension {len(kernel)}; add more probe primes")
        q = queue.pop(0)
        used[q] = curve.a(q)
    values = _functional_on_generators(space, kernel[0])
    scale = _cycle_gcd(space, values)
    if scale == 0:
        raise EigenspaceError("eigensymbol vanishes on integral homology")
    factor = Fraction(1, 2) / scale
    first = next(v for v in values if v)
    if first < 0:
        factor = -factor
    return EigenSymbol(space.N, tuple(v * factor for v in values), used, factor, None, space.p1)


def normalize_p_integral(sym: EigenSymbol, p: int) -> EigenSymbol:
    """Scale by a power of p so every value is p-integral and one is a p-unit."""
    vals = [valuation(v.numerator, p) - valuation(v.denominator, p) for v in sym.value_table if v]
    if not vals:
        raise ValueError("zero symbol cannot be normalized")
    shift = min(vals)
    return sym.scaled(Fraction(p) ** (-shift), p)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(sym: EigenSymbol, a: int, n: int) -> Fraction:
    """[a/n]: the symbol on the path {oo, a/n}, by continued-fraction convergents."""
    if n <= 0:
        raise ValueError("denominator must be positive")
    N = sym.N
    total = Fraction(0)
    num, den = a, n
    q_prev, q_prev2 = 0, 1
    sign = -1
    while den:
        b = num // den
        q = b * q_prev + q_prev2
        total += sym.value(q, sign * q_prev)
        q_prev2, q_prev = q_prev, q
        num, den = den, num - b * den
        sign = -sign
    return total


def evaluate_path(sym: EigenSymbol, u1: int, v1: int, u2: int, v2: int) -> Fraction:
    """Symbol on the path {u1/v1, u2/v2}; a zero denominator means oo."""
    def point(u, v):
        if v == 0:
            return Fraction(0)
        if v < 0:
            u, v = -u, -v
        return evaluate(sym, u, v)

    return point(u2, v2) - point(u1, v1)


def evaluate_many(sym: EigenSymbol, a: np.ndarray, n: int) -> tuple[np.ndarray, int]:
    """Vectorized [a/n] for an array of numerators.

    Returns (S, D) with S an int64 array and [a_i/n] = S_i / D exactly.
    All continued fractions are advanced in lockstep; finished entries are
    compacted out.
    """
    lut, D = sym.integer_table()
    N = sym.N
    a = np.asarray(a, dtype=np.int64)
    out = np.zeros(a.shape[0], dtype=np.int64)
    live = np.arange(a.shape[0])
    num = a % n
    # first step: a/n with 0 <= a < n has partial quotient 0, q_0 = 1
    out += lut[(1 % N) * N + 0]
    den = np.full(a.shape[0], n, dtype=np.int64)
    num, den = den, num
    q_prev2 = np.zeros(a.shape[0], dtype=np.int64)
    q_prev = np.ones(a.shape[0], dtype=np.int64)
    sign = 1
    while live.size:
        keep = den != 0
        if not keep.all():
            live, num, den, q_prev, q_prev2 = live[keep], num[keep], den[keep], q_prev[keep], q_prev2[keep]
            if not live.size:
                break
        b = num // den
        q = b * q_prev + q_prev2
        cidx = q % N
        didx = (sign * q_prev) % N
        out[live] += lut[cidx * N + didx]
        q_prev2, q_prev = q_prev, q
        num, den = den, num - b * den
        sign = -sign
    return out, D


# ---------------------------------------------------------------------------
# Fricke involution


def atkin_lehner_sign(space: ManinSymbolSpace, sym: EigenSymbol) -> int:
    """Root number: minus the eigenvalue of W_N(z) = -1/(Nz) on the symbol."""
    N = space.N
    w: Fraction | None = None
    images = []
    for i, (c, d) in enumerate(space.p1.reps):
        a, b, c1, d1 = lift_to_sl2(c, d, N)
        # {b/d, a/c} maps to {-d/(N b), -c/(N a)}
        image = evaluate_path(sym, -d1, N * b, -c1, N * a)
        images.append((sym.value_table[i], image))
        if sym.value_table[i] and w is None:
            w = image / sym.value_table[i]
    if w is None or w not in (1, -1):
        raise ArithmeticError("symbol is not a Fricke eigenvector")
    for v, image in images:
        if image != w * v:
            raise ArithmeticError("symbol is not a Fricke eigenvector")
    return -int(w)


# ---------------------------------------------------------------------------
# serialization


def symbol_to_dict(sym: EigenSymbol) -> dict:
    return {
        "N": sym.N,
        "p": sym.p,
        "table": [[v.numerator, v.denominator] for v in sym.value_table],
        "probes": [[q, a] for q, a in sorted(sym.probe_eigenvalues.items())],
        "scale": [sym.normalization_content.numerator, sym.normalization_content.denominator],
    }


def symbol_from_dict(data: dict) -> EigenSymbol:
    N = int(data["N"])
    p1 = build_plus_space(N).p1
    table = tuple(Fraction(int(n), int(d)) for n, d in data["table"])
    if len(table) != len(p1):
        raise ValueError("table size does not match P^1(Z/N)")
    return EigenSymbol(
        N,
        table,
        {int(q): int(a) for q, a in data["probes"]},
        Fraction(int(data["scale"][0]), int(data["scale"][1])),
        data["p"],
        p1,
    )
