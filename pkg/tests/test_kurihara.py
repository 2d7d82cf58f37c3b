import random
from dataclasses import replace
from fractions import Fraction
from math import gcd
from pathlib import Path

import pytest

from kurisym.arith import primes_upto, primitive_root, valuation
from kurisym.curves import read_curve_table
from kurisym.kurihara import (
    VANISHES,
    BudgetExceeded,
    SearchReport,
    Verdict,
    delta,
    discrete_log_p_part,
    enumerate_kolyvagin_primes,
    log_table,
    sha_prediction,
    sweep,
)
from kurisym.modsym import evaluate

from oracles import brute_delta, count_affine_plus_infinity
from support import setup

DATA = Path(__file__).parent / "data"


def brute_dlog(ell, eta, a):
    x = 1
    for k in range(ell - 1):
        if x == a % ell:
            return k
        x = x * eta % ell
    raise AssertionError("eta is not a generator")


def test_dlog_examples():
    assert discrete_log_p_part(11, 2, 8, 5, 1) == 3
    for ell in (11, 31, 101, 251):
        eta = primitive_root(ell)
        assert discrete_log_p_part(ell, eta, 1, 5, 1) == 0


@pytest.mark.parametrize("ell,eta,p,e", [(31, 3, 5, 1), (101, 2, 5, 2), (251, 6, 5, 3), (109, 6, 3, 3), (29, 2, 7, 1)])
def test_dlog_matches_exhaustive_table(ell, eta, p, e):
    for a in range(1, ell):
        assert discrete_log_p_part(ell, eta, a, p, e) == brute_dlog(ell, eta, a) % p**e
    table = log_table(ell, eta, p)
    for a in range(1, ell):
        assert table[a] % p**e == brute_dlog(ell, eta, a) % p**e


def test_dlog_rejects_bad_input():
    with pytest.raises(ValueError):
        discrete_log_p_part(11, 2, 22, 5, 1)
    with pytest.raises(ValueError):
        discrete_log_p_part(11, 2, 3, 5, 2)


def test_kolyvagin_primes_for_11a():
    cur, _, _ = setup("11a1", 5)
    primes = enumerate_kolyvagin_primes(cur, 5, 1, 50)
    a31 = 32 - count_affine_plus_infinity(cur.minimal_model.ainvs, 31)
    assert (31 in [f.ell for f in primes]) == ((a31 - 32) % 5 == 0)
    big = enumerate_kolyvagin_primes(cur, 5, 1, 2000)
    assert 11 not in [f.ell for f in big]
    assert [f.ell for f in big] == sorted(f.ell for f in big)
    for f in big:
        assert f.ell % 5 == 1 and (f.a_ell - f.ell - 1) % 5 == 0
        assert f.e == min(valuation(f.ell - 1, 5), valuation(f.a_ell - f.ell - 1, 5))
        assert f.eta == primitive_root(f.ell)
    m2 = enumerate_kolyvagin_primes(cur, 5, 2, 2000)
    assert set(m2) <= set(big)
    assert all(f.e >= 2 for f in m2)


def test_kolyvagin_membership_is_complete():
    cur, _, _ = setup("37a1", 3)
    listed = {f.ell for f in enumerate_kolyvagin_primes(cur, 3, 1, 600)}
    for ell in primes_upto(600):
        if ell % 3 != 1 or ell == 37:
            continue
        a = ell + 1 - count_affine_plus_infinity(cur.minimal_model.ainvs, ell)
        assert (ell in listed) == ((a - ell - 1) % 3 == 0)


def test_delta_one():
    _, sym, _ = setup("11a1", 7)
    d1 = delta(sym, [], 7)
    assert d1.n == 1 and d1.residue == evaluate(sym, 0, 1) == Fraction(1, 5)
    assert d1.M == 0
    _, sym37, _ = setup("37a1", 5)
    assert delta(sym37, [], 5).M == VANISHES


def _brute(sym, factors, p):
    return brute_delta(lambda a, n: evaluate(sym, a, n), [(f.ell, f.eta, f.e) for f in factors], p)


def test_delta_matches_double_loop_for_37a_at_3():
    cur, sym, _ = setup("37a1", 3)
    primes = enumerate_kolyvagin_primes(cur, 3, 1, 200)
    pairs = [(x, y) for i, x in enumerate(primes) for y in primes[i + 1:] if x.ell * y.ell < 6000][:6]
    assert pairs
    for pair in pairs:
        assert delta(sym, pair, 3).residue == _brute(sym, pair, 3)
    for f in primes[:6]:
        assert delta(sym, [f], 3).residue == _brute(sym, [f], 3)


@pytest.mark.parametrize("label,p", [("11a1", 5), ("11a1", 7), ("37b1", 7), ("43a1", 5)])
def test_delta_matches_brute_force(label, p):
    cur, sym, _ = setup(label, p)
    primes = enumerate_kolyvagin_primes(cur, p, 1, 400)
    combos = [(f,) for f in primes[:4]] + [(x, y) for i, x in enumerate(primes) for y in primes[i + 1:]
                                           if x.ell * y.ell <= 10**4]
    for combo in combos:
        assert delta(sym, combo, p).residue == _brute(sym, combo, p)


def test_delta_order_and_lift_invariance():
    cur, sym, _ = setup("37a1", 5)
    primes = enumerate_kolyvagin_primes(cur, 5, 1, 400)
    combo = (primes[0], primes[1], primes[2])
    base = delta(sym, combo, 5)
    assert delta(sym, tuple(reversed(combo)), 5) == base
    shifted = {f.ell: log_table(f.ell, f.eta, 5) + (f.ell - 1) for f in combo}
    again = delta(sym, combo, 5, log_tables=shifted)
    assert (again.residue, again.M) == (base.residue, base.M)


def test_delta_primitive_root_invariance():
    # eta' = eta^k rescales each log by 1/k, so the residue moves by a p-adic unit
    rng = random.Random(3)
    cur, sym, _ = setup("17a1", 5)
    primes = enumerate_kolyvagin_primes(cur, 5, 1, 1000)
    assert len(primes) >= 3
    for combo in [(primes[0],), (primes[1], primes[2]), (primes[0], primes[2])]:
        base = delta(sym, combo, 5)
        mod = 5**base.e_n
        other, unit = [], 1
        for f in combo:
            k = rng.choice([k for k in range(2, f.ell - 1) if gcd(k, f.ell - 1) == 1])
            other.append(replace(f, eta=pow(f.eta, k, f.ell)))
            unit = unit * pow(k, -1, mod) % mod
        alt = delta(sym, other, 5)
        assert alt.M == base.M
        assert alt.residue == base.residue * unit % mod


def test_delta_errors():
    cur, sym, _ = setup("11a1", 7)
    primes = enumerate_kolyvagin_primes(cur, 7, 1, 500)
    with pytest.raises(ValueError):
        delta(sym, [primes[0], primes[0]], 7)
    with pytest.raises(ValueError):
        delta(sym, [primes[0]], 5)


def test_wrong_parity_vanishes():
    for label, p in (("11a1", 7), ("37a1", 5), ("37b1", 7), ("43a1", 5)):
        cur, sym, _ = setup(label, p)
        rep = sweep(sym, cur, p, 400, 2, diagnostic_parity=True)
        assert rep.wrong_parity
        assert all(d.vanishes for d in rep.wrong_parity)
        assert "wrong-parity delta_n did not vanish" not in rep.caveats


def test_sweep_verdicts():
    cur, sym, _ = setup("11a1", 7)
    rep = sweep(sym, cur, 7, 500, 2)
    assert (rep.rho, rep.M_inf_upper, rep.verdict) == (0, 0, Verdict.CONSISTENT_WITNESS)
    assert rep.sha_prediction == 0
    # same shape of data, but p = 5 divides Tam = 5: not a consistent witness
    cur5, sym5, _ = setup("11a1", 5)
    rep5 = sweep(sym5, cur5, 5, 500, 2)
    assert rep5.rho == 0 and rep5.M_inf_upper == 0 and rep5.tam_ord == 1
    assert rep5.verdict is Verdict.COUNTEREXAMPLE_SIGNAL
    assert "mod-p surjectivity no" in rep5.caveats


def test_sweep_rank_one():
    cur, sym, _ = setup("37a1", 5)
    rep = sweep(sym, cur, 5, 500, 2)
    assert 0 not in rep.M_table and 2 not in rep.M_table  # wrong parity omitted
    assert rep.rho == 1
    assert rep.verdict is Verdict.CONSISTENT_WITNESS


def test_sweep_monotone_in_bounds():
    cur, sym, _ = setup("37a1", 5)
    small = sweep(sym, cur, 5, 200, 1)
    large = sweep(sym, cur, 5, 400, 3)
    assert {d.n for d in small.deltas} <= {d.n for d in large.deltas}
    assert large.M_inf_upper <= small.M_inf_upper
    m2 = sweep(sym, cur, 5, 400, 3, m=2)
    assert {d.n for d in m2.deltas} <= {d.n for d in large.deltas}
    if m2.M_inf_upper is not None:
        assert m2.M_inf_upper >= large.M_inf_upper


def test_sweep_deterministic_and_parallel_equal():
    cur, sym, _ = setup("37b1", 7)
    a = sweep(sym, cur, 7, 600, 2).as_dict()
    b = sweep(sym, cur, 7, 600, 2).as_dict()
    c = sweep(sym, cur, 7, 600, 2, workers=2).as_dict()
    assert a == b == c


def test_budget_refusal():
    cur, sym, _ = setup("37a1", 5)
    with pytest.raises(BudgetExceeded) as info:
        sweep(sym, cur, 5, 1000, 2, budget=1000)
    assert info.value.work > 1000


def test_sweep_needs_root_number():
    cur, sym, _ = setup("37a1", 5)
    with pytest.raises(ValueError):
        sweep(sym, replace(cur, epsilon=None), 5, 100, 1)


def test_sha_prediction_is_a_difference():
    rep = SearchReport(p=5, ell_max=0, r_max=2, m=1, epsilon=1, tam_ord=0)
    rep.M_table = {0: 2, 2: 1}
    rep.rho, rep.M_inf_upper = 0, 1
    assert sha_prediction(rep) == 1
    rep.rho = None
    assert sha_prediction(rep) is None


def test_sha_prediction_matches_table_with_nontrivial_sha():
    row = next(r for r in read_curve_table(DATA / "cremona_bsd.txt") if r.label == "1058d1")
    rank, tors, tam, sha = (int(x) for x in row.fields)
    p = 5
    assert rank == 0 and tam % p and valuation(sha, p) == 2
    cur, sym, _ = setup(row.model.ainvs, p)
    assert cur.N == 1058 and cur.reduction_at_p.value == "good_ordinary"
    rep = sweep(sym, cur, p, 300, 2)
    assert rep.M_table[0] == 2 and rep.M_inf_upper == 0
    assert rep.sha_prediction == valuation(sha, p)
