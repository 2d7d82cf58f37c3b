import random

import sympy

from kurisym.arith import euler_phi, is_prime, kronecker, legendre, primitive_root, primes_upto, valuation
from kurisym.heegner import is_fundamental_discriminant

from oracles import norm_form_splitting


def test_kronecker_matches_splitting_in_quadratic_fields():
    rng = random.Random(1)
    discs = [D for D in range(3, 200) if is_fundamental_discriminant(-D)]
    odd_primes = [q for q in primes_upto(400) if q > 2]
    for _ in range(100):
        D = rng.choice(discs)
        ell = rng.choice(odd_primes)
        assert kronecker(-D, ell) == norm_form_splitting(ell, D), (D, ell)


def test_small_helpers_agree_with_sympy():
    for n in range(1, 300):
        assert euler_phi(n) == sympy.totient(n)
        assert is_prime(n) == sympy.isprime(n)
    assert primes_upto(100) == list(sympy.primerange(2, 101))
    for q in primes_upto(500)[1:]:
        g = primitive_root(q)
        assert sympy.n_order(g, q) == q - 1
        for a in range(1, 20):
            expected = sympy.legendre_symbol(a % q, q) if a % q else 0
            assert legendre(a, q) == expected
    assert valuation(250, 5) == 3
    assert valuation(7, 5) == 0
