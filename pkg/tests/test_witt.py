import random
from math import comb

import pytest

from drwlog.modlin import CoeffRing
from drwlog.series import TruncSeries, monomials_below
from drwlog.wittdrw import (SizeClampExceeded, WittVector, check_clamp, ghost_identities_hold, random_witt_vector,
                            teichmuller, witt_add, witt_F, witt_from_int, witt_ideal_member,
                            witt_ideal_member_bruteforce, witt_mul, witt_R, witt_scalar, witt_table,
                            witt_to_integer, witt_V, witt_zero)


@pytest.mark.parametrize("p", [2, 3, 5])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_ghost_identities(p, n):  # [DERIVED] ghost map on random integer vectors
    assert ghost_identities_hold(witt_table(p, n), samples=30, seed=p * n, bound=40)


@pytest.mark.parametrize("p", [2, 3])
def test_level_two_polynomials_by_hand(p):  # [DERIVED] closed forms of S_1 and P_1 mod p
    rng = random.Random(p)
    for _ in range(20):
        a = random_witt_vector(rng, p, 2, 4, 2)
        b = random_witt_vector(rng, p, 2, 4, 2)
        (x0, x1), (y0, y1) = a.coords, b.coords
        carry = TruncSeries.zero(x0.ring, 2, 4)
        for i in range(1, p):
            carry = carry + (x0.power(i) * y0.power(p - i)).scale((comb(p, i) // p) % p)
        assert witt_add(a, b).coords == (x0 + y0, x1 + y1 - carry)
        assert witt_mul(a, b).coords == (x0 * y0, x0.power(p) * y1 + y0.power(p) * x1)


def test_three_times_one_is_v_of_one():  # [TRIVIAL]
    one = TruncSeries.one(CoeffRing(3), 1, 3)
    three = witt_scalar(3, teichmuller(one, 2))
    assert three == WittVector((TruncSeries.zero(one.ring, 1, 3), one))
    assert three == witt_V(teichmuller(one, 1))
    assert witt_from_int(3, one, 2) == three


@pytest.mark.parametrize("p", [2, 3])
def test_integers_embed_as_a_ring(p):  # [DERIVED] independent integer oracle
    like = TruncSeries.one(CoeffRing(p), 1, 2)
    modulus = p**3
    for a in range(modulus):
        for b in (1, p - 1, p, p + 1, 2 * p + 1):
            wa, wb = witt_from_int(a, like, 3), witt_from_int(b, like, 3)
            assert witt_add(wa, wb) == witt_from_int((a + b) % modulus, like, 3)
            assert witt_mul(wa, wb) == witt_from_int(a * b % modulus, like, 3)
        assert witt_to_integer(witt_from_int(a, like, 3)) == a


@pytest.mark.parametrize("p", [2, 3])
def test_frobenius_and_verschiebung_identities(p):  # [DERIVED] 100 random vectors
    rng = random.Random(10 + p)
    for _ in range(100):
        a = random_witt_vector(rng, p, 2, 3, 2)
        b = random_witt_vector(rng, p, 2, 3, 2)
        assert witt_F(witt_V(a)) == witt_scalar(p, a)
        x = a.base
        assert witt_F(teichmuller(x, 3)) == teichmuller(x.power(p), 2)
        lhs = witt_mul(witt_V(a), witt_V(b))
        assert lhs == witt_scalar(p, witt_V(witt_mul(a, b)))
        assert witt_R(witt_V(a)).coords[0].is_zero()


def test_ring_axioms_level_three():  # [DERIVED]
    rng = random.Random(4)
    for _ in range(15):
        a, b, c = (random_witt_vector(rng, 2, 1, 4, 3) for _ in range(3))
        assert a + b == b + a and a * b == b * a
        assert (a + b) + c == a + (b + c)
        assert a * (b + c) == a * b + a * c
        assert (a - a).is_zero() and a + witt_zero(a.base, 3) == a


def test_ideal_membership_examples():  # [TRIVIAL]
    ring = CoeffRing(2)
    t1_sq = teichmuller(TruncSeries.monomial(ring, 2, 3, (2, 0), 1), 2)
    assert witt_ideal_member(t1_sq, (1, 0))
    one = teichmuller(TruncSeries.one(ring, 2, 3), 2)
    assert not witt_ideal_member(one, (1, 0))
    assert witt_ideal_member_bruteforce(t1_sq, (1, 0))
    assert not witt_ideal_member_bruteforce(one, (1, 0))
    v_t1 = witt_V(teichmuller(TruncSeries.monomial(ring, 2, 3, (1, 0), 1), 1))  # (0, T1)
    assert not witt_ideal_member(v_t1, (1, 0)) and not witt_ideal_member_bruteforce(v_t1, (1, 0))


@pytest.mark.parametrize("p,d,prec,divisor", [(2, 1, 4, (1,)), (3, 1, 3, (1,)), (2, 2, 3, (1, 0)),
                                              (2, 2, 3, (1, 1))])
def test_ideal_membership_matches_enumeration(p, d, prec, divisor):  # [DERIVED] brute-force span
    rng = random.Random(sum(divisor) + p + d)
    ring = CoeffRing(p)
    generator = teichmuller(TruncSeries.monomial(ring, d, prec, divisor, 1), 2)
    samples = [random_witt_vector(rng, p, d, prec, 2, 0.3) for _ in range(8)]
    samples += [witt_mul(generator, random_witt_vector(rng, p, d, prec, 2)) for _ in range(6)]
    seen = set()
    for a in samples:
        truth = witt_ideal_member_bruteforce(a, divisor)
        assert witt_ideal_member(a, divisor) == truth
        seen.add(truth)
    assert seen == {True, False}


def test_size_clamp():  # [TRIVIAL]
    check_clamp(3, 2, 2, 6)
    for args in [(5, 1, 2, 4), (2, 3, 2, 4), (2, 1, 3, 4), (2, 1, 2, 7)]:
        with pytest.raises(SizeClampExceeded):
            check_clamp(*args)
