import random

import numpy as np
import pytest

from drwlog.forms import (FormSpace, InvalidLogForm, LogForm, b_filtration, b_infinity, cartier_inv, cartier_solve,
                          dlog, dlog_one_plus_monomial, exact_subspace, ext_d, log_kernel, wedge)
from drwlog.modlin import CoeffRing
from drwlog.series import LocalizedUnit, TruncSeries, monomials_below, mul, parse_series
from oracles import log_kernel_one_variable

F2, F3 = CoeffRing(2), CoeffRing(3)


def plain_one_form(ring, coeffs: dict[int, int], prec: int) -> LogForm:
    """Σ c_m T^m dT in one variable."""
    return LogForm.from_coefficients(ring, 1, 1, (), {(0,): TruncSeries(ring, 1, prec - 1, {(m,): c
                                                                                           for m, c in coeffs.items()})})


def random_form(ring, d, q, prec, log_axes, rng, density=0.4):
    space = FormSpace(ring, d, q, prec, log_axes)
    vec = [rng.randrange(ring.p) if rng.random() < density else 0 for _ in range(space.dim)]
    return space.form(vec)


def test_exterior_derivative_of_a_monomial():  # [TRIVIAL]
    f = LogForm.from_series(parse_series("1*T1^1*T2^1*T3^3", F3, 3, 7))
    expected = LogForm.from_coefficients(F3, 3, 1, (), {
        (0,): parse_series("1*T2^1*T3^3", F3, 3, 6), (1,): parse_series("1*T1^1*T3^3", F3, 3, 6)})
    assert ext_d(f).agrees_with(expected)


def test_dlog_one_plus_t_mod_three():  # [DERIVED] du/u with the inverse series
    u = LocalizedUnit.from_series(parse_series("1 + 1*T1^1", F3, 1, 5))
    coeff = dlog(u).coefficients()[(0,)]
    assert coeff == parse_series("1 + 2*T1^1 + 1*T1^2 + 2*T1^3", F3, 1, 4)


def test_dlog_closed_form_agrees_with_quotient():  # [DERIVED]
    for p in (2, 3):
        ring = CoeffRing(p)
        for mono in [(1, 0), (1, 2), (0, 3)]:
            for c in range(1, p):
                u = TruncSeries(ring, 2, 7, {(0, 0): 1, mono: c})
                assert dlog_one_plus_monomial(ring, 2, 7, mono, c) == dlog(u)


def test_dlog_of_coordinate_needs_a_pole():  # [TRIVIAL]
    with pytest.raises(InvalidLogForm):
        dlog(LocalizedUnit.coordinate(F2, 2, 4, 0), log_axes=())
    form = dlog(LocalizedUnit.coordinate(F2, 2, 4, 0))
    assert form.terms == {((0,), (0, 0)): 1}


def test_dlog_is_a_homomorphism():  # [DERIVED]
    rng = random.Random(2)
    for _ in range(25):
        ring = F3
        monos = list(monomials_below(2, 6))
        a = TruncSeries(ring, 2, 6, {m: rng.randrange(3) for m in monos if sum(m)} | {(0, 0): 1})
        b = TruncSeries(ring, 2, 6, {m: rng.randrange(3) for m in monos if sum(m)} | {(0, 0): 2})
        assert dlog(mul(a, b)) == dlog(a) + dlog(b)


def test_d_squares_to_zero_and_leibniz():  # [DERIVED]
    rng = random.Random(3)
    for _ in range(20):
        a = random_form(F3, 3, 1, 6, {0}, rng)
        b = random_form(F3, 3, 1, 6, {0}, rng)
        assert ext_d(ext_d(a)).is_zero()
        lhs = ext_d(wedge(a, b))
        rhs = wedge(ext_d(a), b) - wedge(a, ext_d(b))
        assert lhs.agrees_with(rhs)


def test_wedge_is_graded_commutative():  # [DERIVED]
    rng = random.Random(4)
    for _ in range(20):
        a = random_form(F3, 3, 1, 5, {1}, rng)
        b = random_form(F3, 3, 1, 5, {1}, rng)
        c = random_form(F3, 3, 2, 5, {1}, rng)
        assert wedge(a, b) == -wedge(b, a)
        assert wedge(a, c) == wedge(c, a)


def test_inverse_cartier_examples():  # [TRIVIAL]
    assert cartier_inv(plain_one_form(F2, {0: 1}, 3)).agrees_with(plain_one_form(F2, {1: 1}, 6))
    assert cartier_inv(plain_one_form(F3, {1: 1}, 3)).agrees_with(plain_one_form(F3, {5: 1}, 9))


def test_cartier_solve_inverts():  # [DERIVED]
    target = cartier_inv(plain_one_form(F3, {1: 2, 4: 1}, 6))
    eta = cartier_solve(target)
    assert eta is not None and cartier_inv(eta).agrees_with(target)
    assert cartier_solve(plain_one_form(F3, {0: 1}, 6)) is None


def test_dlog_forms_are_fixed_modulo_exact_forms():  # [DERIVED]
    rng = random.Random(6)
    for _ in range(15):
        u = TruncSeries(F2, 2, 6, {m: rng.randrange(2) for m in monomials_below(2, 6) if sum(m)} | {(0, 0): 1})
        w = dlog(u)
        space = FormSpace(F2, 2, 1, 6, ())
        diff = cartier_inv(w).truncate(6) - w
        assert space.contains(exact_subspace(F2, 2, 1, 6, ()), diff)


def test_exact_forms_in_one_variable():  # [DERIVED] T^m dT is exact iff p ∤ m + 1
    for p in (2, 3):
        ring = CoeffRing(p)
        space = FormSpace(ring, 1, 1, 8, ())
        exact = exact_subspace(ring, 1, 1, 8, ())
        for m in range(7):
            assert space.contains(exact, plain_one_form(ring, {m: 1}, 8)) == ((m + 1) % p != 0)


def test_b_one_in_one_variable_mod_three():  # [DERIVED]
    b1 = b_filtration(F3, 1, 1, 5, (), 1)[0]
    space = FormSpace(F3, 1, 1, 5, ())
    members = [m for m in range(4) if space.contains(b1, plain_one_form(F3, {m: 1}, 5))]
    assert members == [0, 1, 3]


def test_b_infinity_stabilizes_quickly():  # [DERIVED] fixpoint detection
    _, steps = b_infinity(F3, 1, 1, 6, ())
    assert steps <= 3


@pytest.mark.parametrize("p,prec,twist", [(2, 6, 1), (3, 6, 1), (3, 7, 2), (2, 7, 0)])
def test_log_kernel_matches_enumeration(p, prec, twist):  # [DERIVED] independent one-variable oracle
    ring = CoeffRing(p)
    space, sub = log_kernel(ring, 1, 1, prec, (), twist=(twist,))
    truth = log_kernel_one_variable(p, prec, twist)
    assert p ** sub.rank == len(truth)
    for coeffs in truth:
        form = plain_one_form(ring, {m: c for m, c in enumerate(coeffs) if c}, prec)
        assert space.contains(sub, form)


def test_twist_membership_uses_presentation_coefficients():  # [TRIVIAL]
    ring = F3
    twisted = FormSpace(ring, 3, 1, 7, {0, 1}, twist=(1, 1, 3))
    inside = LogForm.from_coefficients(ring, 3, 1, {0, 1}, {(1,): parse_series("1*T1^1*T2^1*T3^3", ring, 3, 7)})
    assert twisted.vector(inside, strict=False) is not None  # T1 T3^3 dT2 = T1 T2 T3^3 dlog T2
    outside = LogForm.from_coefficients(ring, 3, 1, {0, 1}, {(2,): parse_series("1*T1^1*T2^1*T3^2", ring, 3, 7)})
    assert not outside.twist_member((1, 1, 3))  # T1 T2 T3^2 dT3
    assert twisted.vector(outside, strict=False) is None


def test_space_vector_round_trip():  # [TRIVIAL]
    rng = random.Random(8)
    space = FormSpace(F3, 2, 1, 5, {0})
    vec = np.array([rng.randrange(3) for _ in range(space.dim)])
    assert (space.vector(space.form(vec)) == vec).all()
