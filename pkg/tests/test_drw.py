import random

import numpy as np
import pytest

from drwlog.forms import FormSpace, LogForm, dlog, ext_d, wedge
from drwlog.modlin import CoeffRing
from drwlog.series import LocalizedUnit, TruncSeries, monomials_below, mul
from drwlog.wittdrw import (DRWSpace, DRWSubmodule, drw_build, drw_cartier_inverse, drw_d, drw_dlog, drw_dV, drw_F,
                            drw_lift, drw_R, drw_teichmuller, drw_underline_p, drw_V, drw_wedge, exact_dV_rows,
                            kernel_of_R, random_witt_vector, witt_add, witt_mul, witt_to_drw)

PREC = 3  # weights < 3 at level 2, level-1 inputs known below p·PREC


def random_drw(space: DRWSpace, rng, density=0.3):
    vec = [(rng.randrange(space.p if space.fractional[n] else space.p**2) if rng.random() < density else 0)
           for n in range(space.dim)]
    return space.form(vec)


def random_level1(p, d, q, prec, log_axes, rng, density=0.3):
    space = FormSpace(CoeffRing(p), d, q, prec, log_axes)
    return space.form([rng.randrange(p) if rng.random() < density else 0 for _ in range(space.dim)])


def random_unit(p, d, prec, rng):
    coeffs = {m: rng.randrange(p) for m in monomials_below(d, prec) if sum(m)}
    coeffs[(0,) * d] = rng.randrange(1, p)
    return TruncSeries(CoeffRing(p), d, prec, coeffs)


@pytest.mark.parametrize("p", [2, 3])
def test_witt_vectors_embed_as_a_ring(p):  # [DERIVED] Witt polynomials versus the form model
    rng = random.Random(p)
    for _ in range(25):
        a = random_witt_vector(rng, p, 2, p * PREC, 2)
        b = random_witt_vector(rng, p, 2, p * PREC, 2)
        assert witt_to_drw(witt_add(a, b), PREC) == witt_to_drw(a, PREC) + witt_to_drw(b, PREC)
        assert witt_to_drw(witt_mul(a, b), PREC) == drw_wedge(witt_to_drw(a, PREC), witt_to_drw(b, PREC))


@pytest.mark.parametrize("p", [2, 3])
def test_teichmuller_is_multiplicative(p):  # [DERIVED]
    rng = random.Random(20 + p)
    for _ in range(20):
        x = random_unit(p, 2, p * PREC, rng).scale(rng.randrange(p))
        y = random_unit(p, 2, p * PREC, rng)
        assert drw_teichmuller(mul(x, y), PREC) == drw_wedge(drw_teichmuller(x, PREC), drw_teichmuller(y, PREC))


@pytest.mark.parametrize("p", [2, 3])
def test_f_d_v_is_d_and_f_v_is_p(p):  # [DERIVED]
    rng = random.Random(30 + p)
    for q in (0, 1):
        for _ in range(15):
            x = random_level1(p, 2, q, p * PREC, {0}, rng)
            assert drw_F(drw_dV(x, PREC)).agrees_with(ext_d(x))
            assert drw_F(drw_V(x, PREC)).is_zero()  # p·x on a level-1 form


@pytest.mark.parametrize("p", [2, 3])
def test_v_f_is_multiplication_by_p(p):  # [DERIVED]
    rng = random.Random(40 + p)
    for q in (0, 1, 2):
        space = DRWSpace(p, 2, q, PREC, {0})
        for _ in range(15):
            a = random_drw(space, rng)
            assert drw_V(drw_F(a), PREC) == a.scale(p)


@pytest.mark.parametrize("p", [2, 3])
def test_projection_formula(p):  # [DERIVED] V(x)·y = V(x·F y)
    rng = random.Random(50 + p)
    space = DRWSpace(p, 2, 1, PREC, {1})
    for _ in range(15):
        x = random_level1(p, 2, 0, p * PREC, {1}, rng)
        y = random_drw(space, rng)
        assert drw_wedge(drw_V(x, PREC), y) == drw_V(wedge(x, drw_F(y)), PREC)


@pytest.mark.parametrize("p", [2, 3])
def test_f_of_d_teichmuller(p):  # [DERIVED] F d[x] = x^{p-1} dx
    rng = random.Random(60 + p)
    for _ in range(15):
        x = random_unit(p, 2, p * PREC, rng)
        lhs = drw_F(drw_d(drw_teichmuller(x, PREC)))
        rhs = ext_d(LogForm.from_series(x)).mul_series(x.power(p - 1))
        assert lhs.agrees_with(rhs)


@pytest.mark.parametrize("p", [2, 3])
def test_differential_graded_algebra(p):  # [DERIVED] d² = 0, Leibniz, R∘d = d∘R
    rng = random.Random(70 + p)
    s0, s1 = DRWSpace(p, 2, 0, PREC, {0}), DRWSpace(p, 2, 1, PREC, {0})
    for _ in range(15):
        a, b = random_drw(s0, rng), random_drw(s1, rng)
        assert drw_d(drw_d(a)).is_zero() and drw_d(drw_d(b)).is_zero()
        assert drw_d(drw_wedge(a, b)) == drw_wedge(drw_d(a), b) + drw_wedge(a, drw_d(b))
        assert drw_R(drw_d(b)).agrees_with(ext_d(drw_R(b)))
        assert drw_wedge(b, b).is_zero() or p == 2


def test_dlog_of_coordinate():  # [TRIVIAL]
    t = LocalizedUnit.coordinate(CoeffRing(3), 1, 3 * PREC, 0)
    form = drw_dlog(t, PREC, {0})
    assert not form.is_zero()
    assert drw_R(form).agrees_with(dlog(LocalizedUnit.coordinate(CoeffRing(3), 1, PREC, 0)))
    with pytest.raises(ValueError):
        drw_dlog(t, PREC, ())


@pytest.mark.parametrize("p", [2, 3])
def test_dlog_is_multiplicative_and_lifts_dlog(p):  # [DERIVED]
    rng = random.Random(80 + p)
    for _ in range(15):
        u, v = random_unit(p, 2, p * PREC, rng), random_unit(p, 2, p * PREC, rng)
        lu = LocalizedUnit(u, (1, 0))
        assert drw_dlog(mul(u, v), PREC, {0}) == drw_dlog(u, PREC, {0}) + drw_dlog(v, PREC, {0})
        assert drw_R(drw_dlog(lu, PREC, {0})).agrees_with(dlog(lu).truncate(PREC))


@pytest.mark.parametrize("p", [2, 3])
def test_dlog_forms_are_fixed_by_inverse_cartier(p):  # [DERIVED] F dlog[x] = dlog[x] modulo dV
    rng = random.Random(90 + p)
    space = drw_build(p, 2, 1, PREC - 1, {0})
    exact = DRWSubmodule.from_rows(space, exact_dV_rows(space))
    for _ in range(10):
        w = drw_dlog(LocalizedUnit(random_unit(p, 2, p * PREC, rng), (rng.randrange(3), 0)), PREC, {0})
        assert exact.contains_form(drw_cartier_inverse(w) - w)


@pytest.mark.parametrize("p", [2, 3])
def test_kernel_of_r_contains_v_and_dv(p):  # [DERIVED]
    rng = random.Random(100 + p)
    space = drw_build(p, 2, 1, PREC - 1, {1})
    ker = kernel_of_R(space)
    for _ in range(15):
        x0 = random_level1(p, 2, 0, p * PREC, {1}, rng)
        x1 = random_level1(p, 2, 1, p * PREC, {1}, rng)
        assert ker.contains_form(drw_V(x1, PREC)) and ker.contains_form(drw_dV(x0, PREC))
        assert drw_R(drw_V(x1, PREC)).is_zero() and drw_R(drw_dV(x0, PREC)).is_zero()
    lifted = drw_lift(random_level1(p, 2, 1, PREC, {1}, rng))
    assert ker.contains_form(lifted) == lifted.is_zero()


@pytest.mark.parametrize("p", [2, 3])
def test_underline_p_is_independent_of_the_lift(p):  # [DERIVED]
    rng = random.Random(110 + p)
    for _ in range(15):
        z = random_level1(p, 2, 1, PREC, {0}, rng)
        base = drw_underline_p(z)
        y1 = random_level1(p, 2, 1, p * PREC, {0}, rng)
        y0 = random_level1(p, 2, 0, p * PREC, {0}, rng)
        other = drw_lift(z) + drw_V(y1, PREC) + drw_dV(y0, PREC) + drw_lift(z).scale(p)
        assert drw_underline_p(z, other) == base
        assert drw_R(base).is_zero()
