import itertools

import pytest

from drwlog.divmodel import (CoordDivisor, LocalModel, ceil_div, floor_div, max_length_decomposition,
                             p_div_decomposition, thm2_opens)


def test_decomposition_with_one_exponent():  # [TRIVIAL]
    dec = p_div_decomposition(CoordDivisor((1, 3, 9)), 3, (1,))
    assert dec.head.mult == (1, 0, 0)
    assert dec.parts[0].mult == (0, 1, 3)


def test_decomposition_with_gapped_exponents():  # [TRIVIAL]
    dec = p_div_decomposition(CoordDivisor((4, 8)), 2, (2, 3))
    assert dec.head.mult == (0, 0)
    assert [part.mult for part in dec.parts] == [(1, 0), (0, 1)]


def test_maximal_length_decomposition():  # [TRIVIAL]
    dec = max_length_decomposition(CoordDivisor((1, 2, 4)), 2)
    assert [dec.head.mult] + [x.mult for x in dec.parts] == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    dec = max_length_decomposition(CoordDivisor((6,)), 3)
    assert dec.head.mult == (0,) and dec.parts[0].mult == (2,)
    with pytest.raises(ZeroDivisionError):
        max_length_decomposition(CoordDivisor((0, 0)), 2)


def test_decomposition_reassembles():  # [DERIVED] E = E' + Σ p^k E_k on all small divisors
    for p in (2, 3):
        for mult in itertools.product(range(10), repeat=2):
            divisor = CoordDivisor(mult)
            if divisor.is_zero():
                continue
            dec = max_length_decomposition(divisor, p)
            assert dec.reassemble() == divisor
            assert all(x % p for x in dec.parts[-1].mult if x) if dec.parts else True


def test_ceil_and_floor():  # [TRIVIAL]
    assert ceil_div(CoordDivisor((1, 3, 4)), 3).mult == (1, 1, 2)
    assert floor_div(CoordDivisor((1, 3, 4)), 3).mult == (0, 1, 1)


def test_opens_for_level_two():  # [TRIVIAL]
    opens = thm2_opens(CoordDivisor((1, 1, 3)), 3, 2)
    assert [(x.mult, set(axes)) for x, axes in opens] == [((1, 1, 3), {0, 1}), ((1, 1, 1), {0, 1, 2})]
    opens = thm2_opens(CoordDivisor((2,)), 2, 2)
    assert [(x.mult, set(axes)) for x, axes in opens] == [((2,), set()), ((1,), {0})]


def test_model_validation():  # [TRIVIAL]
    model = LocalModel(3, 3, 1, 2, 3, (1, 1, 3))
    assert model.r_tilde == (1, 2, 3)
    assert [model.regime(i) for i in range(3)] == ["A", "bump", "pdiv"]
    with pytest.raises(ValueError):
        LocalModel(3, 2, 0, 1, 2, (3, 3))  # bump axis divisible by p
    with pytest.raises(ValueError):
        LocalModel(3, 2, 0, 1, 1, (1, 1))  # nonzero beyond g
    with pytest.raises(ValueError):
        LocalModel(3, 1, 1, 1, 1, (0,))  # zero twist


def test_model_for_divisor_orders_components():  # [TRIVIAL]
    model = LocalModel.for_divisor(3, (1, 2, 3, 0))
    assert (model.e, model.f, model.g) == (2, 2, 3)
    assert model.log_axes == frozenset({0, 1})
