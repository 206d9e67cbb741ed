import pytest
from hypothesis import given, settings, strategies as st

from drwlog.formparse import (Diff, Dlog, FormSyntaxError, FormTypeError, Num, Product, Sum, Var, evaluate_text,
                              format_node, parse_form)
from drwlog.forms import LogForm, dlog, ext_d, wedge
from drwlog.modlin import CoeffRing
from drwlog.series import LocalizedUnit, TruncSeries, parse_series

F3 = CoeffRing(3)

leaves = st.one_of(st.integers(0, 20).map(Num),
                   st.builds(Var, st.integers(1, 4), st.integers(0, 5)))


def _product(factors, ops):
    # "T1 ^ 2" reads as a power, so '^' never precedes a bare integer
    fixed = tuple("*" if isinstance(f, Num) else op for op, f in zip(ops, factors[1:]))
    return Product(tuple(factors), fixed)


def _extend(children):
    factor_lists = st.lists(children, min_size=2, max_size=3)
    return st.one_of(
        st.builds(Dlog, children), st.builds(Diff, children),
        factor_lists.flatmap(lambda fs: st.lists(st.sampled_from("*^"), min_size=len(fs) - 1,
                                                 max_size=len(fs) - 1).map(lambda ops: _product(fs, ops))),
        st.lists(children, min_size=1, max_size=3).flatmap(
            lambda ts: st.lists(st.sampled_from((1, -1)), min_size=len(ts), max_size=len(ts)).map(
                lambda signs: Sum(tuple(ts), tuple(signs)))).filter(
            lambda s: not (len(s.terms) == 1 and s.signs[0] == 1)),
    )


nodes = st.recursive(leaves, _extend, max_leaves=8)


@settings(max_examples=200, deadline=None)
@given(nodes)
def test_print_then_parse_is_identity(node):  # [DERIVED] round trip
    assert parse_form(format_node(node)) == node


def test_syntax_error_reports_position():  # [TRIVIAL]
    with pytest.raises(FormSyntaxError) as err:
        parse_form("dlog(T1 + )")
    assert err.value.position == 10
    with pytest.raises(FormSyntaxError) as err:
        parse_form("T1 & T2")
    assert err.value.position == 3


def test_type_errors():  # [TRIVIAL]
    with pytest.raises(FormTypeError):
        evaluate_text("dlog(T1) + T1", F3, 2, 5, {0})
    with pytest.raises(FormTypeError):
        evaluate_text("dlog(T1) + dlog(T1) ^ dlog(T2)", F3, 2, 5, {0, 1})
    with pytest.raises(FormTypeError):
        evaluate_text("dlog(T1 + T2)", F3, 2, 5, {0, 1})
    with pytest.raises(FormTypeError):
        evaluate_text("dlog(T1)", F3, 2, 5, ())
    with pytest.raises(FormTypeError):
        evaluate_text("T3", F3, 2, 5)


def test_two_form_from_text():  # [DERIVED] built directly from dlog and wedge
    form = evaluate_text("dlog(1+2*T1^1*T2^1*T3^3) ^ dlog(T2)", F3, 3, 8, {0, 1})
    assert isinstance(form, LogForm) and form.q == 2
    u = parse_series("1 + 2*T1^1*T2^1*T3^3", F3, 3, 8)
    t2 = LocalizedUnit.coordinate(F3, 3, 8, 1)
    expected = wedge(dlog(u).with_log_axes({0, 1}), dlog(t2).with_log_axes({0, 1}))
    assert form == expected.truncate(8)


def test_exact_form_from_text():  # [DERIVED]
    form = evaluate_text("d(T1*T2*T3^3)", F3, 3, 8)
    series = parse_series("1*T1^1*T2^1*T3^3", F3, 3, 8)
    assert form.agrees_with(ext_d(LogForm.from_series(series)))
    # stored as T^mu dlog T_s: T2 T3^3 dT1 = T1 T2 T3^3 dlog T1
    assert form.terms == {((0,), (1, 1, 3)): 1, ((1,), (1, 1, 3)): 1}


def test_dlog_of_coordinate_from_text():  # [TRIVIAL]
    form = evaluate_text("dlog(T1)", F3, 1, 4, {0})
    assert form.terms == {((0,), (0,)): 1} and form.q == 1
    assert isinstance(evaluate_text("1 + T1^2", F3, 1, 4), TruncSeries)
