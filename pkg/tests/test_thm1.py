import pytest

from drwlog.divmodel import LocalModel
from drwlog.engine.thm1 import log_part_lhs, rhs_span_thm1, verify_thm1
from drwlog.forms import LogForm
from drwlog.modlin import CoeffRing
from drwlog.series import TruncSeries
from oracles import log_kernel_one_variable

KEY_CELL = LocalModel(3, 1, 0, 1, 1, (1,), N=5)


def one_variable_form(p, exponent, prec):
    ring = CoeffRing(p)
    return LogForm.from_coefficients(ring, 1, 1, (), {(0,): TruncSeries(ring, 1, prec - 1, {(exponent,): 1})})


def test_key_cell_basis():  # [DERIVED] hand computation of C^{-1}w - w
    lhs = log_part_lhs(KEY_CELL, 1, 5)
    assert lhs.dim == 3
    basis = [one_variable_form(3, m, 6) for m in (1, 3, 4)]  # T dT, T^3 dT, T^4 dT
    for form in basis:
        assert lhs.sub.contains(lhs.space.vector(form))
    assert not lhs.sub.contains(lhs.space.vector(one_variable_form(3, 2, 6)))


def test_key_cell_equality():  # [DERIVED]
    report = verify_thm1(KEY_CELL, 1, 5)
    assert report.passed and report.lhs_dim == report.rhs_dim == 3


def test_negative_control_with_wrong_twist():  # [DERIVED] r̃ = r breaks containment
    report = verify_thm1(KEY_CELL, 1, 5, r_tilde_override=(1,))
    assert not report.passed
    assert report.witnesses and all("generator outside G^r" in w for w in report.witnesses)


@pytest.mark.parametrize("p", [2, 3])
@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_one_variable_lhs_matches_enumeration(p, r):  # [DERIVED] independent enumeration oracle
    N = 6
    model = LocalModel(p, 1, 0, int(r % p != 0), 1, (r,), N=N)
    lhs = log_part_lhs(model, 1, N)
    assert p ** lhs.dim == len(log_kernel_one_variable(p, N + 1, r))


GRID = [
    (3, (1,), 0, 1, 1), (2, (2,), 0, 0, 1), (3, (3,), 0, 0, 1), (3, (1, 1), 1, 2, 2), (3, (1, 3), 0, 1, 2),
    (2, (1, 2), 1, 1, 2), (3, (1, 0), 1, 1, 1), (2, (3, 3), 2, 2, 2),
]


@pytest.mark.parametrize("p,r,e,f,g,q", [cell + (q,) for cell in GRID for q in (1, 2) if q <= len(cell[1])])
def test_equality_on_a_grid(p, r, e, f, g, q):  # [DERIVED]
    model = LocalModel(p, len(r), e, f, g, r, N=5)
    report = verify_thm1(model, q, 5)
    assert report.passed, report.witnesses
    rhs, outside = rhs_span_thm1(model, q, 5)
    assert not outside and rhs.sub == log_part_lhs(model, q, 5).sub


def test_stable_under_more_internal_precision():  # [DERIVED]
    base = verify_thm1(KEY_CELL, 1, 5)
    raised = verify_thm1(KEY_CELL, 1, 5, internal_prec=3 * 5 + 2)
    assert base.passed == raised.passed and base.lhs_dim == raised.lhs_dim
