import random

import pytest

from drwlog.divmodel import LocalModel
from drwlog.engine.express import express_as_dlog_products, random_log_element, verify_decomposition
from drwlog.engine.graded import NotInLogPart
from drwlog.engine.thm1 import log_part_lhs
from drwlog.forms import LogForm
from drwlog.modlin import CoeffRing
from drwlog.series import TruncSeries

MODELS = [
    (LocalModel(3, 1, 0, 1, 1, (1,), N=5), 1),
    (LocalModel(2, 1, 0, 0, 1, (2,), N=5), 1),
    (LocalModel(3, 2, 1, 2, 2, (1, 1), N=5), 1),
    (LocalModel(3, 2, 1, 2, 2, (1, 1), N=5), 2),
    (LocalModel(2, 2, 0, 1, 2, (1, 2), N=5), 2),
    (LocalModel(3, 3, 1, 2, 3, (1, 1, 3), N=7), 2),
]


@pytest.mark.parametrize("model,q", MODELS, ids=lambda x: x.label() if isinstance(x, LocalModel) else f"q{x}")
def test_factorization_round_trip(model, q):  # [DERIVED] evaluate the dlog products and compare
    assert log_part_lhs(model, q).dim > 0
    report = verify_decomposition(model, q, samples=25, seed=7)
    assert report.passed, report.witnesses
    assert report.sub_results["no_refinement"] == 0 and report.sub_results["ideal_failures"] == 0


def test_factorization_slot_conditions():  # [DERIVED]
    model = LocalModel(3, 2, 1, 2, 2, (1, 1), N=5)
    rng = random.Random(3)
    ring = CoeffRing(3)
    for _ in range(10):
        w = random_log_element(model, 2, rng)
        fact = express_as_dlog_products(w, model)
        assert fact.x1_in_ideal(model.r_tilde) and fact.later_slots_ok(model.f_axes)
        assert (fact.evaluate(ring, model.d, model.prec, model.log_axes) - w).is_zero()


def test_rejects_forms_outside_the_log_part():  # [TRIVIAL]
    model = LocalModel(3, 1, 0, 1, 1, (1,), N=5)
    ring = CoeffRing(3)
    t2_dt = LogForm.from_coefficients(ring, 1, 1, (), {(0,): TruncSeries(ring, 1, 5, {(2,): 1})})
    with pytest.raises(NotInLogPart):
        express_as_dlog_products(t2_dt, model)
