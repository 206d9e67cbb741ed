import pytest

from drwlog.divmodel import LocalModel
from drwlog.engine.appendix import epsilon_check, ses_finv_checks, verify_appendix_d, verify_ses_Finv

MODELS = [
    LocalModel(3, 1, 0, 1, 1, (1,), N=5),
    LocalModel(2, 1, 0, 1, 1, (1,), N=6),
    LocalModel(3, 2, 1, 2, 2, (1, 1), N=5),
    LocalModel(3, 2, 0, 1, 2, (1, 3), N=5),
    LocalModel(2, 2, 1, 1, 2, (1, 2), N=5),
]


@pytest.mark.parametrize("model,q", [(m, q) for m in MODELS for q in (1, 2) if q <= m.d],
                         ids=lambda x: x.label() if isinstance(x, LocalModel) else f"q{x}")
def test_twisted_exact_forms(model, q):  # [DERIVED]
    report = verify_appendix_d(model, q, epsilon_samples=20, seed=1)
    assert report.passed, report.witnesses


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.label())
def test_inverse_cartier_sequence(model):  # [DERIVED]
    report = verify_ses_Finv(model, 1)
    assert report.passed, report.witnesses
    assert all(report.sub_results["injective_by_stage"].values())


def test_epsilon_correction_on_a_non_log_axis():  # [DERIVED]
    model = LocalModel(3, 2, 0, 2, 2, (1, 1), N=6)
    result = epsilon_check(model, 0, 1, samples=30, seed=4)
    assert result["closed"] and result["remainder_in_higher_twist"]


def test_sequence_checks_in_two_variables():  # [DERIVED]
    checks = ses_finv_checks(2, 2, 1, 2, 5)
    assert checks["injective"] and checks["middle_exact"] and checks["augmentation_surjective"]
