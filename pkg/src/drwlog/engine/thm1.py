"""Log part of twisted log forms (kernel side) versus dlog-product spans (symbol side)."""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from ..divmodel import LocalModel
from ..forms import (FormSpace, FormSubspace, LogForm, dlog_one_plus_monomial, log_kernel,
                     wedge)
from ..modlin import CoeffRing, canonicalize
from ..series import dominates, monomials_below
from .report import Stopwatch, VerificationReport

MAX_GENERATORS = 400_000


class BudgetExceeded(RuntimeError):
    """Raised when a generator enumeration exceeds its combinatorial budget."""


def model_ring(model: LocalModel) -> CoeffRing:
    if model.m != 1:
        raise ValueError("engine suites run over F_p (m = 1); the log part is only F_p-linear")
    return CoeffRing(model.p)


def twisted_space(model: LocalModel, q: int, N: int | None = None) -> FormSpace:
    N = model.N if N is None else N
    return FormSpace(model_ring(model), model.d, q, N + 1, model.log_axes, twist=model.r)


def log_part_lhs(model: LocalModel, q: int, N: int | None = None,
                 internal_prec: int | None = None) -> FormSubspace:
    """Kernel of C^{-1} - 1 on G^r = Ω^q(log A)(-B) modulo dΩ^{q-1}(log A), weights <= N."""
    N = model.N if N is None else N
    return _log_part_cached(model.p, model.d, model.e, model.f, model.g, model.r, q, N, internal_prec)


@lru_cache(maxsize=64)
def _log_part_cached(p, d, e, f, g, r, q, N, internal_prec):
    model = LocalModel(p, d, e, f, g, r, N)
    space, sub = log_kernel(model_ring(model), d, q, N + 1, model.log_axes, twist=r,
                            internal_prec=internal_prec)
    return FormSubspace(space, sub)


def one_form_generators(ring: CoeffRing, d: int, prec: int, lower: Sequence[int] | None,
                        log_axes: Iterable[int] = ()) -> list[tuple[int, tuple, LogForm]]:
    """(weight, label, dlog(1 + c T^M)) for nonconstant M >= lower of weight < prec, c ∈ F_p^x.

    Forms that vanish (p | M) are skipped.
    """
    out = []
    for mono in monomials_below(d, prec):
        if sum(mono) == 0:
            continue
        if lower is not None and not dominates(mono, lower):
            continue
        if all(m % ring.p == 0 for m in mono):
            continue
        for c in range(1, ring.p):
            form = dlog_one_plus_monomial(ring, d, prec, mono, c, log_axes)
            if not form.is_zero():
                out.append((sum(mono), ("1+cT^M", c, mono), form))
    return out


def dlog_coordinate_generators(ring: CoeffRing, d: int, prec: int, axes: Iterable[int]):
    return [(0, ("T", i), LogForm.dlog_coordinate(ring, d, prec, i)) for i in sorted(axes)]


def product_generators(first: list, rest: list, q: int, prec: int,
                       budget: int = MAX_GENERATORS) -> list[tuple[tuple, LogForm]]:
    """Wedges x1 ∧ y_1 ∧ ... ∧ y_{q-1}, x1 from ``first``, y's strictly increasing in ``rest``.

    Products whose lowest weight reaches ``prec`` are pruned (they vanish at this precision).
    """
    out = []
    rest_sorted = sorted(range(len(rest)), key=lambda k: rest[k][0])

    def extend(prefix_form, prefix_weight, labels, start, depth):
        if depth == 0:
            if not prefix_form.is_zero():
                out.append((labels, prefix_form))
                if len(out) > budget:
                    raise BudgetExceeded(f"more than {budget} product generators")
            return
        for pos in range(start, len(rest_sorted)):
            weight, label, form = rest[rest_sorted[pos]]
            if prefix_weight + weight >= prec:
                break
            extend(wedge(prefix_form, form), prefix_weight + weight, labels + (label,), pos + 1, depth - 1)

    for weight, label, form in first:
        if weight >= prec:
            continue
        extend(form, weight, (label,), 0, q - 1)
    return out


def rhs_generators_thm1(model: LocalModel, q: int, N: int | None = None,
                        cutoff: int | None = None) -> list[tuple[tuple, LogForm]]:
    """dlog x1 ∧ ... ∧ dlog xq with x1 = 1 + c T^M (M >= r̃) and x_j ∈ {T_i (i <= f), 1 + c T^M}.

    ``cutoff`` bounds the monomial weights (default: the form precision N + 1).
    """
    N = model.N if N is None else N
    ring = model_ring(model)
    prec = N + 1
    cut = prec if cutoff is None else cutoff
    first = [g for g in one_form_generators(ring, model.d, prec, model.r_tilde) if g[0] < cut]
    if q == 1:
        return [((g[1],), g[2]) for g in first]
    rest = dlog_coordinate_generators(ring, model.d, prec, model.f_axes)
    rest += [g for g in one_form_generators(ring, model.d, prec, None) if g[0] < cut]
    return product_generators(first, rest, q, prec)


def rhs_span_thm1(model: LocalModel, q: int, N: int | None = None,
                  cutoff: int | None = None) -> tuple[FormSubspace, list]:
    """Span of the symbol-side generators in G^r, and generators that fall outside G^r."""
    space = twisted_space(model, q, N)
    rows = []
    outside = []
    for labels, form in rhs_generators_thm1(model, q, N, cutoff):
        vec = space.vector(form, strict=False)
        if vec is None:
            outside.append((labels, form))
        else:
            rows.append(vec)
    mat = np.vstack(rows) if rows else np.zeros((0, space.dim), dtype=np.int64)
    return FormSubspace(space, canonicalize(mat, space.ring, space.dim)), outside


def compare_subspaces(lhs: FormSubspace, rhs: FormSubspace, limit: int = 3) -> tuple[bool, list[str]]:
    witnesses = []
    for form in lhs.missing_from(rhs, limit):
        witnesses.append("LHS\\RHS: " + form.to_text())
    for form in rhs.missing_from(lhs, limit):
        witnesses.append("RHS\\LHS: " + form.to_text())
    return lhs.sub == rhs.sub, witnesses


def verify_thm1(model: LocalModel, q: int, N: int | None = None, internal_prec: int | None = None,
                scenario: str | None = None, stability_rerun: bool = True,
                r_tilde_override: Sequence[int] | None = None) -> VerificationReport:
    """Equality of log_part_lhs and rhs_span_thm1 at precision N."""
    watch = Stopwatch()
    N = model.N if N is None else N
    lhs = log_part_lhs(model, q, N, internal_prec)
    if r_tilde_override is not None:
        rhs, outside = _rhs_with_override(model, q, N, r_tilde_override)
    else:
        rhs, outside = rhs_span_thm1(model, q, N)
    equal, witnesses = compare_subspaces(lhs, rhs)
    witnesses += ["generator outside G^r: " + f.to_text() for _, f in outside[:3]]
    rhs_in_lhs = lhs.sub.contains_subspace(rhs.sub) and not outside
    passed = equal and not outside
    sub = {"rhs_subset_lhs": rhs_in_lhs, "generators_outside_twist": len(outside)}
    if not passed and stability_rerun:
        rerun_N = N + 1
        lhs2 = log_part_lhs(model, q, rerun_N, internal_prec)
        rhs2, out2 = rhs_span_thm1(model, q, rerun_N)
        sub["rerun"] = {"N": rerun_N, "equal": lhs2.sub == rhs2.sub and not out2}
    p = model.p
    return VerificationReport(
        scenario=scenario or model.label(), suite="thm1",
        params={**model.as_dict(), "N": N, "q": q, "r_tilde": list(r_tilde_override or model.r_tilde)},
        passed=passed, lhs_dim=lhs.dim, rhs_dim=rhs.dim, equal=equal, witnesses=witnesses,
        sub_results=sub,
        precision_trail={"N": N, "weight_bound": N + 1, "internal_prec": internal_prec or p * (N + 1)},
        elapsed_ms=watch.ms())


def _rhs_with_override(model: LocalModel, q: int, N: int, r_tilde: Sequence[int]):
    """RHS with a caller-chosen lower exponent for x1 (negative controls)."""
    ring = model_ring(model)
    prec = N + 1
    first = one_form_generators(ring, model.d, prec, r_tilde)
    if q == 1:
        gens = [((g[1],), g[2]) for g in first]
    else:
        rest = dlog_coordinate_generators(ring, model.d, prec, model.f_axes)
        rest += one_form_generators(ring, model.d, prec, None)
        gens = product_generators(first, rest, q, prec)
    space = twisted_space(model, q, N)
    rows, outside = [], []
    for labels, form in gens:
        vec = space.vector(form, strict=False)
        (outside.append((labels, form)) if vec is None else rows.append(vec))
    mat = np.vstack(rows) if rows else np.zeros((0, space.dim), dtype=np.int64)
    return FormSubspace(space, canonicalize(mat, ring, space.dim)), outside
