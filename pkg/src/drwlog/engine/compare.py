"""Comparison of three twisted subsheaves at n = 1 and the Milnor-symbol description.

All subspaces live in the untwisted Ω^q(log D_red) at weight precision N + 1:
  GK   = O(-D)·Ω^q + dO(-D) ∧ Ω^{q-1}   (no poles),
  OURS = Ω^q(log D_0)(-D)              (D_0: components with p ∤ multiplicity),
  JSZ  = Ω^q(log D)(-D),
and each *_log variant is the intersection with the log part.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from typing import Sequence

import numpy as np

from ..divmodel import LocalModel
from ..forms import FormSpace, LogForm, d_matrix, log_kernel, wedge
from ..modlin import CoeffRing, Subspace, canonicalize, coordinate_subspace, intersect
from ..series import monomials_below
from .report import Stopwatch, VerificationReport
from .thm1 import (dlog_coordinate_generators, log_part_lhs, one_form_generators, product_generators)

CHAIN = ("GK", "OURS", "JSZ")


@dataclass
class ComparisonSpaces:
    ambient: FormSpace
    plain: dict[str, Subspace]
    log: dict[str, Subspace]

    def contains(self, name: str, form: LogForm, log: bool = False) -> bool:
        vec = self.ambient.vector(form.with_log_axes(self.ambient.log_axes), strict=False)
        if vec is None:
            return False
        return (self.log if log else self.plain)[name].contains(vec)

    def classify(self, form: LogForm, log: bool = False) -> list[str]:
        return [name for name in CHAIN if self.contains(name, form, log)]


def _ambient(p: int, r: Sequence[int], q: int, N: int) -> FormSpace:
    support = frozenset(i for i, x in enumerate(r) if x)
    return FormSpace(CoeffRing(p), len(r), q, N + 1, support)


def gk_subspace(p: int, r: Sequence[int], q: int, N: int, ambient: FormSpace) -> Subspace:
    """O(-D)·Ω^q + dO(-D) ∧ Ω^{q-1} with plain (pole-free) forms."""
    ring = ambient.ring
    d = len(r)
    P = N + 1
    plain_q = FormSpace(ring, d, q, P, (), twist=tuple(r))
    rows = [ambient.embed_matrix(plain_q, np.eye(plain_q.dim, dtype=np.int64))] if plain_q.dim else []
    if q >= 1:
        functions = FormSpace(ring, d, 0, P, (), twist=tuple(r))
        plain_prev = FormSpace(ring, d, q - 1, P, ())
        target_1 = FormSpace(ring, d, 1, P, ())
        dmat = d_matrix(functions, target_1) if functions.dim else np.zeros((0, target_1.dim), dtype=np.int64)
        prev_forms = plain_prev.basis_forms()
        for row in dmat:
            if not row.any():
                continue
            df = target_1.form(row)
            for omega in prev_forms:
                if sum(sum(mu) for (_, mu) in omega.terms) + min(sum(mu) for (_, mu) in df.terms) >= P:
                    continue
                prod_form = wedge(df, omega)
                if prod_form.is_zero():
                    continue
                rows.append(ambient.vector(prod_form.with_log_axes(ambient.log_axes))[None, :])
    mat = np.vstack(rows) if rows else np.zeros((0, ambient.dim), dtype=np.int64)
    return canonicalize(mat, ring, ambient.dim)


@lru_cache(maxsize=128)
def _comparison_cached(p: int, r: tuple[int, ...], q: int, N: int, internal_prec: int | None):
    ambient = _ambient(p, r, q, N)
    ring = ambient.ring
    d = len(r)
    P = N + 1
    d0 = frozenset(i for i, x in enumerate(r) if x and x % p)
    ours_space = FormSpace(ring, d, q, P, d0, twist=r)
    jsz_space = FormSpace(ring, d, q, P, ambient.log_axes, twist=r)
    plain = {
        "GK": gk_subspace(p, r, q, N, ambient),
        "OURS": coordinate_subspace(ring, ambient.dim, ambient.sub_coordinates(ours_space)),
        "JSZ": coordinate_subspace(ring, ambient.dim, ambient.sub_coordinates(jsz_space)),
    }
    _, log_part = log_kernel(ring, d, q, P, ambient.log_axes, internal_prec=internal_prec)
    log = {name: intersect(sub, log_part) for name, sub in plain.items()}
    return ComparisonSpaces(ambient, plain, log)


def comparison_subspaces(p: int, r: Sequence[int], q: int, N: int,
                         internal_prec: int | None = None) -> ComparisonSpaces:
    return _comparison_cached(p, tuple(int(x) for x in r), q, N, internal_prec)


def chain_status(spaces: ComparisonSpaces) -> dict:
    out = {}
    for kind, subs in (("plain", spaces.plain), ("log", spaces.log)):
        for low, high in (("GK", "OURS"), ("OURS", "JSZ")):
            contained = subs[high].contains_subspace(subs[low])
            strict = contained and subs[high].rank > subs[low].rank
            out[f"{kind}:{low}<={high}"] = contained
            out[f"{kind}:{low}<{high}"] = strict
        out[f"{kind}:dims"] = [subs[name].rank for name in CHAIN]
    return out


def remark_witnesses(p: int, r: Sequence[int], N: int, internal_prec: int | None = None) -> list[dict]:
    """The separating forms for D = Div(T1^r T2^s T3^t), p ∤ rs, p | t, with their claimed sides."""
    from ..formparse import evaluate_text
    r1, r2, r3 = r
    # the witnesses vanish below weight |r|, so raise N to keep them visible
    N = max(N, sum(r))
    if internal_prec is not None:
        internal_prec = max(internal_prec, p * (N + 1))
    mono = f"T1^{r1}*T2^{r2}*T3^{r3}"
    cases = [
        (1, f"d({mono})", "GK", None, False),
        (1, f"T1^{r1}*T3^{r3}*d(T2^{r2})", "OURS", "GK", False),
        (1, f"T1^{r1}*T2^{r2}*T3^{r3 - 1}*d(T3)", "JSZ", "OURS", False),
        (2, f"dlog(1+{mono}) ^ dlog(T3)", "JSZ", "OURS", True),
        (2, f"dlog(1+{mono}) ^ dlog(T2)", "OURS", "GK", True),
    ]
    results = []
    for q, text, inside, outside, log in cases:
        spaces = comparison_subspaces(p, r, q, N, internal_prec)
        form = evaluate_text(text, CoeffRing(p), 3, N + 1, log_axes=spaces.ambient.log_axes)
        member = spaces.classify(form, log)
        ok = inside in member and (outside is None or outside not in member)
        results.append({"q": q, "N": N, "form": text, "log": log, "in": inside, "not_in": outside,
                        "membership": member, "ok": ok})
    return results


def verify_strict_inclusions(p: int, r: Sequence[int], q: int, N: int, scenario: str | None = None,
                             internal_prec: int | None = None) -> VerificationReport:
    watch = Stopwatch()
    spaces = comparison_subspaces(p, r, q, N, internal_prec)
    status = chain_status(spaces)
    chain_ok = all(v for k, v in status.items() if "<=" in k)
    sub = {"chain": status}
    passed = chain_ok
    witnesses = []
    if len(r) == 3 and r[0] % p and r[1] % p and r[2] and r[2] % p == 0:
        found = [w for w in remark_witnesses(p, r, N, internal_prec) if w["q"] == q]
        sub["witnesses"] = found
        passed = passed and all(w["ok"] for w in found)
        witnesses = [f"{w['form']}: {w['membership']}" for w in found]
    return VerificationReport(
        scenario=scenario or f"compare_p{p}_r{'-'.join(map(str, r))}_q{q}_N{N}", suite="compare",
        params={"p": p, "r": list(r), "q": q, "N": N}, passed=passed,
        lhs_dim=spaces.plain["OURS"].rank, rhs_dim=spaces.plain["JSZ"].rank, equal=None,
        witnesses=witnesses, sub_results=sub,
        precision_trail={"N": N, "weight_bound": N + 1, "internal_prec": internal_prec or p * (N + 1)},
        elapsed_ms=watch.ms())


def canonical_patterns(p: int, d: int, cap: int) -> list[tuple[int, ...]]:
    """Multiplicity vectors with p ∤ entries first, then p | entries, then zeros (entries <= cap)."""
    out = set()
    for values in product(range(cap + 1), repeat=d):
        coprime = sorted(v for v in values if v and v % p)
        divisible = sorted(v for v in values if v and v % p == 0)
        zeros = [0] * sum(1 for v in values if v == 0)
        out.add(tuple(coprime + divisible + zeros))
    return sorted(out)


def explore(p_values: Sequence[int], max_d: int, cap: int, N: int, q_values: Sequence[int] = (1, 2)) -> dict:
    """Classify strictness of the chain over all canonical patterns within the bounds."""
    if max_d > 3:
        raise ValueError("explorer bound: d <= 3")
    rows = []
    violations = []
    for p in p_values:
        for d in range(1, max_d + 1):
            for r in canonical_patterns(p, d, cap):
                for q in q_values:
                    if q > d:
                        continue
                    status = chain_status(comparison_subspaces(p, r, q, N))
                    row = {"p": p, "r": list(r), "q": q,
                           "plain_dims": status["plain:dims"], "log_dims": status["log:dims"],
                           "GK<OURS": status["plain:GK<OURS"], "OURS<JSZ": status["plain:OURS<JSZ"],
                           "GK<OURS(log)": status["log:GK<OURS"], "OURS<JSZ(log)": status["log:OURS<JSZ"]}
                    rows.append(row)
                    for k, v in status.items():
                        if "<=" in k and not v:
                            violations.append({"p": p, "r": list(r), "q": q, "failed": k})
    return {"rows": rows, "violations": violations, "N": N, "cap": cap}


# ---------------------------------------------------------------------------
# Milnor symbols with vanishing along D (n = 1)
# ---------------------------------------------------------------------------

def milnor_rhs_span(model: LocalModel, q: int, N: int | None = None):
    """dlog {x_1, ..., x_q}: x_1 ∈ 1 + O(-D), x_2.. units on the complement of D_0."""
    N = model.N if N is None else N
    if model.e != model.f:
        raise ValueError("the symbol description uses A = D_0 (all p ∤ components logarithmic)")
    lhs = log_part_lhs(model, q, N)
    space = lhs.space
    ring = space.ring
    P = N + 1
    first = one_form_generators(ring, model.d, P, model.r)
    if q == 1:
        gens = [((g[1],), g[2]) for g in first]
    else:
        rest = dlog_coordinate_generators(ring, model.d, P, model.log_axes)
        rest += one_form_generators(ring, model.d, P, None)
        gens = product_generators(first, rest, q, P)
    rows, outside = [], 0
    for _, form in gens:
        vec = space.vector(form.with_log_axes(model.log_axes) if form.log_axes <= model.log_axes else form,
                           strict=False)
        if vec is None:
            outside += 1
        else:
            rows.append(vec)
    mat = np.vstack(rows) if rows else np.zeros((0, space.dim), dtype=np.int64)
    return canonicalize(mat, ring, space.dim), outside


def verify_bgk_n1(model: LocalModel, q: int, N: int | None = None, scenario: str | None = None) -> VerificationReport:
    watch = Stopwatch()
    N = model.N if N is None else N
    lhs = log_part_lhs(model, q, N)
    rhs, outside = milnor_rhs_span(model, q, N)
    equal = lhs.sub == rhs and outside == 0
    return VerificationReport(
        scenario=scenario or model.label(), suite="bgk", params={**model.as_dict(), "q": q, "N": N},
        passed=equal, lhs_dim=lhs.dim, rhs_dim=rhs.rank, equal=equal,
        sub_results={"generators_outside_twist": outside},
        precision_trail={"N": N, "weight_bound": N + 1}, elapsed_ms=watch.ms())
