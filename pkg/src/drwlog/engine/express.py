"""Constructive factorization of log forms in G^r into dlog products.

Peels w along one axis i: at T_i-level l the graded class of the residual is
matched by refined products dlog(1 + a T_i^k) ∧ ω̃_s (∧ tail) with coefficients a
in the ideal generated by T^{r̃} with T_i removed.  The matched products are
subtracted and the factors of each slot are multiplied together.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from ..divmodel import LocalModel
from ..forms import FormSpace, LogForm, OmegaBasisConvention, axis_order, dlog, wedge, wedge_all
from ..modlin import LinearSolver
from ..series import LocalizedUnit, TruncSeries, dominates, ideal_member, monomials_below
from .graded import NotInLogPart, decompose_graded
from .report import Stopwatch, VerificationReport
from .thm1 import log_part_lhs, model_ring


class NoRefinement(RuntimeError):
    """A graded class has no preimage among the refined (ideal-coefficient) products."""


@dataclass
class DlogFactorization:
    """Σ_j dlog x_{j,1} ∧ ... ∧ dlog x_{j,q}; x_{j,1} ∈ 1 + (T^{r̃}), later slots invert T_1..T_f only."""

    q: int
    terms: list[tuple[LocalizedUnit, ...]] = field(default_factory=list)
    axis: int | None = None
    levels: list[dict] = field(default_factory=list)

    def evaluate(self, ring, d: int, prec: int, log_axes) -> LogForm:
        total = LogForm.zero(ring, d, self.q, prec, frozenset(log_axes))
        for units in self.terms:
            pieces = [dlog(u, u.inverted_axes | frozenset(log_axes)) for u in units]
            total = total + _clip(wedge_all(pieces), prec).with_log_axes(log_axes)
        return total

    def x1_in_ideal(self, r_tilde) -> bool:
        one = None
        for units in self.terms:
            x1 = units[0]
            if x1.inverted_axes:
                return False
            if one is None:
                one = TruncSeries.one(x1.unit.ring, x1.d, x1.unit.prec)
            if not ideal_member(x1.unit - one, r_tilde):
                return False
        return True

    def later_slots_ok(self, f_axes) -> bool:
        return all(u.inverted_axes <= frozenset(f_axes) for units in self.terms for u in units[1:])

    def to_text(self) -> list[str]:
        return ["{" + ", ".join(u.to_text() for u in units) + "}" for units in self.terms]


def _clip(form: LogForm, prec: int) -> LogForm:
    return form.truncate(prec) if form.prec > prec else form


def choose_axis(model: LocalModel) -> int:
    """Smallest twisted axis of A when e > 0, else smallest axis of B."""
    candidates = range(model.e) if model.e > 0 else range(model.g)
    for axis in candidates:
        if model.r[axis] >= 1:
            return axis
    raise ValueError("no axis of A carries a positive twist; level-0 peeling is not implemented")


def _slot_unit(ring, d, prec, j, f) -> LocalizedUnit:
    if j < f:
        return LocalizedUnit.coordinate(ring, d, prec, j)
    return LocalizedUnit.from_series(TruncSeries.one(ring, d, prec) + TruncSeries.variable(ring, d, prec, j))


def _shapes(model: LocalModel, axis: int, level: int) -> list[tuple[str, int]]:
    """(tail kind, T_axis exponent) of the refined products used at this level.

    Tail kinds: 'a' (ω̃_s), 'bT' (ω̃_t ∧ dlog T_axis), 'b1' (ω̃_t ∧ dlog(1 + T_axis)).
    """
    p = model.p
    if axis < model.e:
        return [("a", level), ("bT", level)]
    shapes = [("a", level + 1)]
    if level % p == 0:
        shapes.append(("a", level))
    if (level + 1) % p == 0:
        shapes.append(("bT", level + 1) if axis < model.f else ("b1", level))
    return shapes


@lru_cache(maxsize=256)
def _level_generators(model: LocalModel, q: int, axis: int, level: int):
    """Refined generators at a level: labels, forms and graded rows (plus a solver)."""
    ring = model_ring(model)
    d, P = model.d, model.prec
    log_axes = model.log_axes
    ambient = FormSpace(ring, d, q, P, log_axes)
    omega = OmegaBasisConvention(axis, model.e, model.f, tilde=True)
    others = [j for j in range(d) if j != axis]
    hatted = tuple(0 if j == axis else x for j, x in enumerate(model.r_tilde))
    one = TruncSeries.one(ring, d, P)
    t_axis = TruncSeries.variable(ring, d, P, axis)
    tails = {"bT": LogForm.dlog_coordinate(ring, d, P, axis),
             "b1": dlog(one + t_axis, log_axes)}
    labels, forms, rows = [], [], []
    for kind, power in _shapes(model, axis, level):
        degree = q - 1 if kind == "a" else q - 2
        if degree < 0 or power >= P:
            continue
        for s in combinations(others, degree):
            tail = omega.form(ring, d, s, P, log_axes)
            if kind != "a":
                tail = wedge(tail, tails[kind])
            for mono in monomials_below(d, P - power):
                if mono[axis] or not dominates(mono, hatted):
                    continue
                exps = tuple(power if j == axis else m for j, m in enumerate(mono))
                x1 = one + TruncSeries.monomial(ring, d, P, exps, 1)
                form = _clip(wedge(dlog(x1, log_axes), tail), P)
                form = form.with_log_axes(log_axes)
                if form.is_zero() or not form.v_member(axis, level):
                    continue
                row = ambient.vector(form.graded_part(axis, level))
                if not row.any():
                    continue
                labels.append((kind, s, power, mono))
                forms.append(form)
                rows.append(row)
    matrix = np.vstack(rows) if rows else np.zeros((0, ambient.dim), dtype=np.int64)
    solver = LinearSolver(matrix, ring, ambient.dim) if rows else None
    return ambient, labels, solver


def express_as_dlog_products(w: LogForm, model: LocalModel, N: int | None = None,
                             check_membership: bool = True, tag_cases: bool = False) -> DlogFactorization:
    """Factor w ∈ G^r_log into dlog products with x_1 ∈ 1 + (T^{r̃})."""
    N = model.N if N is None else N
    if N != model.N:
        model = model.with_N(N)
    ring = model_ring(model)
    P = model.prec
    q = w.q
    log_axes = model.log_axes
    w = _clip(w, P).with_log_axes(log_axes)
    if check_membership:
        lhs = log_part_lhs(model, q, N)
        vec = lhs.space.vector(w, strict=False)
        if vec is None or not lhs.sub.contains(vec):
            raise NotInLogPart("w is not in the log part of G^r")
    result = DlogFactorization(q)
    if w.is_zero():
        return result
    axis = choose_axis(model)
    result.axis = axis
    d, f = model.d, model.f
    products: dict[tuple, TruncSeries] = {}
    residual = w
    one = TruncSeries.one(ring, d, P)
    for level in range(model.r[axis], P):
        if residual.is_zero():
            break
        if not residual.v_member(axis, level):
            raise NoRefinement(f"residual left V^{level} of axis {axis + 1}")
        ambient, labels, solver = _level_generators(model, q, axis, level)
        target = ambient.vector(residual.graded_part(axis, level))
        if not target.any():
            continue
        info = {"level": level}
        if tag_cases:
            info["graded_case"] = decompose_graded(residual, model.p, model.e, axis, level, N)["case"]
        coeffs = solver.solve(target) if solver is not None else None
        if coeffs is None:
            raise NoRefinement(f"graded class at level {level} of axis {axis + 1} is not refinable")
        grouped: dict[tuple, dict] = {}
        for c, (kind, s, power, mono) in zip(coeffs, labels):
            if c:
                grouped.setdefault((kind, s, power), {})[mono] = int(c)
        info["slots"] = len(grouped)
        for (kind, s, power), coeff_map in grouped.items():
            a = TruncSeries(ring, d, P, coeff_map)
            u = one + a.shift(_unit_vector(d, axis, power))
            units = _slot_units(ring, d, P, u, kind, s, axis, f)
            piece = _clip(wedge_all([dlog(x, x.inverted_axes | log_axes) for x in units]), P)
            residual = residual - piece.with_log_axes(log_axes)
            key = (kind, s)
            products[key] = products[key] * u if key in products else u
        if not residual.v_member(axis, level + 1):
            raise NoRefinement(f"subtraction at level {level} did not raise the filtration")
        result.levels.append(info)
    if not residual.is_zero():
        raise NoRefinement("nonzero residual after the last level")
    for (kind, s), u in sorted(products.items(), key=lambda item: (item[0][0], item[0][1])):
        units = _slot_units(ring, d, P, u, kind, s, axis, f)
        result.terms.append(units)
    return result


def _unit_vector(d: int, axis: int, power: int) -> tuple[int, ...]:
    return tuple(power if j == axis else 0 for j in range(d))


def _slot_units(ring, d, P, u, kind, s, axis, f) -> tuple[LocalizedUnit, ...]:
    units = [LocalizedUnit.from_series(u)] + [_slot_unit(ring, d, P, j, f) for j in s]
    if kind == "bT":
        units.append(LocalizedUnit.coordinate(ring, d, P, axis))
    elif kind == "b1":
        units.append(LocalizedUnit.from_series(TruncSeries.one(ring, d, P) + TruncSeries.variable(ring, d, P, axis)))
    return tuple(units)


def random_log_element(model: LocalModel, q: int, rng: random.Random, N: int | None = None) -> LogForm:
    lhs = log_part_lhs(model, q, N)
    rows = lhs.sub.rows
    if lhs.dim == 0:
        return LogForm.zero(lhs.space.ring, model.d, q, (N or model.N) + 1, model.log_axes)
    coeffs = np.array([rng.randrange(model.p) for _ in range(lhs.dim)], dtype=np.int64)
    return lhs.space.form((coeffs @ rows) % model.p)


def verify_decomposition(model: LocalModel, q: int, samples: int = 100, seed: int = 0,
                         N: int | None = None, scenario: str | None = None) -> VerificationReport:
    """Round-trip factorization of seeded random log-part elements."""
    watch = Stopwatch()
    N = model.N if N is None else N
    model = model.with_N(N)
    ring = model_ring(model)
    rng = random.Random(seed)
    failures, no_refinement, ideal_failures = [], 0, 0
    for k in range(samples):
        w = random_log_element(model, q, rng, N)
        try:
            fact = express_as_dlog_products(w, model, N, check_membership=False)
        except NoRefinement as exc:
            no_refinement += 1
            failures.append(f"sample {k}: NoRefinement ({exc}) for {w.to_text()}")
            continue
        back = fact.evaluate(ring, model.d, model.prec, model.log_axes)
        if not (back - w).is_zero():
            failures.append(f"sample {k}: round-trip mismatch for {w.to_text()}")
        if not fact.x1_in_ideal(model.r_tilde) or not fact.later_slots_ok(model.f_axes):
            ideal_failures += 1
            failures.append(f"sample {k}: slot condition violated")
    return VerificationReport(
        scenario=scenario or model.label(), suite="decompose",
        params={**model.as_dict(), "q": q, "samples": samples},
        passed=not failures, witnesses=failures[:3],
        sub_results={"samples": samples, "failures": len(failures), "no_refinement": no_refinement,
                     "ideal_failures": ideal_failures, "axis": choose_axis(model) + 1},
        precision_trail={"N": N, "weight_bound": N + 1}, seed=seed, elapsed_ms=watch.ms())
