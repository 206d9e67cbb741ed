"""Graded pieces U_i^h / U_i^{h+1} of the untwisted log part and the maps ρ_{i,h}.

Graded classes are represented by the projection onto presentation terms of
T_i-order exactly h.  That projection is a well-defined injective map on
V_i^h / V_i^{h+1}: in the split basis with dlog(1+T_i) the coefficients differ
from the dT_i-basis ones by the unit 1+T_i, which does not change the leading
T_i-coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..forms import (FormSpace, FormSubspace, LogForm, OmegaBasisConvention, _sum_dlog_terms,
                     axis_order, d_matrix, log_kernel, rho, beta, rho_case)
from ..modlin import (CoeffRing, LinearSolver, Subspace, canonicalize, kernel, matmul,
                      restrict_to_coordinates, zero_subspace)


class NotInLogPart(ValueError):
    """The form is not in the required piece of the log part."""


@dataclass
class GradedContext:
    """Untwisted log part of Ω^q(log A), A = Div(T_1..T_e), at weight precision P."""

    p: int
    d: int
    e: int
    q: int
    prec: int
    ring: CoeffRing = field(init=False)
    space: FormSpace = field(init=False)
    log_part: Subspace = field(init=False)

    def __post_init__(self):
        self.ring = CoeffRing(self.p)
        self.space, self.log_part = log_kernel(self.ring, self.d, self.q, self.prec, range(self.e))

    @property
    def log_axes(self) -> frozenset[int]:
        return frozenset(range(self.e))

    def order_columns(self, axis: int, level: int, exact: bool) -> list[int]:
        if exact:
            return self.space.coordinates_where(lambda k: axis_order(k, axis, self.log_axes) == level)
        return self.space.coordinates_where(lambda k: axis_order(k, axis, self.log_axes) >= level)

    def u_filtration(self, axis: int, level: int) -> Subspace:
        """U_i^level = log part ∩ V_i^level."""
        return restrict_to_coordinates(self.log_part, self.order_columns(axis, level, exact=False))

    def graded_piece(self, axis: int, level: int) -> Subspace:
        """Projection of U_i^level onto order-exactly-level coordinates."""
        u = self.u_filtration(axis, level)
        mask = np.zeros(self.space.dim, dtype=bool)
        mask[self.order_columns(axis, level, exact=True)] = True
        rows = np.where(mask[None, :], u.rows, 0) if u.rank else u.rows
        return canonicalize(rows, self.ring, self.space.dim)

    def graded_vector(self, form: LogForm, axis: int, level: int) -> np.ndarray:
        return self.space.vector(form.graded_part(axis, level))


@lru_cache(maxsize=256)
def graded_context(p: int, d: int, e: int, q: int, prec: int) -> GradedContext:
    return GradedContext(p, d, e, q, prec)


def input_space(ctx: GradedContext, axis: int, degree: int, prec: int) -> FormSpace:
    """Ω^degree_{R_i}(log A_i) (forms without T_i), weights < prec."""
    return FormSpace(ctx.ring, ctx.d, degree, max(prec, 0), ctx.log_axes - {axis}, fixed_zero={axis})


def closed_rows(space: FormSpace) -> np.ndarray:
    """Basis (rows, in space coordinates) of the closed forms Z of a coordinatized input space."""
    if space.dim == 0:
        return np.zeros((0, 0), dtype=np.int64)
    if space.q + 1 > space.d - len(space.fixed_zero):
        return np.eye(space.dim, dtype=np.int64)
    target = FormSpace(space.ring, space.d, space.q + 1, space.prec, space.log_axes, fixed_zero=space.fixed_zero)
    dmat = d_matrix(space, target)
    ker = kernel(dmat.T, space.ring, space.dim)
    return np.asarray(ker.rows)


def exact_rows(space: FormSpace) -> np.ndarray:
    """Basis of d(Ω^{deg-1}) inside the input space."""
    if space.q == 0 or space.dim == 0:
        return np.zeros((0, space.dim), dtype=np.int64)
    source = FormSpace(space.ring, space.d, space.q - 1, space.prec, space.log_axes, fixed_zero=space.fixed_zero)
    if source.dim == 0:
        return np.zeros((0, space.dim), dtype=np.int64)
    return np.asarray(canonicalize(d_matrix(source, space), space.ring, space.dim).rows)


def d_rank(space: FormSpace) -> int:
    """rank of d on the input space = dim(space / Z)."""
    return space.dim - closed_rows(space).shape[0] if space.dim else 0


@dataclass
class CaseInputs:
    """Coordinatized domain components of ρ for one (case, axis, h)."""

    case: int
    components: dict[str, FormSpace]
    log_components: dict[str, FormSubspace]


def case_inputs(ctx: GradedContext, case: int, axis: int, h: int) -> CaseInputs:
    P, q = ctx.prec, ctx.q
    comps: dict[str, FormSpace] = {}
    logs: dict[str, FormSubspace] = {}
    if case in (1, 2):
        comps["a"] = input_space(ctx, axis, q - 1, P - h)
        if case == 2 and q >= 2:
            comps["b"] = input_space(ctx, axis, q - 2, P - h)
    elif case in (4, 5):
        comps["a_prime"] = input_space(ctx, axis, q - 1, P - h - 1)
        if case == 4:
            comps["a"] = input_space(ctx, axis, q - 1, P - h)
    elif case == 6:
        if q >= 2:
            comps["b"] = input_space(ctx, axis, q - 2, P - h - 1)
    elif case in (3, 7):
        shift = 0 if case == 3 else 1
        for name, degree, prec in (("w", q, P), ("w_prime", q - 1, P - shift)):
            if degree < 0:
                continue
            space, sub = log_kernel(ctx.ring, ctx.d, degree, prec, ctx.log_axes - {axis}, fixed_zero={axis})
            logs[name] = FormSubspace(space, sub)
    return CaseInputs(case, comps, logs)


def _rho_rows(ctx: GradedContext, case: int, axis: int, h: int, name: str, forms: list[LogForm]) -> np.ndarray:
    rows = []
    for form in forms:
        image = rho(case, axis, h, {name: form.with_prec(ctx.prec) if name not in ("w", "w_prime") else form},
                    e=ctx.e, p=ctx.p, prec=ctx.prec, q=ctx.q)
        rows.append(ctx.graded_vector(image, axis, h))
    return np.vstack(rows) if rows else np.zeros((0, ctx.space.dim), dtype=np.int64)


@lru_cache(maxsize=512)
def rho_matrices(p: int, d: int, e: int, q: int, prec: int, axis: int, h: int):
    """Graded images of ρ on each input basis (rows), keyed by component name."""
    ctx = graded_context(p, d, e, q, prec)
    case = rho_case(axis, h, e, p)
    inputs = case_inputs(ctx, case, axis, h)
    mats = {}
    bases = {}
    for name, space in inputs.components.items():
        forms = space.basis_forms()
        mats[name] = _rho_rows(ctx, case, axis, h, name, forms)
        bases[name] = forms
    for name, fsub in inputs.log_components.items():
        forms = fsub.forms()
        mats[name] = _rho_rows(ctx, case, axis, h, name, forms)
        bases[name] = forms
    return case, inputs, mats, bases


def _beta_rows(ctx: GradedContext, case: int, axis: int, h: int, space: FormSpace) -> np.ndarray:
    rows = []
    for form in space.basis_forms():
        image = beta(case, axis, h, form.with_prec(ctx.prec), e=ctx.e, p=ctx.p, prec=ctx.prec, q=ctx.q)
        rows.append(ctx.graded_vector(image, axis, h))
    return np.vstack(rows) if rows else np.zeros((0, ctx.space.dim), dtype=np.int64)


def _rank(rows: np.ndarray, ring: CoeffRing, ambient: int) -> int:
    if rows.shape[0] == 0:
        return 0
    return canonicalize(rows, ring, ambient).rank


def _span(rows: np.ndarray, ring: CoeffRing, ambient: int) -> Subspace:
    return canonicalize(rows.reshape(-1, ambient), ring, ambient)


def lemma3_checks(p: int, d: int, e: int, q: int, axis: int, h: int, N: int) -> dict:
    """Rank, surjectivity and sequence checks for the graded map at (axis, h).

    Returns booleans and dimensions.  Two readings of the short exact sequences
    are evaluated: 'literal' (quotient by closed forms Z^{q-1}) and 'exact_quotient'
    (quotient by d Ω^{q-2}).
    """
    prec = N + 1
    ctx = graded_context(p, d, e, q, prec)
    case, inputs, mats, bases = rho_matrices(p, d, e, q, prec, axis, h)
    ring, dim = ctx.ring, ctx.space.dim
    graded = ctx.graded_piece(axis, h)
    all_rows = np.vstack([m for m in mats.values()]) if mats else np.zeros((0, dim), dtype=np.int64)
    image = _span(all_rows, ring, dim)
    out: dict = {"case": case, "axis": axis + 1, "h": h, "q": q, "graded_dim": graded.rank,
                 "surjective": image == graded}
    # images must be genuine log forms in U_i^h
    u_h = ctx.u_filtration(axis, h)
    lands = True
    for name, forms in bases.items():
        for form in forms[:40]:
            actual = rho(case, axis, h, {name: form.with_prec(prec) if name not in ("w", "w_prime") else form},
                         e=e, p=p, prec=prec, q=q)
            if not ctx.space.contains(u_h, actual):
                lands = False
                break
    out["lands_in_U"] = lands

    def kernel_ok(name):
        rows = closed_rows(inputs.components[name])
        if rows.shape[0] == 0:
            return True
        return not matmul(rows, mats[name], ring).any()

    if case == 1:
        a = inputs.components["a"]
        out["expected_rank"] = a.dim
        out["rank"] = _rank(mats["a"], ring, dim)
        out["injective"] = out["rank"] == a.dim
    elif case == 2:
        expected = d_rank(inputs.components["a"]) + (d_rank(inputs.components["b"]) if "b" in mats else 0)
        out["expected_rank"] = expected
        out["rank"] = _rank(all_rows, ring, dim)
        out["injective"] = out["rank"] == expected and all(kernel_ok(n) for n in mats)
    elif case in (3, 7):
        expected = sum(f.dim for f in inputs.log_components.values())
        out["expected_rank"] = expected
        out["rank"] = _rank(all_rows, ring, dim)
        out["injective"] = out["rank"] == expected
    elif case == 4:
        expected = inputs.components["a_prime"].dim + d_rank(inputs.components["a"])
        out["expected_rank"] = expected
        out["rank"] = _rank(all_rows, ring, dim)
        out["injective"] = out["rank"] == expected and kernel_ok("a")
    elif case == 5:
        out["expected_rank"] = inputs.components["a_prime"].dim
        out["rank"] = _rank(mats["a_prime"], ring, dim)
        out["injective"] = out["rank"] == out["expected_rank"]
    elif case == 6:
        expected = d_rank(inputs.components["b"]) if "b" in mats else 0
        out["expected_rank"] = expected
        out["rank"] = _rank(all_rows, ring, dim)
        out["injective"] = out["rank"] == expected and ("b" not in mats or kernel_ok("b"))
        if q == 1:
            out["graded_zero_when_q1"] = graded.rank == 0
    if case == 7:
        extra = _case7_extra_rows(ctx, axis)
        out["surjective_with_linear_term"] = _span(np.vstack([all_rows, extra]), ring, dim) == graded
    if case in (1, 4, 5):
        out.update(_sequence_checks(ctx, case, axis, h, inputs, mats))
    return out


def _case7_extra_rows(ctx: GradedContext, axis: int) -> np.ndarray:
    """Order-0 classes of dlog(1 + a T_i) ∧ ω_s for a over R_i (missing from the case-7 image)."""
    space = input_space(ctx, axis, ctx.q - 1, ctx.prec - 1)
    omega = OmegaBasisConvention(axis, ctx.e, ctx.e, tilde=False)
    rows = []
    for form in space.basis_forms():
        image = _sum_dlog_terms(omega.coordinates(form.with_prec(ctx.prec)), omega, axis, 1, ctx.prec,
                                ctx.log_axes, ctx.ring, ctx.d, ctx.q)
        rows.append(ctx.graded_vector(image, axis, 0))
    return np.vstack(rows) if rows else np.zeros((0, ctx.space.dim), dtype=np.int64)


def _sequence_checks(ctx, case, axis, h, inputs, mats) -> dict:
    ring, dim = ctx.ring, ctx.space.dim
    slot = "a" if case == 1 else "a_prime"
    a_space = inputs.components[slot]
    tail_shift = 0 if case == 1 else 1
    b_space = input_space(ctx, axis, ctx.q - 2, ctx.prec - h - tail_shift) if ctx.q >= 2 else None
    beta_rows = (_beta_rows(ctx, case, axis, h, b_space) if b_space is not None and b_space.dim
                 else np.zeros((0, dim), dtype=np.int64))
    beta_span = _span(beta_rows, ring, dim)
    beta_rank_expected = d_rank(b_space) if b_space is not None else 0
    z_rows = closed_rows(a_space)
    ker_alpha_literal = _span(matmul(z_rows, mats[slot], ring) if z_rows.shape[0] else z_rows.reshape(0, dim),
                              ring, dim)
    # exact forms of the a-slot space, as the images of d from one degree lower
    b_exact = exact_rows(a_space)
    ker_alpha_exact = _span(matmul(b_exact, mats[slot], ring) if b_exact.shape[0] else b_exact.reshape(0, dim),
                            ring, dim)
    return {
        "beta_rank": beta_span.rank,
        "beta_injective": beta_span.rank == beta_rank_expected,
        "ker_alpha_dim_literal": ker_alpha_literal.rank,
        "ker_alpha_dim_exact_quotient": ker_alpha_exact.rank,
        "middle_exact_literal": ker_alpha_literal == beta_span,
        "middle_exact_exact_quotient": ker_alpha_exact == beta_span,
    }


# ---------------------------------------------------------------------------
# decompose_graded
# ---------------------------------------------------------------------------

GRADED_PIECE_CASE = {1: 1, 2: 1, 4: 2, 5: 3, 6: 4}


@lru_cache(maxsize=512)
def _graded_solver(p, d, e, q, prec, axis, h):
    case, inputs, mats, bases = rho_matrices(p, d, e, q, prec, axis, h)
    ctx = graded_context(p, d, e, q, prec)
    if case == 7:
        mats = dict(mats, a_linear=_case7_extra_rows(ctx, axis))
        bases = dict(bases, a_linear=input_space(ctx, axis, q - 1, prec - 1).basis_forms())
    names = [n for n in mats if mats[n].shape[0]]
    stacked = np.vstack([mats[n] for n in names]) if names else np.zeros((0, 0), dtype=np.int64)
    solver = LinearSolver(stacked, ctx.ring, ctx.space.dim) if names else None
    sizes = [mats[n].shape[0] for n in names]
    return case, names, sizes, bases, solver


def decompose_graded(v: LogForm, p: int, e: int, axis: int, h: int, N: int) -> dict:
    """Data (forms over R_axis) whose ρ-image is congruent to v modulo U_axis^{h+1}.

    v must lie in U_axis^h of the untwisted log part of Ω^q(log Div(T_1..T_e)).
    The particular solution with free coordinates zero is returned.  For axes
    outside the twist at h = 0 the extra component 'a_linear' stands for
    dlog(1 + a T_axis) ∧ ω_s, which the w + w' ∧ dlog(1 + T_axis) shape misses.
    """
    prec = N + 1
    ctx = graded_context(p, v.d, e, v.q, prec)
    vec = ctx.space.vector(v.truncate(prec) if v.prec > prec else v, strict=False)
    if vec is None or not ctx.log_part.contains(vec):
        raise NotInLogPart("v is not in the log part")
    if not v.v_member(axis, h):
        raise NotInLogPart(f"v is not in V_{axis + 1}^{h}")
    case, names, sizes, bases, solver = _graded_solver(p, v.d, e, v.q, prec, axis, h)
    target = ctx.graded_vector(v, axis, h)
    if not target.any():
        return {"case": case, "graded_piece_case": GRADED_PIECE_CASE.get(case), "data": {}, "shapes_used": []}
    if solver is None:
        raise NotInLogPart("graded piece has no ρ-preimage (empty domain)")
    coeffs = solver.solve(target)
    if coeffs is None:
        raise NotInLogPart("no ρ-preimage for the graded class")
    data = {}
    start = 0
    used = []
    for name, size in zip(names, sizes):
        part = coeffs[start:start + size]
        start += size
        if part.any():
            used.append(name)
            forms = bases[name]
            total = None
            for c, form in zip(part, forms):
                if c:
                    term = form.scale(int(c))
                    total = term if total is None else total + term
            data[name] = total
    return {"case": case, "graded_piece_case": GRADED_PIECE_CASE.get(case), "data": data, "shapes_used": used}


def apply_graded_data(result: dict, axis: int, h: int, *, p: int, e: int, q: int, N: int) -> LogForm:
    """ρ(data) as an actual form (for round-trip checks)."""
    prec = N + 1
    total = None
    omega = OmegaBasisConvention(axis, e, e, tilde=False)
    for name, form in result["data"].items():
        if name == "a_linear":
            image = _sum_dlog_terms(omega.coordinates(form.with_prec(prec)), omega, axis, 1, prec,
                                    frozenset(range(e)), form.ring, form.d, q)
            total = image if total is None else total + image
            continue
        image = rho(result["case"], axis, h, {name: form.with_prec(prec) if name not in ("w", "w_prime") else form},
                    e=e, p=p, prec=prec, q=q)
        total = image if total is None else total + image
    return total


# ---------------------------------------------------------------------------
# suite report
# ---------------------------------------------------------------------------

LEMMA3_READINGS = ("literal", "corrected")


def lemma3_cell_verdicts(checks: dict) -> dict[str, bool]:
    """Verdicts of one (axis, h) cell under both readings.

    literal:   image of ρ equals the graded piece; sequences quotient by closed forms.
    corrected: case 7 adds dlog(1 + a T_i) ∧ ω_s; sequences quotient by exact forms.
    """
    common = checks["injective"] and checks["lands_in_U"] and checks.get("beta_injective", True)
    literal = common and checks["surjective"] and checks.get("middle_exact_literal", True)
    surjective = checks.get("surjective_with_linear_term", checks["surjective"])
    corrected = common and surjective and checks.get("middle_exact_exact_quotient", True)
    return {"literal": literal, "corrected": corrected}


def verify_lemma3(p: int, d: int, e: int, q: int, N: int, h_max: int | None = None,
                  reading: str = "literal", scenario: str | None = None):
    """All (axis, h) cells with h <= min(h_max, N - 1) for the log structure A = Div(T_1..T_e)."""
    from .report import Stopwatch, VerificationReport
    if reading not in LEMMA3_READINGS:
        raise ValueError(f"reading must be one of {LEMMA3_READINGS}")
    watch = Stopwatch()
    h_top = N - 1 if h_max is None else min(h_max, N - 1)
    cells, failures = [], {"literal": [], "corrected": []}
    for axis in range(d):
        for h in range(h_top + 1):
            checks = lemma3_checks(p, d, e, q, axis, h, N)
            verdicts = lemma3_cell_verdicts(checks)
            cells.append({"axis": axis + 1, "h": h, "case": checks["case"], **verdicts})
            for name, ok in verdicts.items():
                if not ok:
                    failed = sorted(k for k, v in checks.items() if isinstance(v, bool) and not v)
                    failures[name].append(f"case {checks['case']} axis {axis + 1} h {h}: {', '.join(failed)}")
    passed = not failures[reading]
    return VerificationReport(
        scenario=scenario or f"lemma3_p{p}_d{d}_e{e}_q{q}_N{N}", suite="lemma3",
        params={"p": p, "d": d, "e": e, "q": q, "N": N, "reading": reading}, passed=passed,
        witnesses=failures[reading][:3],
        sub_results={"cells": cells, "cases_seen": sorted({c["case"] for c in cells}),
                     "literal_failures": len(failures["literal"]),
                     "corrected_failures": len(failures["corrected"])},
        precision_trail={"N": N, "weight_bound": N + 1}, elapsed_ms=watch.ms())
