"""Log differential forms Ω^q(log L) over k[[T1..Td]] at finite precision.

Storage basis.  Every form is stored as a combination of the monomial forms
    T^μ · dlog T_{s_1} ∧ ... ∧ dlog T_{s_q},      s increasing,
which covers Ω^q(log L) as the span of keys with μ_i >= 1 for i in s \\ L
(because T^M dT_i = T^{M+e_i} dlog T_i).  In these coordinates
    d(T^μ dlog T_s) = Σ_i μ_i T^μ dlog T_i ∧ dlog T_s,
    C^{-1}(c T^μ dlog T_s) = c^p T^{pμ} dlog T_s,
and all three structures (d, C^{-1}, wedge) are multi-homogeneous.

Precision.  The weight of T^μ dlog T_s is |μ| (so dT_i has weight 1 and
dlog T_i weight 0).  A form with precision P is known in all weights < P.
The presentation basis of the public API uses b_i = dlog T_i for i in L and
b_i = dT_i otherwise; ``coefficients`` converts.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .modlin import (CoeffRing, DimensionMismatch, Subspace, canonicalize, coordinate_subspace,
                     span_sum, zero_subspace)
from .series import (LocalizedUnit, MultiIndex, NotAUnit, TruncSeries, add_index, format_monomial,
                     graded_lex_key, invert_unit, monomials_below)

Subset = tuple[int, ...]
Key = tuple[Subset, MultiIndex]


class InvalidLogForm(ValueError):
    """A term has a pole along an axis outside the declared log axes."""


def merge_sign(a: Subset, b: Subset) -> tuple[int, Subset] | None:
    """Sign and sorted union for dlog T_a ∧ dlog T_b (None if they overlap)."""
    if set(a) & set(b):
        return None
    inversions = 0
    for x in a:
        for y in b:
            if x > y:
                inversions += 1
    return (-1 if inversions % 2 else 1), tuple(sorted(a + b))


def key_weight(key: Key) -> int:
    return sum(key[1])


def key_is_valid(key: Key, log_axes: frozenset[int]) -> bool:
    s, mu = key
    return all(mu[i] >= 1 for i in s if i not in log_axes)


def axis_order(key: Key, axis: int, log_axes: frozenset[int]) -> int:
    """T_axis-adic order of the term in the presentation basis (dT_axis counts once)."""
    s, mu = key
    return mu[axis] - (1 if axis in s and axis not in log_axes else 0)


@dataclass(frozen=True, eq=False)
class LogForm:
    """A q-form in Ω^q(log L), stored in the dlog-monomial basis, known in weights < prec."""

    ring: CoeffRing
    d: int
    q: int
    prec: int
    log_axes: frozenset[int]
    terms: Mapping[Key, int]

    def __post_init__(self):
        object.__setattr__(self, "log_axes", frozenset(self.log_axes))
        clean: dict[Key, int] = {}
        modulus = self.ring.modulus if self.ring.degree == 1 else None
        for (s, mu), c in self.terms.items():
            s = tuple(s)
            mu = tuple(mu)
            if len(s) != self.q or list(s) != sorted(set(s)) or len(mu) != self.d:
                raise DimensionMismatch(f"bad term key {(s, mu)} for q={self.q}, d={self.d}")
            if sum(mu) >= self.prec:
                continue
            c = c % modulus if modulus else self.ring.normalize(c)
            if not c:
                continue
            if not key_is_valid((s, mu), self.log_axes):
                raise InvalidLogForm(f"term T^{mu} dlog T_{s} has a pole outside log axes {sorted(self.log_axes)}")
            clean[(s, mu)] = c
        object.__setattr__(self, "terms", clean)

    # constructors ---------------------------------------------------------
    @classmethod
    def zero(cls, ring, d, q, prec, log_axes=frozenset()) -> "LogForm":
        return cls(ring, d, q, prec, frozenset(log_axes), {})

    @classmethod
    def from_series(cls, series: TruncSeries, log_axes=frozenset()) -> "LogForm":
        """A 0-form."""
        return cls(series.ring, series.d, 0, series.prec, frozenset(log_axes),
                   {((), e): c for e, c in series.coeffs.items()})

    @classmethod
    def from_coefficients(cls, ring: CoeffRing, d: int, q: int, log_axes: Iterable[int],
                          coeffs: Mapping[Subset, TruncSeries]) -> "LogForm":
        """Form Σ_s c_s e_s in the presentation basis (b_i = dlog T_i on log axes, dT_i otherwise)."""
        log_axes = frozenset(log_axes)
        terms: dict[Key, int] = {}
        prec = None
        for s, series in coeffs.items():
            s = tuple(s)
            plain = tuple(1 if (i in s and i not in log_axes) else 0 for i in range(d))
            bound = series.prec + sum(plain)
            prec = bound if prec is None else min(prec, bound)
            for exps, c in series.coeffs.items():
                key = (s, add_index(exps, plain))
                terms[key] = ring.add(terms.get(key, 0), c)
        if prec is None:
            raise ValueError("no coefficients given; use LogForm.zero")
        return cls(ring, d, q, prec, log_axes, terms)

    @classmethod
    def dlog_coordinate(cls, ring, d, prec, axis, log_axes=None) -> "LogForm":
        axes = frozenset(log_axes) if log_axes is not None else frozenset({axis})
        return cls(ring, d, 1, prec, axes | {axis}, {((axis,), (0,) * d): 1})

    @classmethod
    def d_coordinate(cls, ring, d, prec, axis, log_axes=frozenset()) -> "LogForm":
        mu = tuple(1 if k == axis else 0 for k in range(d))
        return cls(ring, d, 1, prec, frozenset(log_axes), {((axis,), mu): 1})

    # queries --------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogForm):
            return NotImplemented
        return (self.ring == other.ring and self.d == other.d and self.q == other.q
                and self.prec == other.prec and self.terms == other.terms)

    def __hash__(self):
        return hash((self.ring, self.d, self.q, self.prec, tuple(sorted(self.terms.items()))))

    def agrees_with(self, other: "LogForm", prec: int | None = None) -> bool:
        bound = min(self.prec, other.prec) if prec is None else prec
        return self.truncate(bound).terms == other.truncate(bound).terms

    def coefficients(self) -> dict[Subset, TruncSeries]:
        """Presentation-basis coefficients: T^M on e_s with M = μ - e_{s \\ L}."""
        grouped: dict[Subset, dict[MultiIndex, int]] = {}
        for (s, mu), c in self.terms.items():
            plain = [1 if (i in s and i not in self.log_axes) else 0 for i in range(self.d)]
            grouped.setdefault(s, {})[tuple(m - k for m, k in zip(mu, plain))] = c
        out = {}
        for s in sorted(grouped):
            drop = sum(1 for i in s if i not in self.log_axes)
            out[s] = TruncSeries(self.ring, self.d, self.prec - drop, grouped[s])
        return out

    def min_weight(self) -> int | None:
        return min((sum(mu) for _, mu in self.terms), default=None)

    def in_log_structure(self, log_axes: Iterable[int]) -> bool:
        axes = frozenset(log_axes)
        return all(key_is_valid(k, axes) for k in self.terms)

    def with_log_axes(self, log_axes: Iterable[int]) -> "LogForm":
        """Same form declared in another log structure (raises if a pole is not allowed)."""
        return LogForm(self.ring, self.d, self.q, self.prec, frozenset(log_axes), self.terms)

    def truncate(self, prec: int) -> "LogForm":
        if prec > self.prec:
            raise ValueError(f"cannot raise precision {self.prec} -> {prec}")
        return LogForm(self.ring, self.d, self.q, prec, self.log_axes, self.terms)

    def with_prec(self, prec: int) -> "LogForm":
        """Reinterpret the precision (raising is only sound for exactly known forms)."""
        return LogForm(self.ring, self.d, self.q, prec, self.log_axes, self.terms)

    # linear structure -----------------------------------------------------
    def _combine(self, other: "LogForm", sign: int) -> "LogForm":
        if (self.ring, self.d, self.q) != (other.ring, other.d, other.q):
            raise DimensionMismatch("forms of different type")
        ring = self.ring
        out = dict(self.terms)
        for key, c in other.terms.items():
            c = c if sign > 0 else ring.neg(c)
            out[key] = ring.add(out.get(key, 0), c)
        return LogForm(ring, self.d, self.q, min(self.prec, other.prec), self.log_axes | other.log_axes, out)

    def __add__(self, other: "LogForm") -> "LogForm":
        return self._combine(other, 1)

    def __sub__(self, other: "LogForm") -> "LogForm":
        return self._combine(other, -1)

    def __neg__(self) -> "LogForm":
        return self.scale(self.ring.neg(1))

    def scale(self, k: int) -> "LogForm":
        ring = self.ring
        k = ring.from_int(k) if ring.degree == 1 else k
        return LogForm(ring, self.d, self.q, self.prec, self.log_axes,
                       {key: ring.mul(k, c) for key, c in self.terms.items()})

    def __rmul__(self, k: int) -> "LogForm":
        return self.scale(k)

    def mul_series(self, f: TruncSeries) -> "LogForm":
        """f · self; precision min(prec, f.prec + min weight)."""
        ring = self.ring
        out: dict[Key, int] = {}
        shift = self.min_weight() or 0
        prec = min(self.prec, f.prec + shift) if self.terms else self.prec
        for (s, mu), c in self.terms.items():
            for exps, a in f.coeffs.items():
                nu = add_index(mu, exps)
                if sum(nu) >= prec:
                    continue
                key = (s, nu)
                out[key] = ring.add(out.get(key, 0), ring.mul(a, c))
        return LogForm(ring, self.d, self.q, prec, self.log_axes, out)

    def mul_monomial(self, exps: MultiIndex, coeff: int = 1) -> "LogForm":
        ring = self.ring
        return LogForm(ring, self.d, self.q, self.prec + sum(exps), self.log_axes,
                       {(s, add_index(mu, exps)): ring.mul(coeff, c) for (s, mu), c in self.terms.items()})

    # filtrations ----------------------------------------------------------
    def twist_member(self, twist: Sequence[int]) -> bool:
        """All presentation coefficients lie in (T^twist)."""
        return all(axis_order_all(key, self.log_axes, twist) for key in self.terms)

    def v_member(self, axis: int, level: int) -> bool:
        if not 0 <= axis < self.d:
            raise ValueError(f"invalid axis {axis}")
        return all(axis_order(k, axis, self.log_axes) >= level for k in self.terms)

    def graded_part(self, axis: int, level: int) -> "LogForm":
        """Projection onto presentation terms of T_axis-order exactly ``level``."""
        if not 0 <= axis < self.d:
            raise ValueError(f"invalid axis {axis}")
        return LogForm(self.ring, self.d, self.q, self.prec, self.log_axes,
                       {k: c for k, c in self.terms.items() if axis_order(k, axis, self.log_axes) == level})

    def below_order(self, axis: int, level: int) -> "LogForm":
        return LogForm(self.ring, self.d, self.q, self.prec, self.log_axes,
                       {k: c for k, c in self.terms.items() if axis_order(k, axis, self.log_axes) < level})

    def lowest_order(self, axis: int) -> int | None:
        return min((axis_order(k, axis, self.log_axes) for k in self.terms), default=None)

    # printing -------------------------------------------------------------
    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for s, coeff in self.coefficients().items():
            basis = " ^ ".join(f"dlog(T{i + 1})" if i in self.log_axes else f"d(T{i + 1})" for i in s)
            for exps, c in coeff.coeffs.items():
                mono = format_monomial(exps)
                head = f"{c}*{mono}" if mono else f"{c}"
                parts.append(f"{head}*{basis}" if basis else head)
        return " + ".join(parts)

    def __repr__(self):
        return f"LogForm(q={self.q}, {self.to_text()} + O({self.prec}))"


def axis_order_all(key: Key, log_axes: frozenset[int], twist: Sequence[int]) -> bool:
    s, mu = key
    return all(mu[i] - (1 if (i in s and i not in log_axes) else 0) >= twist[i] for i in range(len(mu)))


# ---------------------------------------------------------------------------
# Wedge, d, dlog
# ---------------------------------------------------------------------------

def wedge(a: LogForm, b: LogForm) -> LogForm:
    """a ∧ b; precision min(Pa + wt_min(b), Pb + wt_min(a))."""
    if a.ring != b.ring or a.d != b.d:
        raise DimensionMismatch("forms over different rings")
    if a.q + b.q > a.d:
        raise DimensionMismatch(f"degree {a.q}+{b.q} exceeds d={a.d}")
    ring = a.ring
    wa = a.min_weight() or 0
    wb = b.min_weight() or 0
    prec = min(a.prec + wb, b.prec + wa)
    out: dict[Key, int] = {}
    sign_cache: dict[tuple[Subset, Subset], tuple[int, Subset] | None] = {}
    prime = ring.degree == 1
    modulus = ring.modulus if prime else None
    items_b = list(b.terms.items())
    for (sa, mua), ca in a.terms.items():
        weight_a = sum(mua)
        for (sb, mub), cb in items_b:
            if weight_a + sum(mub) >= prec:
                continue
            pair = (sa, sb)
            if pair not in sign_cache:
                sign_cache[pair] = merge_sign(sa, sb)
            merged = sign_cache[pair]
            if merged is None:
                continue
            sign, s = merged
            key = (s, tuple(x + y for x, y in zip(mua, mub)))
            if prime:
                out[key] = (out.get(key, 0) + sign * ca * cb) % modulus
            else:
                prod = ring.mul(ca, cb)
                out[key] = ring.add(out.get(key, 0), prod if sign > 0 else ring.neg(prod))
    return LogForm(ring, a.d, a.q + b.q, prec, a.log_axes | b.log_axes, out)


def wedge_all(forms: Sequence[LogForm]) -> LogForm:
    result = forms[0]
    for f in forms[1:]:
        result = wedge(result, f)
    return result


def d_key(key: Key, d: int) -> list[tuple[Key, int]]:
    """d(T^μ dlog T_s) = Σ_{i ∉ s} μ_i T^μ dlog T_i ∧ dlog T_s as (key, integer coefficient)."""
    s, mu = key
    out = []
    for i in range(d):
        if mu[i] == 0 or i in s:
            continue
        before = sum(1 for x in s if x < i)
        sign = -1 if before % 2 else 1
        out.append(((tuple(sorted(s + (i,))), mu), sign * mu[i]))
    return out


def ext_d(a: LogForm) -> LogForm:
    """Exterior derivative (weight preserving, so the precision is kept)."""
    if a.q >= a.d:
        return LogForm.zero(a.ring, a.d, a.q + 1, a.prec, a.log_axes) if a.q + 1 <= a.d else _overflow(a)
    ring = a.ring
    out: dict[Key, int] = {}
    for key, c in a.terms.items():
        for new_key, k in d_key(key, a.d):
            out[new_key] = ring.add(out.get(new_key, 0), ring.mul(ring.from_int(k), c))
    return LogForm(ring, a.d, a.q + 1, a.prec, a.log_axes, out)


def _overflow(a: LogForm):
    raise DimensionMismatch(f"d of a top-degree form (q={a.q}, d={a.d})")


def dlog_series_part(u: TruncSeries, log_axes=frozenset()) -> LogForm:
    """du/u for a unit u of the power series ring (weights < u.prec)."""
    ring = u.ring
    d = u.d
    du: dict[Key, int] = {}
    for exps, c in u.coeffs.items():
        for i in range(d):
            if exps[i]:
                key = ((i,), exps)
                du[key] = ring.add(du.get(key, 0), ring.mul(ring.from_int(exps[i]), c))
    du_form = LogForm(ring, d, 1, u.prec, frozenset(log_axes), du)
    return du_form.mul_series(invert_unit(u))


def dlog(unit: LocalizedUnit | TruncSeries, log_axes: Iterable[int] | None = None) -> LogForm:
    """dlog(u·T^z) = Σ z_i dlog T_i + du/u in the ambient Ω^1(log log_axes).

    ``log_axes`` defaults to the axes inverted by the unit; it must contain them.
    A plain unit series is accepted as well.
    """
    if isinstance(unit, TruncSeries):
        return dlog_series_part(unit, frozenset(log_axes or ()))
    axes = unit.inverted_axes if log_axes is None else frozenset(log_axes)
    if not unit.inverted_axes <= axes:
        raise InvalidLogForm(f"dlog T_i for i in {sorted(unit.inverted_axes - axes)} needs a log pole")
    form = dlog_series_part(unit.unit, axes)
    ring = unit.unit.ring
    extra = {((i,), (0,) * unit.d): ring.from_int(z) for i, z in enumerate(unit.z) if z}
    if extra:
        form = form + LogForm(ring, unit.d, 1, form.prec, axes, extra)
    return form


def dlog_one_plus_monomial(ring: CoeffRing, d: int, prec: int, exps: MultiIndex, coeff: int,
                           log_axes=frozenset()) -> LogForm:
    """dlog(1 + c T^M) = Σ_k (-1)^{k-1} c^k T^{kM} Σ_j M_j dlog T_j (closed form)."""
    weight = sum(exps)
    if weight == 0:
        raise ValueError("1 + c is a constant; use a nonconstant monomial")
    terms: dict[Key, int] = {}
    power = 1
    k = 1
    while k * weight < prec:
        power = ring.mul(power, coeff)
        signed = power if k % 2 == 1 else ring.neg(power)
        mu = tuple(k * m for m in exps)
        for j, mj in enumerate(exps):
            if mj:
                key = ((j,), mu)
                terms[key] = ring.add(terms.get(key, 0), ring.mul(ring.from_int(mj), signed))
        k += 1
    return LogForm(ring, d, 1, prec, frozenset(log_axes), terms)


# ---------------------------------------------------------------------------
# Cartier operators
# ---------------------------------------------------------------------------

def cartier_inv(a: LogForm) -> LogForm:
    """C^{-1}: c T^μ dlog T_s -> c^p T^{pμ} dlog T_s; precision p·prec."""
    ring = a.ring
    if not ring.is_field:
        raise ValueError("C^{-1} needs field coefficients")
    p = ring.p
    return LogForm(ring, a.d, a.q, p * a.prec, a.log_axes,
                   {(s, tuple(p * m for m in mu)): ring.frob(c) for (s, mu), c in a.terms.items()})


def cartier_solve(target: LogForm) -> LogForm | None:
    """η with C^{-1}(η) = target up to the target precision, or None.

    C^{-1} is monomial in the dlog basis, so the linear system is diagonal:
    a term is reachable iff its exponent vector is divisible by p.
    """
    ring = target.ring
    p = ring.p
    terms = {}
    for (s, mu), c in target.terms.items():
        if any(m % p for m in mu):
            return None
        terms[(s, tuple(m // p for m in mu))] = ring.frob_inv(c)
    prec = -(-target.prec // p)
    eta = LogForm(ring, target.d, target.q, prec, target.log_axes, terms)
    check = cartier_inv(eta).truncate(target.prec)
    if check.terms != target.terms:  # pragma: no cover - defensive
        return None
    return eta


# ---------------------------------------------------------------------------
# Coordinatized form spaces
# ---------------------------------------------------------------------------

class FormSpace:
    """Basis {T^μ dlog T_s : weight < prec, valid for log_axes, inside the twist}.

    ``twist`` restricts to presentation coefficients divisible by T^twist.
    ``fixed_zero`` lists axes that must not appear (forms over R_i).
    """

    def __init__(self, ring: CoeffRing, d: int, q: int, prec: int, log_axes: Iterable[int] = (),
                 twist: Sequence[int] | None = None, fixed_zero: Iterable[int] = ()):
        self.ring = ring
        self.d = d
        self.q = q
        self.prec = prec
        self.log_axes = frozenset(log_axes)
        self.twist = tuple(twist) if twist is not None else None
        self.fixed_zero = frozenset(fixed_zero)
        keys = []
        free_axes = [i for i in range(d) if i not in self.fixed_zero]
        subsets = list(combinations(free_axes, q)) if 0 <= q <= len(free_axes) else []
        for mu in monomials_below(d, prec):
            if any(mu[i] for i in self.fixed_zero):
                continue
            for s in subsets:
                key = (s, mu)
                if not key_is_valid(key, self.log_axes):
                    continue
                if self.twist is not None and not axis_order_all(key, self.log_axes, self.twist):
                    continue
                keys.append(key)
        self.keys: list[Key] = keys
        self.index: dict[Key, int] = {k: n for n, k in enumerate(keys)}

    @property
    def dim(self) -> int:
        return len(self.keys)

    def vector(self, form: LogForm, strict: bool = True) -> np.ndarray | None:
        """Coordinates of a form (None, or an error when strict, if it leaves the space)."""
        if form.q != self.q or form.d != self.d:
            raise DimensionMismatch("form type does not match the space")
        if form.prec < self.prec:
            raise ValueError(f"form known below weight {form.prec} but space needs {self.prec}")
        vec = np.zeros(self.dim, dtype=np.int64)
        for key, c in form.terms.items():
            if sum(key[1]) >= self.prec:
                continue
            idx = self.index.get(key)
            if idx is None:
                if strict:
                    raise ValueError(f"term {key} is outside the form space")
                return None
            vec[idx] = c
        return vec

    def form(self, vector) -> LogForm:
        terms = {self.keys[k]: int(c) for k, c in enumerate(vector) if c}
        return LogForm(self.ring, self.d, self.q, self.prec, self.log_axes, terms)

    def matrix(self, forms: Sequence[LogForm]) -> np.ndarray:
        if not forms:
            return np.zeros((0, self.dim), dtype=np.int64)
        return np.vstack([self.vector(f) for f in forms])

    def span(self, forms: Sequence[LogForm]) -> Subspace:
        return canonicalize(self.matrix(forms), self.ring, self.dim)

    def contains(self, space: Subspace, form: LogForm) -> bool:
        vec = self.vector(form, strict=False)
        return vec is not None and space.contains(vec)

    def basis_forms(self) -> list[LogForm]:
        return [LogForm(self.ring, self.d, self.q, self.prec, self.log_axes, {k: 1}) for k in self.keys]

    def coordinates_where(self, predicate) -> list[int]:
        return [n for n, k in enumerate(self.keys) if predicate(k)]

    def sub_coordinates(self, other: "FormSpace") -> list[int]:
        """Indices (in self) of the keys of a smaller space."""
        return [self.index[k] for k in other.keys if sum(k[1]) < self.prec]

    def embed_matrix(self, smaller: "FormSpace", rows: np.ndarray) -> np.ndarray:
        """Rows of the smaller space rewritten in this space's coordinates."""
        out = np.zeros((rows.shape[0], self.dim), dtype=np.int64)
        cols = [self.index[k] for k in smaller.keys]
        out[:, cols] = rows
        return out

    def __repr__(self):
        return (f"FormSpace(d={self.d}, q={self.q}, prec={self.prec}, log={sorted(self.log_axes)}, "
                f"twist={self.twist}, dim={self.dim})")


def d_matrix(source: FormSpace, target: FormSpace) -> np.ndarray:
    """Matrix (rows = source basis) of d: source -> target."""
    ring = source.ring
    mat = np.zeros((source.dim, target.dim), dtype=np.int64)
    for n, key in enumerate(source.keys):
        for new_key, k in d_key(key, source.d):
            if sum(new_key[1]) >= target.prec:
                continue
            idx = target.index.get(new_key)
            if idx is None:
                raise ValueError(f"d leaves the target space at {new_key}")
            mat[n, idx] = (mat[n, idx] + k) % ring.modulus
    return mat


def exact_subspace(ring: CoeffRing, d: int, q: int, prec: int, log_axes: Iterable[int],
                   space: FormSpace | None = None, source_twist: Sequence[int] | None = None,
                   source_log_axes: Iterable[int] | None = None) -> Subspace:
    """Span of d(Ω^{q-1}(log ·)) truncated, inside ``space`` (default: full q-forms)."""
    target = space or FormSpace(ring, d, q, prec, log_axes)
    if q == 0:
        return zero_subspace(ring, target.dim)
    src_axes = log_axes if source_log_axes is None else source_log_axes
    source = FormSpace(ring, d, q - 1, prec, src_axes, twist=source_twist)
    return canonicalize(d_matrix(source, target), ring, target.dim)


def cartier_matrix(space: FormSpace, target: FormSpace | None = None) -> np.ndarray:
    """Matrix of C^{-1} (truncated to ``target``) on the basis of ``space``."""
    target = target or space
    ring = space.ring
    p = ring.p
    mat = np.zeros((space.dim, target.dim), dtype=np.int64)
    for n, (s, mu) in enumerate(space.keys):
        new_key = (s, tuple(p * m for m in mu))
        if sum(new_key[1]) >= target.prec:
            continue
        idx = target.index.get(new_key)
        if idx is None:
            raise ValueError(f"C^-1 leaves the target space at {new_key}")
        mat[n, idx] = 1
    return mat


def b_filtration(ring: CoeffRing, d: int, q: int, prec: int, log_axes: Iterable[int],
                 steps: int) -> list[Subspace]:
    """[B_1, ..., B_steps] with B_1 = dΩ^{q-1}(log), B_{j+1} = B_j + C^{-1} B_j (truncated)."""
    space = FormSpace(ring, d, q, prec, log_axes)
    current = exact_subspace(ring, d, q, prec, log_axes, space)
    chain = [current]
    cmat = cartier_matrix(space)
    for _ in range(steps - 1):
        pushed = canonicalize((current.rows @ cmat) % ring.modulus, ring, space.dim)
        current = span_sum(current, pushed)
        chain.append(current)
    return chain


def b_infinity(ring: CoeffRing, d: int, q: int, prec: int, log_axes: Iterable[int],
               max_steps: int = 64) -> tuple[Subspace, int]:
    """Stabilized union B_∞ and the first index j with B_j = B_{j+1}."""
    space = FormSpace(ring, d, q, prec, log_axes)
    current = exact_subspace(ring, d, q, prec, log_axes, space)
    cmat = cartier_matrix(space)
    for j in range(1, max_steps + 1):
        pushed = canonicalize((current.rows @ cmat) % ring.modulus, ring, space.dim)
        nxt = span_sum(current, pushed)
        if nxt == current:
            return current, j
        current = nxt
    raise RuntimeError("B_j did not stabilize within the step budget")


# ---------------------------------------------------------------------------
# Log part (kernel of C^{-1} - 1 modulo exact forms)
# ---------------------------------------------------------------------------

def log_kernel(ring: CoeffRing, d: int, q: int, prec: int, log_axes: Iterable[int],
               twist: Sequence[int] | None = None, internal_prec: int | None = None,
               fixed_zero: Iterable[int] = ()) -> tuple[FormSpace, Subspace]:
    """{w in twisted forms : C^{-1}w - w ∈ dΩ^{q-1}(log)} at precision ``prec``.

    C^{-1} is evaluated exactly into a space of precision ``internal_prec``
    (default p·prec) and only then truncated to ``prec``.  ``fixed_zero``
    restricts to forms over the subring without those variables.
    """
    log_axes = frozenset(log_axes)
    p = ring.p
    internal_prec = internal_prec or p * prec
    twisted = FormSpace(ring, d, q, prec, log_axes, twist=twist, fixed_zero=fixed_zero)
    full = FormSpace(ring, d, q, prec, log_axes, fixed_zero=fixed_zero)
    if twisted.dim == 0:
        return twisted, zero_subspace(ring, 0)
    wide = FormSpace(ring, d, q, internal_prec, log_axes, fixed_zero=fixed_zero)
    raw = cartier_matrix(twisted, wide)
    keep = wide.sub_coordinates(full)
    cmat = raw[:, keep]
    ident = np.zeros((twisted.dim, full.dim), dtype=np.int64)
    for n, key in enumerate(twisted.keys):
        ident[n, full.index[key]] = 1
    defect = (cmat - ident) % ring.modulus
    if q == 0:
        exact_rows = np.zeros((0, full.dim), dtype=np.int64)
    else:
        src = FormSpace(ring, d, q - 1, prec, log_axes, fixed_zero=fixed_zero)
        exact_rows = d_matrix(src, full)
    # kernel of the map twisted -> full / exact : rows c with c·defect ∈ span(exact)
    stacked = np.vstack([defect, exact_rows])
    from .modlin import left_kernel
    relations = left_kernel(stacked, ring)
    coeffs = relations.rows[:, :twisted.dim] if relations.rank else np.zeros((0, twisted.dim), dtype=np.int64)
    return twisted, canonicalize(coeffs, ring, twisted.dim)


# ---------------------------------------------------------------------------
# ω-bases and the graded maps ρ
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OmegaBasisConvention:
    """ω_{i,s} (tilde=False) or ω̃_{i,s} (tilde=True) with axis i removed.

    b_j = dlog T_j for j < e (plain) or j < f (tilde), and dlog(1+T_j) otherwise.
    """

    axis: int
    e: int
    f: int
    tilde: bool = False

    @property
    def cut(self) -> int:
        return self.f if self.tilde else self.e

    def e_of(self, s: Subset) -> int:
        """Number of leading entries of s below e (the breakpoint e(s))."""
        return sum(1 for j in s if j < self.e)

    def f_of(self, s: Subset) -> int:
        """Number of leading entries of s below f (the breakpoint f(s))."""
        return sum(1 for j in s if j < self.f)

    def factor(self, ring: CoeffRing, d: int, s: Subset, prec: int) -> TruncSeries:
        """c_s with ω_s = c_s · dlog T_s, c_s = Π_{j∈s, j>=cut} T_j/(1+T_j)."""
        result = TruncSeries.one(ring, d, prec)
        for j in s:
            if j >= self.cut:
                t = TruncSeries.variable(ring, d, prec, j)
                result = result * t * invert_unit(TruncSeries.one(ring, d, prec) + t)
        return result

    def form(self, ring: CoeffRing, d: int, s: Subset, prec: int, log_axes: Iterable[int]) -> LogForm:
        if self.axis in s:
            raise ValueError("ω_{i,s} needs i ∉ s")
        coeff = self.factor(ring, d, s, prec)
        axes = frozenset(log_axes) | frozenset(j for j in s if j < self.cut)
        return LogForm(ring, d, len(s), prec, axes, {(tuple(s), e): c for e, c in coeff.coeffs.items()})

    def coordinates(self, x: LogForm) -> dict[Subset, TruncSeries]:
        """a_s with x = Σ a_s ω_s (x a form over R_axis)."""
        ring = x.ring
        out = {}
        grouped = _group_by_subset(x)
        for s, series in grouped.items():
            divisor = tuple(1 if (j in s and j >= self.cut) else 0 for j in range(x.d))
            shifted = {}
            for exps, c in series.coeffs.items():
                rest = tuple(a - b for a, b in zip(exps, divisor))
                if min(rest) < 0:
                    raise InvalidLogForm(f"x is not divisible by the ω_{s} pole factor")
                shifted[rest] = c
            prec = series.prec - sum(divisor)
            a_s = TruncSeries(ring, x.d, prec, shifted)
            for j in s:
                if j >= self.cut:
                    a_s = a_s * (TruncSeries.one(ring, x.d, prec) + TruncSeries.variable(ring, x.d, prec, j))
            out[s] = a_s
        return out


def _group_by_subset(x: LogForm) -> dict[Subset, TruncSeries]:
    grouped: dict[Subset, dict[MultiIndex, int]] = {}
    for (s, mu), c in x.terms.items():
        grouped.setdefault(s, {})[mu] = c
    return {s: TruncSeries(x.ring, x.d, x.prec, v) for s, v in sorted(grouped.items())}


def dlog_one_plus(a: TruncSeries, log_axes=frozenset()) -> LogForm:
    """dlog(1 + a) for a in the maximal ideal."""
    if a.constant_term():
        raise NotAUnit("dlog(1+a) expects a without constant term")
    return dlog_series_part(TruncSeries.one(a.ring, a.d, a.prec) + a, log_axes)


def axis_shift(d: int, axis: int, power: int) -> MultiIndex:
    return tuple(power if k == axis else 0 for k in range(d))


def _dlog_one_plus_shifted(a_s: TruncSeries, axis: int, power: int, prec: int, log_axes) -> LogForm:
    """dlog(1 + a_s T_axis^power), known in weights < min(prec, a_s.prec + power)."""
    shifted = a_s.shift(axis_shift(a_s.d, axis, power))
    return dlog_one_plus(shifted.truncate(min(shifted.prec, prec)), log_axes)


def clip(form: LogForm, prec: int) -> LogForm:
    """Truncate to ``prec`` when the form is known beyond it."""
    return form.truncate(prec) if form.prec > prec else form


RHO_CASES = (1, 2, 3, 4, 5, 6, 7)


def rho_case(axis: int, h: int, e: int, p: int) -> int:
    """Which case of the graded description applies to (axis, h) for A = Div(T_1..T_e)."""
    if axis < e:
        if h == 0:
            return 3
        return 2 if h % p == 0 else 1
    if h == 0:
        return 7
    if h % p == 0:
        return 4
    if (h + 1) % p == 0:
        return 6
    return 5


def _sum_dlog_terms(coords: Mapping[Subset, TruncSeries], omega: OmegaBasisConvention, axis: int,
                    power: int, prec: int, log_axes, ring, d, q, tail: LogForm | None = None) -> LogForm:
    total = LogForm.zero(ring, d, q, prec, log_axes)
    for s, a_s in coords.items():
        if a_s.is_zero():
            continue
        piece = _dlog_one_plus_shifted(a_s, axis, power, prec, log_axes)
        piece = wedge(piece, omega.form(ring, d, s, prec, log_axes))
        if tail is not None:
            piece = wedge(piece, tail)
        total = total + clip(piece, prec)
    return clip(total, prec)


def rho(case: int, axis: int, h: int, inputs: Mapping[str, LogForm], *, e: int, p: int, prec: int,
        ring: CoeffRing | None = None, d: int | None = None, q: int | None = None) -> LogForm:
    """The graded map of the given case applied to forms over R_axis.

    inputs keys: 'a', 'a_prime' ((q-1)-forms), 'b' ((q-2)-forms), 'w', 'w_prime' (log forms).
    The result is an actual q-form (not a class) at weight precision ``prec``.
    """
    expected = rho_case(axis, h, e, p)
    if case != expected:
        raise ValueError(f"(axis={axis + 1}, h={h}) belongs to case {expected}, not {case}")
    any_input = next(iter(inputs.values()))
    ring = ring or any_input.ring
    d = d or any_input.d
    if q is None:
        raise ValueError("pass the target degree q")
    log_axes = frozenset(range(e))
    omega = OmegaBasisConvention(axis, e, e, tilde=False)
    for name, form in inputs.items():
        if any(mu[axis] or axis in s for s, mu in form.terms):
            raise ValueError(f"input {name} is not a form over R_{axis + 1}")
    total = LogForm.zero(ring, d, q, prec, log_axes)

    def grab(name):
        return inputs.get(name)

    if case in (1, 2):
        if grab("a") is not None:
            total = total + _sum_dlog_terms(omega.coordinates(grab("a")), omega, axis, h, prec, log_axes, ring, d, q)
        if grab("b") is not None:
            if case == 1:
                raise ValueError("case 1 has no b-component (use beta)")
            tail = LogForm.dlog_coordinate(ring, d, prec, axis, log_axes)
            total = total + _sum_dlog_terms(omega.coordinates(grab("b")), omega, axis, h, prec, log_axes,
                                            ring, d, q, tail)
    elif case in (3, 7):
        w, w_prime = grab("w"), grab("w_prime")
        if w is not None:
            total = total + clip(w, prec)
        if w_prime is not None:
            if case == 3:
                tail = LogForm.dlog_coordinate(ring, d, prec, axis, log_axes)
            else:
                tail = dlog_one_plus(TruncSeries.variable(ring, d, prec, axis), log_axes)
            total = total + clip(wedge(w_prime, tail), prec)
    elif case in (4, 5):
        if grab("a_prime") is not None:
            total = total + _sum_dlog_terms(omega.coordinates(grab("a_prime")), omega, axis, h + 1, prec,
                                            log_axes, ring, d, q)
        if grab("a") is not None:
            if case == 5:
                raise ValueError("case 5 only has the a' component")
            total = total + _sum_dlog_terms(omega.coordinates(grab("a")), omega, axis, h, prec, log_axes, ring, d, q)
    elif case == 6:
        if grab("b") is not None and q >= 2:
            tail = dlog_one_plus(TruncSeries.variable(ring, d, prec, axis), log_axes)
            total = total + _sum_dlog_terms(omega.coordinates(grab("b")), omega, axis, h, prec, log_axes,
                                            ring, d, q, tail)
    return total


def beta(case: int, axis: int, h: int, b: LogForm, *, e: int, p: int, prec: int, q: int) -> LogForm:
    """β of the short exact sequences in cases 1, 4 and 5."""
    ring, d = b.ring, b.d
    log_axes = frozenset(range(e))
    omega = OmegaBasisConvention(axis, e, e, tilde=False)
    if case == 1:
        tail = LogForm.dlog_coordinate(ring, d, prec, axis, log_axes)
    elif case in (4, 5):
        tail = dlog_one_plus(TruncSeries.variable(ring, d, prec, axis), log_axes)
    else:
        raise ValueError("β is only defined in cases 1, 4 and 5")
    return _sum_dlog_terms(omega.coordinates(b), omega, axis, h, prec, log_axes, ring, d, q, tail)


# ---------------------------------------------------------------------------
# Subspaces of a coordinatized form space
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FormSubspace:
    """A Subspace together with the FormSpace giving its coordinates."""

    space: FormSpace
    sub: Subspace

    @property
    def dim(self) -> int:
        return self.sub.rank

    def contains(self, form: LogForm) -> bool:
        return self.space.contains(self.sub, form)

    def forms(self) -> list[LogForm]:
        return [self.space.form(r) for r in self.sub.rows]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FormSubspace):
            return NotImplemented
        return self.space.keys == other.space.keys and self.sub == other.sub

    def __hash__(self):
        return hash(self.sub)

    def within(self, space: FormSpace) -> "FormSubspace":
        """Re-express inside a larger space containing every key of self.space."""
        if space.keys == self.space.keys:
            return self
        rows = space.embed_matrix(self.space, np.asarray(self.sub.rows))
        return FormSubspace(space, canonicalize(rows, space.ring, space.dim))

    def missing_from(self, other: "FormSubspace", limit: int = 3) -> list[LogForm]:
        """Canonical basis forms of self that are not in other (witnesses)."""
        out = []
        for row in self.sub.rows:
            form = self.space.form(row)
            if not other.contains(form):
                out.append(form)
                if len(out) >= limit:
                    break
        return out


def span_of_forms(space: FormSpace, forms: Sequence[LogForm]) -> FormSubspace:
    return FormSubspace(space, space.span(forms))
