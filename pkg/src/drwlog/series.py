"""Truncated multivariate power series k[[T1..Td]] / m^N and localized units.

A series stores coefficients of monomials T^a with total degree |a| < prec.
Binary operations return the minimum precision of their inputs; Frobenius
multiplies the precision by p.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Mapping

from .modlin import CoeffRing, DimensionMismatch

MultiIndex = tuple[int, ...]


class NotAUnit(ArithmeticError):
    """Raised when inverting a series whose constant term is not a unit."""


def graded_lex_key(exps: MultiIndex):
    """Order by total degree, then lexicographically with T1 > T2 > ...."""
    return (sum(exps), tuple(-e for e in exps))


def monomials_below(d: int, bound: int) -> Iterator[MultiIndex]:
    """All exponent vectors of total degree < bound, in graded-lex order."""
    out = []
    for total in range(bound):
        out.extend(_compositions(total, d))
    return iter(sorted(out, key=graded_lex_key))


def _compositions(total: int, parts: int) -> list[MultiIndex]:
    if parts == 0:
        return [()] if total == 0 else []
    if parts == 1:
        return [(total,)]
    result = []
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            result.append((first,) + rest)
    return result


def add_index(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def dominates(a: MultiIndex, b: MultiIndex) -> bool:
    """a >= b componentwise."""
    return all(x >= y for x, y in zip(a, b))


@dataclass(frozen=True, eq=False)
class TruncSeries:
    """Element of k[[T1..Td]] known modulo total degree >= prec."""

    ring: CoeffRing
    d: int
    prec: int
    coeffs: Mapping[MultiIndex, int]

    def __post_init__(self):
        clean = {}
        for exps, c in self.coeffs.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.d:
                raise DimensionMismatch(f"exponent {exps} has wrong length for d={self.d}")
            if min(exps, default=0) < 0:
                raise ValueError("negative exponent in a power series")
            if sum(exps) >= self.prec:
                continue
            c = self.ring.normalize(int(c)) if self.ring.degree > 1 else int(c) % self.ring.modulus
            if c:
                clean[exps] = c
        object.__setattr__(self, "coeffs", dict(sorted(clean.items(), key=lambda kv: graded_lex_key(kv[0]))))

    # constructors --------------------------------------------------------
    @classmethod
    def zero(cls, ring: CoeffRing, d: int, prec: int) -> "TruncSeries":
        return cls(ring, d, prec, {})

    @classmethod
    def constant(cls, ring: CoeffRing, d: int, prec: int, value: int) -> "TruncSeries":
        return cls(ring, d, prec, {(0,) * d: value})

    @classmethod
    def one(cls, ring: CoeffRing, d: int, prec: int) -> "TruncSeries":
        return cls.constant(ring, d, prec, 1)

    @classmethod
    def monomial(cls, ring: CoeffRing, d: int, prec: int, exps: Iterable[int], coeff: int = 1) -> "TruncSeries":
        return cls(ring, d, prec, {tuple(exps): coeff})

    @classmethod
    def variable(cls, ring: CoeffRing, d: int, prec: int, axis: int) -> "TruncSeries":
        exps = [0] * d
        exps[axis] = 1
        return cls.monomial(ring, d, prec, exps)

    # basic queries --------------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncSeries):
            return NotImplemented
        return (self.ring == other.ring and self.d == other.d and self.prec == other.prec
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.ring, self.d, self.prec, tuple(self.coeffs.items())))

    def agrees_with(self, other: "TruncSeries", prec: int | None = None) -> bool:
        """Equality modulo degree >= prec (default: the smaller precision)."""
        self._check(other)
        bound = min(self.prec, other.prec) if prec is None else prec
        return self.truncate(bound).coeffs == other.truncate(bound).coeffs

    def is_zero(self) -> bool:
        return not self.coeffs

    def constant_term(self) -> int:
        return self.coeffs.get((0,) * self.d, 0)

    def coefficient(self, exps: Iterable[int]) -> int:
        return self.coeffs.get(tuple(exps), 0)

    def min_degree(self) -> int | None:
        return min((sum(e) for e in self.coeffs), default=None)

    def truncate(self, prec: int) -> "TruncSeries":
        if prec > self.prec:
            raise ValueError(f"cannot raise precision from {self.prec} to {prec}")
        return TruncSeries(self.ring, self.d, prec, self.coeffs)

    def with_prec(self, prec: int) -> "TruncSeries":
        """Reinterpret with a different bound (raising only for exact polynomials)."""
        return TruncSeries(self.ring, self.d, prec, self.coeffs)

    def _check(self, other: "TruncSeries"):
        if not isinstance(other, TruncSeries):
            raise TypeError("expected a TruncSeries")
        if self.d != other.d or self.ring != other.ring:
            raise DimensionMismatch("series over different rings or dimensions")

    # arithmetic -----------------------------------------------------------
    def __add__(self, other: "TruncSeries") -> "TruncSeries":
        self._check(other)
        out = dict(self.coeffs)
        ring = self.ring
        for exps, c in other.coeffs.items():
            out[exps] = ring.add(out.get(exps, 0), c)
        return TruncSeries(ring, self.d, min(self.prec, other.prec), out)

    def __neg__(self) -> "TruncSeries":
        return TruncSeries(self.ring, self.d, self.prec, {e: self.ring.neg(c) for e, c in self.coeffs.items()})

    def __sub__(self, other: "TruncSeries") -> "TruncSeries":
        return self + (-other)

    def scale(self, k: int) -> "TruncSeries":
        """Multiply by a ring element (encoded integer)."""
        ring = self.ring
        return TruncSeries(ring, self.d, self.prec, {e: ring.mul(k, c) for e, c in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale(self.ring.from_int(other))
        return mul(self, other)

    __rmul__ = __mul__

    def shift(self, exps: MultiIndex) -> "TruncSeries":
        """Multiply by the monomial T^exps (precision rises by |exps|)."""
        return TruncSeries(self.ring, self.d, self.prec + sum(exps),
                           {add_index(e, exps): c for e, c in self.coeffs.items()})

    def power(self, k: int) -> "TruncSeries":
        result = TruncSeries.one(self.ring, self.d, self.prec)
        base = self
        while k:
            if k & 1:
                result = mul(result, base)
            base = mul(base, base)
            k >>= 1
        return result

    def partial(self, axis: int) -> "TruncSeries":
        """Formal derivative along T_axis (precision drops by one)."""
        ring = self.ring
        out = {}
        for exps, c in self.coeffs.items():
            if exps[axis]:
                new = list(exps)
                new[axis] -= 1
                out[tuple(new)] = ring.mul(ring.from_int(exps[axis]), c)
        return TruncSeries(ring, self.d, max(self.prec - 1, 0), out)

    def restrict_axis_zero(self, axis: int) -> "TruncSeries":
        """Image under T_axis -> 0."""
        return TruncSeries(self.ring, self.d, self.prec, {e: c for e, c in self.coeffs.items() if e[axis] == 0})

    def axis_coefficient(self, axis: int, power: int) -> "TruncSeries":
        """Coefficient of T_axis^power as a series in the other variables (axis exponent 0)."""
        out = {}
        for exps, c in self.coeffs.items():
            if exps[axis] == power:
                new = list(exps)
                new[axis] = 0
                out[tuple(new)] = c
        return TruncSeries(self.ring, self.d, max(self.prec - power, 0), out)

    def map_coefficients(self, fn) -> "TruncSeries":
        return TruncSeries(self.ring, self.d, self.prec, {e: fn(c) for e, c in self.coeffs.items()})

    # text -----------------------------------------------------------------
    def to_text(self) -> str:
        return format_series(self)

    def __repr__(self) -> str:
        return f"TruncSeries({format_series(self)} + O({self.prec}))"


def mul(a: TruncSeries, b: TruncSeries) -> TruncSeries:
    """Product at precision min(a.prec, b.prec)."""
    a._check(b)
    prec = min(a.prec, b.prec)
    ring = a.ring
    out: dict[MultiIndex, int] = {}
    items_b = list(b.coeffs.items())
    if ring.degree == 1:
        modulus = ring.modulus
        for ea, ca in a.coeffs.items():
            da = sum(ea)
            for eb, cb in items_b:
                if da + sum(eb) >= prec:
                    continue
                key = tuple(x + y for x, y in zip(ea, eb))
                out[key] = (out.get(key, 0) + ca * cb) % modulus
    else:
        for ea, ca in a.coeffs.items():
            da = sum(ea)
            for eb, cb in items_b:
                if da + sum(eb) >= prec:
                    continue
                key = tuple(x + y for x, y in zip(ea, eb))
                out[key] = ring.add(out.get(key, 0), ring.mul(ca, cb))
    return TruncSeries(ring, a.d, prec, out)


def invert_unit(u: TruncSeries) -> TruncSeries:
    """Inverse of a unit by the geometric series in the non-constant part."""
    ring = u.ring
    const = u.constant_term()
    if not ring.is_unit(const):
        raise NotAUnit(f"constant term {const} is not a unit in {ring}")
    c_inv = ring.inv(const)
    normalized = u.scale(c_inv)
    nilpotent = normalized - TruncSeries.one(ring, u.d, u.prec)
    result = TruncSeries.one(ring, u.d, u.prec)
    term = TruncSeries.one(ring, u.d, u.prec)
    neg_nil = -nilpotent
    for _ in range(max(u.prec, 1)):
        term = mul(term, neg_nil)
        if term.is_zero():
            break
        result = result + term
    return result.scale(c_inv)


def frobenius(a: TruncSeries) -> TruncSeries:
    """a^p computed coefficientwise (freshman's dream); precision p·N."""
    ring = a.ring
    if not ring.is_field:
        raise ValueError("frobenius on series needs field coefficients")
    p = ring.p
    return TruncSeries(ring, a.d, p * a.prec,
                       {tuple(p * x for x in e): ring.frob(c) for e, c in a.coeffs.items()})


def ideal_member(a: TruncSeries, r: Iterable[int]) -> bool:
    """True iff every stored monomial of a is divisible by T^r."""
    r = tuple(r)
    if len(r) != a.d:
        raise DimensionMismatch("exponent vector length differs from d")
    return all(dominates(e, r) for e in a.coeffs)


def unit_factor_decompose(u: TruncSeries, axis: int) -> list[tuple[int, TruncSeries]]:
    """Factors (l, a_l) with u = prod_l (1 - a_l T_axis^l) at precision u.prec.

    Requires u ≡ 1 modulo T_axis.  Each a_l is a series in the other variables,
    found by greedily peeling the lowest remaining power of T_axis.
    """
    ring = u.ring
    if not 0 <= axis < u.d:
        raise ValueError(f"axis {axis} out of range")
    if u.restrict_axis_zero(axis) != TruncSeries.one(ring, u.d, u.prec):
        raise ValueError("unit_factor_decompose needs u ≡ 1 mod T_axis")
    factors = []
    remainder = u
    one = TruncSeries.one(ring, u.d, u.prec)
    for level in range(1, u.prec):
        coeff = remainder.axis_coefficient(axis, level)
        if coeff.is_zero():
            continue
        a_level = (-coeff).with_prec(u.prec - level)
        shifted = a_level.shift(tuple(level if k == axis else 0 for k in range(u.d))).with_prec(u.prec)
        factor = one - shifted
        remainder = mul(remainder, invert_unit(factor))
        factors.append((level, a_level))
    return factors


def split_unit_along_axis(u: TruncSeries, axis: int) -> tuple[TruncSeries, list[tuple[int, TruncSeries]]]:
    """u = u0 · prod (1 - a_l T^l) with u0 the restriction T_axis = 0."""
    u0 = u.restrict_axis_zero(axis)
    rest = mul(u, invert_unit(u0))
    return u0, unit_factor_decompose(rest, axis)


# ---------------------------------------------------------------------------
# Localized units
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LocalizedUnit:
    """The unit u·T^z of R[1/T_i : z_i may be nonzero]."""

    unit: TruncSeries
    z: MultiIndex

    def __post_init__(self):
        z = tuple(int(x) for x in self.z)
        if len(z) != self.unit.d:
            raise DimensionMismatch("monomial exponent has wrong length")
        object.__setattr__(self, "z", z)
        if not self.unit.ring.is_unit(self.unit.constant_term()):
            raise NotAUnit("unit part has non-invertible constant term")

    @classmethod
    def from_series(cls, unit: TruncSeries) -> "LocalizedUnit":
        return cls(unit, (0,) * unit.d)

    @classmethod
    def coordinate(cls, ring: CoeffRing, d: int, prec: int, axis: int, power: int = 1) -> "LocalizedUnit":
        z = [0] * d
        z[axis] = power
        return cls(TruncSeries.one(ring, d, prec), tuple(z))

    @property
    def d(self) -> int:
        return self.unit.d

    @property
    def inverted_axes(self) -> frozenset[int]:
        return frozenset(i for i, zi in enumerate(self.z) if zi)

    def __mul__(self, other: "LocalizedUnit") -> "LocalizedUnit":
        return LocalizedUnit(mul(self.unit, other.unit), add_index(self.z, other.z))

    def inverse(self) -> "LocalizedUnit":
        return LocalizedUnit(invert_unit(self.unit), tuple(-x for x in self.z))

    def __eq__(self, other):
        if not isinstance(other, LocalizedUnit):
            return NotImplemented
        return self.z == other.z and self.unit == other.unit

    def __hash__(self):
        return hash((self.unit, self.z))

    def to_text(self) -> str:
        mono = "*".join(f"T{i + 1}^{zi}" if zi != 1 else f"T{i + 1}" for i, zi in enumerate(self.z) if zi)
        body = format_series(self.unit)
        if not mono:
            return body
        if body == "1":
            return mono
        return f"{mono}*({body})"

    def __repr__(self):
        return f"LocalizedUnit({self.to_text()})"


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def format_monomial(exps: MultiIndex) -> str:
    return "*".join(f"T{i + 1}^{e}" for i, e in enumerate(exps) if e)


def format_series(a: TruncSeries) -> str:
    """Sum of ``c*T1^a1*...`` terms in graded-lex order; ``0`` for zero."""
    if not a.coeffs:
        return "0"
    parts = []
    for exps, c in a.coeffs.items():
        mono = format_monomial(exps)
        parts.append(f"{c}*{mono}" if mono else f"{c}")
    return " + ".join(parts)


_TERM_RE = re.compile(r"^\s*(\d+)?\s*(\*?\s*T\d+(\s*\^\s*\d+)?(\s*\*\s*T\d+(\s*\^\s*\d+)?)*)?\s*$")
_FACTOR_RE = re.compile(r"T(\d+)(?:\s*\^\s*(\d+))?")


def parse_series(text: str, ring: CoeffRing, d: int, prec: int) -> TruncSeries:
    """Inverse of ``format_series`` (accepts the same restricted syntax)."""
    text = text.strip()
    if text == "0":
        return TruncSeries.zero(ring, d, prec)
    coeffs: dict[MultiIndex, int] = {}
    for raw in text.split("+"):
        term = raw.strip()
        if not term or not _TERM_RE.match(term):
            raise ValueError(f"malformed series term {raw!r}")
        coeff_match = re.match(r"^(\d+)", term)
        coeff = int(coeff_match.group(1)) if coeff_match else 1
        rest = term[coeff_match.end():] if coeff_match else term
        exps = [0] * d
        for var, power in _FACTOR_RE.findall(rest):
            axis = int(var) - 1
            if not 0 <= axis < d:
                raise ValueError(f"variable T{var} out of range for d={d}")
            exps[axis] += int(power) if power else 1
        key = tuple(exps)
        coeffs[key] = ring.add(coeffs.get(key, 0), ring.normalize(coeff) if ring.degree > 1 else coeff)
    return TruncSeries(ring, d, prec, coeffs)


def all_series(ring: CoeffRing, d: int, prec: int) -> Iterator[TruncSeries]:
    """Every series at this size (tiny oracle enumerations only)."""
    monos = list(monomials_below(d, prec))
    for values in product(ring.elements(), repeat=len(monos)):
        yield TruncSeries(ring, d, prec, dict(zip(monos, values)))
