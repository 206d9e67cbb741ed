"""Witt vectors over truncated series and a level-2 de Rham-Witt model.

Witt vectors
------------
W_n(A) for A = F_p[[T_1..T_d]] / (weights >= prec), with sum and product given
by integer structure polynomials obtained from the ghost recursion.

Level-2 de Rham-Witt forms
--------------------------
W_2Ω^q(log L) of the same ring, in a weight-graded normal form.  A weight is
w = W/p with W ∈ N^d (the "scaled weight").  Basis keys:

  ("I", s, μ)   T^μ dlog T_s, integral weight μ = W/p, coefficient in Z/p²;
  ("V", s, W)   V(T^W dlog T_s), fractional weight (p ∤ W), coefficient in F_p;
  ("dV", t, W)  dV(T^W dlog T_t), fractional weight, coefficient in F_p;

where s, t avoid j0(W), the first axis with p ∤ W_j.  At a fractional weight
the level-1 complex is the Koszul complex of θ = Σ W_j dlog T_j, so B = Z = θ∧Ω
there and V(T^W θ∧ω) = V d(T^W ω) = p dV(T^W ω) = 0: terms containing dlog T_{j0}
are rewritten modulo θ.  Products follow V(x)·y = V(x·F y), F dV = d, FV = p and
the Leibniz rule.  Weights are truncated at w < prec.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np
import sympy

from .forms import LogForm, d_key, merge_sign
from .modlin import CoeffRing, Subspace, canonicalize, intersect, left_kernel, span_sum
from .series import LocalizedUnit, TruncSeries, ideal_member, invert_unit, monomials_below


class SizeClampExceeded(ValueError):
    """Requested level-2 model exceeds the supported sizes."""


MAX_D, MAX_LEVEL, MAX_N, SUPPORTED_P = 2, 2, 6, (2, 3)


def check_clamp(p: int, d: int, n: int, N: int) -> None:
    problems = []
    if p not in SUPPORTED_P:
        problems.append(f"p={p} not in {SUPPORTED_P}")
    if d > MAX_D:
        problems.append(f"d={d} > {MAX_D}")
    if n > MAX_LEVEL:
        problems.append(f"n={n} > {MAX_LEVEL}")
    if N > MAX_N:
        problems.append(f"N={N} > {MAX_N}")
    if problems:
        raise SizeClampExceeded("level-2 model size clamp: " + "; ".join(problems))


# ===========================================================================
# Witt structure polynomials
# ===========================================================================

Poly = dict  # exponent tuple over (X_0..X_{n-1}, Y_0..Y_{n-1}) -> integer


@dataclass(frozen=True, eq=False)
class WittPolyTable:
    """Sum and product polynomials S_k, P_k (integer coefficients), k < n."""

    p: int
    n: int
    S: tuple[Poly, ...]
    P: tuple[Poly, ...]

    def reduced(self, which: str, k: int) -> list[tuple[tuple[int, ...], int]]:
        """Terms of S_k or P_k with coefficients reduced mod p (zeros dropped)."""
        return _reduced_terms(self.p, self.n, which, k)


@lru_cache(maxsize=None)
def _reduced_terms(p: int, n: int, which: str, k: int):
    table = witt_table(p, n)
    poly = (table.S if which == "S" else table.P)[k]
    return [(exps, c % table.p) for exps, c in sorted(poly.items()) if c % table.p]


def _ghost_poly(variables, k: int, p: int):
    return sum(p**i * variables[i] ** (p ** (k - i)) for i in range(k + 1))


@lru_cache(maxsize=None)
def witt_table(p: int, n: int) -> WittPolyTable:
    """Structure polynomials by the ghost recursion over Z (exact division checked)."""
    xs = sympy.symbols(f"X0:{n}")
    ys = sympy.symbols(f"Y0:{n}")
    gens = xs + ys

    def build(combine) -> list[sympy.Poly]:
        out: list[sympy.Poly] = []
        for k in range(n):
            target = sympy.Poly(combine(_ghost_poly(xs, k, p), _ghost_poly(ys, k, p)), *gens, domain=sympy.ZZ)
            for i in range(k):
                target -= out[i] ** (p ** (k - i)) * p**i
            out.append(target.exquo_ground(p**k))
        return out

    sums = build(lambda a, b: a + b)
    prods = build(lambda a, b: a * b)
    as_dict = lambda polys: tuple({tuple(m): int(c) for m, c in poly.terms()} for poly in polys)
    return WittPolyTable(p, n, as_dict(sums), as_dict(prods))


def _eval_int(poly: Poly, values: Sequence[int]) -> int:
    total = 0
    for exps, c in poly.items():
        term = c
        for v, e in zip(values, exps):
            if e:
                term *= v**e
        total += term
    return total


def ghost_component(values: Sequence[int], k: int, p: int) -> int:
    return sum(p**i * values[i] ** (p ** (k - i)) for i in range(k + 1))


def ghost_identities_hold(table: WittPolyTable, samples: int = 20, seed: int = 0, bound: int = 50) -> bool:
    """w_k(S(x,y)) = w_k(x) + w_k(y) and w_k(P(x,y)) = w_k(x) w_k(y) on random integer lifts."""
    rng = random.Random(seed)
    p, n = table.p, table.n
    for _ in range(samples):
        x = [rng.randint(-bound, bound) for _ in range(n)]
        y = [rng.randint(-bound, bound) for _ in range(n)]
        s = [_eval_int(table.S[k], x + y) for k in range(n)]
        m = [_eval_int(table.P[k], x + y) for k in range(n)]
        for k in range(n):
            gx, gy = ghost_component(x, k, p), ghost_component(y, k, p)
            if ghost_component(s, k, p) != gx + gy or ghost_component(m, k, p) != gx * gy:
                return False
    return True


def integer_witt_coordinates(m: int, p: int, n: int) -> tuple[int, ...]:
    """Witt coordinates of the integer m (ghost components all equal to m), reduced mod p."""
    coords: list[int] = []
    for k in range(n):
        rest = m - sum(p**i * coords[i] ** (p ** (k - i)) for i in range(k))
        if rest % p**k:
            raise ArithmeticError("ghost recursion is not integral")  # pragma: no cover
        coords.append(rest // p**k)
    return tuple(c % p for c in coords)


# ===========================================================================
# Witt vectors over truncated series
# ===========================================================================

@dataclass(frozen=True, eq=False)
class WittVector:
    """(x_0, ..., x_{n-1}) with x_k truncated series over F_p of a common precision."""

    coords: tuple[TruncSeries, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        if not self.coords:
            raise ValueError("empty Witt vector")
        first = self.coords[0]
        for x in self.coords[1:]:
            if (x.ring, x.d, x.prec) != (first.ring, first.d, first.prec):
                raise ValueError("Witt coordinates must share ring, d and precision")
        if not first.ring.is_prime_field:
            raise ValueError("Witt vectors are implemented over F_p")

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def p(self) -> int:
        return self.coords[0].ring.p

    @property
    def base(self) -> TruncSeries:
        return self.coords[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, WittVector) and self.n == other.n and all(
            a == b for a, b in zip(self.coords, other.coords))

    def __hash__(self):
        return hash(self.coords)

    def __add__(self, other: "WittVector") -> "WittVector":
        return witt_add(self, other)

    def __mul__(self, other: "WittVector") -> "WittVector":
        return witt_mul(self, other)

    def __neg__(self) -> "WittVector":
        return witt_mul(witt_from_int(-1, self.base, self.n), self)

    def __sub__(self, other: "WittVector") -> "WittVector":
        return witt_add(self, -other)

    def is_zero(self) -> bool:
        return all(x.is_zero() for x in self.coords)

    def to_text(self) -> str:
        return "(" + ", ".join(x.to_text() for x in self.coords) + ")"


def _check_pair(a: WittVector, b: WittVector):
    if a.n != b.n:
        raise ValueError(f"Witt length mismatch: {a.n} vs {b.n}")
    if (a.base.d, a.base.prec, a.p) != (b.base.d, b.base.prec, b.p):
        raise ValueError("Witt vectors over different rings")


def _evaluate(table: WittPolyTable, which: str, a: WittVector, b: WittVector) -> WittVector:
    values = a.coords + b.coords
    powers: dict[tuple[int, int], TruncSeries] = {}

    def power(i: int, e: int) -> TruncSeries:
        if (i, e) not in powers:
            powers[(i, e)] = values[i].power(e)
        return powers[(i, e)]

    zero = TruncSeries.zero(a.base.ring, a.base.d, a.base.prec)
    out = []
    for k in range(a.n):
        total = zero
        for exps, c in table.reduced(which, k):
            term = None
            for i, e in enumerate(exps):
                if e:
                    factor = power(i, e)
                    term = factor if term is None else term * factor
            term = TruncSeries.one(a.base.ring, a.base.d, a.base.prec) if term is None else term
            total = total + term.scale(c)
        out.append(total)
    return WittVector(tuple(out))


def witt_add(a: WittVector, b: WittVector) -> WittVector:
    _check_pair(a, b)
    return _evaluate(witt_table(a.p, a.n), "S", a, b)


def witt_mul(a: WittVector, b: WittVector) -> WittVector:
    _check_pair(a, b)
    return _evaluate(witt_table(a.p, a.n), "P", a, b)


def teichmuller(x: TruncSeries, n: int) -> WittVector:
    zero = TruncSeries.zero(x.ring, x.d, x.prec)
    return WittVector((x,) + (zero,) * (n - 1))


def witt_zero(like: TruncSeries, n: int) -> WittVector:
    return teichmuller(TruncSeries.zero(like.ring, like.d, like.prec), n)


def witt_from_int(m: int, like: TruncSeries, n: int) -> WittVector:
    """Image of the integer m in W_n(A) (coordinates from the integer ghost oracle)."""
    coords = integer_witt_coordinates(m, like.ring.p, n)
    return WittVector(tuple(TruncSeries.constant(like.ring, like.d, like.prec, c) for c in coords))


def witt_F(a: WittVector) -> WittVector:
    """F: W_n -> W_{n-1}, coordinatewise p-th power followed by restriction."""
    if a.n < 2:
        raise ValueError("F needs level >= 2")
    return WittVector(tuple(x.power(a.p) for x in a.coords[:-1]))


def witt_V(a: WittVector) -> WittVector:
    """V: W_n -> W_{n+1}."""
    return WittVector((TruncSeries.zero(a.base.ring, a.base.d, a.base.prec),) + a.coords)


def witt_R(a: WittVector) -> WittVector:
    """R: W_n -> W_{n-1}, drop the last coordinate."""
    if a.n < 2:
        raise ValueError("R needs level >= 2")
    return WittVector(a.coords[:-1])


def witt_scalar(m: int, a: WittVector) -> WittVector:
    """m·a by repeated addition (m >= 0)."""
    total = witt_zero(a.base, a.n)
    for _ in range(m):
        total = witt_add(total, a)
    return total


def witt_ideal_member(a: WittVector, divisor: Iterable[int]) -> bool:
    """a ∈ [T^D]·W_n(A): since [t](b_0, b_1, ...) = (t b_0, t^p b_1, ...), coordinate k must lie in (T^{p^k D})."""
    D = tuple(int(x) for x in getattr(divisor, "mult", divisor))
    return all(ideal_member(x, tuple(a.p**k * m for m in D)) for k, x in enumerate(a.coords))


def witt_ideal_member_bruteforce(a: WittVector, divisor: Iterable[int]) -> bool:
    """Enumerate [T^D]·b over all b ∈ W_n(A) (tiny sizes only)."""
    D = tuple(int(x) for x in getattr(divisor, "mult", divisor))
    base = a.base
    monos = list(monomials_below(base.d, base.prec))
    count = base.ring.p ** (len(monos) * a.n)
    if count > 200_000:
        raise SizeClampExceeded("brute-force span too large")
    generator = teichmuller(TruncSeries.monomial(base.ring, base.d, base.prec, D, 1), a.n)
    digits = base.ring.p
    for code in range(count):
        coords = []
        for _ in range(a.n):
            coeffs = {}
            for mono in monos:
                code, c = divmod(code, digits)
                if c:
                    coeffs[mono] = c
            coords.append(TruncSeries(base.ring, base.d, base.prec, coeffs))
        if witt_mul(generator, WittVector(tuple(coords))) == a:
            return True
    return False


def witt_to_integer(a: WittVector) -> int:
    """Inverse of the counting map Z/p^n -> W_n(F_p) ⊂ W_n(A) (constant vectors only)."""
    for m in range(a.p**a.n):
        if witt_from_int(m, a.base, a.n) == a:
            return m
    raise ValueError("not in the image of Z")


def random_witt_vector(rng: random.Random, p: int, d: int, prec: int, n: int, density: float = 0.5) -> WittVector:
    ring = CoeffRing(p)
    coords = []
    for _ in range(n):
        coeffs = {m: rng.randrange(1, p) for m in monomials_below(d, prec) if rng.random() < density}
        coords.append(TruncSeries(ring, d, prec, coeffs))
    return WittVector(tuple(coords))


# ===========================================================================
# Level-2 de Rham-Witt forms
# ===========================================================================

DKey = tuple  # ("I", s, mu) | ("V", s, W) | ("dV", t, W)


@dataclass(frozen=True)
class _Ctx:
    p: int
    d: int
    prec: int
    log_axes: frozenset

    @property
    def p2(self) -> int:
        return self.p * self.p


def _j0(W: Sequence[int], p: int) -> int:
    for j, w in enumerate(W):
        if w % p:
            return j
    return -1


def _divisible(W: Sequence[int], p: int) -> bool:
    return all(w % p == 0 for w in W)


def _mod_theta(s: tuple, W: tuple, c: int, p: int) -> list[tuple[tuple, int]]:
    """T^W dlog T_s modulo θ = Σ W_j dlog T_j, with dlog T_{j0} eliminated."""
    j0 = _j0(W, p)
    if j0 not in s:
        return [(s, c % p)]
    rest = tuple(x for x in s if x != j0)
    sign0, _ = merge_sign((j0,), rest)
    inv = pow(W[j0], -1, p)
    out = []
    for j, w in enumerate(W):
        if j == j0 or w % p == 0:
            continue
        merged = merge_sign((j,), rest)
        if merged is None:
            continue
        sign1, s2 = merged
        out.append((s2, (-sign0 * sign1 * inv * w * c) % p))
    return out


def _add_int(ctx: _Ctx, out: dict, s: tuple, mu: tuple, c: int) -> None:
    if sum(mu) >= ctx.prec:
        return
    key = ("I", s, mu)
    out[key] = (out.get(key, 0) + c) % ctx.p2


def _add_frac(ctx: _Ctx, out: dict, kind: str, s: tuple, W: tuple, c: int) -> None:
    if sum(W) >= ctx.p * ctx.prec or c % ctx.p == 0:
        return
    for s2, c2 in _mod_theta(s, W, c, ctx.p):
        key = (kind, s2, W)
        out[key] = (out.get(key, 0) + c2) % ctx.p


def _add_V(ctx: _Ctx, out: dict, s: tuple, W: tuple, c: int) -> None:
    """V(c T^W dlog T_s) for a level-1 term."""
    if _divisible(W, ctx.p):
        _add_int(ctx, out, s, tuple(w // ctx.p for w in W), ctx.p * c)
    else:
        _add_frac(ctx, out, "V", s, W, c)


def _add_dV(ctx: _Ctx, out: dict, t: tuple, W: tuple, c: int) -> None:
    """dV(c T^W dlog T_t) for a level-1 term."""
    p = ctx.p
    if _divisible(W, p):
        mu = tuple(w // p for w in W)
        for (s2, _), k in d_key((t, mu), ctx.d):
            _add_int(ctx, out, s2, mu, p * c * k)
    else:
        _add_frac(ctx, out, "dV", t, W, c)


def key_degree(key: DKey) -> int:
    return len(key[1]) + (1 if key[0] == "dV" else 0)


def scaled_weight(key: DKey, p: int) -> tuple[int, ...]:
    return tuple(p * m for m in key[2]) if key[0] == "I" else key[2]


def orbit_of(W: Sequence[int], p: int) -> tuple[int, ...]:
    """Representative of {W, pW, p²W, ...}: strip the common factors of p."""
    W = tuple(W)
    if not any(W):
        return W
    while _divisible(W, p):
        W = tuple(w // p for w in W)
    return W


def _mul_terms(ctx: _Ctx, out: dict, ka: DKey, ca: int, kb: DKey, cb: int) -> None:
    """Accumulate (ca·ka) ∧ (cb·kb) into out."""
    kind_a, kind_b = ka[0], kb[0]
    p = ctx.p
    if kind_a == "I" and kind_b == "I":
        merged = merge_sign(ka[1], kb[1])
        if merged:
            sign, s = merged
            _add_int(ctx, out, s, tuple(x + y for x, y in zip(ka[2], kb[2])), sign * ca * cb)
        return
    if kind_a == "V" and kind_b == "V":
        return  # V(x)V(y) = V(x·FV y) = pV(xy) = 0
    if kind_a == "I" and kind_b == "V":
        merged = merge_sign(ka[1], kb[1])
        if merged:
            sign, s = merged
            _add_V(ctx, out, s, tuple(p * x + y for x, y in zip(ka[2], kb[2])), sign * ca * cb)
        return
    if kind_a == "V" and kind_b == "I":
        merged = merge_sign(ka[1], kb[1])
        if merged:
            sign, s = merged
            _add_V(ctx, out, s, tuple(x + p * y for x, y in zip(ka[2], kb[2])), sign * ca * cb)
        return
    if kind_a == "V" and kind_b == "dV":
        # V(x) dV(y) = V(x dy)
        for (s2, _), k in d_key((kb[1], kb[2]), ctx.d):
            merged = merge_sign(ka[1], s2)
            if merged:
                sign, s = merged
                _add_V(ctx, out, s, tuple(x + y for x, y in zip(ka[2], kb[2])), sign * k * ca * cb)
        return
    if kind_a == "dV" and kind_b == "V":
        sign = -1 if (key_degree(ka) * key_degree(kb)) % 2 else 1
        _mul_terms(ctx, out, kb, cb, ka, sign * ca)
        return
    if kind_a == "dV" and kind_b == "dV":
        # dV(x) dV(y) = dV(x dy)
        for (s2, _), k in d_key((kb[1], kb[2]), ctx.d):
            merged = merge_sign(ka[1], s2)
            if merged:
                sign, s = merged
                _add_dV(ctx, out, s, tuple(x + y for x, y in zip(ka[2], kb[2])), sign * k * ca * cb)
        return
    if kind_a == "I" and kind_b == "dV":
        # a dV(y) = (-1)^|a| (dV(F(a) y) - V(F(da) y))
        deg_sign = -1 if len(ka[1]) % 2 else 1
        W = tuple(p * x + y for x, y in zip(ka[2], kb[2]))
        merged = merge_sign(ka[1], kb[1])
        if merged:
            sign, s = merged
            _add_dV(ctx, out, s, W, deg_sign * sign * ca * cb)
        for (s2, _), k in d_key((ka[1], ka[2]), ctx.d):
            merged = merge_sign(s2, kb[1])
            if merged:
                sign, s = merged
                _add_V(ctx, out, s, W, -deg_sign * sign * k * ca * cb)
        return
    if kind_a == "dV" and kind_b == "I":
        sign = -1 if (key_degree(ka) * key_degree(kb)) % 2 else 1
        _mul_terms(ctx, out, kb, cb, ka, sign * ca)
        return
    raise ValueError(f"unknown key kinds {kind_a}, {kind_b}")  # pragma: no cover


def _key_valid(key: DKey, ctx: _Ctx) -> bool:
    kind, s, w = key
    return all(w[i] >= 1 or i in ctx.log_axes for i in s)


@dataclass(frozen=True, eq=False)
class DRWForm:
    """An element of W_2Ω^q(log L) known in weights < prec."""

    p: int
    d: int
    q: int
    prec: int
    log_axes: frozenset
    terms: Mapping[DKey, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "log_axes", frozenset(self.log_axes))
        ctx = self.ctx
        clean: dict = {}
        for key, c in self.terms.items():
            kind, s, w = key
            if key_degree(key) != self.q or len(w) != self.d:
                raise ValueError(f"key {key} does not have degree {self.q}")
            if kind == "I":
                if sum(w) >= self.prec:
                    continue
                c %= ctx.p2
            else:
                if sum(w) >= self.p * self.prec:
                    continue
                if _divisible(w, self.p) or _j0(w, self.p) in s:
                    raise ValueError(f"key {key} is not in normal form")
                c %= self.p
            if not c:
                continue
            if not _key_valid(key, ctx):
                raise ValueError(f"key {key} has a pole outside log axes {sorted(self.log_axes)}")
            clean[(kind, tuple(s), tuple(w))] = c
        object.__setattr__(self, "terms", clean)

    @property
    def ctx(self) -> _Ctx:
        return _Ctx(self.p, self.d, self.prec, self.log_axes)

    def _like(self, q: int, terms: dict, log_axes=None) -> "DRWForm":
        return DRWForm(self.p, self.d, q, self.prec, self.log_axes if log_axes is None else log_axes, terms)

    @classmethod
    def zero(cls, p, d, q, prec, log_axes=frozenset()) -> "DRWForm":
        return cls(p, d, q, prec, frozenset(log_axes), {})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return (isinstance(other, DRWForm) and (self.p, self.d, self.q, self.prec) ==
                (other.p, other.d, other.q, other.prec) and dict(self.terms) == dict(other.terms))

    def __hash__(self):
        return hash((self.p, self.d, self.q, self.prec, tuple(sorted(self.terms.items()))))

    def _check(self, other: "DRWForm"):
        if (self.p, self.d, self.prec) != (other.p, other.d, other.prec):
            raise ValueError("level-2 forms over different models")

    def __add__(self, other: "DRWForm") -> "DRWForm":
        self._check(other)
        if self.q != other.q:
            raise ValueError("degree mismatch")
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return self._like(self.q, out, self.log_axes | other.log_axes)

    def scale(self, k: int) -> "DRWForm":
        return self._like(self.q, {key: c * k for key, c in self.terms.items()})

    def __neg__(self) -> "DRWForm":
        return self.scale(-1)

    def __sub__(self, other: "DRWForm") -> "DRWForm":
        return self + (-other)

    def with_log_axes(self, log_axes: Iterable[int]) -> "DRWForm":
        return self._like(self.q, dict(self.terms), frozenset(log_axes))

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (kind, s, w), c in sorted(self.terms.items()):
            mono = "*".join(f"T{i + 1}^{e}" for i, e in enumerate(w) if e) or "1"
            diff = "".join(f" dlog T{i + 1}" for i in s)
            body = f"[{mono}]{diff}" if kind == "I" else f"{kind}({mono}{diff})"
            parts.append(f"{c}*{body}")
        return " + ".join(parts)


def drw_wedge(a: DRWForm, b: DRWForm) -> DRWForm:
    a._check(b)
    if a.q + b.q > a.d:
        raise ValueError("degree exceeds d")
    ctx = _Ctx(a.p, a.d, a.prec, a.log_axes | b.log_axes)
    out: dict = {}
    items_b = list(b.terms.items())
    for ka, ca in a.terms.items():
        for kb, cb in items_b:
            _mul_terms(ctx, out, ka, ca, kb, cb)
    return DRWForm(a.p, a.d, a.q + b.q, a.prec, ctx.log_axes, out)


def drw_d(a: DRWForm) -> DRWForm:
    ctx = a.ctx
    out: dict = {}
    for (kind, s, w), c in a.terms.items():
        if kind == "I":
            for (s2, mu), k in d_key((s, w), a.d):
                _add_int(ctx, out, s2, mu, k * c)
        elif kind == "V":
            key = ("dV", s, w)
            out[key] = (out.get(key, 0) + c) % a.p
    return DRWForm(a.p, a.d, a.q + 1, a.prec, a.log_axes, out)


def drw_F(a: DRWForm) -> LogForm:
    """F: W_2Ω^q -> Ω^q (weights multiplied by p; precision p·prec)."""
    ring = CoeffRing(a.p)
    out: dict = {}
    for (kind, s, w), c in a.terms.items():
        if kind == "I":
            key = (s, tuple(a.p * m for m in w))
            out[key] = (out.get(key, 0) + c) % a.p
        elif kind == "dV":
            for key, k in d_key((s, w), a.d):
                out[key] = (out.get(key, 0) + k * c) % a.p
    return LogForm(ring, a.d, a.q, a.p * a.prec, a.log_axes, out)


def drw_R(a: DRWForm) -> LogForm:
    """R: W_2Ω^q -> Ω^q (kills V and dV)."""
    ring = CoeffRing(a.p)
    out = {(s, w): c % a.p for (kind, s, w), c in a.terms.items() if kind == "I"}
    return LogForm(ring, a.d, a.q, a.prec, a.log_axes, out)


def _level1_terms(x: LogForm, p: int, prec: int):
    if x.ring != CoeffRing(p):
        raise ValueError("level-1 input must live over F_p")
    if x.prec < p * prec:
        raise ValueError(f"level-1 input known below weight {x.prec}; V needs weights < {p * prec}")
    return x.terms.items()


def drw_V(x: LogForm, prec: int) -> DRWForm:
    """V: Ω^q -> W_2Ω^q (weights divided by p); x must be known below p·prec."""
    ctx = _Ctx(x.ring.p, x.d, prec, x.log_axes)
    out: dict = {}
    for (s, W), c in _level1_terms(x, ctx.p, prec):
        _add_V(ctx, out, s, W, c)
    return DRWForm(ctx.p, x.d, x.q, prec, x.log_axes, out)


def drw_dV(x: LogForm, prec: int) -> DRWForm:
    ctx = _Ctx(x.ring.p, x.d, prec, x.log_axes)
    out: dict = {}
    for (t, W), c in _level1_terms(x, ctx.p, prec):
        _add_dV(ctx, out, t, W, c)
    return DRWForm(ctx.p, x.d, x.q + 1, prec, x.log_axes, out)


def drw_lift(z: LogForm, prec: int | None = None) -> DRWForm:
    """Integral lift along R (coefficients taken in [0, p))."""
    prec = z.prec if prec is None else prec
    out = {("I", s, mu): c for (s, mu), c in z.terms.items()}
    return DRWForm(z.ring.p, z.d, z.q, prec, z.log_axes, out)


def drw_underline_p(z: LogForm, lift: DRWForm | None = None) -> DRWForm:
    """p̲(z) = V(F(z̃)) for a lift z̃ of z along R."""
    lift = drw_lift(z) if lift is None else lift
    back = drw_R(lift)
    if not (back - z.truncate(lift.prec) if z.prec > lift.prec else back - z).is_zero():
        raise ValueError("the given element is not a lift of z")
    return drw_V(drw_F(lift), lift.prec)


def drw_cartier_inverse(a: DRWForm) -> DRWForm:
    """C^{-1} = F∘(lift to level 3), well defined modulo dVΩ^{q-1}; the representative chosen here
    sends [c]T^μ ω ↦ c T^{pμ} ω, V(y) ↦ p ỹ and dV(y) ↦ d ỹ with integral lifts ỹ."""
    ctx = a.ctx
    p = a.p
    out: dict = {}
    for (kind, s, w), c in a.terms.items():
        if kind == "I":
            _add_int(ctx, out, s, tuple(p * m for m in w), c)
        elif kind == "V":
            _add_int(ctx, out, s, w, p * c)
        else:
            for (s2, mu), k in d_key((s, w), a.d):
                _add_int(ctx, out, s2, mu, k * c)
    return DRWForm(p, a.d, a.q, a.prec, a.log_axes, out)


# Teichmüller lifts and dlog ------------------------------------------------

def _int_poly_mul(a: dict, b: dict, cap: int, modulus: int) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        wa = sum(ea)
        for eb, cb in b.items():
            if wa + sum(eb) >= cap:
                continue
            key = tuple(x + y for x, y in zip(ea, eb))
            out[key] = (out.get(key, 0) + ca * cb) % modulus
    return {k: v for k, v in out.items() if v}


def drw_teichmuller(x: TruncSeries, prec: int) -> DRWForm:
    """[x] = Σ [c_μ][T]^μ + V(δ), δ = ((Σ c_μ T^μ)^p - Σ c_μ^p T^{pμ}) / p over integer lifts.

    x must be known below p·prec (δ has weights up to p·prec before V divides by p).
    """
    p = x.ring.p
    if not x.ring.is_prime_field:
        raise ValueError("level-2 model is implemented over F_p")
    if x.prec < p * prec:
        raise ValueError(f"[x] at weights < {prec} needs x below weight {p * prec}")
    cap = p * prec
    lift = {e: c for e, c in x.coeffs.items() if sum(e) < cap}
    modulus = p * p
    power = dict(lift)
    for _ in range(p - 1):
        power = _int_poly_mul(power, lift, cap, modulus)
    for e, c in lift.items():
        pe = tuple(p * m for m in e)
        if sum(pe) < cap:
            power[pe] = (power.get(pe, 0) - pow(c, p)) % modulus
    ctx = _Ctx(p, x.d, prec, frozenset())
    out: dict = {}
    for e, c in lift.items():
        _add_int(ctx, out, (), e, pow(c, p, modulus))
    for e, c in power.items():
        if c % p:
            raise ArithmeticError("Teichmüller correction is not divisible by p")  # pragma: no cover
        _add_V(ctx, out, (), e, c // p)
    return DRWForm(p, x.d, 0, prec, frozenset(), out)


def drw_dlog(unit: LocalizedUnit | TruncSeries, prec: int, log_axes: Iterable[int] | None = None) -> DRWForm:
    """dlog[T^z u] = Σ z_j dlog[T_j] + [u]^{-1} d[u]; u must be known below p·prec."""
    if isinstance(unit, TruncSeries):
        unit = LocalizedUnit.from_series(unit)
    u = unit.unit
    axes = unit.inverted_axes if log_axes is None else frozenset(log_axes)
    if not unit.inverted_axes <= axes:
        raise ValueError("dlog of T_j needs a log pole along j")
    teich = drw_teichmuller(u, prec)
    inverse = drw_teichmuller(invert_unit(u), prec)
    form = drw_wedge(inverse, drw_d(teich)).with_log_axes(axes)
    p = u.ring.p
    extra = {("I", (j,), (0,) * unit.d): z for j, z in enumerate(unit.z) if z}
    if extra:
        form = form + DRWForm(p, unit.d, 1, prec, axes, extra)
    return form


def witt_to_drw(a: WittVector, prec: int) -> DRWForm:
    """(x_0, x_1) = [x_0] + V(x_1) as a level-2 0-form."""
    if a.n != 2:
        raise ValueError("only W_2 maps to the level-2 model")
    x0, x1 = a.coords
    return drw_teichmuller(x0, prec) + drw_V(LogForm.from_series(x1), prec)


# ===========================================================================
# Truncated module W_2Ω^q(log L) and its submodules
# ===========================================================================

class DRWSpace:
    """Basis keys of W_2Ω^q(log L) in weights < prec, ordered by weight orbit.

    The coordinate module is (Z/p²)^dim modulo p·e_k for the fractional keys;
    submodules are stored per orbit and always contain these relation rows.
    """

    def __init__(self, p: int, d: int, q: int, prec: int, log_axes: Iterable[int] = ()):
        check_clamp(p, d, 2, prec - 1)
        self.p, self.d, self.q, self.prec = p, d, q, prec
        self.log_axes = frozenset(log_axes)
        self.ring = CoeffRing(p, exponent=2)
        ctx = _Ctx(p, d, prec, self.log_axes)
        keys = []
        subsets = lambda k: list(combinations(range(d), k)) if 0 <= k <= d else []
        for mu in monomials_below(d, prec):
            for s in subsets(q):
                key = ("I", s, mu)
                if _key_valid(key, ctx):
                    keys.append(key)
        for W in monomials_below(d, p * prec):
            if _divisible(W, p):
                continue
            j0 = _j0(W, p)
            for kind, k in (("V", q), ("dV", q - 1)):
                for s in subsets(k):
                    key = (kind, s, W)
                    if j0 not in s and _key_valid(key, ctx):
                        keys.append(key)
        order = {"I": 0, "V": 1, "dV": 2}
        keys.sort(key=lambda k: (orbit_of(scaled_weight(k, p), p), scaled_weight(k, p), order[k[0]], k[1]))
        self.keys: list[DKey] = keys
        self.index = {k: n for n, k in enumerate(keys)}
        self.fractional = np.array([k[0] != "I" for k in keys], dtype=bool)
        blocks: dict[tuple, list[int]] = {}
        for n, k in enumerate(keys):
            blocks.setdefault(orbit_of(scaled_weight(k, p), p), []).append(n)
        self.blocks = {b: np.array(v, dtype=np.int64) for b, v in blocks.items()}
        self.block_of = {}
        for b, idx in self.blocks.items():
            for n in idx:
                self.block_of[int(n)] = b

    @property
    def dim(self) -> int:
        return len(self.keys)

    def vector(self, form: DRWForm, strict: bool = True) -> np.ndarray | None:
        if form.q != self.q or form.d != self.d or form.p != self.p:
            raise ValueError("form does not match the space")
        vec = np.zeros(self.dim, dtype=np.int64)
        for key, c in form.terms.items():
            n = self.index.get(key)
            if n is None:
                if strict:
                    raise ValueError(f"term {key} is outside the space")
                return None
            vec[n] = c
        return vec

    def form(self, vec) -> DRWForm:
        terms = {self.keys[n]: int(c) for n, c in enumerate(vec) if c}
        return DRWForm(self.p, self.d, self.q, self.prec, self.log_axes, terms)

    def relation_rows(self, block) -> np.ndarray:
        idx = self.blocks[block]
        frac = np.nonzero(self.fractional[idx])[0]
        rows = np.zeros((frac.size, idx.size), dtype=np.int64)
        rows[np.arange(frac.size), frac] = self.p
        return rows

    def block_span(self, block, rows) -> Subspace:
        idx = self.blocks[block]
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, idx.size)
        return canonicalize(np.vstack([rows, self.relation_rows(block)]), self.ring, idx.size)

    def __repr__(self):
        return f"DRWSpace(p={self.p}, d={self.d}, q={self.q}, prec={self.prec}, dim={self.dim})"


@dataclass
class DRWSubmodule:
    """A submodule that is a direct sum of its orbit components."""

    space: DRWSpace
    blocks: dict

    @classmethod
    def from_rows(cls, space: DRWSpace, rows) -> "DRWSubmodule":
        """Span of rows, assuming the span is graded by orbits (each row is split into components)."""
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, space.dim)
        blocks = {b: space.block_span(b, rows[:, idx]) for b, idx in space.blocks.items()}
        return cls(space, blocks)

    @classmethod
    def full(cls, space: DRWSpace) -> "DRWSubmodule":
        return cls(space, {b: space.block_span(b, np.eye(idx.size, dtype=np.int64))
                           for b, idx in space.blocks.items()})

    def contains(self, vec) -> bool:
        vec = np.asarray(vec, dtype=np.int64)
        return all(self.blocks[b].contains(vec[idx]) for b, idx in self.space.blocks.items())

    def contains_form(self, form: DRWForm) -> bool:
        vec = self.space.vector(form, strict=False)
        return vec is not None and self.contains(vec)

    def intersect(self, other: "DRWSubmodule") -> "DRWSubmodule":
        return DRWSubmodule(self.space, {b: intersect(sub, other.blocks[b]) for b, sub in self.blocks.items()})

    def __add__(self, other: "DRWSubmodule") -> "DRWSubmodule":
        return DRWSubmodule(self.space, {b: span_sum(sub, other.blocks[b]) for b, sub in self.blocks.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, DRWSubmodule) and all(sub == other.blocks[b] for b, sub in self.blocks.items())

    def contains_submodule(self, other: "DRWSubmodule") -> bool:
        return all(sub.contains_subspace(other.blocks[b]) for b, sub in self.blocks.items())

    def log_cardinality(self) -> int:
        """log_p of the number of elements (relation rows excluded)."""
        total = 0
        for b, sub in self.blocks.items():
            total += sub.log_cardinality() - int(self.space.fractional[self.space.blocks[b]].sum())
        return total

    def generators(self) -> list[np.ndarray]:
        """Rows (in full coordinates) generating the submodule."""
        out = []
        for b, sub in self.blocks.items():
            idx = self.space.blocks[b]
            for row in sub.rows:
                vec = np.zeros(self.space.dim, dtype=np.int64)
                vec[idx] = row
                out.append(vec)
        return out


def drw_build(p: int, d: int, q: int, N: int, log_axes: Iterable[int] = ()) -> DRWSpace:
    """Truncated W_2Ω^q(log L) at weights <= N."""
    return DRWSpace(p, d, q, N + 1, log_axes)


def kernel_of_R(space: DRWSpace) -> DRWSubmodule:
    """Ker(R) = p·(integral part) + all fractional coordinates."""
    rows = np.diag(np.where(space.fractional, 1, space.p)).astype(np.int64)
    return DRWSubmodule.from_rows(space, rows)


def integral_submodule(space: DRWSpace) -> DRWSubmodule:
    """Elements with all fractional coordinates zero."""
    rows = np.diag(np.where(space.fractional, 0, 1)).astype(np.int64)
    return DRWSubmodule.from_rows(space, rows)


def exact_dV_rows(space: DRWSpace) -> np.ndarray:
    """dV(T^W dlog T_t) for all level-1 (q-1)-form keys below weight p·prec."""
    if space.q == 0:
        return np.zeros((0, space.dim), dtype=np.int64)
    ctx = _Ctx(space.p, space.d, space.prec, space.log_axes)
    rows = []
    for W in monomials_below(space.d, space.p * space.prec):
        for t in combinations(range(space.d), space.q - 1):
            if not all(W[i] >= 1 or i in space.log_axes for i in t):
                continue
            out: dict = {}
            _add_dV(ctx, out, t, W, 1)
            form = DRWForm(space.p, space.d, space.q, space.prec, space.log_axes, out)
            if not form.is_zero():
                rows.append(space.vector(form))
    return np.vstack(rows) if rows else np.zeros((0, space.dim), dtype=np.int64)


def log_part(space: DRWSpace) -> DRWSubmodule:
    """{x : C^{-1}x - x ∈ dVΩ^{q-1}} in the truncated module (orbit by orbit)."""
    ring = space.ring
    basis = [space.form(np.eye(1, space.dim, n, dtype=np.int64)[0]) for n in range(space.dim)]
    defect = np.vstack([space.vector(drw_cartier_inverse(b) - b) for b in basis]) if basis else \
        np.zeros((0, 0), dtype=np.int64)
    dv_rows = exact_dV_rows(space)
    blocks = {}
    for b, idx in space.blocks.items():
        local_defect = defect[np.ix_(idx, idx)]
        rel = space.relation_rows(b)
        dv_local = dv_rows[:, idx]
        dv_local = dv_local[np.any(dv_local % ring.modulus != 0, axis=1)]
        stacked = np.vstack([local_defect, dv_local, rel])
        relations = left_kernel(stacked, ring)
        coeffs = relations.rows[:, :idx.size] if relations.rank else np.zeros((0, idx.size), dtype=np.int64)
        blocks[b] = space.block_span(b, coeffs)
    return DRWSubmodule(space, blocks)


def witt_ideal_generators(p: int, d: int, prec: int, divisor: Sequence[int]) -> list[DRWForm]:
    """Additive generators of W_2(T^D A) in weights < prec: [T^μ] and V(T^μ) with μ >= D."""
    gens = []
    for mu in monomials_below(d, p * prec):
        if not all(m >= x for m, x in zip(mu, divisor)):
            continue
        out: dict = {}
        ctx = _Ctx(p, d, prec, frozenset())
        if sum(mu) < prec:
            _add_int(ctx, out, (), mu, 1)
            gens.append(DRWForm(p, d, 0, prec, frozenset(), out))
            out = {}
        _add_V(ctx, out, (), mu, 1)
        form = DRWForm(p, d, 0, prec, frozenset(), out)
        if not form.is_zero():
            gens.append(form)
    return gens


def dg_ideal(space: DRWSpace, divisor: Sequence[int]) -> DRWSubmodule:
    """W_2(I)·W_2Ω^q + dW_2(I)·W_2Ω^{q-1} for I = (T^D): the kernel of W_2Ω^q -> W_2Ω^q_{A/I}."""
    p, d, prec = space.p, space.d, space.prec
    ctx = _Ctx(p, d, prec, space.log_axes)
    gens = witt_ideal_generators(p, d, prec, divisor)
    rows = []
    lower = DRWSpace(p, d, space.q - 1, prec, space.log_axes) if space.q >= 1 else None
    pairs = [(g, space) for g in gens]
    if lower is not None:
        pairs += [(drw_d(g), lower) for g in gens]
    for g, target in pairs:
        gmin = min(sum(scaled_weight(k, p)) for k in g.terms) if g.terms else 0
        for key in target.keys:
            if gmin + sum(scaled_weight(key, p)) >= p * prec:
                continue
            out: dict = {}
            for kg, cg in g.terms.items():
                _mul_terms(ctx, out, kg, cg, key, 1)
            form = DRWForm(p, d, space.q, prec, space.log_axes, out)
            if not form.is_zero():
                rows.append(space.vector(form))
    mat = np.vstack(rows) if rows else np.zeros((0, space.dim), dtype=np.int64)
    return DRWSubmodule.from_rows(space, mat)


def twisted_submodule(space: DRWSpace, r: Sequence[int]) -> DRWSubmodule:
    """W_2Ω^q_{(X,-D)} = ∩_i Ker(W_2Ω^q -> W_2Ω^q_{D_i}), D_i = r_i Div(T_i)."""
    result = DRWSubmodule.full(space)
    for i, ri in enumerate(r):
        if ri:
            divisor = tuple(ri if j == i else 0 for j in range(space.d))
            result = result.intersect(dg_ideal(space, divisor))
    return result
