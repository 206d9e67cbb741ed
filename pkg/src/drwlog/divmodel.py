"""Divisors supported on coordinate hyperplanes and the local models (p, m, d, e, f, g, r).

Axes are 0-based internally; printed names are T1..Td.  A LocalModel encodes
A = Div(T_1 ... T_e) and B = Div(T_1^{r_1} ... T_g^{r_g}) with
  p ∤ r_j >= 1 for j in [e+1, f],  p | r_j >= 1 for j in [f+1, g],  r_j = 0 for j > g.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence


@dataclass(frozen=True)
class CoordDivisor:
    """Σ r_i Div(T_i) encoded by its multiplicity vector."""

    mult: tuple[int, ...]

    def __post_init__(self):
        mult = tuple(int(x) for x in self.mult)
        if any(x < 0 for x in mult):
            raise ValueError("multiplicities must be >= 0")
        object.__setattr__(self, "mult", mult)

    @classmethod
    def of(cls, values: Iterable[int]) -> "CoordDivisor":
        return cls(tuple(values))

    @property
    def d(self) -> int:
        return len(self.mult)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(i for i, x in enumerate(self.mult) if x)

    def is_zero(self) -> bool:
        return not any(self.mult)

    def __add__(self, other: "CoordDivisor") -> "CoordDivisor":
        return CoordDivisor(tuple(a + b for a, b in zip(self.mult, other.mult)))

    def scaled(self, k: int) -> "CoordDivisor":
        return CoordDivisor(tuple(k * a for a in self.mult))

    def reduced(self) -> "CoordDivisor":
        return CoordDivisor(tuple(1 if a else 0 for a in self.mult))

    def divisible_by(self, k: int) -> bool:
        """k | E, i.e. every multiplicity is divisible by k."""
        return all(a % k == 0 for a in self.mult)

    def __le__(self, other: "CoordDivisor") -> bool:
        return all(a <= b for a, b in zip(self.mult, other.mult))


def ceil_div(divisor: CoordDivisor, mm: int) -> CoordDivisor:
    if mm < 1:
        raise ValueError("divisor must be divided by a positive integer")
    return CoordDivisor(tuple(-(-a // mm) for a in divisor.mult))


def floor_div(divisor: CoordDivisor, mm: int) -> CoordDivisor:
    if mm < 1:
        raise ValueError("divisor must be divided by a positive integer")
    return CoordDivisor(tuple(a // mm for a in divisor.mult))


@dataclass(frozen=True)
class PDecomposition:
    """E = E' + Σ_j p^{exps_j} E_j with disjoint supports."""

    p: int
    exps: tuple[int, ...]
    head: CoordDivisor
    parts: tuple[CoordDivisor, ...]

    def reassemble(self) -> CoordDivisor:
        total = self.head
        for k, part in zip(self.exps, self.parts):
            total = total + part.scaled(self.p**k)
        return total


def p_adic_valuation(value: int, p: int) -> int:
    if value == 0:
        raise ZeroDivisionError("valuation of zero")
    v = 0
    while value % p == 0:
        value //= p
        v += 1
    return v


def p_div_decomposition(divisor: CoordDivisor, p: int, exps: Sequence[int]) -> PDecomposition:
    """Split components by p-adic valuation against the exponent sequence.

    A component with valuation v goes to E' when v < exps[0], otherwise to the
    part E_j with exps[j] <= v < exps[j+1], divided by p^{exps[j]}.
    """
    exps = tuple(int(x) for x in exps)
    if any(x < 1 for x in exps) or any(b <= a for a, b in zip(exps, exps[1:])):
        raise ValueError("exponents must be strictly increasing and >= 1")
    head = [0] * divisor.d
    parts = [[0] * divisor.d for _ in exps]
    for axis, mult in enumerate(divisor.mult):
        if mult == 0:
            continue
        v = p_adic_valuation(mult, p)
        slot = None
        for k, threshold in enumerate(exps):
            if v >= threshold:
                slot = k
        if slot is None:
            head[axis] = mult
        else:
            parts[slot][axis] = mult // p ** exps[slot]
    return PDecomposition(p, exps, CoordDivisor(tuple(head)), tuple(CoordDivisor(tuple(x)) for x in parts))


def max_length_decomposition(divisor: CoordDivisor, p: int) -> PDecomposition:
    """Decomposition E = D_0 + p D_1 + ... + p^s D_s with exps (1, ..., s) and p ∤ D_s."""
    if divisor.is_zero():
        raise ZeroDivisionError("the zero divisor has no maximal decomposition")
    top = max(p_adic_valuation(m, p) for m in divisor.mult if m)
    return p_div_decomposition(divisor, p, tuple(range(1, top + 1)))


def thm2_opens(divisor: CoordDivisor, p: int, n: int) -> list[tuple[CoordDivisor, frozenset[int]]]:
    """For i = 0..n-1: (⌈E/p^i⌉, axes of D_0 + p D_1 + ... + p^i D_i).

    D_i are the parts of the decomposition with exponents (1, ..., n).
    """
    if divisor.is_zero():
        raise ValueError("zero divisor")
    decomposition = p_div_decomposition(divisor, p, tuple(range(1, n + 1)))
    pieces = (decomposition.head,) + decomposition.parts
    result = []
    support: set[int] = set()
    for i in range(n):
        support |= pieces[i].support
        result.append((ceil_div(divisor, p**i), frozenset(support)))
    return result


@dataclass(frozen=True)
class LocalModel:
    """Local model with A = Div(T_1..T_e) and B = Div(T^r); N is the form precision.

    Precision N means forms are kept up to weighted degree N inclusive, where
    T_i and dT_i have weight 1 and dlog T_i has weight 0.
    """

    p: int
    d: int
    e: int
    f: int
    g: int
    r: tuple[int, ...]
    N: int = 6
    m: int = 1
    n: int = 1
    allow_zero_twist: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "r", tuple(int(x) for x in self.r))
        problems = validate_model(self.p, self.d, self.e, self.f, self.g, self.r,
                                  require_twist=not self.allow_zero_twist)
        if problems:
            raise ValueError("invalid local model: " + "; ".join(problems))
        if self.N < 1 or self.m < 1 or self.n < 1:
            raise ValueError("N, m and n must be positive")

    # derived data ---------------------------------------------------------
    @property
    def r_tilde(self) -> tuple[int, ...]:
        return tuple(x + 1 if self.e <= j < self.f else x for j, x in enumerate(self.r))

    @property
    def log_axes(self) -> frozenset[int]:
        """Axes of A."""
        return frozenset(range(self.e))

    @property
    def f_axes(self) -> frozenset[int]:
        """Axes of Ã = Div(T_1..T_f); the x_2..x_q slots may invert these."""
        return frozenset(range(self.f))

    @property
    def B(self) -> CoordDivisor:
        return CoordDivisor(self.r)

    @property
    def A(self) -> CoordDivisor:
        return CoordDivisor(tuple(1 if j < self.e else 0 for j in range(self.d)))

    @property
    def prec(self) -> int:
        """Exclusive weighted-degree bound used by the form spaces."""
        return self.N + 1

    def regime(self, axis: int) -> str:
        """'A' for [1,e], 'bump' for [e+1,f], 'pdiv' for [f+1,g], 'free' beyond g."""
        if axis < self.e:
            return "A"
        if axis < self.f:
            return "bump"
        if axis < self.g:
            return "pdiv"
        return "free"

    def with_N(self, N: int) -> "LocalModel":
        return LocalModel(self.p, self.d, self.e, self.f, self.g, self.r, N, self.m, self.n,
                          self.allow_zero_twist)

    def label(self) -> str:
        return f"p{self.p}_d{self.d}_e{self.e}f{self.f}g{self.g}_r{'-'.join(map(str, self.r))}_N{self.N}"

    def as_dict(self) -> dict:
        return {"p": self.p, "m": self.m, "n": self.n, "d": self.d, "e": self.e, "f": self.f,
                "g": self.g, "r": list(self.r), "N": self.N}

    @classmethod
    def for_divisor(cls, p: int, r: Sequence[int], N: int = 6, log_all: bool = False) -> "LocalModel":
        """Model with B = Div(T^r) and A = D_0 (components with p ∤ r_i), or A = B_red.

        r must list the p ∤ components first, then the p | components, then zeros.
        """
        r = tuple(int(x) for x in r)
        d = len(r)
        g = sum(1 for x in r if x)
        f = sum(1 for x in r if x and x % p)
        e = g if log_all else f
        return cls(p, d, e, f, g, r, N)


def validate_model(p: int, d: int, e: int, f: int, g: int, r: Sequence[int],
                   require_twist: bool = True) -> list[str]:
    """All violated conditions of the local-model pattern (empty when valid)."""
    problems = []
    if len(r) != d:
        problems.append(f"r has length {len(r)} but d={d}")
        return problems
    if not 0 <= e <= f <= g <= d:
        problems.append(f"need 0 <= e <= f <= g <= d, got e={e} f={f} g={g} d={d}")
        return problems
    if any(x < 0 for x in r):
        problems.append("negative multiplicity")
    for j in range(e, f):
        if not (r[j] >= 1 and r[j] % p):
            problems.append(f"r_{j + 1}={r[j]} must satisfy p ∤ r >= 1")
    for j in range(f, g):
        if not (r[j] >= 1 and r[j] % p == 0):
            problems.append(f"r_{j + 1}={r[j]} must satisfy p | r >= 1")
    for j in range(g, d):
        if r[j] != 0:
            problems.append(f"r_{j + 1}={r[j]} must vanish beyond g")
    if require_twist and not any(r):
        problems.append("at least one r_i must be >= 1")
    return problems
