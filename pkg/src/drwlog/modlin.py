"""Exact linear algebra over F_p, F_{p^m} and Z/p^n.

Vectors and matrices are numpy int64 arrays holding canonical representatives.
Elements of F_{p^m} are encoded as integers 0..p^m-1 whose base-p digits are the
coefficients of a polynomial in the generator (lowest digit = constant term).

Row spans are stored in a canonical echelon form: the reduced row echelon form
over a field and the Howell form over Z/p^n.  Two spans are equal iff their
canonical matrices are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

# Irreducible defining polynomials for F_{p^m}, lowest coefficient first, monic.
# These are the Conway polynomials for the listed (p, m).
IRREDUCIBLE_POLYNOMIALS: dict[tuple[int, int], tuple[int, ...]] = {
    (2, 2): (1, 1, 1),
    (2, 3): (1, 1, 0, 1),
    (2, 4): (1, 1, 0, 0, 1),
    (3, 2): (2, 2, 1),
    (3, 3): (1, 2, 0, 1),
    (5, 2): (2, 4, 1),
    (5, 3): (3, 3, 0, 1),
    (7, 2): (3, 6, 1),
}


class DimensionMismatch(ValueError):
    """Raised when vectors or matrices have incompatible shapes."""


def _is_prime(value: int) -> bool:
    if value < 2:
        return False
    divisor = 2
    while divisor * divisor <= value:
        if value % divisor == 0:
            return False
        divisor += 1
    return True


@dataclass(frozen=True)
class CoeffRing:
    """Modulus descriptor: F_{p^m} when exponent == 1, Z/p^exponent when m == 1.

    ``degree`` is the field extension degree m and ``exponent`` the ring exponent n.
    Mixed cases (m > 1 and n > 1) are not supported.
    """

    p: int
    degree: int = 1
    exponent: int = 1

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.degree < 1 or self.exponent < 1:
            raise ValueError("degree and exponent must be >= 1")
        if self.degree > 1 and self.exponent > 1:
            raise ValueError("Galois rings GR(p^n, m) with n, m > 1 are not supported")
        if self.degree > 1 and (self.p, self.degree) not in IRREDUCIBLE_POLYNOMIALS:
            raise ValueError(f"no defining polynomial shipped for F_{self.p}^{self.degree}")

    # descriptors ---------------------------------------------------------
    @property
    def is_field(self) -> bool:
        return self.exponent == 1

    @property
    def is_prime_field(self) -> bool:
        return self.degree == 1 and self.exponent == 1

    @property
    def size(self) -> int:
        """Number of elements."""
        return self.p ** (self.degree * self.exponent)

    @property
    def modulus(self) -> int:
        """Integer modulus for Z/p^n (and F_p); undefined for proper extensions."""
        if self.degree > 1:
            raise ValueError("extension fields have no integer modulus")
        return self.p ** self.exponent

    def __str__(self) -> str:
        if self.degree > 1:
            return f"F_{self.p}^{self.degree}"
        if self.exponent > 1:
            return f"Z/{self.p}^{self.exponent}"
        return f"F_{self.p}"

    # element arithmetic on encoded integers ------------------------------
    def normalize(self, value: int) -> int:
        if self.degree == 1:
            return value % self.modulus
        if not 0 <= value < self.size:
            raise ValueError(f"{value} is not an encoded element of {self}")
        return value

    def from_int(self, value: int) -> int:
        """Image of an integer under Z -> ring."""
        return value % self.p if self.degree > 1 else value % self.modulus

    def add(self, a: int, b: int) -> int:
        if self.degree == 1:
            return (a + b) % self.modulus
        return _ext_tables(self.p, self.degree)[0][a][b]

    def neg(self, a: int) -> int:
        if self.degree == 1:
            return (-a) % self.modulus
        return _ext_tables(self.p, self.degree)[2][a]

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.degree == 1:
            return (a * b) % self.modulus
        return _ext_tables(self.p, self.degree)[1][a][b]

    def scalar_int(self, k: int, a: int) -> int:
        """k·a for an integer k."""
        return self.mul(self.from_int(k), a)

    def is_unit(self, a: int) -> bool:
        if self.degree == 1:
            return a % self.p != 0
        return a != 0

    def inv(self, a: int) -> int:
        if not self.is_unit(a):
            raise ZeroDivisionError(f"{a} is not invertible in {self}")
        if self.degree == 1:
            return pow(a, -1, self.modulus)
        return _ext_tables(self.p, self.degree)[3][a]

    def power(self, a: int, k: int) -> int:
        result = 1
        base = a
        while k:
            if k & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            k >>= 1
        return result

    def frob(self, a: int) -> int:
        """Absolute Frobenius a -> a^p (fields only)."""
        if not self.is_field:
            raise ValueError("Frobenius is only a ring map on fields here")
        return a if self.degree == 1 else self.power(a, self.p)

    def frob_inv(self, a: int) -> int:
        if not self.is_field:
            raise ValueError("Frobenius is only a ring map on fields here")
        return a if self.degree == 1 else self.power(a, self.p ** (self.degree - 1))

    def valuation(self, a: int) -> int:
        """p-adic valuation in Z/p^n, capped at n (for a = 0)."""
        if self.degree > 1:
            return 0 if a else 1
        a %= self.modulus
        if a == 0:
            return self.exponent
        v = 0
        while a % self.p == 0:
            a //= self.p
            v += 1
        return v

    def elements(self) -> range:
        return range(self.size)


def prime_field(p: int) -> CoeffRing:
    return CoeffRing(p)


@lru_cache(maxsize=None)
def _ext_tables(p: int, m: int):
    """Addition, multiplication, negation and inverse tables of F_{p^m}."""
    poly = IRREDUCIBLE_POLYNOMIALS[(p, m)]
    size = p**m

    def digits(x):
        return [(x // p**k) % p for k in range(m)]

    def encode(coeffs):
        return sum(c * p**k for k, c in enumerate(coeffs))

    def poly_mul(a, b):
        prod = [0] * (2 * m - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    prod[i + j] = (prod[i + j] + ai * bj) % p
        for top in range(2 * m - 2, m - 1, -1):
            lead = prod[top]
            if lead:
                for k in range(m + 1):
                    prod[top - m + k] = (prod[top - m + k] - lead * poly[k]) % p
        return prod[:m]

    digit_cache = [digits(x) for x in range(size)]
    add = [[encode([(a + b) % p for a, b in zip(digit_cache[x], digit_cache[y])]) for y in range(size)]
           for x in range(size)]
    mul = [[encode(poly_mul(digit_cache[x], digit_cache[y])) for y in range(size)] for x in range(size)]
    neg = [encode([(-a) % p for a in digit_cache[x]]) for x in range(size)]
    inv = [0] * size
    for x in range(1, size):
        for y in range(1, size):
            if mul[x][y] == 1:
                inv[x] = y
                break
        else:  # pragma: no cover - guarded by irreducibility tests
            raise ArithmeticError(f"defining polynomial for F_{p}^{m} is reducible")
    return add, mul, neg, inv


@dataclass(frozen=True)
class Coeff:
    """A single coefficient together with its ring descriptor."""

    ring: CoeffRing
    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.ring.normalize(self.value))

    def _lift(self, other):
        if isinstance(other, Coeff):
            if other.ring != self.ring:
                raise DimensionMismatch("coefficient rings differ")
            return other.value
        return self.ring.from_int(other)

    def __add__(self, other):
        return Coeff(self.ring, self.ring.add(self.value, self._lift(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return Coeff(self.ring, self.ring.sub(self.value, self._lift(other)))

    def __neg__(self):
        return Coeff(self.ring, self.ring.neg(self.value))

    def __mul__(self, other):
        return Coeff(self.ring, self.ring.mul(self.value, self._lift(other)))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        return Coeff(self.ring, self.ring.power(self.value, k))

    def inverse(self) -> "Coeff":
        return Coeff(self.ring, self.ring.inv(self.value))

    def frobenius(self) -> "Coeff":
        return Coeff(self.ring, self.ring.frob(self.value))


# ---------------------------------------------------------------------------
# Echelon forms
# ---------------------------------------------------------------------------

def _as_matrix(rows, ncols: int | None = None) -> np.ndarray:
    mat = np.asarray(rows, dtype=np.int64)
    if mat.ndim == 1:
        if mat.size == 0:
            mat = mat.reshape(0, ncols or 0)
        else:
            mat = mat.reshape(1, -1)
    if mat.ndim != 2:
        raise DimensionMismatch("expected a 2D matrix")
    if ncols is not None and mat.shape[1] != ncols:
        raise DimensionMismatch(f"expected {ncols} columns, got {mat.shape[1]}")
    return mat


def _valuations(column: np.ndarray, p: int, n: int) -> np.ndarray:
    """p-adic valuations of an integer array mod p^n (n for zero entries)."""
    vals = np.zeros(column.shape, dtype=np.int64)
    work = column.copy()
    live = work != 0
    vals[~live] = n
    for _ in range(n):
        divisible = live & (work % p == 0)
        if not divisible.any():
            break
        vals[divisible] += 1
        work[divisible] //= p
        live = divisible
    return vals


def _rref_prime_inplace(mat: np.ndarray, p: int) -> np.ndarray:
    """Gauss-Jordan over F_p on one dense block."""
    work = np.asarray(mat, dtype=np.int64) % p
    work = work[np.any(work != 0, axis=1)].copy()
    nrows, ncols = work.shape
    inverses = np.array([0] + [pow(x, -1, p) for x in range(1, p)], dtype=np.int64)
    top = 0
    for col in range(ncols):
        if top == nrows:
            break
        hits = np.nonzero(work[top:, col])[0]
        if hits.size == 0:
            continue
        hit = top + int(hits[0])
        if hit != top:
            work[[top, hit]] = work[[hit, top]]
        row = (work[top] * inverses[work[top, col]]) % p
        work[top] = row
        factors = work[:, col].copy()
        factors[top] = 0
        touched = np.nonzero(factors)[0]
        if touched.size:
            work[touched] = (work[touched] - np.outer(factors[touched], row)) % p
        top += 1
    return work[:top]


def _echelon_local(mat: np.ndarray, p: int, n: int) -> np.ndarray:
    """Howell form over Z/p^n (RREF when n == 1) by pivoting on minimal valuation."""
    if n == 1:
        return _rref_prime_inplace(mat, p)
    modulus = p**n
    pending = np.asarray(mat, dtype=np.int64) % modulus
    pending = pending[np.any(pending != 0, axis=1)]
    ncols = mat.shape[1]
    pivots: list[np.ndarray] = []
    pivot_info: list[tuple[int, int]] = []
    for col in range(ncols):
        if pending.shape[0] == 0:
            break
        column = pending[:, col]
        nonzero = np.nonzero(column)[0]
        if nonzero.size == 0:
            continue
        if n == 1:
            best = int(nonzero[0])
            val = 0
        else:
            vals = _valuations(column[nonzero], p, n)
            best = int(nonzero[int(np.argmin(vals))])
            val = int(vals.min())
        row = pending[best].copy()
        unit = int(row[col]) // p**val
        row = (row * pow(unit, -1, modulus)) % modulus
        pending = np.delete(pending, best, axis=0)
        step = p**val
        if pending.shape[0]:
            factors = pending[:, col] // step
            pending = (pending - np.outer(factors, row)) % modulus
        if val > 0:
            annihilated = (row * p ** (n - val)) % modulus
            if annihilated.any():
                pending = np.vstack([pending, annihilated[None, :]])
        for k, earlier in enumerate(pivots):
            factor = int(earlier[col]) // step
            if factor:
                pivots[k] = (earlier - factor * row) % modulus
        pending = pending[np.any(pending != 0, axis=1)]
        pivots.append(row)
        pivot_info.append((col, val))
    if not pivots:
        return np.zeros((0, ncols), dtype=np.int64)
    return np.vstack(pivots)


def _rref_prime_chunked(mat: np.ndarray, p: int, chunk: int | None = None) -> np.ndarray:
    """RREF over F_p processing generator rows in blocks.

    Each block is reduced against the current basis with one float64 matrix
    product (exact because entries and partial sums stay far below 2^53), then
    the residual block is echelonized and merged.
    """
    mat = np.asarray(mat, dtype=np.int64) % p
    nrows, ncols = mat.shape
    if chunk is None:
        chunk = max(64, 2 * ncols)
    if ncols * (p - 1) ** 2 >= 2**52:  # pragma: no cover - desk-scale guard
        return _echelon_local(mat, p, 1)
    basis = np.zeros((0, ncols), dtype=np.int64)
    basis_pivots = np.zeros(0, dtype=np.int64)
    for start in range(0, nrows, chunk):
        block = mat[start:start + chunk]
        block = block[np.any(block != 0, axis=1)]
        if block.shape[0] == 0:
            continue
        if basis.shape[0]:
            coeffs = block[:, basis_pivots].astype(np.float64)
            block = (block - np.rint(coeffs @ basis.astype(np.float64)).astype(np.int64)) % p
            block = block[np.any(block != 0, axis=1)]
            if block.shape[0] == 0:
                continue
        fresh = _echelon_local(block, p, 1)
        fresh_pivots = np.argmax(fresh != 0, axis=1)
        if basis.shape[0]:
            coeffs = basis[:, fresh_pivots].astype(np.float64)
            basis = (basis - np.rint(coeffs @ fresh.astype(np.float64)).astype(np.int64)) % p
        basis = np.vstack([basis, fresh])
        basis_pivots = np.concatenate([basis_pivots, fresh_pivots])
        order = np.argsort(basis_pivots, kind="stable")
        basis = basis[order]
        basis_pivots = basis_pivots[order]
    return basis


def _rref_generic_field(mat: np.ndarray, ring: CoeffRing) -> np.ndarray:
    """RREF over F_{p^m} with table arithmetic (small sizes)."""
    rows = [list(map(int, r)) for r in mat]
    ncols = mat.shape[1]
    result: list[list[int]] = []
    pivot_cols: list[int] = []
    rows = [r for r in rows if any(r)]
    for col in range(ncols):
        idx = next((k for k, r in enumerate(rows) if r[col]), None)
        if idx is None:
            continue
        row = rows.pop(idx)
        scale = ring.inv(row[col])
        row = [ring.mul(scale, x) for x in row]
        new_rows = []
        for r in rows:
            factor = r[col]
            if factor:
                r = [ring.sub(x, ring.mul(factor, y)) for x, y in zip(r, row)]
            if any(r):
                new_rows.append(r)
        rows = new_rows
        for k, r in enumerate(result):
            factor = r[col]
            if factor:
                result[k] = [ring.sub(x, ring.mul(factor, y)) for x, y in zip(r, row)]
        result.append(row)
        pivot_cols.append(col)
    if not result:
        return np.zeros((0, ncols), dtype=np.int64)
    return np.array(result, dtype=np.int64)


def echelon(mat, ring: CoeffRing, ncols: int | None = None) -> np.ndarray:
    """Canonical echelon matrix of the row span (RREF or Howell form)."""
    mat = _as_matrix(mat, ncols)
    if mat.shape[0] == 0:
        return np.zeros((0, mat.shape[1]), dtype=np.int64)
    if ring.degree > 1:
        return _rref_generic_field(mat, ring)
    if ring.exponent == 1:
        return _rref_prime_chunked(mat, ring.p)
    return _echelon_local(mat, ring.p, ring.exponent)


# ---------------------------------------------------------------------------
# Subspaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Subspace:
    """Row span of a canonical echelon matrix inside ring^ambient."""

    ring: CoeffRing
    ambient: int
    rows: np.ndarray = field(repr=False)

    @property
    def rank(self) -> int:
        """Number of canonical rows (the dimension over a field)."""
        return int(self.rows.shape[0])

    @property
    def pivots(self) -> list[int]:
        return [int(np.argmax(r != 0)) for r in self.rows]

    def log_cardinality(self) -> int:
        """log_p of the number of elements of the span."""
        if self.ring.degree > 1:
            return self.rank * self.ring.degree
        total = 0
        for row, col in zip(self.rows, self.pivots):
            total += self.ring.exponent - self.ring.valuation(int(row[col]))
        return total

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return (self.ring == other.ring and self.ambient == other.ambient
                and self.rows.shape == other.rows.shape
                and self.rows.tobytes() == other.rows.tobytes())

    def __hash__(self) -> int:
        return hash((self.ring, self.ambient, self.rows.tobytes()))

    def reduce(self, vector) -> np.ndarray:
        """Residual of ``vector`` after reduction by the canonical rows.

        The residual is zero iff the vector lies in the span.  Over Z/p^n a
        nonzero residual may keep an entry at a pivot column that the pivot
        cannot clear; reduction stops at that column.
        """
        vec = np.asarray(vector, dtype=np.int64).reshape(-1)
        if vec.shape[0] != self.ambient:
            raise DimensionMismatch(f"vector of length {vec.shape[0]} in ambient {self.ambient}")
        ring = self.ring
        if ring.degree > 1:
            res = [int(x) for x in vec]
            for row, col in zip(self.rows, self.pivots):
                factor = res[col]
                if factor:
                    res = [ring.sub(x, ring.mul(factor, int(y))) for x, y in zip(res, row)]
            return np.array(res, dtype=np.int64)
        modulus = ring.modulus
        res = vec % modulus
        for row, col in zip(self.rows, self.pivots):
            entry = int(res[col])
            if entry == 0:
                continue
            pivot = int(row[col])
            if entry % pivot != 0:
                return res
            res = (res - (entry // pivot) * row) % modulus
        return res

    def contains(self, vector) -> bool:
        return not self.reduce(vector).any()

    def contains_subspace(self, other: "Subspace") -> bool:
        _check_compatible(self, other)
        return all(self.contains(r) for r in other.rows)

    def is_zero(self) -> bool:
        return self.rank == 0


def _check_compatible(a: Subspace, b: Subspace):
    if a.ring != b.ring or a.ambient != b.ambient:
        raise DimensionMismatch("subspaces live in different ambients")


def canonicalize(gens, ring: CoeffRing, ambient: int | None = None) -> Subspace:
    """Canonical Subspace spanned by the rows of ``gens``."""
    mat = _as_matrix(gens, ambient)
    if ring.degree == 1:
        mat = mat % ring.modulus
    rows = echelon(mat, ring)
    rows.setflags(write=False)
    return Subspace(ring, mat.shape[1], rows)


def zero_subspace(ring: CoeffRing, ambient: int) -> Subspace:
    return canonicalize(np.zeros((0, ambient), dtype=np.int64), ring, ambient)


def full_subspace(ring: CoeffRing, ambient: int) -> Subspace:
    return canonicalize(np.eye(ambient, dtype=np.int64), ring, ambient)


def subspace_contains(space: Subspace, vector) -> bool:
    """Membership test; use ``space.reduce`` for the residual."""
    return space.contains(vector)


def span_sum(a: Subspace, b: Subspace) -> Subspace:
    _check_compatible(a, b)
    return canonicalize(np.vstack([a.rows, b.rows]), a.ring, a.ambient)


def kernel(mat, ring: CoeffRing, ncols: int | None = None) -> Subspace:
    """Subspace of vectors v with mat @ v = 0 (v a column vector).

    Computed as the rows with vanishing left block in the echelon form of
    [mat^T | I]; over Z/p^n this uses the Howell property.
    """
    mat = _as_matrix(mat, ncols)
    nrows, width = mat.shape
    augmented = np.hstack([mat.T, np.eye(width, dtype=np.int64)])
    form = echelon(augmented, ring)
    left_zero = ~np.any(form[:, :nrows] != 0, axis=1)
    return canonicalize(form[left_zero, nrows:], ring, width)


def left_kernel(mat, ring: CoeffRing) -> Subspace:
    """Subspace of row vectors c with c @ mat = 0."""
    mat = _as_matrix(mat)
    return kernel(mat.T, ring, mat.shape[0])


def intersect(a: Subspace, b: Subspace) -> Subspace:
    """a ∩ b via the kernel of the stacked generator map."""
    _check_compatible(a, b)
    if a.rank == 0 or b.rank == 0:
        return zero_subspace(a.ring, a.ambient)
    stacked = np.vstack([a.rows, b.rows])
    relations = left_kernel(stacked, a.ring)
    if relations.rank == 0:
        return zero_subspace(a.ring, a.ambient)
    combos = relations.rows[:, :a.rank]
    return canonicalize(matmul(combos, a.rows, a.ring), a.ring, a.ambient)


def matmul(x, y, ring: CoeffRing) -> np.ndarray:
    """Matrix product in the ring."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape[-1] != y.shape[0]:
        raise DimensionMismatch("inner dimensions differ")
    if ring.degree > 1:
        out = np.zeros((x.shape[0], y.shape[1]), dtype=np.int64)
        for i in range(x.shape[0]):
            for j in range(y.shape[1]):
                acc = 0
                for k in range(x.shape[1]):
                    if x[i, k] and y[k, j]:
                        acc = ring.add(acc, ring.mul(int(x[i, k]), int(y[k, j])))
                out[i, j] = acc
        return out
    modulus = ring.modulus
    if x.shape[-1] * (modulus - 1) ** 2 < 2**52:
        return np.rint(x.astype(np.float64) @ y.astype(np.float64)).astype(np.int64) % modulus
    return (x @ y) % modulus  # pragma: no cover


def image(space: Subspace, mat, ring: CoeffRing | None = None) -> Subspace:
    """Image of the span under right multiplication v -> v @ mat."""
    ring = ring or space.ring
    mat = np.asarray(mat, dtype=np.int64)
    return canonicalize(matmul(space.rows, mat, ring), ring, mat.shape[1])


def solve(gens, target, ring: CoeffRing) -> np.ndarray | None:
    """Coefficients c with c @ gens = target, or None when target is not in the span.

    Over a field the particular solution with all free coefficients zero is
    returned (deterministic choice).
    """
    gens = _as_matrix(gens)
    target = np.asarray(target, dtype=np.int64).reshape(-1)
    ngens, ambient = gens.shape
    if target.shape[0] != ambient:
        raise DimensionMismatch("target length differs from generator width")
    if ngens == 0:
        return np.zeros(0, dtype=np.int64) if not target.any() else None
    # Echelonize [gens | I]; reduce [target | 0] by the rows.
    augmented = np.hstack([gens, np.eye(ngens, dtype=np.int64)])
    form = echelon(augmented, ring)
    space = Subspace(ring, ambient + ngens, form)
    probe = np.concatenate([target, np.zeros(ngens, dtype=np.int64)])
    residual = space.reduce(probe)
    if residual[:ambient].any():
        return None
    coeffs = residual[ambient:]
    if ring.degree > 1:
        return np.array([ring.neg(int(c)) for c in coeffs], dtype=np.int64)
    return (-coeffs) % ring.modulus


class LinearSolver:
    """Reusable solver for c @ gens = target against a fixed generator matrix."""

    def __init__(self, gens, ring: CoeffRing, ambient: int | None = None):
        gens = _as_matrix(gens, ambient)
        self.ring = ring
        self.ngens, self.ambient = gens.shape
        augmented = np.hstack([gens, np.eye(self.ngens, dtype=np.int64)])
        self._space = Subspace(ring, self.ambient + self.ngens, echelon(augmented, ring))
        self.span = canonicalize(gens, ring, self.ambient)

    def solve(self, target) -> np.ndarray | None:
        target = np.asarray(target, dtype=np.int64).reshape(-1)
        if target.shape[0] != self.ambient:
            raise DimensionMismatch("target length differs from generator width")
        probe = np.concatenate([target, np.zeros(self.ngens, dtype=np.int64)])
        residual = self._space.reduce(probe)
        if residual[:self.ambient].any():
            return None
        coeffs = residual[self.ambient:]
        if self.ring.degree > 1:
            return np.array([self.ring.neg(int(c)) for c in coeffs], dtype=np.int64)
        return (-coeffs) % self.ring.modulus


def coordinate_subspace(ring: CoeffRing, ambient: int, coords: Iterable[int]) -> Subspace:
    coords = sorted(set(coords))
    mat = np.zeros((len(coords), ambient), dtype=np.int64)
    for k, c in enumerate(coords):
        mat[k, c] = 1
    return canonicalize(mat, ring, ambient)


def restrict_to_coordinates(space: Subspace, coords: Sequence[int]) -> Subspace:
    """space ∩ (span of the unit vectors at ``coords``)."""
    keep = np.zeros(space.ambient, dtype=bool)
    keep[list(coords)] = True
    outside = np.nonzero(~keep)[0]
    if space.rank == 0:
        return space
    relations = left_kernel(space.rows[:, outside], space.ring) if outside.size else None
    if relations is None:
        return space
    if relations.rank == 0:
        return zero_subspace(space.ring, space.ambient)
    return canonicalize(matmul(relations.rows, space.rows, space.ring), space.ring, space.ambient)
