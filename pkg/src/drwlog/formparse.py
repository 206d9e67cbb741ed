"""Text syntax for forms and units.

    expr   := term (('+' | '-') term)*
    term   := ['-'] factor (('*' | '^') factor)*
    factor := INT | 'T<i>' ['^' INT] | 'dlog' '(' expr ')' | 'd' '(' expr ')' | '(' expr ')'

'^' between forms is the wedge product; right after a variable and before an
integer it is a power.  '*' multiplies by functions (degree 0).  The argument of
dlog must evaluate to T^z·u with u a unit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

from .forms import LogForm, dlog, ext_d, wedge
from .modlin import CoeffRing
from .series import LocalizedUnit, TruncSeries


class FormSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class FormTypeError(ValueError):
    """Degree mismatch or a non-unit under dlog."""


# AST ----------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    index: int  # 1-based as printed
    power: int = 1


@dataclass(frozen=True)
class Dlog:
    arg: "Node"


@dataclass(frozen=True)
class Diff:
    arg: "Node"


@dataclass(frozen=True)
class Product:
    factors: tuple["Node", ...]
    ops: tuple[str, ...]  # len(factors) - 1 entries of '*' or '^'


@dataclass(frozen=True)
class Sum:
    terms: tuple["Node", ...]
    signs: tuple[int, ...]


Node = Union[Num, Var, Dlog, Diff, Product, Sum]

_TOKEN = re.compile(r"\s*(?:(dlog)|(d)(?=\s*\()|T(\d+)|(\d+)|(.))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        start = m.start() + len(m.group(0)) - len(m.group(0).lstrip())
        if m.group(1):
            tokens.append(("DLOG", "dlog", start))
        elif m.group(2):
            tokens.append(("D", "d", start))
        elif m.group(3):
            tokens.append(("VAR", m.group(3), start))
        elif m.group(4):
            tokens.append(("INT", m.group(4), start))
        else:
            ch = m.group(5)
            if ch not in "+-*^()":
                raise FormSyntaxError(f"unexpected character {ch!r}", start)
            tokens.append((ch, ch, start))
        pos = m.end()
    tokens.append(("END", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.k = 0

    def peek(self, offset: int = 0):
        return self.tokens[min(self.k + offset, len(self.tokens) - 1)]

    def take(self, kind: str):
        tok = self.peek()
        if tok[0] != kind:
            raise FormSyntaxError(f"expected {kind!r}, found {tok[1] or 'end of input'!r}", tok[2])
        self.k += 1
        return tok

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "END":
            tok = self.peek()
            raise FormSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return node

    def expr(self) -> Node:
        terms, signs = [], []
        sign = 1
        if self.peek()[0] == "-":
            self.take("-")
            sign = -1
        terms.append(self.term())
        signs.append(sign)
        while self.peek()[0] in "+-" and self.peek()[0] in ("+", "-"):
            sign = 1 if self.take(self.peek()[0])[0] == "+" else -1
            terms.append(self.term())
            signs.append(sign)
        if len(terms) == 1 and signs[0] == 1:
            return terms[0]
        return Sum(tuple(terms), tuple(signs))

    def term(self) -> Node:
        factors = [self.factor()]
        ops = []
        while self.peek()[0] in ("*", "^"):
            ops.append(self.take(self.peek()[0])[0])
            factors.append(self.factor())
        if len(factors) == 1:
            return factors[0]
        return Product(tuple(factors), tuple(ops))

    def factor(self) -> Node:
        kind, value, pos = self.peek()
        if kind == "INT":
            self.take("INT")
            return Num(int(value))
        if kind == "VAR":
            self.take("VAR")
            index = int(value)
            if index < 1:
                raise FormSyntaxError("variables are numbered from T1", pos)
            power = 1
            if self.peek()[0] == "^" and self.peek(1)[0] == "INT":
                self.take("^")
                power = int(self.take("INT")[1])
            return Var(index, power)
        if kind in ("DLOG", "D"):
            self.take(kind)
            self.take("(")
            arg = self.expr()
            self.take(")")
            return Dlog(arg) if kind == "DLOG" else Diff(arg)
        if kind == "(":
            self.take("(")
            inner = self.expr()
            self.take(")")
            return inner
        raise FormSyntaxError(f"unexpected {value or 'end of input'!r}", pos)


def parse_form(text: str) -> Node:
    return _Parser(text).parse()


def format_node(node: Node) -> str:
    """Canonical text; parse(format(x)) == x."""
    if isinstance(node, Num):
        return str(node.value)
    if isinstance(node, Var):
        return f"T{node.index}" if node.power == 1 else f"T{node.index}^{node.power}"
    if isinstance(node, Dlog):
        return f"dlog({format_node(node.arg)})"
    if isinstance(node, Diff):
        return f"d({format_node(node.arg)})"
    if isinstance(node, Product):
        parts = [_wrap(node.factors[0])]
        for op, factor in zip(node.ops, node.factors[1:]):
            parts.append(" ^ " if op == "^" else "*")
            parts.append(_wrap(factor))
        return "".join(parts)
    if isinstance(node, Sum):
        out = []
        for k, (sign, term) in enumerate(zip(node.signs, node.terms)):
            text = _wrap(term) if isinstance(term, Sum) else format_node(term)
            if k == 0:
                out.append(("-" if sign < 0 else "") + text)
            else:
                out.append((" - " if sign < 0 else " + ") + text)
        return "".join(out)
    raise TypeError(node)


def _wrap(node: Node) -> str:
    return f"({format_node(node)})" if isinstance(node, (Sum, Product)) else format_node(node)


# evaluation -----------------------------------------------------------------

Value = Union[TruncSeries, LogForm]


class _Evaluator:
    def __init__(self, ring: CoeffRing, d: int, prec: int, log_axes: frozenset[int]):
        self.ring, self.d, self.prec, self.log_axes = ring, d, prec, log_axes

    def run(self, node: Node) -> Value:
        method = getattr(self, "_" + type(node).__name__.lower())
        return method(node)

    def _num(self, node: Num) -> Value:
        return TruncSeries.constant(self.ring, self.d, self.prec, self.ring.from_int(node.value))

    def _var(self, node: Var) -> Value:
        if node.index > self.d:
            raise FormTypeError(f"T{node.index} exceeds d={self.d}")
        exps = tuple(node.power if j == node.index - 1 else 0 for j in range(self.d))
        return TruncSeries.monomial(self.ring, self.d, self.prec, exps, 1)

    def _series(self, node: Node, what: str) -> TruncSeries:
        value = self.run(node)
        if not isinstance(value, TruncSeries):
            raise FormTypeError(f"{what} needs a function, got a {value.q}-form")
        return value

    def _dlog(self, node: Dlog) -> Value:
        return dlog(as_localized_unit(self._series(node.arg, "dlog")), None).with_log_axes(self._axes_for(node))

    def _axes_for(self, node: Dlog) -> frozenset[int]:
        unit = as_localized_unit(self._series(node.arg, "dlog"))
        return self.log_axes | unit.inverted_axes

    def _diff(self, node: Diff) -> Value:
        series = self._series(node.arg, "d")
        zero_form = LogForm(self.ring, self.d, 0, self.prec, frozenset(),
                            {((), e): c for e, c in series.coeffs.items()})
        return ext_d(zero_form)

    def _product(self, node: Product) -> Value:
        acc = self.run(node.factors[0])
        for op, factor in zip(node.ops, node.factors[1:]):
            value = self.run(factor)
            acc = _multiply(acc, value, op)
        return acc

    def _sum(self, node: Sum) -> Value:
        total = None
        for sign, term in zip(node.signs, node.terms):
            value = self.run(term)
            if sign < 0:
                value = value.scale(self.ring.neg(1)) if isinstance(value, LogForm) else value.scale(self.ring.neg(1))
            if total is None:
                total = value
            else:
                total = _add(total, value)
        return total


def _add(a: Value, b: Value) -> Value:
    if isinstance(a, TruncSeries) and isinstance(b, TruncSeries):
        return a + b
    if isinstance(a, LogForm) and isinstance(b, LogForm):
        if a.q != b.q:
            raise FormTypeError(f"cannot add a {a.q}-form and a {b.q}-form")
        axes = a.log_axes | b.log_axes
        prec = min(a.prec, b.prec)
        return _clip(a, prec).with_log_axes(axes) + _clip(b, prec).with_log_axes(axes)
    raise FormTypeError("cannot add a function and a form")


def _clip(form: LogForm, prec: int) -> LogForm:
    return form.truncate(prec) if form.prec > prec else form


def _multiply(a: Value, b: Value, op: str) -> Value:
    if isinstance(a, TruncSeries) and isinstance(b, TruncSeries):
        return a * b
    if isinstance(a, TruncSeries):
        return b.mul_series(a)
    if isinstance(b, TruncSeries):
        return a.mul_series(b)
    if op != "^":
        raise FormTypeError("use '^' for the wedge product of forms")
    return wedge(a, b)


def as_localized_unit(series: TruncSeries) -> LocalizedUnit:
    """Write series = T^z · u with u a unit (raises FormTypeError otherwise)."""
    if series.is_zero():
        raise FormTypeError("dlog(0) is undefined")
    z = tuple(min(e[j] for e in series.coeffs) for j in range(series.d))
    shifted = {tuple(a - b for a, b in zip(e, z)): c for e, c in series.coeffs.items()}
    # u is known below prec - |z|, except for a bare monomial where u = 1 exactly
    unit_prec = series.prec if len(shifted) == 1 else series.prec - sum(z)
    unit = TruncSeries(series.ring, series.d, unit_prec, shifted)
    if not series.ring.is_unit(unit.constant_term()):
        raise FormTypeError("argument of dlog is not a unit times a monomial")
    return LocalizedUnit(unit, z)


def evaluate(node: Node, ring: CoeffRing, d: int, prec: int, log_axes: Iterable[int] = ()) -> Value:
    """Evaluate to a series (degree 0) or a LogForm, declared in the given log structure when possible."""
    axes = frozenset(log_axes)
    value = _Evaluator(ring, d, prec, axes).run(node)
    if isinstance(value, LogForm):
        value = _clip(value, prec)
        try:
            value = value.with_log_axes(axes)
        except ValueError as exc:
            raise FormTypeError(f"form has poles outside the log axes {sorted(a + 1 for a in axes)}") from exc
    return value


def evaluate_text(text: str, ring: CoeffRing, d: int, prec: int, log_axes: Iterable[int] = ()) -> Value:
    return evaluate(parse_form(text), ring, d, prec, log_axes)
