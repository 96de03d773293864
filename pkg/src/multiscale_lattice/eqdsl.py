"""Lattice-equation DSL: parser, printer, numeric evaluation and cubic jets.

Grammar::

    equation := expr ("=" expr)?
    expr     := term (("+"|"-") term)*
    term     := factor (("*"|"/") factor)*
    factor   := base ("^" integer)?
    base     := number | "i" | identifier | field | "exp" "(" expr ")"
              | "dt" "(" field ")" | "(" expr ")" | "-" base
    field    := "u" "[" integer ("," integer)? "]"

``lhs = rhs`` is stored as ``lhs - rhs``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Mapping, Union

import numpy as np

from .errors import (
    DegenerateLinearPart,
    MixedTimeKind,
    NonIntegerShift,
    NonlinearTimeDerivative,
    NonzeroAtOrigin,
    ParseError,
    UnknownFunction,
    UnknownParameter,
    ZeroDenominatorAtOrigin,
)

FULLY_DISCRETE = "fully-discrete"
DIFF_DIFF = "differential-difference"

JET_ORDER = 3


# ---------------------------------------------------------------------------
# Expression nodes


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Imag:
    pass


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class FieldRef:
    dn: int
    dm: int | None = None

    @property
    def offset(self) -> tuple[int, ...]:
        return (self.dn,) if self.dm is None else (self.dn, self.dm)


@dataclass(frozen=True)
class Dt:
    field: FieldRef


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Exp:
    arg: "Node"


Node = Union[Num, Imag, Param, FieldRef, Dt, Neg, BinOp, Pow, Exp]


@dataclass(frozen=True)
class EquationIR:
    root: Node
    fields_used: tuple[tuple[int, ...], ...]
    dt_used: tuple[tuple[int, ...], ...]
    time_kind: str
    params_used: tuple[str, ...]
    source: str = ""


# ---------------------------------------------------------------------------
# Tokenizer / parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^=(),\[\]])
    """,
    re.VERBOSE,
)

_RESERVED = {"i", "u", "exp", "dt"}


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            tokens.append(_Token(kind, text, line, pos - line_start + 1))
        else:
            for j, ch in enumerate(text):
                if ch == "\n":
                    line += 1
                    line_start = pos + j + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.pos = 0
        self.kinds: set[str] = set()

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def _error(self, message: str, tok: _Token | None = None, cls=ParseError):
        tok = tok or self.tok
        where = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise cls(f"{message} at {where}", tok.line, tok.col)

    def _accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def _expect(self, text: str) -> None:
        if not self._accept(text):
            self._error(f"expected {text!r}")

    def parse(self) -> Node:
        if self.tok.kind == "eof":
            self._error("empty equation")
        lhs = self.expr()
        if self._accept("="):
            rhs = self.expr()
            lhs = BinOp("-", lhs, rhs)
        if self.tok.kind != "eof":
            self._error("unexpected token")
        return lhs

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.pos += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.pos += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        node = self.base()
        if self._accept("^"):
            node = Pow(node, self.integer("exponent"))
        return node

    def integer(self, what: str) -> int:
        sign = -1 if self._accept("-") else 1
        tok = self.tok
        if tok.kind != "number":
            self._error(f"expected integer {what}")
        if not re.fullmatch(r"\d+", tok.text):
            self._error(f"{what} must be an integer", tok, NonIntegerShift)
        self.pos += 1
        return sign * int(tok.text)

    def base(self) -> Node:
        tok = self.tok
        if tok.kind == "number":
            self.pos += 1
            return Num(float(tok.text))
        if tok.kind == "op":
            if self._accept("("):
                node = self.expr()
                self._expect(")")
                return node
            if self._accept("-"):
                return Neg(self.base())
            self._error("unexpected token")
        if tok.kind == "ident":
            name = tok.text
            self.pos += 1
            if name == "i":
                return Imag()
            if name == "u":
                return self.field_tail(tok)
            if name == "exp":
                self._expect("(")
                node = self.expr()
                self._expect(")")
                return Exp(node)
            if name == "dt":
                self._expect("(")
                if not (self.tok.kind == "ident" and self.tok.text == "u"):
                    self._error("dt() takes a field reference")
                ftok = self.tok
                self.pos += 1
                ref = self.field_tail(ftok)
                self._expect(")")
                self._note_kind(DIFF_DIFF, ftok)
                if ref.dm is not None:
                    self._error("dt() of a two-index field", ftok, MixedTimeKind)
                return Dt(ref)
            if self.tok.kind == "op" and self.tok.text == "(":
                self._error(f"unknown function {name!r}", tok, UnknownFunction)
            return Param(name)
        self._error("unexpected end of input")

    def field_tail(self, tok: _Token) -> FieldRef:
        if not self._accept("["):
            self._error("expected '[' after field name")
        dn = self.integer("shift")
        dm = None
        if self._accept(","):
            dm = self.integer("shift")
        self._expect("]")
        self._note_kind(FULLY_DISCRETE if dm is not None else DIFF_DIFF, tok)
        return FieldRef(dn, dm)

    def _note_kind(self, kind: str, tok: _Token) -> None:
        self.kinds.add(kind)
        if len(self.kinds) > 1:
            raise MixedTimeKind(
                "mixed time kinds: two-index fields cannot be combined with "
                "one-index fields or dt()",
                tok.line,
                tok.col,
            )


def _walk(node: Node):
    yield node
    if isinstance(node, BinOp):
        yield from _walk(node.left)
        yield from _walk(node.right)
    elif isinstance(node, (Neg, Exp)):
        yield from _walk(node.arg)
    elif isinstance(node, Pow):
        yield from _walk(node.base)
    elif isinstance(node, Dt):
        yield node.field


def parse_equation(src: str) -> EquationIR:
    parser = _Parser(src)
    root = parser.parse()
    dts, params = set(), set()
    for node in _walk(root):
        if isinstance(node, Dt):
            dts.add(node.field.offset)
        elif isinstance(node, Param):
            params.add(node.name)
    kind = DIFF_DIFF if DIFF_DIFF in parser.kinds else FULLY_DISCRETE
    # dt(u[k]) contributes a time-derivative slot, not a plain field slot
    plain = {node.offset for node in _walk_plain(root)}
    return EquationIR(
        root=root,
        fields_used=tuple(sorted(plain)),
        dt_used=tuple(sorted(dts)),
        time_kind=kind,
        params_used=tuple(sorted(params)),
        source=src,
    )


def _walk_plain(node: Node):
    """Field references that are not wrapped in dt()."""
    if isinstance(node, FieldRef):
        yield node
    elif isinstance(node, BinOp):
        yield from _walk_plain(node.left)
        yield from _walk_plain(node.right)
    elif isinstance(node, (Neg, Exp)):
        yield from _walk_plain(node.arg)
    elif isinstance(node, Pow):
        yield from _walk_plain(node.base)


# ---------------------------------------------------------------------------
# Printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _atomic(node: Node) -> bool:
    return isinstance(node, (Num, Imag, Param, FieldRef, Dt, Exp))


def _fmt_num(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def to_source(node: Node | EquationIR) -> str:
    """Print an expression so that re-parsing yields the same tree."""
    if isinstance(node, EquationIR):
        node = node.root
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Imag):
        return "i"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, FieldRef):
        if node.dm is None:
            return f"u[{node.dn}]"
        return f"u[{node.dn},{node.dm}]"
    if isinstance(node, Dt):
        return f"dt({to_source(node.field)})"
    if isinstance(node, Exp):
        return f"exp({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.arg)
        return f"-{inner}" if _atomic(node.arg) else f"-({inner})"
    if isinstance(node, Pow):
        inner = to_source(node.base)
        if not _atomic(node.base):
            inner = f"({inner})"
        return f"{inner}^{node.exponent}"
    if isinstance(node, BinOp):
        left = to_source(node.left)
        right = to_source(node.right)
        if not _atomic(node.left) and not isinstance(node.left, Pow):
            left = f"({left})"
        if not _atomic(node.right) and not isinstance(node.right, Pow):
            right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Evaluation


def _exp(x):
    if isinstance(x, Jet):
        return x.exp()
    return np.exp(x)


def evaluate(
    node: Node | EquationIR,
    params: Mapping[str, float],
    fields: Mapping[tuple[int, ...], object],
    dts: Mapping[tuple[int, ...], object] | None = None,
):
    """Evaluate an expression tree.

    ``fields`` and ``dts`` map shift offsets to values; values may be scalars,
    numpy arrays or :class:`Jet` objects.
    """
    if isinstance(node, EquationIR):
        node = node.root
    dts = dts or {}

    def ev(n: Node):
        if isinstance(n, Num):
            return n.value
        if isinstance(n, Imag):
            return 1j
        if isinstance(n, Param):
            try:
                return params[n.name]
            except KeyError:
                raise UnknownParameter(f"parameter {n.name!r} has no value") from None
        if isinstance(n, FieldRef):
            return fields[n.offset]
        if isinstance(n, Dt):
            return dts[n.field.offset]
        if isinstance(n, Neg):
            return -ev(n.arg)
        if isinstance(n, Exp):
            return _exp(ev(n.arg))
        if isinstance(n, Pow):
            b = ev(n.base)
            if n.exponent >= 0:
                return b**n.exponent
            return 1 / (b ** (-n.exponent))
        if isinstance(n, BinOp):
            a, b = ev(n.left), ev(n.right)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            return a / b
        raise TypeError(f"not an expression node: {n!r}")

    return ev(node)


# ---------------------------------------------------------------------------
# Truncated multivariate Taylor polynomials


def _monomials(nvars: int, degree: int):
    out = []
    for d in range(degree + 1):
        for combo in combinations_with_replacement(range(nvars), d):
            exps = [0] * nvars
            for v in combo:
                exps[v] += 1
            out.append(tuple(exps))
    return out


class Jet:
    """Degree-3 truncated polynomial in ``nvars`` variables (dense map)."""

    __slots__ = ("nvars", "c")
    __array_priority__ = 100

    def __init__(self, nvars: int, coeffs: dict[tuple[int, ...], complex] | None = None):
        self.nvars = nvars
        self.c = coeffs if coeffs is not None else {}

    @classmethod
    def const(cls, nvars: int, value) -> "Jet":
        return cls(nvars, {(0,) * nvars: complex(value)})

    @classmethod
    def var(cls, nvars: int, index: int) -> "Jet":
        e = [0] * nvars
        e[index] = 1
        return cls(nvars, {tuple(e): 1.0 + 0j})

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.const(self.nvars, other)

    @property
    def constant(self) -> complex:
        return self.c.get((0,) * self.nvars, 0j)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.c)
        for k, v in other.c.items():
            out[k] = out.get(k, 0j) + v
        return Jet(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.nvars, {k: -v for k, v in self.c.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.nvars, {k: v * other for k, v in self.c.items()})
        out: dict[tuple[int, ...], complex] = {}
        for ka, va in self.c.items():
            da = sum(ka)
            for kb, vb in other.c.items():
                if da + sum(kb) > JET_ORDER:
                    continue
                k = tuple(x + y for x, y in zip(ka, kb))
                out[k] = out.get(k, 0j) + va * vb
        return Jet(self.nvars, out)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        c0 = self.constant
        if c0 == 0:
            raise ZeroDenominatorAtOrigin("denominator vanishes at u = 0")
        r = (self - c0) * (-1.0 / c0)
        acc = Jet.const(self.nvars, 1.0)
        term = Jet.const(self.nvars, 1.0)
        for _ in range(JET_ORDER):
            term = term * r
            acc = acc + term
        return acc * (1.0 / c0)

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("jets support integer powers only")
        if n < 0:
            return self.reciprocal() ** (-n)
        acc = Jet.const(self.nvars, 1.0)
        for _ in range(n):
            acc = acc * self
        return acc

    def exp(self) -> "Jet":
        c0 = self.constant
        r = self - c0
        acc = Jet.const(self.nvars, 1.0)
        term = Jet.const(self.nvars, 1.0)
        for k in range(1, JET_ORDER + 1):
            term = term * r * (1.0 / k)
            acc = acc + term
        return acc * complex(np.exp(c0))

    def __call__(self, point) -> complex:
        point = list(point)
        total = 0j
        for k, v in self.c.items():
            p = 1.0
            for x, e in zip(point, k):
                if e:
                    p = p * x**e
            total = total + v * p
        return total


# ---------------------------------------------------------------------------
# Validation and jets


@dataclass(frozen=True)
class ModelInfo:
    time_kind: str
    slots: tuple[tuple[int, ...], ...]
    dt_slots: tuple[tuple[int, ...], ...]
    linear_nonzero: bool
    value_at_origin: complex


@dataclass(frozen=True)
class PolyEquation:
    """Cubic Taylor polynomial of an equation around ``u = 0``.

    ``terms`` maps exponent tuples over ``slots`` to coefficients; ``dt_terms``
    maps a shift offset to the coefficient of ``dt(u[offset])``.
    """

    slots: tuple[tuple[int, ...], ...]
    terms: dict[tuple[int, ...], complex]
    dt_terms: dict[tuple[int, ...], complex]
    time_kind: str
    degree: int = JET_ORDER
    real_coefficients: bool = True

    def linear_terms(self) -> dict[tuple[int, ...], complex]:
        out = {}
        for exps, c in self.terms.items():
            if sum(exps) == 1:
                out[self.slots[exps.index(1)]] = c
        return out

    def scale(self) -> float:
        vals = [abs(c) for c in self.linear_terms().values()]
        vals += [abs(c) for c in self.dt_terms.values()]
        return max(vals) if vals else 0.0

    def __call__(self, values: Mapping[tuple[int, ...], object], dts=None):
        """Evaluate the polynomial (vectorised over numpy values)."""
        total = 0
        for exps, c in self.terms.items():
            p = c
            for slot, e in zip(self.slots, exps):
                if e:
                    p = p * values[slot] ** e
            total = total + p
        for slot, c in self.dt_terms.items():
            total = total + c * (dts or {})[slot]
        return total


def _check_params(eq: EquationIR, params: Mapping[str, float]) -> None:
    missing = [p for p in eq.params_used if p not in params]
    if missing:
        raise UnknownParameter(f"no value for parameter(s): {', '.join(missing)}")


def _check_denominators(eq: EquationIR, params, zeros, dzeros) -> None:
    for node in _walk(eq.root):
        den = None
        if isinstance(node, BinOp) and node.op == "/":
            den = node.right
        elif isinstance(node, Pow) and node.exponent < 0:
            den = node.base
        if den is not None:
            val = evaluate(den, params, zeros, dzeros)
            if abs(val) == 0:
                raise ZeroDenominatorAtOrigin(
                    f"denominator {to_source(den)!r} vanishes at u = 0"
                )


def _jet_raw(eq: EquationIR, params: Mapping[str, float]) -> tuple[Jet, int]:
    slots = list(eq.fields_used)
    nvars = len(slots) + len(eq.dt_used)
    fields = {s: Jet.var(nvars, i) for i, s in enumerate(slots)}
    dts = {s: Jet.var(nvars, len(slots) + i) for i, s in enumerate(eq.dt_used)}
    return evaluate(eq.root, params, fields, dts), len(slots)


def validate(eq: EquationIR, params: Mapping[str, float]) -> ModelInfo:
    _check_params(eq, params)
    zeros = {s: 0.0 for s in eq.fields_used}
    dzeros = {s: 0.0 for s in eq.dt_used}
    _check_denominators(eq, params, zeros, dzeros)
    value = complex(evaluate(eq.root, params, zeros, dzeros))
    jet, nplain = _jet_raw(eq, params)
    lin = [abs(v) for k, v in jet.c.items() if sum(k) == 1]
    scale = max([abs(v) for v in jet.c.values()] + [1.0])
    if abs(value) > 1e-12 * scale:
        raise NonzeroAtOrigin(f"u = 0 is not a solution: equation value {value!r}")
    if not lin or max(lin) <= 1e-14 * scale:
        raise DegenerateLinearPart("the linearization around u = 0 vanishes")
    return ModelInfo(
        time_kind=eq.time_kind,
        slots=eq.fields_used,
        dt_slots=eq.dt_used,
        linear_nonzero=True,
        value_at_origin=value,
    )


def taylor_jet(eq: EquationIR, params: Mapping[str, float], order: int = JET_ORDER) -> PolyEquation:
    if order != JET_ORDER:
        raise ValueError("only cubic jets are supported")
    validate(eq, params)
    jet, nplain = _jet_raw(eq, params)
    scale = max(abs(v) for v in jet.c.values())
    tiny = 1e-15 * scale
    terms: dict[tuple[int, ...], complex] = {}
    dt_terms: dict[tuple[int, ...], complex] = {}
    for exps, c in jet.c.items():
        if abs(c) <= tiny or sum(exps) == 0:
            continue
        plain, timed = exps[:nplain], exps[nplain:]
        if any(timed):
            if sum(exps) > 1:
                raise NonlinearTimeDerivative(
                    "dt() occurs inside a nonlinear term; only linear time derivatives are supported"
                )
            dt_terms[eq.dt_used[timed.index(1)]] = c
        else:
            terms[plain] = c
    used = [i for i in range(nplain) if any(k[i] for k in terms)]
    slots = tuple(eq.fields_used[i] for i in used)
    terms = {tuple(k[i] for i in used): c for k, c in terms.items()}
    coeffs = list(terms.values()) + list(dt_terms.values())
    real = all(abs(c.imag) <= 1e-14 * scale for c in coeffs)
    return PolyEquation(
        slots=slots,
        terms=terms,
        dt_terms=dt_terms,
        time_kind=eq.time_kind,
        real_coefficients=real,
    )


def linearization(eq: EquationIR, params: Mapping[str, float]) -> dict[tuple[int, ...], complex]:
    """Degree-1 coefficients by central differences of the exact equation.

    Independent of the jet arithmetic; used to cross-check it.
    """
    _check_params(eq, params)
    out = {}
    h = 1e-6
    zeros = {s: 0.0 for s in eq.fields_used}
    dzeros = {s: 0.0 for s in eq.dt_used}
    for s in eq.fields_used:
        plus = {**zeros, s: h}
        minus = {**zeros, s: -h}
        d = (evaluate(eq.root, params, plus, dzeros) - evaluate(eq.root, params, minus, dzeros)) / (2 * h)
        out[s] = complex(d)
    return out


__all__ = [
    "BinOp",
    "DIFF_DIFF",
    "Dt",
    "EquationIR",
    "Exp",
    "FULLY_DISCRETE",
    "FieldRef",
    "Imag",
    "Jet",
    "ModelInfo",
    "Neg",
    "Num",
    "Param",
    "PolyEquation",
    "Pow",
    "evaluate",
    "linearization",
    "parse_equation",
    "taylor_jet",
    "to_source",
    "validate",
]
