"""Guard and computation expressions over event values, plus duration parsing.

Concrete syntax (lowest to highest precedence)::

    or  <  and  <  = != < <= > >=  <  + -  <  * /  <  not, unary -

Event values are referenced as ``@name``; literals are decimal integers,
``true``/``false`` and double-quoted strings with JSON escapes.
Comparisons do not chain: ``@a < @b < @c`` is a syntax error.
"""
from __future__ import annotations

import json
import re
import warnings
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Union

from .errors import DcrSyntaxError, DivisionByZero, TypeMismatch, UndefinedValue

Value = Union[int, bool, str]


def value_kind(value: Value) -> str:
    # bool before int: bool is an int subclass
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, str):
        return "text"
    raise TypeMismatch(f"not a value: {value!r}")


def same_value(a: Value, b: Value) -> bool:
    """Equality that keeps ``1`` and ``true`` apart."""
    return value_kind(a) == value_kind(b) and a == b


@dataclass(frozen=True, eq=False)
class Lit:
    value: Value

    def __eq__(self, other):
        return isinstance(other, Lit) and same_value(self.value, other.value)

    def __hash__(self):
        return hash((value_kind(self.value), self.value))


@dataclass(frozen=True)
class Ref:
    event: str


@dataclass(frozen=True)
class Unary:
    op: str  # "not" | "-"
    operand: Expr


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr


Expr = Union[Lit, Ref, Unary, Binary]

TRUE = Lit(True)

_PREC = {"or": 1, "and": 2, "=": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3,
         "+": 4, "-": 4, "*": 5, "/": 5}
_COMPARISONS = {"=", "!=", "<", "<=", ">", ">="}
_UNARY_PREC = 6
_ATOM_PREC = 7

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<int>\d+)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<ref>@[A-Za-z_][A-Za-z0-9_]*)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|!=|==|[=<>+\-*/()])
""", re.VERBOSE)

_WORDS = {"and", "or", "not", "true", "false"}


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DcrSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "word":
            if lexeme not in _WORDS:
                raise DcrSyntaxError(f"unknown word {lexeme!r} (event references need '@')", pos)
            kind = "kw"
        elif kind == "op" and lexeme == "==":
            lexeme = "="
        if kind != "ws":
            tokens.append((kind, lexeme, pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at(self, *lexemes):
        kind, lexeme, _ = self.peek()
        return kind in ("op", "kw") and lexeme in lexemes

    def parse(self):
        node = self.or_expr()
        kind, lexeme, pos = self.peek()
        if kind != "end":
            raise DcrSyntaxError(f"unexpected {lexeme!r}", pos)
        return node

    def or_expr(self):
        node = self.and_expr()
        while self.at("or"):
            self.take()
            node = Binary("or", node, self.and_expr())
        return node

    def and_expr(self):
        node = self.comparison()
        while self.at("and"):
            self.take()
            node = Binary("and", node, self.comparison())
        return node

    def comparison(self):
        node = self.additive()
        if self.at(*_COMPARISONS):
            op = self.take()[1]
            node = Binary(op, node, self.additive())
            if self.at(*_COMPARISONS):
                raise DcrSyntaxError("comparisons do not chain; add parentheses", self.peek()[2])
        return node

    def additive(self):
        node = self.multiplicative()
        while self.at("+", "-"):
            op = self.take()[1]
            node = Binary(op, node, self.multiplicative())
        return node

    def multiplicative(self):
        node = self.unary()
        while self.at("*", "/"):
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.at("not", "-"):
            op = self.take()[1]
            return Unary(op, self.unary())
        return self.atom()

    def atom(self):
        kind, lexeme, pos = self.take()
        if kind == "int":
            return Lit(int(lexeme))
        if kind == "str":
            return Lit(json.loads(lexeme))
        if kind == "ref":
            return Ref(lexeme[1:])
        if kind == "kw" and lexeme in ("true", "false"):
            return Lit(lexeme == "true")
        if kind == "op" and lexeme == "(":
            node = self.or_expr()
            kind, lexeme, pos = self.take()
            if lexeme != ")":
                raise DcrSyntaxError("expected ')'", pos)
            return node
        if kind == "end":
            raise DcrSyntaxError("unexpected end of expression", pos)
        raise DcrSyntaxError(f"unexpected {lexeme!r}", pos)


def parse_expr(text: str) -> Expr:
    return _Parser(text).parse()


def _prec(node):
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary):
        return _UNARY_PREC
    return _ATOM_PREC


def pretty(node: Expr) -> str:
    """Render with the fewest parentheses that still parse back to ``node``."""
    if isinstance(node, Lit):
        v = node.value
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, int):
            return str(v) if v >= 0 else f"-{-v}"
        return json.dumps(v)
    if isinstance(node, Ref):
        return "@" + node.event
    if isinstance(node, Unary):
        inner = pretty(node.operand)
        if _prec(node.operand) < _UNARY_PREC:
            inner = f"({inner})"
        return f"not {inner}" if node.op == "not" else f"-{inner}"
    p = _PREC[node.op]
    left, right = pretty(node.left), pretty(node.right)
    lp, rp = _prec(node.left), _prec(node.right)
    if lp < p or (p == 3 and lp == 3):
        left = f"({left})"
    if rp <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def referenced_events(node: Expr) -> set[str]:
    if isinstance(node, Ref):
        return {node.event}
    if isinstance(node, Unary):
        return referenced_events(node.operand)
    if isinstance(node, Binary):
        return referenced_events(node.left) | referenced_events(node.right)
    return set()


def _values_of(marking):
    if isinstance(marking, Mapping):
        return marking
    return marking.values


def _want(value, kind, op):
    if value_kind(value) != kind:
        raise TypeMismatch(f"{op} expects {kind}, got {value_kind(value)} {value!r}")
    return value


def _div(a, b):
    if b == 0:
        raise DivisionByZero("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
}
_ORDER = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _eval(node, values):
    if isinstance(node, Lit):
        return node.value
    if isinstance(node, Ref):
        try:
            return values[node.event]
        except KeyError:
            raise UndefinedValue(node.event) from None
    if isinstance(node, Unary):
        v = _eval(node.operand, values)
        if node.op == "not":
            return not _want(v, "bool", "not")
        return -_want(v, "int", "negation")
    op = node.op
    if op in ("and", "or"):
        left = _want(_eval(node.left, values), "bool", op)
        if left == (op == "or"):
            return left
        return _want(_eval(node.right, values), "bool", op)
    a = _eval(node.left, values)
    b = _eval(node.right, values)
    if op in _ARITH:
        return _ARITH[op](_want(a, "int", op), _want(b, "int", op))
    if op in _ORDER:
        return _ORDER[op](_want(a, "int", op), _want(b, "int", op))
    if value_kind(a) != value_kind(b):
        raise TypeMismatch(f"cannot compare {value_kind(a)} with {value_kind(b)}")
    return (a == b) if op == "=" else (a != b)


def eval_expr(expr: Expr, marking) -> Value:
    """Evaluate ``expr`` against the values of ``marking`` (a Marking or a plain mapping).

    ``and``/``or`` short-circuit left to right; ``/`` truncates toward zero.
    """
    return _eval(expr, _values_of(marking))


class UndefinedGuardWarning(UserWarning):
    """A guard read an event that has no value yet and was treated as false."""


def eval_guard(expr: Expr, marking) -> bool:
    if expr is TRUE or expr == TRUE:
        return True
    try:
        result = _eval(expr, _values_of(marking))
    except UndefinedValue as exc:
        warnings.warn(UndefinedGuardWarning(
            f"guard {pretty(expr)!r} reads undefined @{exc.event}; treated as false"), stacklevel=2)
        return False
    if value_kind(result) != "bool":
        raise TypeMismatch(f"guard {pretty(expr)!r} produced {value_kind(result)}, not bool")
    return result


_DURATION = re.compile(
    r"P(?!$)(?:(?P<Y>\d+)Y)?(?:(?P<M>\d+)M)?(?:(?P<W>\d+)W)?(?:(?P<D>\d+)D)?"
    r"(?:T(?=\d)(?:(?P<h>\d+)H)?(?:(?P<m>\d+)M)?(?:(?P<s>\d+)S)?)?"
)

# chain time has no calendar
_SECONDS = {"Y": 365 * 86400, "M": 30 * 86400, "W": 7 * 86400, "D": 86400,
            "h": 3600, "m": 60, "s": 1}


def parse_duration(text) -> int:
    """Convert an ISO-8601 duration (or a bare tick count) to ticks of one second.

    >>> parse_duration("P1DT2H")
    93600
    """
    if isinstance(text, bool):
        raise DcrSyntaxError(f"not a duration: {text!r}")
    if isinstance(text, int):
        if text < 0:
            raise DcrSyntaxError(f"negative duration {text}")
        return text
    s = str(text).strip()
    if s.isdigit():
        return int(s)
    m = _DURATION.fullmatch(s.upper() if s[:1] in "pP" else s)
    if m is None:
        raise DcrSyntaxError(f"not an ISO-8601 duration: {text!r}", 0)
    return sum(int(v) * _SECONDS[k] for k, v in m.groupdict().items() if v is not None)
