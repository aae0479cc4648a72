"""Flow-function expression language.

Flow functions are kept as syntax trees rather than closures so that the
operations every gluing construction needs (renaming link variables,
summing functions, serializing) are purely syntactic. No simplification or
constant folding is ever applied: renaming a variable and then evaluating
gives bit-identical results to evaluating under the composed environment.

Grammar (left-associative, standard precedence):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'

``exp``, ``min`` and ``max`` are reserved call names; ``t`` is the reserved
time variable, legal only in exogenous-input expressions. Identifiers admit
``@ : # ~`` after the first character because generated link ids use those
separators.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence

from .errors import (
    DivisionByZero,
    EmptySum,
    ExprSyntaxError,
    MissingRename,
    MissingVariable,
)

TIME_VAR = "t"
CALL_ARITY = {"exp": 1, "min": 2, "max": 2}


class FlowExpr:
    """Base class for expression nodes. Nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_source(self)


@dataclass(frozen=True)
class Num(FlowExpr):
    value: float


@dataclass(frozen=True)
class Var(FlowExpr):
    name: str


@dataclass(frozen=True)
class Neg(FlowExpr):
    arg: FlowExpr


@dataclass(frozen=True)
class BinOp(FlowExpr):
    op: str  # one of + - * /
    left: FlowExpr
    right: FlowExpr


@dataclass(frozen=True)
class Call(FlowExpr):
    fn: str
    args: tuple[FlowExpr, ...]


# -- parsing ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_@:#~]*)"
    r"|(?P<op>[-+*/(),])"
)


@dataclass(frozen=True)
class _Token:
    kind: str   # NUMBER, IDENT, one of + - * / ( ) , or EOF
    text: str
    offset: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExprSyntaxError(pos, ("NUMBER", "IDENT", "operator"), repr(src[pos]))
        if m.lastgroup == "number":
            tokens.append(_Token("NUMBER", m.group(), pos))
        elif m.lastgroup == "ident":
            tokens.append(_Token("IDENT", m.group(), pos))
        elif m.lastgroup == "op":
            tokens.append(_Token(m.group(), m.group(), pos))
        pos = m.end()
    tokens.append(_Token("EOF", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, *expected: str) -> ExprSyntaxError:
        tok = self.peek()
        found = "end of input" if tok.kind == "EOF" else repr(tok.text)
        return ExprSyntaxError(tok.offset, tuple(expected), found)

    def expect(self, kind: str) -> _Token:
        if self.peek().kind != kind:
            raise self.fail(kind)
        return self.advance()

    def expr(self) -> FlowExpr:
        node = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> FlowExpr:
        node = self.factor()
        while self.peek().kind in ("*", "/"):
            op = self.advance().kind
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> FlowExpr:
        tok = self.peek()
        if tok.kind == "-":
            self.advance()
            return Neg(self.factor())
        if tok.kind == "NUMBER":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "IDENT":
            self.advance()
            if self.peek().kind == "(":
                if tok.text not in CALL_ARITY:
                    raise ExprSyntaxError(tok.offset, tuple(sorted(CALL_ARITY)), repr(tok.text))
                self.advance()
                args = [self.expr()]
                while self.peek().kind == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                arity = CALL_ARITY[tok.text]
                if len(args) != arity:
                    raise ExprSyntaxError(
                        tok.offset, (f"{arity} argument(s) to {tok.text}",), f"{len(args)} arguments"
                    )
                return Call(tok.text, tuple(args))
            if tok.text in CALL_ARITY:
                raise self.fail("(")
            return Var(tok.text)
        if tok.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise self.fail("NUMBER", "IDENT", "-", "(")


def parse(src: str) -> FlowExpr:
    """Parse ``src``; syntax errors carry the byte offset and the tokens
    that would have been accepted there."""
    p = _Parser(src)
    node = p.expr()
    if p.peek().kind != "EOF":
        raise p.fail("+", "-", "*", "/", "end of input")
    return node


def as_expr(e: FlowExpr | str) -> FlowExpr:
    return parse(e) if isinstance(e, str) else e


# -- printing ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_source(e: FlowExpr) -> str:
    """Render with minimal parentheses; ``parse(to_source(e)) == e`` for any
    tree the parser can produce. Negative literals render via unary minus."""
    return _render(e, 0)


def _render(e: FlowExpr, ctx: int) -> str:
    if isinstance(e, Num):
        if e.value < 0 or math.copysign(1.0, e.value) < 0:
            return _render(Neg(Num(-e.value)), ctx)
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        s = "-" + _render(e.arg, 3)
        return f"({s})" if ctx > 3 else s
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(_render(a, 0) for a in e.args)})"
    if isinstance(e, BinOp):
        prec = _PREC[e.op]
        s = f"{_render(e.left, prec)} {e.op} {_render(e.right, prec + 1)}"
        return f"({s})" if ctx > prec else s
    raise TypeError(f"not a FlowExpr: {e!r}")


# -- evaluation -------------------------------------------------------------

@dataclass(frozen=True)
class LinkEnv:
    """A point of the flow function's domain: one real per link variable,
    plus the current time for exogenous expressions."""

    values: Mapping[str, float]
    time: float | None = None


def evaluate(e: FlowExpr, env: LinkEnv) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name == TIME_VAR:
            if env.time is None:
                raise MissingVariable(TIME_VAR)
            return env.time
        try:
            return env.values[e.name]
        except KeyError:
            raise MissingVariable(e.name) from None
    if isinstance(e, Neg):
        return -evaluate(e.arg, env)
    if isinstance(e, BinOp):
        a = evaluate(e.left, env)
        b = evaluate(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0.0:
            raise DivisionByZero()
        return a / b
    if isinstance(e, Call):
        args = [evaluate(a, env) for a in e.args]
        if e.fn == "exp":
            return math.exp(args[0])
        if e.fn == "min":
            return min(args)
        return max(args)
    raise TypeError(f"not a FlowExpr: {e!r}")


def _walk(e: FlowExpr) -> Iterator[FlowExpr]:
    yield e
    if isinstance(e, Neg):
        yield from _walk(e.arg)
    elif isinstance(e, BinOp):
        yield from _walk(e.left)
        yield from _walk(e.right)
    elif isinstance(e, Call):
        for a in e.args:
            yield from _walk(a)


def free_links(e: FlowExpr) -> frozenset[str]:
    """Link variables occurring in ``e``; the time variable is excluded."""
    return frozenset(n.name for n in _walk(e) if isinstance(n, Var) and n.name != TIME_VAR)


def uses_time(e: FlowExpr) -> bool:
    return any(isinstance(n, Var) and n.name == TIME_VAR for n in _walk(e))


def precompose(e: FlowExpr, rename: Mapping[str, str]) -> FlowExpr:
    """Substitute every link variable ``v`` by ``rename[v]``.

    This realizes restriction along a link map: for any environment,
    ``evaluate(precompose(e, r), env) == evaluate(e, {v: env[r[v]]})``
    bit-exactly, because the tree shape and operation order are unchanged.
    Entries of ``rename`` beyond the free links of ``e`` are ignored; a
    missing entry raises.
    """
    def sub(node: FlowExpr) -> FlowExpr:
        if isinstance(node, Var):
            if node.name == TIME_VAR:
                return node
            if node.name not in rename:
                raise MissingRename(node.name)
            return Var(rename[node.name])
        if isinstance(node, Neg):
            return Neg(sub(node.arg))
        if isinstance(node, BinOp):
            return BinOp(node.op, sub(node.left), sub(node.right))
        if isinstance(node, Call):
            return Call(node.fn, tuple(sub(a) for a in node.args))
        return node

    return sub(e)


def sum_exprs(es: Sequence[FlowExpr]) -> FlowExpr:
    """Left fold of ``+`` over ``es``; a singleton sum is the element itself."""
    if not es:
        raise EmptySum()
    acc = es[0]
    for e in es[1:]:
        acc = BinOp("+", acc, e)
    return acc
