"""A small expression language for integrands, densities and Morse functions.

Grammar (EBNF)::

    expr       = additive [ cmp_op additive ] ;      (* comparison: indicator args only *)
    cmp_op     = "<" | "<=" | ">" | ">=" | "≤" | "≥" ;
    additive   = term { ( "+" | "-" ) term } ;
    term       = unary { ( "*" | "/" ) unary } ;
    unary      = "-" unary | power ;
    power      = atom [ "^" unary ] ;                 (* right associative *)
    atom       = number | variable | constant | call | "(" expr ")" ;
    variable   = "x" digit { digit } ;                (* x0 ... x{dim-1} *)
    constant   = "pi" ;
    call       = name "(" expr { "," expr } ")" ;
    name       = "sin" | "cos" | "exp" | "log" | "abs" | "atan" | "sqrt"
               | "min" | "max" | "norm2" | "normInf" | "indicator" ;

Precedence from tightest: ``^`` (right-assoc), unary minus, ``* /``,
``+ -``, comparisons.  ``indicator(cond)`` is the only branching construct
and yields 0 or 1.

Expressions compile to a postfix program run by :mod:`meanval._backend`,
which evaluates over a whole batch of points at once.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from . import _backend
from .errors import ArityError, EvalError, ExprSyntaxError, UnknownIdentifier


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Node", ...]


Node = Union[Num, Var, Neg, BinOp, Compare, Call]

UNARY_FUNCS = ("sin", "cos", "exp", "log", "abs", "atan", "sqrt")
VARIADIC_FUNCS = ("min", "max", "norm2", "normInf")
CONSTANTS = {"pi": math.pi}


# --- tokenizer -------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|[-+*/^(),<>≤≥])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(source: str):
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            text = m.group()
            text = {"≤": "<=", "≥": ">="}.get(text, text)
            toks.append(_Tok(kind, text, line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("end", "", line, pos - line_start + 1))
    return toks


# --- parser ----------------------------------------------------------------

_BINARY_PREC = {"+": 10, "-": 10, "*": 20, "/": 20}
_CMP_OPS = ("<", "<=", ">", ">=")


class _Parser:
    def __init__(self, source: str, dimension: int):
        self.toks = _tokenize(source)
        self.i = 0
        self.dimension = dimension

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, message, tok=None):
        tok = tok or self.tok
        raise ExprSyntaxError(message, tok.line, tok.col)

    def expect(self, text):
        if self.tok.text != text or self.tok.kind == "end":
            what = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            self.fail(f"expected {text!r}, found {what}")
        return self.advance()

    def parse(self) -> Node:
        node = self.expression(allow_compare=False)
        if self.tok.kind != "end":
            self.fail(f"unexpected {self.tok.text!r}")
        return node

    def expression(self, allow_compare: bool) -> Node:
        left = self.binary(0)
        if self.tok.kind == "op" and self.tok.text in _CMP_OPS:
            if not allow_compare:
                self.fail("comparison is only allowed inside indicator(...)")
            op = self.advance().text
            right = self.binary(0)
            left = Compare(op, left, right)
            if self.tok.kind == "op" and self.tok.text in _CMP_OPS:
                self.fail("chained comparisons are not supported")
        return left

    def binary(self, min_prec: int) -> Node:
        left = self.unary()
        while self.tok.kind == "op" and _BINARY_PREC.get(self.tok.text, -1) >= min_prec:
            op = self.advance().text
            right = self.binary(_BINARY_PREC[op] + 1)
            left = BinOp(op, left, right)
        return left

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok.kind == "op" and self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(tok)
            return self.identifier(tok)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expression(allow_compare=False)
            self.expect(")")
            return node
        if tok.kind == "end":
            self.fail("unexpected end of input")
        self.fail(f"unexpected {tok.text!r}")

    def identifier(self, tok: _Tok) -> Node:
        name = tok.text
        if name in CONSTANTS:
            return Num(CONSTANTS[name])
        m = re.fullmatch(r"x(\d+)", name)
        if m is None:
            raise UnknownIdentifier(f"unknown identifier {name!r} at line {tok.line}, column {tok.col}")
        index = int(m.group(1))
        if index >= self.dimension:
            raise UnknownIdentifier(
                f"variable {name!r} out of range for dimension {self.dimension} "
                f"(line {tok.line}, column {tok.col})"
            )
        return Var(index)

    def call(self, tok: _Tok) -> Node:
        name = tok.text
        if name not in UNARY_FUNCS and name not in VARIADIC_FUNCS and name != "indicator":
            raise UnknownIdentifier(f"unknown function {name!r} at line {tok.line}, column {tok.col}")
        self.expect("(")
        args = []
        if not (self.tok.kind == "op" and self.tok.text == ")"):
            while True:
                args.append(self.expression(allow_compare=(name == "indicator")))
                if self.tok.kind == "op" and self.tok.text == ",":
                    self.advance()
                    continue
                break
        self.expect(")")
        if name in UNARY_FUNCS and len(args) != 1:
            raise ArityError(f"{name} takes 1 argument, got {len(args)} (line {tok.line}, column {tok.col})")
        if name in VARIADIC_FUNCS and not args:
            raise ArityError(f"{name} needs at least 1 argument (line {tok.line}, column {tok.col})")
        if name == "indicator":
            if len(args) != 1:
                raise ArityError(f"indicator takes 1 argument, got {len(args)} (line {tok.line}, column {tok.col})")
            if not isinstance(args[0], Compare):
                raise ArityError(f"indicator expects a comparison (line {tok.line}, column {tok.col})")
        return Call(name, tuple(args))


# --- compilation -------------------------------------------------------------

_OPCODES = {
    "const": 0, "var": 1, "neg": 2,
    "+": 3, "-": 4, "*": 5, "/": 6, "^": 7,
    "fn1": 8, "min": 9, "max": 10, "norm2": 11, "normInf": 12,
    "<": 13, "<=": 14, ">": 15, ">=": 16,
}


def _compile(node: Node):
    code, consts = [], []
    depth = [0, 0]

    def push(n=1):
        depth[0] += n
        depth[1] = max(depth[1], depth[0])

    def emit(n: Node):
        if isinstance(n, Num):
            code.extend((_OPCODES["const"], len(consts)))
            consts.append(n.value)
            push()
        elif isinstance(n, Var):
            code.extend((_OPCODES["var"], n.index))
            push()
        elif isinstance(n, Neg):
            emit(n.operand)
            code.extend((_OPCODES["neg"], 0))
        elif isinstance(n, (BinOp, Compare)):
            emit(n.left)
            emit(n.right)
            code.extend((_OPCODES[n.op], 0))
            push(-1)
        elif isinstance(n, Call):
            if n.name == "indicator":
                emit(n.args[0])
            elif n.name in UNARY_FUNCS:
                emit(n.args[0])
                code.extend((_OPCODES["fn1"], UNARY_FUNCS.index(n.name)))
            else:
                for a in n.args:
                    emit(a)
                code.extend((_OPCODES[n.name], len(n.args)))
                push(1 - len(n.args))
        else:  # pragma: no cover
            raise TypeError(n)

    emit(node)
    return (np.asarray(code, dtype=np.int64), np.asarray(consts, dtype=np.float64), max(depth[1], 1))


_ERROR_MESSAGES = {
    1: "division by zero",
    2: "log of nonpositive value",
    3: "sqrt of negative value",
    4: "power outside its real domain",
}


class Expr:
    """A parsed, compiled expression over variables ``x0 .. x{dimension-1}``."""

    __slots__ = ("source", "dimension", "ast", "_code", "_consts", "_stack")

    def __init__(self, source: str, dimension: int, ast: Node):
        self.source = source
        self.dimension = dimension
        self.ast = ast
        self._code, self._consts, self._stack = _compile(ast)

    def __repr__(self):
        return f"Expr({pretty(self.ast)!r}, dimension={self.dimension})"

    def __eq__(self, other):
        return isinstance(other, Expr) and self.ast == other.ast and self.dimension == other.dimension

    def __hash__(self):
        return hash((self.ast, self.dimension))

    def __call__(self, points):
        return evaluate(self, points)


def parse(source: str, dimension: int) -> Expr:
    """Parse ``source`` into an :class:`Expr` over ``dimension`` variables."""
    if dimension < 0:
        raise ValueError("dimension must be nonnegative")
    return Expr(source, dimension, _Parser(source, dimension).parse())


def evaluate(e: Expr, points) -> np.ndarray | float:
    """Evaluate ``e`` at one point (shape ``(m,)``) or a batch (shape ``(N, m)``).

    A single point gives a float; a batch gives an array of shape ``(N,)``.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim <= 1
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.shape[1] < e.dimension:
        raise EvalError(f"point has {pts.shape[1]} coordinates, expression needs {e.dimension}")
    out, err, where = _backend.eval_program(e._code, e._consts, np.ascontiguousarray(pts), e._stack)
    if err:
        raise EvalError(f"{_ERROR_MESSAGES.get(err, 'domain error')} at point {pts[where].tolist()}")
    return float(out[0]) if single else out


_PRETTY_BIN = {"+", "-", "*", "/", "^"}


def pretty(node: Node | Expr) -> str:
    """Canonical, fully parenthesized rendering; ``parse`` inverts it."""
    if isinstance(node, Expr):
        node = node.ast
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return f"(-{pretty(node.operand)})"
    if isinstance(node, BinOp):
        return f"({pretty(node.left)} {node.op} {pretty(node.right)})"
    if isinstance(node, Compare):
        return f"{pretty(node.left)} {node.op} {pretty(node.right)}"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(pretty(a) for a in node.args)})"
    raise TypeError(node)


def max_variable(node: Node | Expr) -> int:
    """Largest variable index used, or -1 for a constant expression."""
    if isinstance(node, Expr):
        node = node.ast
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Neg):
        return max_variable(node.operand)
    if isinstance(node, (BinOp, Compare)):
        return max(max_variable(node.left), max_variable(node.right))
    if isinstance(node, Call):
        return max((max_variable(a) for a in node.args), default=-1)
    return -1
