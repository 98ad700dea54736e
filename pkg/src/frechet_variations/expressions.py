"""Arithmetic expression language used for densities and field data.

Grammar (see ``docs/expression_grammar.md``)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?
    atom    := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"

Precedence is ``^`` > unary ``-`` > ``*``/``/`` > ``+``/``-``; every binary
operator is left associative except ``^``. Parsing is precedence climbing over
a token list that keeps source positions for error reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Tuple, Union

import numpy as np
import sympy as sp

from .errors import DensitySyntaxError, UnknownIdentifierError

FUNCTIONS: Dict[str, Tuple[object, object]] = {
    "sin": (np.sin, sp.sin),
    "cos": (np.cos, sp.cos),
    "exp": (np.exp, sp.exp),
    "log": (np.log, sp.log),
    "sqrt": (np.sqrt, sp.sqrt),
}
CONSTANTS: Dict[str, float] = {"pi": math.pi}

# (precedence, right associative)
BINARY_OPERATORS: Dict[str, Tuple[int, bool]] = {
    "+": (1, False),
    "-": (1, False),
    "*": (2, False),
    "/": (2, False),
    "^": (4, True),
}
UNARY_PRECEDENCE = 3

OPERAND_START = frozenset({"number", "identifier", "(", "-"})


@dataclass(frozen=True)
class Token:
    kind: str  # "number", "name", "op", "(", ")", "end"
    text: str
    position: int


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Negate:
    operand: "Node"


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    function: str
    argument: "Node"


Node = Union[Number, Variable, Negate, BinaryOp, Call]


def _scan_number(source: str, start: int) -> int:
    idx = start
    length = len(source)
    while idx < length and source[idx].isdigit():
        idx += 1
    if idx < length and source[idx] == ".":
        idx += 1
        while idx < length and source[idx].isdigit():
            idx += 1
    # An exponent only counts when digits follow; a bare "e" is the variable.
    if idx < length and source[idx] in "eE":
        cursor = idx + 1
        if cursor < length and source[cursor] in "+-":
            cursor += 1
        if cursor < length and source[cursor].isdigit():
            idx = cursor
            while idx < length and source[idx].isdigit():
                idx += 1
    return idx


def tokenize(source: str) -> List[Token]:
    """Split ``source`` into tokens, each remembering its start position."""
    tokens: List[Token] = []
    idx = 0
    length = len(source)
    while idx < length:
        char = source[idx]
        if char.isspace():
            idx += 1
            continue
        if char.isdigit() or (
            char == "." and idx + 1 < length and source[idx + 1].isdigit()
        ):
            end = _scan_number(source, idx)
            tokens.append(Token("number", source[idx:end], idx))
            idx = end
            continue
        if char.isalpha() or char == "_":
            end = idx + 1
            while end < length and (source[end].isalnum() or source[end] == "_"):
                end += 1
            tokens.append(Token("name", source[idx:end], idx))
            idx = end
            continue
        if char in BINARY_OPERATORS:
            tokens.append(Token("op", char, idx))
            idx += 1
            continue
        if char in "()":
            tokens.append(Token(char, char, idx))
            idx += 1
            continue
        raise DensitySyntaxError(f"unexpected character {char!r}", idx)
    tokens.append(Token("end", "", length))
    return tokens


class _Parser:
    def __init__(self, source: str, variables: FrozenSet[str]) -> None:
        self.tokens = tokenize(source)
        self.index = 0
        self.variables = variables

    def peek(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        if token.kind != "end":
            self.index += 1
        return token

    def expect(self, kind: str) -> Token:
        token = self.peek()
        if token.kind != kind:
            raise DensitySyntaxError(
                f"unexpected {self._describe(token)}", token.position, frozenset({kind})
            )
        return self.advance()

    @staticmethod
    def _describe(token: Token) -> str:
        return "end of input" if token.kind == "end" else f"token {token.text!r}"

    def parse(self) -> Node:
        tree = self.expression(0)
        token = self.peek()
        if token.kind != "end":
            raise DensitySyntaxError(
                f"unexpected {self._describe(token)}",
                token.position,
                frozenset(BINARY_OPERATORS) | {"end of input"},
            )
        return tree

    def expression(self, min_precedence: int) -> Node:
        lhs = self.operand()
        while True:
            token = self.peek()
            if token.kind != "op":
                return lhs
            precedence, right_assoc = BINARY_OPERATORS[token.text]
            if precedence < min_precedence:
                return lhs
            self.advance()
            if token.text == "^":
                # the exponent may carry its own unary minus: x^-2
                rhs = self.expression(UNARY_PRECEDENCE)
            else:
                rhs = self.expression(precedence if right_assoc else precedence + 1)
            lhs = BinaryOp(token.text, lhs, rhs)

    def operand(self) -> Node:
        token = self.advance()
        if token.kind == "op" and token.text == "-":
            return Negate(self.expression(UNARY_PRECEDENCE))
        if token.kind == "number":
            return Number(float(token.text))
        if token.kind == "(":
            inner = self.expression(0)
            self.expect(")")
            return inner
        if token.kind == "name":
            return self.name(token)
        raise DensitySyntaxError(
            f"unexpected {self._describe(token)}", token.position, OPERAND_START
        )

    def name(self, token: Token) -> Node:
        if token.text in FUNCTIONS:
            self.expect("(")
            argument = self.expression(0)
            self.expect(")")
            return Call(token.text, argument)
        if token.text in CONSTANTS:
            return Number(CONSTANTS[token.text])
        if token.text in self.variables:
            return Variable(token.text)
        raise UnknownIdentifierError(
            token.text,
            token.position,
            self.variables | frozenset(FUNCTIONS) | frozenset(CONSTANTS),
        )


def parse_expression(source: str, variables: Iterable[str]) -> Node:
    """Parse ``source`` into a tree over the declared ``variables``."""
    return _Parser(source, frozenset(variables)).parse()


def print_expression(node: Node) -> str:
    """Render a tree with full parentheses; the text reparses to the same tree."""
    if isinstance(node, Number):
        return repr(float(node.value))
    if isinstance(node, Variable):
        return node.name
    if isinstance(node, Negate):
        return f"(-{print_expression(node.operand)})"
    if isinstance(node, BinaryOp):
        return f"({print_expression(node.left)} {node.op} {print_expression(node.right)})"
    if isinstance(node, Call):
        return f"{node.function}({print_expression(node.argument)})"
    raise TypeError(f"not an expression node: {node!r}")


def free_variables(node: Node) -> FrozenSet[str]:
    if isinstance(node, Variable):
        return frozenset({node.name})
    if isinstance(node, Negate):
        return free_variables(node.operand)
    if isinstance(node, BinaryOp):
        return free_variables(node.left) | free_variables(node.right)
    if isinstance(node, Call):
        return free_variables(node.argument)
    return frozenset()


def evaluate(node: Node, env: Mapping[str, object]) -> np.ndarray:
    """Evaluate ``node`` elementwise with numpy; domain errors yield NaN."""
    with np.errstate(all="ignore"):
        return np.asarray(_evaluate(node, env), dtype=float)


def _evaluate(node: Node, env: Mapping[str, object]) -> object:
    if isinstance(node, Number):
        return node.value
    if isinstance(node, Variable):
        return np.asarray(env[node.name], dtype=float)
    if isinstance(node, Negate):
        return -_evaluate(node.operand, env)  # type: ignore[operator]
    if isinstance(node, Call):
        numeric, _ = FUNCTIONS[node.function]
        return numeric(_evaluate(node.argument, env))  # type: ignore[operator]
    if isinstance(node, BinaryOp):
        left = np.asarray(_evaluate(node.left, env), dtype=float)
        right = np.asarray(_evaluate(node.right, env), dtype=float)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            return left / right
        return np.power(left, right)
    raise TypeError(f"not an expression node: {node!r}")


def to_sympy(node: Node) -> sp.Expr:
    """Convert a tree to an exact sympy expression (decimal literals as rationals)."""
    if isinstance(node, Number):
        exact = Fraction(repr(float(node.value)))
        return sp.Rational(exact.numerator, exact.denominator)
    if isinstance(node, Variable):
        return sp.Symbol(node.name, real=True)
    if isinstance(node, Negate):
        return -to_sympy(node.operand)
    if isinstance(node, Call):
        _, symbolic = FUNCTIONS[node.function]
        return symbolic(to_sympy(node.argument))  # type: ignore[operator]
    if isinstance(node, BinaryOp):
        left = to_sympy(node.left)
        right = to_sympy(node.right)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            return left / right
        return left**right
    raise TypeError(f"not an expression node: {node!r}")


@dataclass(frozen=True)
class FieldExpression:
    """A parsed expression of ``x`` (and optionally ``t``) describing field data."""

    text: str
    tree: Node

    VARIABLES = frozenset({"x", "t"})

    @classmethod
    def parse(cls, text: str) -> "FieldExpression":
        return cls(text, parse_expression(text, cls.VARIABLES))

    def __call__(self, x: np.ndarray, t: float = 0.0) -> np.ndarray:
        values = evaluate(self.tree, {"x": x, "t": t})
        return np.broadcast_to(values, np.shape(x)).astype(float)
