"""One-line element and scalar expressions.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("+" | "-") unary | power ;
    power   = atom [ "^" unary ] ;
    atom    = number | name | delta | "(" expr ")" ;
    number  = decimal [ "i" ] ;                  (* "2", "0.5", "1e-3", "3i" *)
    name    = "i" | "w" | "w2" | word ;          (* w = exp(2πi/3), w2 = w² *)
    delta   = "d" ( "[" ints "]" | signed-int | word ) ;
    word    = { letter [ signed-int ] } ;        (* "a", "aB", "g2", "a-1", "e" *)

A bare ``word`` and ``d<word>`` both denote the point mass at that group
element. Inside a ``delta`` a minus sign directly after a letter is an
exponent: ``da-1`` is δ at a⁻¹, write ``da - 1`` for a difference. Products of
two elements are convolutions; scalars are multiples of δ_e.

Examples: ``1*e + w*a + w2*b``, ``(d1+d-1)/2``, ``de+dg2``, ``3*de+da``.
"""

from __future__ import annotations

import cmath
import math
import re
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from .algebra import (
    GaussianRational,
    GroupAlgebraElement,
    convolution_power,
    delta,
)
from .errors import ExpressionError, SurjunctiveError
from .groups import GroupDescriptor, parse_element

OMEGA = cmath.exp(2j * math.pi / 3)

_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<delta>d(?:\[[^\]]*\]|-?\d+|(?:[A-Za-z](?:-?\d+)?)+))
      | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?i?)
      | (?P<name>[A-Za-z][A-Za-z0-9]*)
      | (?P<op>[-+*/()^])
    )""",
    re.VERBOSE,
)

Value = Union[complex, GaussianRational, GroupAlgebraElement]


def _tokenize(text: str) -> List[Tuple[str, str]]:
    tokens = []
    pos = 0
    stripped = text.rstrip()
    while pos < len(stripped):
        match = _TOKEN_RE.match(stripped, pos)
        if not match or match.end() == pos:
            raise ExpressionError(f"Unexpected character at {pos} in '{text}'")
        kind = match.lastgroup
        tokens.append((kind, match.group(kind)))
        pos = match.end()
    return tokens


class _Parser:
    def __init__(self, text: str, group: Optional[GroupDescriptor], exact: bool):
        self.text = text
        self.group = group
        self.exact = exact
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> Optional[Tuple[str, str]]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> Tuple[str, str]:
        token = self.peek()
        if token is None:
            raise ExpressionError(f"Unexpected end of expression '{self.text}'")
        self.pos += 1
        return token

    def expect(self, op: str) -> None:
        kind, value = self.take()
        if kind != "op" or value != op:
            raise ExpressionError(f"Expected '{op}' but found '{value}' in '{self.text}'")

    def parse(self) -> Value:
        value = self.expr()
        if self.peek() is not None:
            raise ExpressionError(f"Trailing input '{self.peek()[1]}' in '{self.text}'")
        return value

    def expr(self) -> Value:
        value = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.take()
            rhs = self.term()
            value = self.add(value, rhs if op == "+" else self.neg(rhs))
        return value

    def term(self) -> Value:
        value = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            _, op = self.take()
            rhs = self.unary()
            value = self.mul(value, rhs) if op == "*" else self.div(value, rhs)
        return value

    def unary(self) -> Value:
        if self.peek() in (("op", "-"), ("op", "+")):
            _, op = self.take()
            value = self.unary()
            return self.neg(value) if op == "-" else value
        return self.power()

    def power(self) -> Value:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            exponent = self.unary()
            return self.pow(base, exponent)
        return base

    def atom(self) -> Value:
        kind, value = self.take()
        if kind == "op":
            if value != "(":
                raise ExpressionError(f"Unexpected '{value}' in '{self.text}'")
            inner = self.expr()
            self.expect(")")
            return inner
        if kind == "number":
            return self.number(value)
        if kind == "delta":
            return self.element(value[1:])
        return self.name(value)

    def number(self, literal: str) -> Value:
        imaginary = literal.endswith("i")
        digits = literal[:-1] if imaginary else literal
        if self.exact:
            x = Fraction(digits)
            return GaussianRational(Fraction(0), x) if imaginary else GaussianRational(x)
        x = float(digits)
        return complex(0, x) if imaginary else complex(x)

    def name(self, word: str) -> Value:
        if word == "i":
            return GaussianRational(Fraction(0), Fraction(1)) if self.exact else 1j
        if word in ("w", "w2"):
            if self.exact:
                raise ExpressionError("Cube roots of unity need float coefficients")
            return OMEGA if word == "w" else OMEGA * OMEGA
        return self.element(word)

    def element(self, text: str) -> GroupAlgebraElement:
        if self.group is None:
            raise ExpressionError(f"'{text}' is a group element; a scalar is expected")
        return delta(self.group, parse_element(self.group, text), exact=self.exact)

    def lift(self, value: Value) -> GroupAlgebraElement:
        if isinstance(value, GroupAlgebraElement):
            return value
        if self.group is None:
            raise ExpressionError("Scalar expressions cannot mix in group elements")
        return delta(self.group, None, value, exact=self.exact)

    def neg(self, value: Value) -> Value:
        return -value

    def add(self, lhs: Value, rhs: Value) -> Value:
        if isinstance(lhs, GroupAlgebraElement) or isinstance(rhs, GroupAlgebraElement):
            return self.lift(lhs) + self.lift(rhs)
        return lhs + rhs

    def mul(self, lhs: Value, rhs: Value) -> Value:
        if isinstance(lhs, GroupAlgebraElement) and isinstance(rhs, GroupAlgebraElement):
            return lhs * rhs
        if isinstance(lhs, GroupAlgebraElement):
            return lhs.scale(rhs)
        if isinstance(rhs, GroupAlgebraElement):
            return rhs.scale(lhs)
        return lhs * rhs

    def div(self, lhs: Value, rhs: Value) -> Value:
        if isinstance(rhs, GroupAlgebraElement):
            raise ExpressionError(f"Cannot divide by a group element in '{self.text}'")
        if not rhs:
            raise ExpressionError(f"Division by zero in '{self.text}'")
        if isinstance(lhs, GroupAlgebraElement):
            return lhs.scale(1 / rhs)
        return lhs / rhs

    def pow(self, base: Value, exponent: Value) -> Value:
        if isinstance(exponent, GroupAlgebraElement):
            raise ExpressionError(f"Exponents must be integers in '{self.text}'")
        e = complex(exponent)
        if e.imag != 0 or e.real != int(e.real):
            raise ExpressionError(f"Exponents must be integers in '{self.text}'")
        n = int(e.real)
        if isinstance(base, GroupAlgebraElement):
            if n < 0:
                raise ExpressionError("Negative convolution powers are not defined")
            return convolution_power(base, n)
        if not self.exact:
            return base**n
        if n < 0:
            return GaussianRational(Fraction(1)) / _ipow(base, -n)
        return _ipow(base, n)


def _ipow(x: GaussianRational, n: int) -> GaussianRational:
    result = GaussianRational(Fraction(1))
    for _ in range(n):
        result = result * x
    return result


def parse_expression(
    group: GroupDescriptor, text: str, exact: bool = False
) -> GroupAlgebraElement:
    """Parse an element expression over ``group``."""
    try:
        parser = _Parser(text, group, exact)
        return parser.lift(parser.parse())
    except SurjunctiveError:
        raise
    except (ValueError, ZeroDivisionError, OverflowError) as e:
        raise ExpressionError(f"Failed to parse '{text}': {e}")


def parse_scalar(text: str) -> complex:
    """Parse a scalar expression such as ``w``, ``-1``, ``0.6+0.8i``."""
    try:
        value = _Parser(text, None, False).parse()
    except SurjunctiveError:
        raise
    except (ValueError, ZeroDivisionError, OverflowError) as e:
        raise ExpressionError(f"Failed to parse scalar '{text}': {e}")
    return complex(value)
