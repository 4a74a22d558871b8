"""Nested-call arithmetic formula DSL: parser, evaluator, validity checker.

Formulas look like ``Divide(Add(85, Add(88, 95)), 3)``: operator names are
case-insensitive, whitespace is ignored, and bare names must be known
constants (``const_pi``, ``const_100``). Evaluation is strict recursive
IEEE double arithmetic; undefined operations raise MathError instead of
propagating NaN/inf.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from ..errors import ArityError, FormulaSyntaxError, MathError, ToolFailure, UnknownOperator
from .base import Tool, ToolDescriptor


@dataclass(frozen=True)
class Literal:
    value: float


@dataclass(frozen=True)
class Apply:
    operator: str
    args: tuple["Formula", ...]


Formula = Union[Literal, Apply]

ARITY = {
    "add": 2,
    "subtract": 2,
    "multiply": 2,
    "divide": 2,
    "power": 2,
    "max": 2,
    "min": 2,
    "sqrt": 1,
    "log": 1,
    "negate": 1,
    "inverse": 1,
    "floor": 1,
    "abs": 1,
}

CONSTANTS = {
    "const_pi": math.pi,
    "const_100": 100.0,
}

_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _fail(self, message: str):
        raise FormulaSyntaxError(message, self.pos)

    def parse(self) -> Formula:
        self._skip_ws()
        node = self._expr()
        self._skip_ws()
        if self.pos != len(self.text):
            self._fail("trailing characters after formula")
        return node

    def _expr(self) -> Formula:
        self._skip_ws()
        if self.pos >= len(self.text):
            self._fail("unexpected end of formula")
        m = _NUMBER_RE.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return Literal(float(m.group()))
        m = _NAME_RE.match(self.text, self.pos)
        if m is None:
            self._fail(f"expected a number or operator, found {self.text[self.pos]!r}")
        name = m.group().lower()
        self.pos = m.end()
        self._skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == "(":
            self.pos += 1
            args = [self._expr()]
            self._skip_ws()
            while self.pos < len(self.text) and self.text[self.pos] == ",":
                self.pos += 1
                args.append(self._expr())
                self._skip_ws()
            if self.pos >= len(self.text) or self.text[self.pos] != ")":
                self._fail("expected ')' or ','")
            self.pos += 1
            if name in CONSTANTS:
                raise ArityError(name, len(args), 0)
            if name not in ARITY:
                raise UnknownOperator(name)
            if len(args) != ARITY[name]:
                raise ArityError(name, len(args), ARITY[name])
            return Apply(name, tuple(args))
        if name in CONSTANTS:
            return Literal(CONSTANTS[name])
        if name in ARITY:
            raise ArityError(name, 0, ARITY[name])
        raise UnknownOperator(name)


def parse_formula(text: str) -> Formula:
    return _Parser(text).parse()


def eval_formula(node: Formula) -> float:
    if isinstance(node, Literal):
        return node.value
    args = [eval_formula(a) for a in node.args]
    op = node.operator
    try:
        if op == "add":
            value = args[0] + args[1]
        elif op == "subtract":
            value = args[0] - args[1]
        elif op == "multiply":
            value = args[0] * args[1]
        elif op == "divide":
            if args[1] == 0:
                raise MathError("division by zero")
            value = args[0] / args[1]
        elif op == "power":
            try:
                value = math.pow(args[0], args[1])
            except ValueError:
                raise MathError(f"power({args[0]}, {args[1]}) is not a real number") from None
        elif op == "sqrt":
            if args[0] < 0:
                raise MathError("sqrt of a negative number")
            value = math.sqrt(args[0])
        elif op == "log":
            if args[0] <= 0:
                raise MathError("log of a non-positive number")
            value = math.log(args[0])
        elif op == "negate":
            value = -args[0]
        elif op == "inverse":
            if args[0] == 0:
                raise MathError("inverse of zero")
            value = 1.0 / args[0]
        elif op == "max":
            value = max(args)
        elif op == "min":
            value = min(args)
        elif op == "floor":
            value = float(math.floor(args[0]))
        elif op == "abs":
            value = abs(args[0])
        else:  # unreachable for parsed formulas
            raise UnknownOperator(op)
    except OverflowError:
        raise MathError(f"{op} overflowed") from None
    if not math.isfinite(value):
        raise MathError(f"{op} produced a non-finite value")
    return value


def render_value(value: float) -> str:
    """Fixed 10 decimal places, trailing zeros and point trimmed (so 4.0
    renders as "4" and 268/3 as "89.3333333333")."""
    if value == 0:
        value = 0.0  # normalize -0.0
    text = f"{value:.10f}"
    return text.rstrip("0").rstrip(".")


def solve(text: str) -> str:
    return render_value(eval_formula(parse_formula(text)))


class FormulaTool(Tool):
    """Executes a formula and returns the rendered numeric value."""

    def __init__(self, label: str = "formula", max_result_chars: int = 1000):
        self.descriptor = ToolDescriptor(label, max_result_chars=max_result_chars)

    def run(self, input_text: str) -> str:
        try:
            return solve(input_text)
        except (FormulaSyntaxError, UnknownOperator, ArityError, MathError) as exc:
            raise ToolFailure(f"{type(exc).__name__}: {exc}") from exc


@dataclass(frozen=True)
class ValidityTolerance:
    abs_tol: float = 1e-2
    rel_tol: float = 0.005


@dataclass
class ValidityReport:
    valid_count: int
    invalid_count: int
    error_breakdown: dict[str, int]

    @property
    def total(self) -> int:
        return self.valid_count + self.invalid_count

    @property
    def valid_fraction(self) -> float:
        return self.valid_count / self.total if self.total else 0.0


def check_validity(
    records: list[tuple[str, str]], tol: ValidityTolerance = ValidityTolerance()
) -> ValidityReport:
    """Partition (formula text, answer text) records into valid/invalid.

    A record is valid when the formula parses, evaluates without MathError,
    and the value matches the numeric answer within tol. Every failure mode
    is tallied in error_breakdown; mismatches count as "mismatch".
    """
    valid = 0
    breakdown: dict[str, int] = {}

    def bump(key: str):
        breakdown[key] = breakdown.get(key, 0) + 1

    for formula_text, answer_text in records:
        try:
            answer = float(answer_text.strip())
        except ValueError:
            bump("unparseable_answer")
            continue
        try:
            value = eval_formula(parse_formula(formula_text))
        except FormulaSyntaxError:
            bump("syntax_error")
            continue
        except UnknownOperator:
            bump("unknown_operator")
            continue
        except ArityError:
            bump("arity_error")
            continue
        except MathError:
            bump("math_error")
            continue
        if abs(value - answer) <= max(tol.abs_tol, tol.rel_tol * abs(answer)):
            valid += 1
        else:
            bump("mismatch")
    return ValidityReport(valid, sum(breakdown.values()), breakdown)
