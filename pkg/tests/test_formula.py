import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from toolloop.errors import ArityError, FormulaSyntaxError, MathError, ToolFailure, UnknownOperator
from toolloop.tools import FormulaTool, solve
from toolloop.tools.formula import (
    Apply,
    Literal,
    check_validity,
    eval_formula,
    parse_formula,
    render_value,
)


class TestParse:
    def test_nested_average(self):
        f = parse_formula("Divide(Add(85, Add(88, 95)), 3)")
        assert f == Apply(
            "divide",
            (Apply("add", (Literal(85.0), Apply("add", (Literal(88.0), Literal(95.0))))), Literal(3.0)),
        )

    def test_bare_number(self):
        assert parse_formula("42") == Literal(42.0)

    def test_unknown_operator(self):
        with pytest.raises(UnknownOperator) as excinfo:
            parse_formula("Frobnicate(1)")
        assert excinfo.value.name == "frobnicate"

    def test_case_and_whitespace_insensitive(self):
        assert parse_formula("  ADD( 1 ,\t2 ) ") == parse_formula("add(1,2)")

    def test_constants(self):
        assert parse_formula("const_pi") == Literal(math.pi)
        assert parse_formula("Multiply(const_100, 2)").args[0] == Literal(100.0)

    def test_arity_errors(self):
        with pytest.raises(ArityError):
            parse_formula("Add(1)")
        with pytest.raises(ArityError):
            parse_formula("Sqrt(1, 2)")
        with pytest.raises(ArityError):
            parse_formula("Add")

    def test_syntax_errors_carry_position(self):
        with pytest.raises(FormulaSyntaxError) as excinfo:
            parse_formula("Add(1, ")
        assert excinfo.value.position >= 0
        with pytest.raises(FormulaSyntaxError):
            parse_formula("Add(1, 2) trailing")
        with pytest.raises(FormulaSyntaxError):
            parse_formula("")


class TestEval:
    def test_average_value(self):
        value = eval_formula(parse_formula("Divide(Add(85, Add(88, 95)), 3)"))
        assert value == pytest.approx(268 / 3, abs=0)
        assert render_value(value) == "89.3333333333"

    def test_math_errors(self):
        for text in ("Divide(1, 0)", "Sqrt(Negate(4))", "Log(0)", "Inverse(0)", "Power(2, 10000)"):
            with pytest.raises(MathError):
                eval_formula(parse_formula(text))

    def test_unary_and_misc_ops(self):
        assert eval_formula(parse_formula("Floor(2.7)")) == 2.0
        assert eval_formula(parse_formula("Abs(Negate(3))")) == 3.0
        assert eval_formula(parse_formula("Max(2, Min(9, 5))")) == 5.0
        assert eval_formula(parse_formula("Power(2, 10)")) == 1024.0
        assert eval_formula(parse_formula("Log(const_pi)")) == math.log(math.pi)


class TestRenderValue:
    @pytest.mark.parametrize(
        "value,expected",
        [(4.0, "4"), (268 / 3, "89.3333333333"), (0.0, "0"), (-0.0, "0"), (-2.5, "-2.5"), (0.1, "0.1")],
    )
    def test_examples(self, value, expected):
        assert render_value(value) == expected


# --- independent evaluator oracle ---

_OPS = {
    "add": lambda a, b: a + b,
    "subtract": lambda a, b: a - b,
    "multiply": lambda a, b: a * b,
    "divide": lambda a, b: a / b,
    "power": lambda a, b: math.pow(a, b),
    "sqrt": lambda a: math.sqrt(a),
    "log": lambda a: math.log(a),
    "negate": lambda a: -a,
    "inverse": lambda a: 1.0 / a,
    "max": lambda a, b: max(a, b),
    "min": lambda a, b: min(a, b),
    "floor": lambda a: float(math.floor(a)),
    "abs": lambda a: abs(a),
}


def oracle_eval(node):
    """Second evaluator: operator table + stack discipline instead of the
    package's explicit branching. Raises ValueError-family on domain faults."""
    if isinstance(node, Literal):
        return node.value
    args = [oracle_eval(a) for a in node.args]
    value = _OPS[node.operator](*args)
    if not math.isfinite(value):
        raise ZeroDivisionError("non-finite")
    return value


def random_formula(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        return Literal(float(rng.randint(-50, 50)))
    op = rng.choice(list(_OPS))
    arity = 2 if op in ("add", "subtract", "multiply", "divide", "power", "max", "min") else 1
    return Apply(op, tuple(random_formula(rng, depth - 1) for _ in range(arity)))


def test_eval_matches_independent_oracle():
    rng = random.Random(20240501)
    checked = 0
    for _ in range(500):
        formula = random_formula(rng, 4)
        try:
            expected = oracle_eval(formula)
        except (ZeroDivisionError, ValueError, OverflowError):
            with pytest.raises(MathError):
                eval_formula(formula)
            continue
        assert eval_formula(formula) == expected  # identical IEEE ops, exact match
        checked += 1
    assert checked > 200  # most random formulas must be evaluable


# --- algebraic properties ---

_reals = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@given(_reals, _reals)
@settings(max_examples=200)
def test_add_commutes(x, y):
    a = eval_formula(Apply("add", (Literal(x), Literal(y))))
    b = eval_formula(Apply("add", (Literal(y), Literal(x))))
    assert a == b


@given(_reals)
@settings(max_examples=200)
def test_identities(x):
    assert eval_formula(Apply("divide", (Literal(x), Literal(1.0)))) == x
    assert eval_formula(Apply("multiply", (Literal(x), Literal(1.0)))) == x
    assert eval_formula(Apply("subtract", (Literal(x), Literal(x)))) == 0.0


def test_determinism():
    formula = parse_formula("Divide(Add(85, Add(88, 95)), 3)")
    assert all(eval_formula(formula) == eval_formula(formula) for _ in range(10))


class TestFormulaTool:
    def test_solve(self):
        assert solve("Divide(Add(85, Add(88, 95)), 3)") == "89.3333333333"
        assert solve("Add(0, 0)") == "0"

    def test_tool_wraps_errors(self):
        tool = FormulaTool()
        with pytest.raises(ToolFailure):
            tool.run("Divide(1, 0)")
        with pytest.raises(ToolFailure):
            tool.run("Nope(1)")

    def test_tool_runs(self):
        assert FormulaTool().run("Multiply(6, 7)") == "42"


class TestCheckValidity:
    def test_fig_style_record_is_valid(self):
        report = check_validity([("Divide(Add(85, Add(88, 95)), 3)", "89.33")])
        assert report.valid_count == 1 and report.invalid_count == 0

    def test_plain_mismatch(self):
        report = check_validity([("Add(1,1)", "3")])
        assert report.valid_count == 0
        assert report.error_breakdown == {"mismatch": 1}

    def test_constructed_split_is_exact(self):
        # built so ground truth is known by construction: 140 valid, 60 invalid
        rng = random.Random(99)
        records = []
        for index in range(140):
            a, b = rng.randint(1, 500), rng.randint(1, 500)
            records.append((f"Add({a}, {b})", str(a + b)))
        for index in range(60):
            a, b = rng.randint(1, 500), rng.randint(1, 500)
            kind = index % 4
            if kind == 0:
                records.append((f"Add({a}, {b})", str(a + b + 7)))  # mismatch
            elif kind == 1:
                records.append((f"Frobnicate({a})", str(a)))  # unknown operator
            elif kind == 2:
                records.append((f"Divide({a}, 0)", str(a)))  # math error
            else:
                records.append((f"Add({a}, {b})", "not a number"))  # bad answer
        report = check_validity(records)
        assert (report.valid_count, report.invalid_count) == (140, 60)
        assert report.total == 200
        assert report.valid_fraction == pytest.approx(0.70)
        assert sum(report.error_breakdown.values()) == 60

    def test_tolerance_is_two_decimal_friendly(self):
        assert check_validity([("Divide(2, 3)", "0.67")]).valid_count == 1
        assert check_validity([("Divide(2, 3)", "0.69")]).valid_count == 0
