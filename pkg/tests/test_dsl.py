from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerkit import dsl
from finslerkit.dsl import Binary, Const, Pow, Unary, Var
from finslerkit.errors import (DefinitionFileError, DomainError, ExpressionSyntaxError,
                               UnknownSymbol)
from finslerkit.jets import ChartPoint, seed

CHART = dsl.ChartSpec(2, 2)


def test_parse_sum_of_squares():
    e = dsl.parse_lagrangian("y1^2 + y2^2", CHART)
    assert e == Binary("add", Pow(Var("y1"), Fraction(2)), Pow(Var("y2"), Fraction(2)))


def test_parse_conformal_product():
    e = dsl.parse_lagrangian("exp(x1)*(y1^2+y2^2)", CHART)
    assert e == Binary("mul", Unary("exp", Var("x1")),
                       Binary("add", Pow(Var("y1"), Fraction(2)), Pow(Var("y2"), Fraction(2))))


def test_unknown_symbol():
    with pytest.raises(UnknownSymbol) as info:
        dsl.parse_lagrangian("y1^2 + z", CHART)
    assert info.value.name == "z"


@pytest.mark.parametrize("text, position", [("y1 + * y2", 5), ("exp y1", 0), ("(y1", 3),
                                            ("y1 $ y2", 3), ("y1^x1", 3)])
def test_syntax_errors_carry_position(text, position):
    with pytest.raises(ExpressionSyntaxError) as info:
        dsl.parse_lagrangian(text, CHART)
    assert info.value.position == position


def test_precedence_and_associativity():
    assert dsl.parse_expression("-x^2") == Unary("neg", Pow(Var("x"), Fraction(2)))
    assert dsl.parse_expression("a-b-c") == Binary("sub", Binary("sub", Var("a"), Var("b")), Var("c"))
    assert dsl.parse_expression("a/b*c") == Binary("mul", Binary("div", Var("a"), Var("b")), Var("c"))
    assert dsl.parse_expression("x^(1/2)").exponent == Fraction(1, 2)
    assert dsl.parse_expression("x^-1").exponent == Fraction(-1)


def test_jet_of_product():
    jet = dsl.evaluate_on_jets(dsl.parse_expression("x1*y1"),
                               seed(ChartPoint((2.0,), (3.0,)), 2))
    assert jet.value == 6.0
    assert jet.partial((1, 0)) == 3.0
    assert jet.partial((0, 1)) == 2.0
    assert jet.partial((1, 1)) == 1.0


def test_exp_taylor_coefficients():
    jet = dsl.evaluate_on_jets(dsl.parse_expression("exp(x1)"), seed(ChartPoint((0.0,), ()), 4))
    coeffs = [jet.partial((k,)) / factorial(k) for k in range(5)]
    np.testing.assert_allclose(coeffs, [1, 1, 1 / 2, 1 / 6, 1 / 24], rtol=0, atol=1e-15)


def test_pole_is_domain_error():
    e = dsl.parse_lagrangian("y1^2/(x1-1)", dsl.ChartSpec(1, 1))
    with pytest.raises(DomainError):
        dsl.jet_at(e, ChartPoint((1.0,), (2.0,)), 2)
    with pytest.raises(DomainError):
        dsl.evaluate(e, {"x1": 1.0, "y1": 2.0})


@pytest.mark.parametrize("text", ["log(x1 - 2)", "sqrt(-1 - x1^2)", "(x1 - 3)^(1/2)"])
def test_domain_errors(text):
    with pytest.raises(DomainError):
        dsl.jet_at(dsl.parse_lagrangian(text, CHART), ChartPoint((0.5, 0.5), (1.0, 1.0)), 1)


@pytest.mark.parametrize("text, expected", [
    ("y1^2+y2^2", True),
    ("y1^2+y2^2+x1*y2", False),
    ("(y1^4+y2^4)^(1/2)", True),
])
def test_homogeneity(text, expected):
    assert dsl.check_homogeneity(dsl.parse_lagrangian(text, CHART), CHART, samples=20) is expected


def test_quartic_homogeneity_oracle():
    # direct evaluation of L(x, lam y) / lam^2 at 20 random points
    e = dsl.parse_lagrangian("(y1^4+y2^4)^(1/2)", CHART)
    rng = np.random.default_rng(1)
    for _ in range(20):
        y = rng.normal(size=2)
        for lam in (0.5, 2.0, 3.0):
            a = dsl.evaluate(e, {"x1": 0.0, "x2": 0.0, "y1": lam * y[0], "y2": lam * y[1]})
            b = dsl.evaluate(e, {"x1": 0.0, "x2": 0.0, "y1": y[0], "y2": y[1]})
            assert abs(a / lam ** 2 - b) <= 1e-12 * (1 + abs(b))


def test_chart_validation():
    with pytest.raises(ValueError):
        dsl.ChartSpec(0, 1)
    with pytest.raises(ValueError):
        dsl.ChartSpec(1, 1, signature="lorentzian")
    assert dsl.ChartSpec(2, 1).names == ("x1", "x2", "y1")


# -- round trip ----------------------------------------------------------------------

NAMES = ("x1", "x2", "y1", "y2")
leaves = st.one_of(st.sampled_from(NAMES).map(Var),
                   st.floats(0, 1e3, allow_nan=False).map(Const),
                   st.integers(0, 50).map(lambda k: Const(float(k))))


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from(("neg",) + dsl.FUNCTIONS), children).map(lambda t: Unary(*t)),
        st.tuples(st.sampled_from(("add", "sub", "mul", "div")), children, children)
        .map(lambda t: Binary(*t)),
        st.tuples(children, st.fractions(min_value=-5, max_value=5, max_denominator=7))
        .map(lambda t: Pow(*t)),
    )


expressions = st.recursive(leaves, _extend, max_leaves=12)


@given(expressions)
@settings(max_examples=300, deadline=None)
def test_print_parse_round_trip(e):
    assert dsl.parse_lagrangian(dsl.to_text(e), CHART) == e


@given(expressions)
@settings(max_examples=100, deadline=None)
def test_mixed_partials_commute(e):
    u = ChartPoint((0.31, 0.47), (0.83, 1.19))
    with np.errstate(all="ignore"):
        try:
            jet = dsl.jet_at(e, u, 3)
        except (DomainError, OverflowError, FloatingPointError):
            return
        a = jet.deriv(0).deriv(2).value
        b = jet.deriv(2).deriv(0).value
        c = jet.partial((1, 0, 1, 0))
    if np.all(np.isfinite([a, b, c])):
        assert a == pytest.approx(b, rel=1e-12, abs=1e-12)
        assert a == pytest.approx(c, rel=1e-12, abs=1e-12)


# -- definition files ---------------------------------------------------------------

def test_definition_lagrangian():
    d = dsl.parse_definition("# comment\n\ndims 2 2\nlagrangian exp(x1)*(y1^2 + y2^2)  # tail\n")
    assert d.is_lagrangian and d.chart == dsl.ChartSpec(2, 2)
    assert dsl.to_text(d.lagrangian) == "(exp(x1)*((y1^2)+(y2^2)))"


def test_definition_direct_blocks():
    d = dsl.parse_definition("dims 2 1\nmetric_block g 1 2 0.5\nmetric_block g 1 1 1\n"
                             "metric_block g 2 2 1\nmetric_block h 1 1 exp(y1)\nnconn 1 2 x1\n")
    assert not d.is_lagrangian
    assert d.g[0][1] == d.g[1][0] == Const(0.5)
    assert d.nconn[0][1] == Var("x1") and d.nconn[0][0] == Const(0.0)


@pytest.mark.parametrize("text, line", [
    ("lagrangian y1^2\n", 1),
    ("dims 2 2\ndims 2 2\n", 2),
    ("dims 2\n", 1),
    ("dims 2 2\nfoo 1\n", 2),
    ("dims 2 2\nlagrangian y1^^2\n", 2),
    ("dims 2 2\nmetric_block g 3 1 1\n", 2),
    ("dims 2 2\nmetric_block q 1 1 1\n", 2),
    ("dims 2 2\nnconn 1 x 1\n", 2),
    ("dims 2 2\nlagrangian y1^2\nlagrangian y2^2\n", 3),
])
def test_definition_errors(text, line):
    with pytest.raises(DefinitionFileError) as info:
        dsl.parse_definition(text)
    assert info.value.line == line


@pytest.mark.parametrize("text", ["", "# only a comment\n", "dims 2 2\n",
                                  "dims 2 2\nlagrangian y1^2\nnconn 1 1 x1\n"])
def test_definition_structure_errors(text):
    with pytest.raises(DefinitionFileError):
        dsl.parse_definition(text)
