import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracverify import ad
from diracverify.expr import (
    BinOp,
    Call,
    ExprEvalError,
    ExprSyntaxError,
    Neg,
    Num,
    Pow,
    Var,
    compile_expr,
    evaluate,
    parse,
    to_text,
)

N_COORDS = 3

leaves = st.one_of(
    st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(Num),
    st.integers(0, N_COORDS - 1).map(Var),
)


def extend(children):
    return st.one_of(
        children.map(Neg),
        st.builds(BinOp, st.sampled_from("+-*/"), children, children),
        st.builds(Pow, children, st.integers(-3, 4)),
        st.builds(Call, st.sampled_from(["sin", "cos", "exp", "sqrt"]), children),
    )


def depth(e) -> int:
    if isinstance(e, (Num, Var)):
        return 0
    if isinstance(e, BinOp):
        return 1 + max(depth(e.left), depth(e.right))
    return 1 + depth(e.base if isinstance(e, Pow) else e.arg)


trees = st.recursive(leaves, extend, max_leaves=24).filter(lambda e: depth(e) <= 6)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_print_parse_round_trip(tree):
    assert parse(to_text(tree), N_COORDS) == tree


@pytest.mark.parametrize(
    "text, point, expected",
    [("x1*x2 + 1", (2, 3), 7.0), ("sin(0)", (0, 0), 0.0), ("x1^2/x2", (3, 2), 4.5)],
)
def test_arithmetic_examples(text, point, expected):
    assert float(compile_expr(text, 2)(np.array(point, float))) == pytest.approx(expected)


def test_precedence_and_associativity():
    f = lambda s: float(compile_expr(s, 1)(np.array([2.0])))  # noqa: E731
    assert f("-x1^2") == -4.0
    assert f("8 - 3 - 2") == 3.0
    assert f("8 / 4 / 2") == 1.0
    assert f("2 + 3 * x1") == 8.0
    assert f("x1^-1") == 0.5


def test_derivatives():
    _, d = ad.jvp(compile_expr("x1^3", 1), np.array([2.0]), np.array([1.0]))
    assert float(ad.real_part(d)) == pytest.approx(12.0)
    a, b = 0.4, -1.3
    _, g = ad.jacobian(compile_expr("x1*x2", 2), np.array([a, b]))
    np.testing.assert_allclose(ad.real_part(g), [b, a])
    f = compile_expr("exp(sin(x1))", 1)
    _, g = ad.jacobian(f, np.array([0.3]))
    h = 1e-6
    fd = (f(np.array([0.3 + h])) - f(np.array([0.3 - h]))) / (2 * h)
    assert abs(float(ad.real_part(g)[0]) - fd) / abs(fd) < 1e-6


def test_syntax_errors_carry_offsets():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("x1 + * x2", 2)
    assert exc.value.offset == 5
    with pytest.raises(ExprSyntaxError):
        parse("x3", 2)
    with pytest.raises(ExprSyntaxError):
        parse("", 2)
    with pytest.raises(ExprSyntaxError):
        parse("x1^1.5", 1)


def test_evaluation_errors_carry_the_point():
    with pytest.raises(ExprEvalError) as exc:
        compile_expr("1/x1", 1)(np.array([[1.0], [0.0]]))
    np.testing.assert_array_equal(exc.value.point, [0.0])
    with pytest.raises(ExprEvalError):
        compile_expr("sqrt(x1)", 1)(np.array([-1.0]))


def _well_conditioned(rng, depth_left):
    """Random expression whose denominators and sqrt arguments stay >= 1."""
    if depth_left == 0 or rng.random() < 0.25:
        return f"x{rng.integers(1, 4)}" if rng.random() < 0.7 else f"{rng.uniform(0.1, 2):.3f}"
    a = _well_conditioned(rng, depth_left - 1)
    b = _well_conditioned(rng, depth_left - 1)
    k = rng.integers(0, 7)
    return [
        f"({a}) + ({b})",
        f"({a}) * ({b})",
        f"({a}) / (1.5 + sin({b}))",
        f"sin({a})",
        f"exp(cos({a}))",
        f"sqrt(1 + ({a})^2)",
        f"({a})^{rng.integers(1, 4)}",
    ][k]


def test_ad_matches_finite_differences_on_100_expressions():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        f = compile_expr(_well_conditioned(rng, 4), 3)
        x = rng.uniform(-1, 1, 3)
        _, g = ad.jacobian(f, x)
        g = ad.real_part(g)
        h = 1e-5
        fd = np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(3)])
        worst = max(worst, float(np.max(np.abs(g - fd) / np.maximum(1.0, np.abs(fd)))))
    assert worst < 1e-5


def test_evaluate_broadcasts_constants():
    assert evaluate(parse("2", 1), np.zeros((4, 1))).shape == (4,)
