from fractions import Fraction

import pytest

import config
from nonstd_oracle import (
    SANDWICH_CASES,
    Block,
    DeepenRequired,
    Tower,
    TowerError,
    UndecidableSign,
    circle_tower,
    decide_sign,
    default_tower,
    evaluate,
    lemma_kernel_report,
    numeric_sign,
    oracle_batch,
    oracle_values,
    parse_expression,
    sandwich_formula,
    sandwich_type,
    ug_sandwich_entry,
    unparse,
    verify_relations,
)


@pytest.fixture(scope="module")
def circle():
    return circle_tower()


@pytest.fixture(scope="module")
def tower():
    return default_tower()


def test_default_tower_significance_order(tower):
    assert tower.names == ("b", "c", "x", "y", "gamma", "b'", "c'", "x'", "y'")
    assert [tower.names[c[0]] for c in tower.coordinates] == ["c", "b", "x", "gamma", "c'", "b'", "x'"]


def test_tower_rejects_bad_blocks():
    with pytest.raises(TowerError):
        Tower([Block("a", circle="y")])
    with pytest.raises(TowerError):
        Tower([Block("a", infinite=("b",)), Block("d", infinite=("b",))])
    with pytest.raises(TowerError):
        circle_tower().generator("z")


def test_addition_and_circle_relation(circle):
    assert str(evaluate(circle, "(+ x x)")) == "2*x"
    assert str(evaluate(circle, "(* y y)")) == "2*x + -1*x^2"
    assert evaluate(circle, "(- (* y y) (- (* 2 x) (* x x)))").is_zero


def test_reciprocal_carries_remainder(circle):
    element = evaluate(circle, "(/ 1 (- 1 x))")
    assert not element.exact
    assert len(element.terms) == config.TOWER_DEPTH
    assert element.leading_term() == "1"
    assert str(element).endswith("+ O([0, -8])")


def test_exact_division(circle):
    element = evaluate(circle, "(/ y x)")
    assert element.exact
    assert element.sign() == 1


@pytest.mark.parametrize(
    "expr, sign",
    [
        ("(- b 1000000)", 1),
        ("(- (/ 1 b) x)", -1),
        ("(- (/ y (- 1 x)) 1/1000)", -1),
        ("y", 1),
        ("(- (* y y) (* 2 x))", -1),
        ("(- x x)", 0),
    ],
)
def test_signs_on_circle_tower(circle, expr, sign):
    assert decide_sign(circle, expr).sign == sign


@pytest.mark.parametrize(
    "expr, sign",
    [("(- c (^ b 5))", 1), ("(- gamma x)", 1), ("(- x' gamma)", 1), ("(- (/ 1 c') b)", -1)],
)
def test_block_dominance(tower, expr, sign):
    assert decide_sign(tower, expr).sign == sign


@pytest.mark.parametrize("expr", ["y", "(* y b)", "(+ x (/ 1 b))", "(/ y x)", "(^ (- x 1) 2)", "(* (neg x) (neg y))"])
def test_positive_elements(circle, expr):
    assert decide_sign(circle, expr).sign == 1


def test_sign_verdict_reports_leading_term(circle):
    verdict = decide_sign(circle, "(+ (* 3 b) x)")
    assert verdict.leading_term == "3*b"
    assert verdict.depth == config.TOWER_DEPTH


def test_cancelled_series_is_undecidable(circle):
    expr = "(- (/ 1 (- 1 x)) (/ 1 (- 1 x)))"
    with pytest.raises(DeepenRequired) as info:
        evaluate(circle, expr).sign()
    assert info.value.depth == config.TOWER_DEPTH
    with pytest.raises(UndecidableSign) as info:
        decide_sign(circle, expr)
    assert info.value.cap == config.TOWER_DEPTH_CAP


def test_division_by_exact_zero(circle):
    with pytest.raises(TowerError, match="exactly zero"):
        evaluate(circle, "(/ 1 (- x x))")


@pytest.mark.parametrize("text", ["", "(+ 1", "(% 1 2)", "(/ 1)", "b)", "(^ b x)", "(+ 1 2$)"])
def test_parse_errors(text):
    with pytest.raises(TowerError):
        parse_expression(text)


def test_parse_and_unparse():
    tree = parse_expression("(+ b (* -3 x))")
    assert tree == ("+", "b", ("*", Fraction(-3), "x"))
    assert unparse(tree) == "(+ b (* -3 x))"


def test_oracle_point_respects_order(circle):
    values = oracle_values(circle)
    assert values["b"] > 10 ** 6
    assert numeric_sign("(- (/ 1 b) x)", values) == -1
    assert verify_relations(circle, values) == {"rewrite": True, "parametrisation": True, "y": True}


def test_oracle_batch_agrees(circle):
    frame = oracle_batch(seed=0, samples=200, tower=circle)
    assert len(frame) == 200
    assert (frame["status"] != "mismatch").all()
    assert (frame["status"] == "match").mean() > 0.5


@pytest.mark.parametrize("case, B, expected, _check_id", SANDWICH_CASES)
def test_sandwich_cases(tower, case, B, expected, _check_id):
    assert sandwich_type(B, tower) == expected


@pytest.mark.parametrize("B", [case[1] for case in SANDWICH_CASES])
def test_sandwich_formula_matches_product(tower, B):
    assert (sandwich_formula(B, tower) - ug_sandwich_entry(B, tower)).is_zero


def test_sandwich_needs_two_u_blocks(circle):
    with pytest.raises(TowerError):
        ug_sandwich_entry(SANDWICH_CASES[0][1], circle)


def test_lemma_kernel_report(tower):
    frame = lemma_kernel_report(tower)
    assert frame["passed"].all()
    assert set(frame["check_id"]) >= {"nonstd-h-right-u", "nonstd-h-left-u", "nonstd-h-u-gu"}
    assert (frame.loc[frame["check_id"].str.startswith("nonstd-h"), "observed"] == 0).all()
