import random
from fractions import Fraction

import pytest

from sl2_cover import (
    CHECK_SCHEMA,
    ROTATION,
    CoverElem,
    DeterminantError,
    Mat2Q,
    SignPatternError,
    c_of_d,
    cocycle_h,
    cocycle_identity_check,
    cover_inverse,
    cover_mul,
    cover_power,
    generic_exponent_check,
    generic_exponent_ledger,
    grid_cocycle_failures,
    identity_batch,
    inverse_sign_check,
    random_same_pattern,
    random_sl2,
    rational_grid,
    rotation_check,
)

I = Mat2Q.identity()
B = ROTATION


def test_c_of_d():
    assert c_of_d(1, -5) == 1
    assert c_of_d(0, -1) == -1
    assert c_of_d(0, 0) == 0
    assert c_of_d(Fraction(-1, 2), 0) == Fraction(-1, 2)


def test_determinant_is_checked():
    with pytest.raises(DeterminantError):
        Mat2Q(1, 1, 1, 1)
    assert Mat2Q("1/2", 0, 0, 2).d == 2


def test_rotation_values():
    assert cocycle_h(B, B) == 1
    assert cocycle_h(B * B, B * B) == -1
    assert cover_power(CoverElem(B, 0), 2) == CoverElem(-I, 1)
    assert cover_power(CoverElem(B, 0), 4) == CoverElem(I, 1)
    assert cover_power(CoverElem(B, 0), -4) == CoverElem(I, -1)
    assert rotation_check().passed


def test_cocycle_is_normalized():
    M = Mat2Q(2, 1, 1, 1)
    assert cocycle_h(I, M) == 0
    assert cocycle_h(M, I) == 0


@pytest.mark.parametrize("triple", [(I, B, B), (B, B, B), (B, B * B, B)])
def test_cocycle_identity_cases(triple):
    assert cocycle_identity_check(*triple).passed


def test_cover_inverse():
    x = CoverElem(B, 3)
    assert cover_mul(x, cover_inverse(x)) == CoverElem(I, 0)
    assert cover_inverse(CoverElem(B, 0)) == CoverElem(B.inverse(), 0)


def test_inverse_sign_check():
    assert inverse_sign_check(B, B).passed
    assert inverse_sign_check(I, I).passed
    lower_negative = Mat2Q(-2, 1, 0, Fraction(-1, 2))
    result = inverse_sign_check(lower_negative, Mat2Q(-1, 3, 0, -1))
    assert result.passed
    assert result.witnesses["h(a,a^-1)"] == -1
    assert result.witnesses["sheet"] == 0


def test_inverse_sign_check_rejects_mismatch():
    with pytest.raises(SignPatternError):
        inverse_sign_check(B, I)


def test_random_same_pattern_keeps_signs():
    rng = random.Random(5)
    for _ in range(50):
        a = random_sl2(rng)
        assert random_same_pattern(a, rng).sign_pattern() == a.sign_pattern()


@pytest.mark.parametrize("f_bound, expected", [(14, 696), (10, 504), (0, 24)])
def test_generic_exponent_ledger(f_bound, expected):
    budget = generic_exponent_ledger(f_bound)
    assert budget["generic"] == expected
    assert budget["centre"] == 4 * f_bound
    assert budget.replay() == []
    assert generic_exponent_check(f_bound).passed


def test_identity_batch_passes():
    frame = identity_batch(seed=1, samples=300)
    assert set(frame["check_id"]) == set(CHECK_SCHEMA)
    assert (frame["verdict"] == "pass").all()
    assert (frame["failures"] == 0).all()


def test_identity_batch_is_seeded():
    assert identity_batch(seed=2, samples=20).equals(identity_batch(seed=2, samples=20))


def test_rational_grid_contents():
    grid = rational_grid()
    assert I in grid and B in grid
    assert all(m.a * m.d - m.b * m.c == 1 for m in grid)


def test_grid_has_no_cocycle_failures():
    assert grid_cocycle_failures() == []
