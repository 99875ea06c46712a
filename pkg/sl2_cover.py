# sl2_cover.py
import itertools
import logging
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pandas as pd

from certificate import CheckResult, CheckSpec
from quasihom_calculus import ErrorBudget

logger = logging.getLogger(__name__)

# --- Configuration ---
# Numerators and denominators of random entries are drawn from [-HEIGHT, HEIGHT] and [1, HEIGHT]
HEIGHT = 6
# Share of random matrices forced onto the c = 0 branch of the cocycle
FORCED_UPPER_SHARE = 0.2
GRID_VALUES = tuple(Fraction(v) for v in ("-2", "-1", "-1/2", "0", "1/2", "1", "2"))
PATTERN_TRIES = 2_000

CHECK_SCHEMA = {
    "sl2-cocycle-identity": CheckSpec(
        "h(a,b) + h(ab,c) = h(a,bc) + h(b,c)",
        "The cocycle of the universal cover satisfies the 2-cocycle identity on rational points.",
        "Lemma 5.8, proof of (3)",
        r"By the 2-cocycle formula, we have $h(u_G,g) + h(u_Gg,u_G) = h(u_G,gu_G) + h(g,u_G)$",
    ),
    "sl2-cover-associativity": CheckSpec(
        "((x·y)·z) = (x·(y·z)) in SL₂(ℚ) × ℤ",
        "The twisted product (m₁m₂, n₁+n₂+h(m₁,m₂)) is associative.",
        "Section 5.1, group law of the cover",
        r"$(a_1,b_1)(a_2,b_2):= (a_1a_2,b_1+b_2+h(b_1,b_2))$",
    ),
    "sl2-cover-inverse": CheckSpec(
        "(x·y)⁻¹ = y⁻¹·x⁻¹, (m,n)⁻¹ = (m⁻¹, −n−h(m,m⁻¹))",
        "Cover inversion is an anti-automorphism.",
        "Section 5.1, group law of the cover",
        r"$\tilde{G}$ can be written as  $\SL_2(\R) \times \Z$",
    ),
    "sl2-inverse-sign": CheckSpec(
        "h(a⁻¹,b) = h(a,a⁻¹) when a and b share their sign pattern; (a,0)⁻¹(b,0) = (a⁻¹b,0)",
        "Same-type pairs multiply back into the zero sheet.",
        "Corollary 5.5, proof",
        r"one easily checks that $h(a_i^{-1},b_i) = h(a_i,a_i^{-1})$",
    ),
    "sl2-h-image": CheckSpec(
        "im(h) ⊆ {−1,0,1}",
        "The cocycle takes only the values −1, 0, 1.",
        "Section 5.1, definition of the cocycle",
        r"$h \colon G \times G \to \Z$ is the 2-cocycle defined as follows",
    ),
    "sl2-rotation": CheckSpec(
        "h(B,B) = 1, h(B²,B²) = −1, (B,0)⁴ = (I,1)",
        "The quarter rotation generates the centre of the cover.",
        "Proposition 5.3, proof",
        r"(B,0)^{4}=(I, 2h(B,B) +h(B^2,B^2))=(I,1)",
    ),
    "sl2-generic-exponent": CheckSpec(
        "X^{4f} → X^{4f·12} → X^{48f+24}, f = 14 gives 696",
        "Every generic symmetric definable X contains G × kℤ inside X^{696}.",
        "Proposition 5.3",
        r"$G \times k\Z \subseteq X^{696}$",
    ),
}


class DeterminantError(ValueError):
    """A matrix left SL₂: its determinant is not 1."""


class SignPatternError(ValueError):
    """Two matrices do not share their entrywise sign pattern."""


# --- 1. Rational Points of SL2 ---

@dataclass(frozen=True)
class Mat2Q:
    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.a * self.d - self.b * self.c != 1:
            raise DeterminantError(f"det {self.entries()} = {self.a * self.d - self.b * self.c}")

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    def entries(self):
        return ((self.a, self.b), (self.c, self.d))

    def __mul__(self, other):
        return Mat2Q(*(v for row in matrix_product(self.entries(), other.entries()) for v in row))

    def __neg__(self):
        return Mat2Q(-self.a, -self.b, -self.c, -self.d)

    def inverse(self):
        return Mat2Q(self.d, -self.b, -self.c, self.a)

    def sign_pattern(self):
        return tuple(_sign(v) for v in (self.a, self.b, self.c, self.d))

    def __str__(self):
        return f"({self.a} {self.b}; {self.c} {self.d})"


ROTATION = Mat2Q(0, -1, 1, 0)


def _sign(v):
    return (v > 0) - (v < 0)


def matrix_product(A, B):
    (a1, b1), (c1, d1) = A
    (a2, b2), (c2, d2) = B
    return ((a1 * a2 + b1 * c2, a1 * b2 + b1 * d2), (c1 * a2 + d1 * c2, c1 * b2 + d1 * d2))


def c_of_d(c, d):
    return c if c != 0 else d


def cocycle_from_entries(A, B, sign):
    """
    The three-branch cocycle rule for 2×2 matrices over any ordered ring. A and B are
    ((a, b), (c, d)) tuples; sign maps a ring element to −1, 0 or 1.
    """
    def branch(M):
        (_, _), (c, d) = M
        s = sign(c)
        return s if s != 0 else sign(d)

    s1, s2, s3 = branch(A), branch(B), branch(matrix_product(A, B))
    if s1 > 0 and s2 > 0 and s3 < 0:
        return 1
    if s1 < 0 and s2 < 0 and s3 > 0:
        return -1
    return 0


def cocycle_h(A, B):
    value = cocycle_from_entries(A.entries(), B.entries(), _sign)
    assert value in (-1, 0, 1)
    return value


# --- 2. The Universal Cover ---

@dataclass(frozen=True)
class CoverElem:
    m: Mat2Q
    n: int = 0

    def __str__(self):
        return f"({self.m}, {self.n})"


def cover_mul(x, y):
    return CoverElem(x.m * y.m, x.n + y.n + cocycle_h(x.m, y.m))


def cover_inverse(x):
    inv = x.m.inverse()
    return CoverElem(inv, -x.n - cocycle_h(x.m, inv))


def cover_power(x, k):
    result = CoverElem(Mat2Q.identity(), 0)
    base = x if k >= 0 else cover_inverse(x)
    for _ in range(abs(k)):
        result = cover_mul(result, base)
    return result


# --- 3. Identity Checks ---

def cocycle_identity_check(A, B, C):
    lhs = cocycle_h(A, B) + cocycle_h(A * B, C)
    rhs = cocycle_h(A, B * C) + cocycle_h(B, C)
    return CheckResult(
        "sl2-cocycle-identity", lhs == rhs,
        witnesses={"triple": [str(A), str(B), str(C)], "lhs": lhs, "rhs": rhs},
    )


def cover_associativity_check(x, y, z):
    left = cover_mul(cover_mul(x, y), z)
    right = cover_mul(x, cover_mul(y, z))
    return CheckResult(
        "sl2-cover-associativity", left == right,
        witnesses={"triple": [str(x), str(y), str(z)], "left": str(left), "right": str(right)},
    )


def cover_inverse_check(x, y):
    left = cover_inverse(cover_mul(x, y))
    right = cover_mul(cover_inverse(y), cover_inverse(x))
    unit = CoverElem(Mat2Q.identity(), 0)
    passed = left == right and cover_mul(x, cover_inverse(x)) == unit
    return CheckResult("sl2-cover-inverse", passed, witnesses={"left": str(left), "right": str(right)})


def inverse_sign_check(a, b):
    """h(a⁻¹, b) = h(a, a⁻¹) for a, b with the same entrywise signs, and its zero-sheet consequence."""
    if a.sign_pattern() != b.sign_pattern():
        raise SignPatternError(f"{a} and {b} have different sign patterns")
    inv = a.inverse()
    lhs, rhs = cocycle_h(inv, b), cocycle_h(a, inv)
    sheet = cover_mul(cover_inverse(CoverElem(a, 0)), CoverElem(b, 0))
    passed = lhs == rhs and sheet == CoverElem(inv * b, 0)
    return CheckResult(
        "sl2-inverse-sign", passed,
        witnesses={"pair": [str(a), str(b)], "h(a^-1,b)": lhs, "h(a,a^-1)": rhs, "sheet": sheet.n},
    )


def rotation_check():
    B = ROTATION
    hbb = cocycle_h(B, B)
    hb2 = cocycle_h(B * B, B * B)
    fourth = cover_power(CoverElem(B, 0), 4)
    square = cover_power(CoverElem(B, 0), 2)
    passed = (
        hbb == 1 and hb2 == -1
        and fourth == CoverElem(Mat2Q.identity(), 1)
        and square == CoverElem(-Mat2Q.identity(), 1)
    )
    return CheckResult(
        "sl2-rotation", passed,
        witnesses={"h(B,B)": hbb, "h(B^2,B^2)": hb2, "(B,0)^2": str(square), "(B,0)^4": str(fourth)},
    )


def generic_exponent_ledger(f_bound=14):
    """
    Replays the exponent chain for G × kℤ: the u-fixed set (containing the rotation) times kℤ
    sits in X^f, four rotations give the centre, a window of 12 central shifts covers the
    12-connected group, and 24 more factors reach every (g, n).
    """
    budget = ErrorBudget().given(fixed=f_bound)
    budget = budget.record("centre", "4*fixed", fixed=budget["fixed"])
    budget = budget.record("window", "12*centre", centre=budget["centre"])
    budget = budget.record("generic", "window + 24", window=budget["window"])
    return budget


def generic_exponent_check(f_bound=14):
    budget = generic_exponent_ledger(f_bound)
    passed = not budget.replay() and budget["generic"] == 48 * f_bound + 24
    return CheckResult("sl2-generic-exponent", passed, exponents=budget.as_dict())


# --- 4. Generators ---

def _rational(rng, nonzero=False):
    while True:
        value = Fraction(rng.randint(-HEIGHT, HEIGHT), rng.randint(1, HEIGHT))
        if value or not nonzero:
            return value


def random_sl2(rng):
    """A seeded random rational point; c = 0 is forced on a fixed share of draws."""
    if rng.random() < FORCED_UPPER_SHARE:
        a = _rational(rng, nonzero=True)
        return Mat2Q(a, _rational(rng), 0, 1 / a)
    while True:
        a, b, c = _rational(rng), _rational(rng), _rational(rng, nonzero=True)
        if a:
            return Mat2Q(a, b, c, (1 + b * c) / a)


def _with_sign(rng, s):
    return s * abs(_rational(rng, nonzero=True)) if s else Fraction(0)


def random_same_pattern(a, rng):
    """A random rational point with the entrywise signs of a (a itself when sampling gives up)."""
    sa, sb, sc, sd = a.sign_pattern()
    for _ in range(PATTERN_TRIES):
        if sc == 0:
            x = _with_sign(rng, sa)
            candidate = Mat2Q(x, _with_sign(rng, sb), 0, 1 / x)
        elif sa == 0:
            z = _with_sign(rng, sc)
            candidate = Mat2Q(0, -1 / z, z, _with_sign(rng, sd))
        else:
            x, y, z = _with_sign(rng, sa), _with_sign(rng, sb), _with_sign(rng, sc)
            candidate = Mat2Q(x, y, z, (1 + y * z) / x)
        if candidate.sign_pattern() == (sa, sb, sc, sd):
            return candidate
    logger.debug(f"No fresh matrix with pattern {(sa, sb, sc, sd)}; reusing {a}")
    return a


def rational_grid():
    """Every determinant-one matrix with entries in {−2, −1, −½, 0, ½, 1, 2}."""
    return [
        Mat2Q(a, b, c, d)
        for a, b, c, d in itertools.product(GRID_VALUES, repeat=4)
        if a * d - b * c == 1
    ]


# --- 5. Batches ---

def identity_batch(seed=0, samples=10_000):
    """Runs every randomized identity on `samples` seeded draws; one row per check id."""
    rng = random.Random(seed)
    counts = {check_id: [0, 0] for check_id in CHECK_SCHEMA}
    first_failure = {}

    def tally(result):
        counts[result.check_id][0] += 1
        if not result.passed:
            counts[result.check_id][1] += 1
            first_failure.setdefault(result.check_id, result.witnesses)

    for _ in range(samples):
        A, B, C = random_sl2(rng), random_sl2(rng), random_sl2(rng)
        tally(cocycle_identity_check(A, B, C))
        x, y, z = (CoverElem(M, rng.randint(-3, 3)) for M in (A, B, C))
        tally(cover_associativity_check(x, y, z))
        tally(cover_inverse_check(x, y))
        tally(inverse_sign_check(A, random_same_pattern(A, rng)))
        image_ok = all(cocycle_h(P, Q) in (-1, 0, 1) for P, Q in ((A, B), (B, C), (A, C)))
        tally(CheckResult("sl2-h-image", image_ok))
    tally(rotation_check())
    tally(generic_exponent_check())

    rows = [
        {"check_id": check_id, "cases": n, "failures": bad,
         "verdict": "pass" if n and not bad else "fail",
         "first_failure": first_failure.get(check_id, "")}
        for check_id, (n, bad) in counts.items()
    ]
    logger.info(f"SL2 identity batch: seed={seed}, samples={samples}.")
    return pd.DataFrame(rows, columns=["check_id", "cases", "failures", "verdict", "first_failure"])


def _branches(c, d):
    return np.where(c != 0, np.sign(c), np.sign(d))


def _h_from_branches(s1, s2, s3):
    return ((s1 > 0) & (s2 > 0) & (s3 < 0)).astype(np.int64) - ((s1 < 0) & (s2 < 0) & (s3 > 0))


def grid_cocycle_failures(grid=None):
    """
    Exhaustive 2-cocycle identity over the small grid; returns failing triples.
    Grid entries are dyadic with small height, so float64 products are exact here.
    """
    grid = rational_grid() if grid is None else grid
    n = len(grid)
    M = np.array([[[float(v) for v in row] for row in m.entries()] for m in grid])
    P = np.einsum("iab,jbc->ijac", M, M)
    s = _branches(M[:, 1, 0], M[:, 1, 1])
    s_pair = _branches(P[..., 1, 0], P[..., 1, 1])
    h_pair = _h_from_branches(s[:, None], s[None, :], s_pair)
    failures = []
    for i in range(n):
        # lower row of A·B·C for A = grid[i], over all (B, C)
        ab = P[i]
        c3 = ab[:, 1, 0][:, None] * M[None, :, 0, 0] + ab[:, 1, 1][:, None] * M[None, :, 1, 0]
        d3 = ab[:, 1, 0][:, None] * M[None, :, 0, 1] + ab[:, 1, 1][:, None] * M[None, :, 1, 1]
        s_triple = _branches(c3, d3)
        lhs = h_pair[i][:, None] + _h_from_branches(s_pair[i][:, None], s[None, :], s_triple)
        rhs = _h_from_branches(s[i], s_pair, s_triple) + h_pair
        for j, k in zip(*np.nonzero(lhs != rhs)):
            failures.append((grid[i], grid[j], grid[k]))
    logger.info(f"Grid cocycle scan over {n} matrices ({n ** 3} triples): {len(failures)} failure(s).")
    return failures
