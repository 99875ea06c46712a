# suites/ellis_suite.py
import logging
import random
from dataclasses import dataclass

import pandas as pd

from ellis_engine import (
    brute_force_minimal_left_ideals,
    check_closure_operator,
    decompose,
    find_isomorphism,
    full_transformation_monoid,
    minimal_left_ideals,
    rees_matrix_semigroup,
)
from group_core import FiniteGroup

logger = logging.getLogger(__name__)

# --- Configuration ---
FIXTURE_COUNT = 25
SHAPES = ((1, 1), (1, 2), (2, 1), (2, 2), (2, 3), (3, 2), (3, 3))


@dataclass(frozen=True)
class ReesFixture:
    name: str
    A: FiniteGroup
    I: int
    L: int
    P: tuple


def fixture_groups():
    groups = {f"C{n}": FiniteGroup.cyclic(n) for n in range(1, 9)}
    groups["V4"] = FiniteGroup.from_permutations([[1, 0, 3, 2], [2, 3, 0, 1]])
    groups["S3"] = FiniteGroup.from_permutations([[1, 0, 2], [1, 2, 0]])
    groups["D4"] = FiniteGroup.from_permutations([[1, 2, 3, 0], [3, 2, 1, 0]])
    return groups


def rees_fixtures(seed=0, count=FIXTURE_COUNT):
    """Rees matrix semigroups over groups of order <= 8 with |I|, |Λ| <= 3; every fifth has an identity sandwich."""
    rng = random.Random(seed)
    groups = fixture_groups()
    names = list(groups)
    fixtures = []
    for k in range(count):
        name = names[k % len(names)]
        I, L = SHAPES[k % len(SHAPES)]
        A = groups[name]
        if k % 5 == 0:
            P = tuple(tuple(A.identity for _ in range(I)) for _ in range(L))
        else:
            P = tuple(tuple(rng.randrange(A.order) for _ in range(I)) for _ in range(L))
        fixtures.append(ReesFixture(f"M({name}; {I}, {L})#{k}", A, I, L, P))
    return fixtures


def check_fixture(fx):
    S = rees_matrix_semigroup(fx.A, fx.I, fx.L, fx.P)
    dec = decompose(S)
    engine = sorted((frozenset(int(v) for v in M) for M in dec.ideals), key=min)
    brute = brute_force_minimal_left_ideals(S)
    iso = all(
        len(c.elements) == fx.A.order and find_isomorphism(c.group, fx.A) is not None
        for c in dec.components
    )
    closure = check_closure_operator(S, dec.u)
    row = {
        "fixture": fx.name,
        "order": S.order,
        "ideals": len(dec.ideals),
        "expected_ideals": fx.L,
        "idempotents": [len(J) for J in dec.idempotents],
        "groups_isomorphic_to_A": iso,
        "brute_force_match": engine == brute,
        "closure_operator": all(closure.values()),
    }
    row["passed"] = bool(
        row["ideals"] == fx.L
        and all(n == fx.I for n in row["idempotents"])
        and iso and row["brute_force_match"] and row["closure_operator"]
    )
    return row


def check_t3():
    """The full transformation monoid on 3 points: the constant maps form the kernel."""
    S = full_transformation_monoid(3)
    engine = sorted((frozenset(int(v) for v in M) for M in minimal_left_ideals(S)), key=min)
    brute = brute_force_minimal_left_ideals(S)
    dec = decompose(S)
    trivial_groups = all(len(c.elements) == 1 for c in dec.components)
    return {
        "fixture": "T3", "order": S.order, "ideals": len(engine), "expected_ideals": len(brute),
        "idempotents": [len(J) for J in dec.idempotents], "groups_isomorphic_to_A": trivial_groups,
        "brute_force_match": engine == brute, "closure_operator": True,
        "passed": bool(engine == brute and trivial_groups),
    }


def run(seed=0, samples=None):
    """One row per Rees fixture plus the T3 kernel."""
    rows = [check_fixture(fx) for fx in rees_fixtures(seed, samples or FIXTURE_COUNT)]
    rows.append(check_t3())
    frame = pd.DataFrame(rows)
    logger.info(f"Ellis suite: {int(frame['passed'].sum())}/{len(frame)} fixtures pass.")
    return frame
