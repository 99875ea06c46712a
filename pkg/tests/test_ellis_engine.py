import numpy as np
import pytest

from ellis_engine import (
    EllisError,
    FiniteSemigroup,
    brute_force_minimal_left_ideals,
    check_circle_calculus,
    check_closure_operator,
    circle,
    collapse_checks,
    decompose,
    decomposition_report,
    ellis_group_of,
    find_isomorphism,
    full_transformation_monoid,
    idempotents_and_groups,
    minimal_left_ideals,
    rees_matrix_semigroup,
    tau_closure,
    transformation_semigroup,
)
from group_core import FiniteGroup


@pytest.fixture
def rees_z2():
    z2 = FiniteGroup.cyclic(2)
    return rees_matrix_semigroup(z2, 2, 2, [[0, 0], [0, 0]])


def test_semigroup_rejects_non_associative():
    with pytest.raises(EllisError):
        FiniteSemigroup.from_table([[1, 0], [0, 0]])


def test_group_has_one_ideal_and_one_idempotent(z6):
    S = FiniteSemigroup.from_table(z6.table)
    ideals = minimal_left_ideals(S)
    assert [M.tolist() for M in ideals] == [list(range(6))]
    J, comps = idempotents_and_groups(S, ideals[0])
    assert J == [0]
    assert comps[0].group.order == 6


def test_rees_identity_sandwich(rees_z2):
    ideals = minimal_left_ideals(rees_z2)
    assert len(ideals) == 2
    assert all(len(M) == 4 for M in ideals)
    brute = brute_force_minimal_left_ideals(rees_z2)
    assert sorted((frozenset(int(v) for v in M) for M in ideals), key=min) == brute
    for k, M in enumerate(ideals):
        J, comps = idempotents_and_groups(rees_z2, M, k)
        assert len(J) == 2
        assert all(c.group.order == 2 for c in comps)


def test_rees_isomorphisms_cover_all_pairs(rees_z2):
    dec = decompose(rees_z2)
    assert len(dec.components) == 4
    assert len(dec.isomorphisms) == 12
    for (a, b), mapping in dec.isomorphisms.items():
        assert sorted(mapping) == dec.components[a].elements.tolist()
        assert sorted(mapping.values()) == dec.components[b].elements.tolist()


def test_rees_sandwich_shape_checked():
    with pytest.raises(EllisError):
        rees_matrix_semigroup(FiniteGroup.cyclic(2), 2, 3, [[0, 0], [0, 0]])


def test_full_transformation_monoid_kernel():
    S = full_transformation_monoid(3)
    assert S.order == 27
    ideals = minimal_left_ideals(S)
    assert len(ideals) == 1
    assert sorted(S.labels[i] for i in ideals[0]) == ["000", "111", "222"]
    dec = decompose(S)
    assert len(dec.idempotents[0]) == 3
    assert all(len(c.elements) == 1 for c in dec.components)


def test_minimal_ideals_absorb_their_own_products():
    S = full_transformation_monoid(3)
    for M in minimal_left_ideals(S):
        for p in M:
            assert sorted(set(S.table[M, p].tolist())) == M.tolist()


def test_transformation_semigroup_closure():
    S = transformation_semigroup([(1, 2, 0), (0, 0, 2)])
    assert "012" in S.labels
    engine = sorted((frozenset(int(v) for v in M) for M in minimal_left_ideals(S)), key=min)
    assert engine == brute_force_minimal_left_ideals(S)


def test_find_isomorphism_rejects_non_isomorphic(s3):
    assert find_isomorphism(FiniteGroup.cyclic(6), s3) is None
    assert find_isomorphism(FiniteGroup.cyclic(4), FiniteGroup.cyclic(6)) is None
    v4 = FiniteGroup.from_permutations([[1, 0, 3, 2], [2, 3, 0, 1]])
    assert find_isomorphism(v4, FiniteGroup.cyclic(4)) is None


def test_find_isomorphism_is_homomorphism(s3):
    other = FiniteGroup.from_permutations([[0, 2, 1], [2, 0, 1]])
    mapping = find_isomorphism(s3, other)
    assert mapping is not None
    assert (mapping[s3.table] == other.table[mapping[:, None], mapping[None, :]]).all()


def test_circle_on_self_acting_semigroup(z6):
    S = FiniteSemigroup.from_table(z6.table)
    assert circle(S, 2, {1, 3}) == {3, 5}
    assert circle(S, 2, set()) == set()


def test_tau_closure_is_discrete(z6):
    S = FiniteSemigroup.from_table(z6.table)
    uM = ellis_group_of(S, 0)
    assert uM == set(range(6))
    assert tau_closure(S, 0, {0}) == {0}
    assert tau_closure(S, 0, {1, 4}) == {1, 4}
    assert tau_closure(S, 0, uM) == uM
    assert all(check_closure_operator(S, 0).values())
    assert all(check_circle_calculus(S).values())


def test_ellis_group_of_needs_idempotent(z6):
    S = FiniteSemigroup.from_table(z6.table)
    with pytest.raises(EllisError):
        ellis_group_of(S, 1)


def test_decomposition_of_group(s3):
    dec = decompose(FiniteSemigroup.from_table(s3.table))
    assert dec.H == frozenset({dec.u})
    assert dec.quotient.order == 6
    assert all(collapse_checks(dec).values())
    report, matrix = decomposition_report(dec)
    assert report["ideal_count"] == 1
    assert report["H_order"] == 1
    assert matrix.shape == (1, 1)


def test_decomposition_report_matrix(rees_z2):
    report, matrix = decomposition_report(decompose(rees_z2))
    assert report["ideal_sizes"] == [4, 4]
    assert report["idempotents_per_ideal"] == [2, 2]
    assert (np.diag(matrix.values) == "id").all()
    assert (matrix.values[~np.eye(4, dtype=bool)] == "iso").all()
