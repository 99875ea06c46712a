import numpy as np
import pytest

from g_algebra import (
    AlgebraError,
    GAlgebra,
    algebra_dump,
    check_level_products,
    collapse_report,
    d_closure,
    d_operator,
    generate_algebra,
    is_d_closed,
    is_left_invariant,
    left_translation_representation,
    semigroup_table,
    stone_semigroup,
)
from group_core import power_filtration


@pytest.fixture
def coset_algebra(z6):
    return generate_algebra(z6, [z6.subset([0, 2, 4])])


def test_generate_algebra_cosets(coset_algebra):
    assert [idx.tolist() for idx in coset_algebra.members] == [[0, 2, 4], [1, 3, 5]]


def test_generate_algebra_extremes(z6):
    assert generate_algebra(z6, [z6.singleton(0)]).atom_count == 6
    assert generate_algebra(z6, [z6.full()]).atom_count == 1
    with pytest.raises(AlgebraError):
        generate_algebra(z6, [])


def test_generated_algebra_is_left_invariant(s3):
    alg = generate_algebra(s3, [s3.subset(["()", "(0 1)"])])
    assert is_left_invariant(alg)
    assert alg.contains(s3.subset(["()", "(0 1)"]))


def test_right_translates_refine(s3):
    seed = s3.subset(["()", "(0 1)"])
    left = generate_algebra(s3, [seed])
    both = generate_algebra(s3, [seed], right_translates=True)
    assert both.atom_count >= left.atom_count


def test_d_operator_example(coset_algebra, z6):
    odds = z6.subset([1, 3, 5])
    assert d_operator(coset_algebra, 1, odds).to_list() == [0, 2, 4]
    assert d_operator(coset_algebra, 1, z6.full()) == z6.full()
    assert d_operator(coset_algebra, 1, z6.empty()).is_empty()


def test_d_operator_needs_block_union(coset_algebra, z6):
    with pytest.raises(AlgebraError):
        d_operator(coset_algebra, 0, z6.subset([0, 1]))


@pytest.mark.parametrize("seeds", [[[0]], [[0, 2, 4]], [[0, 1, 2, 3, 4, 5]]])
def test_d_closure_fixpoints_on_z6(z6, seeds):
    alg = generate_algebra(z6, [z6.subset(s) for s in seeds])
    closed = d_closure(alg)
    assert is_d_closed(closed)
    assert closed.atom_count == alg.atom_count
    assert d_closure(closed).atom_count == closed.atom_count


def test_d_closure_on_nonabelian_seed(s3):
    seeded = generate_algebra(s3, [s3.subset(["()", "(0 1)"])])
    assert seeded.atom_count == 3  # left cosets of <(0 1)>
    alg = d_closure(seeded)
    # the core of <(0 1)> is trivial, so d-closure separates every point
    assert alg.atom_count == 6
    assert is_d_closed(alg)
    assert is_left_invariant(alg)


def test_d_closure_rejects_non_invariant(z6):
    with pytest.raises(AlgebraError):
        d_closure(GAlgebra(z6, np.array([0, 0, 1, 1, 1, 1])))


def test_stone_semigroup_coset(coset_algebra, z6):
    S = stone_semigroup(coset_algebra, power_filtration(z6.full(), 3))
    assert S.order == 2
    assert S.mul(1, 1) == 0
    assert S.mul(S.embed(0), 1) == 1
    assert S.level_of(0) == 1
    assert check_level_products(S) == []


def test_stone_semigroup_singletons_is_group_law(z6):
    alg = generate_algebra(z6, [z6.singleton(0)])
    S = stone_semigroup(alg, power_filtration(z6.subset([5, 0, 1]), 3))
    assert np.array_equal(S.op, z6.table)
    assert S.filtration(1).tolist() == [0, 1, 5]
    assert S.level_of(3) == 3


def test_stone_semigroup_rejects_non_nested_levels(coset_algebra, z6):
    with pytest.raises(AlgebraError):
        stone_semigroup(coset_algebra, [z6.full(), z6.subset([0, 2, 4])])


def test_left_translation_representation(coset_algebra, z6):
    S = stone_semigroup(coset_algebra, power_filtration(z6.full(), 2))
    rep = left_translation_representation(S)
    assert rep.injective
    assert rep.closed_under_composition
    assert rep.maps == {0: (0, 1), 1: (1, 0)}


def test_collapse_report_on_cosets(coset_algebra, z6):
    S = stone_semigroup(coset_algebra, power_filtration(z6.full(), 2))
    assert all(collapse_report(S).values())


def test_dumps(coset_algebra, z6):
    assert algebra_dump(coset_algebra).splitlines() == ["atom 0: [0, 2, 4]", "atom 1: [1, 3, 5]"]
    S = stone_semigroup(coset_algebra, power_filtration(z6.full(), 2))
    frame = semigroup_table(S)
    assert frame.loc[1, 1] == 0
