import numpy as np
import pytest

from glcm_pipeline import build_F_tower
from group_core import FiniteGroup, subset_power
from quasihom_calculus import (
    ErrorBudget,
    QuasiHomError,
    category_laws,
    check_derived,
    check_glcm,
    check_good,
    compose_morphisms,
    derived_exponents,
    equivalence_laws,
    equivalence_witness,
    error_left,
    error_right,
    least_power,
    make_morphism,
    make_quasihom,
    model_of,
    power_chain,
    random_model_chain,
    uniqueness_bound,
    universality_construct,
)


def interval(group, radius):
    return group.subset(sorted({r % group.order for r in range(-radius, radius + 1)}))


@pytest.fixture
def identity_hom(z6):
    return make_quasihom(z6, z6, list(range(6)), z6.singleton(0))


def test_error_budget_records_and_replays():
    budget = ErrorBudget().given(l=2, k=3, m2=1)
    budget = budget.record("n", "4*Max(m2, k + 12*(4*l + 1))", m2=1, k=3, l=2)
    assert budget["n"] == 444
    assert budget.replay() == []
    assert "n" in budget
    assert budget.to_frame()["name"].tolist() == ["l", "k", "m2", "n"]


def test_derived_exponents():
    budget = derived_exponents(ErrorBudget().given(n=2, e=1), m_max=3)
    assert budget["n_1"] == 2
    assert budget["n_3"] == 8
    assert budget["k_1"] == 0
    assert budget["k_3"] == budget["n_2"] + 1
    homomorphism = derived_exponents(ErrorBudget().given(n=3, e=0), m_max=4)
    assert homomorphism["n_4"] == 12


def test_derived_exponents_with_separation():
    budget = derived_exponents(ErrorBudget().given(n=1, e=1, m=2), m_max=2)
    assert budget["m_1"] == 2
    assert budget["m_2"] == budget["k_2"] + 2


def test_power_chain_and_least_power(z12):
    T = interval(z12, 1)
    chain = power_chain(T)
    assert len(chain) == 7
    assert chain[-1] == z12.full()
    assert least_power(T, [0]) == 0
    assert least_power(T, [3, 9]) == 3
    assert least_power(z12.singleton(0), [1]) is None


def test_identity_hom_is_glcm(identity_hom, z6):
    verdict = check_glcm(identity_hom, z6.subset([5, 0, 1]))
    assert verdict.passed
    assert verdict.l == 1
    assert verdict.items["l_two_holds"]
    assert verdict.to_check().check_id == "glcm-definition"


def test_error_sets_of_noisy_map(z12):
    T = interval(z12, 1)
    values = [x if x != 5 else 6 for x in range(12)]
    f = make_quasihom(z12, z12, values, T)
    # 5 + 5 lands on 10, two steps from 0
    assert f.err_exp == 2
    assert set(error_right(f).to_list()) == {0, 1, 10, 11}
    assert error_left(f) == error_right(f)


def test_constant_map_needs_error_room(s3):
    t = s3.index_of("(0 1)")
    with pytest.raises(QuasiHomError):
        make_quasihom(s3, s3, [t] * 6, s3.singleton(s3.identity))


def test_inversion_on_nonabelian_group_is_not_a_homomorphism(s3):
    with pytest.raises(QuasiHomError, match="escape"):
        make_quasihom(s3, s3, s3.inverses.tolist(), s3.singleton(s3.identity))


def test_constant_identity_map_is_a_homomorphism(s3):
    f = make_quasihom(s3, s3, [s3.identity] * 6, s3.singleton(s3.identity))
    assert f.err_exp == 0
    assert check_glcm(f, s3.full()).passed


def test_error_base_must_be_normal(s3):
    base = s3.subset(["()", "(0 1)"])
    with pytest.raises(QuasiHomError, match="normal"):
        make_quasihom(s3, s3, list(range(6)), base)


def test_check_good_identity(z6):
    T = z6.subset([5, 0, 1])
    verdict = check_good(make_quasihom(z6, z6, list(range(6)), T), T)
    assert verdict.passed
    assert (verdict.n, verdict.m) == (1, 1)


def test_check_good_trivial_map(z6):
    trivial = make_quasihom(z6, z6, [0] * 6, z6.singleton(0))
    verdict = check_good(trivial, z6.singleton(0))
    assert verdict.passed
    assert (verdict.n, verdict.m) == (1, 1)
    assert verdict.to_check().exponents == {"n": 1, "m": 1}


def test_check_good_fails_without_error_room(z6):
    h = make_quasihom(z6, z6, list(range(6)), z6.singleton(0))
    verdict = check_good(h, z6.subset([5, 0, 1]))
    assert not verdict.passed
    assert verdict.n is None


def test_composing_homomorphisms_keeps_exponent_zero(z6):
    f = make_quasihom(z6, z6, list(range(6)), z6.singleton(0))
    rho = make_morphism(f, f, list(range(6)))
    assert rho.k == 0
    composite, check = compose_morphisms(rho, rho)
    assert check.passed
    assert composite.k == 0


def test_check_derived_scans_exponents(z12):
    T = interval(z12, 1)
    h = make_quasihom(z12, z12, list(range(12)), T)
    good = check_good(h, T)
    budget = derived_exponents(ErrorBudget().given(n=good.n, e=h.err_exp, m=good.m), m_max=3)
    assert check_derived(h, T, budget, m_max=3).passed


def test_morphism_composition_and_laws():
    chain = random_model_chain(0)
    rho1, rho2 = chain.morphisms
    composite, check = compose_morphisms(rho1, rho2)
    assert check.passed
    assert composite.k == check.exponents["k"]
    assert composite.k == 4 * rho2.k + rho2.k * check.exponents[f"n_{max(rho1.k, 1)}"]
    assert equivalence_laws([rho1, chain.alternates[0]]).passed
    assert category_laws(rho1, chain.alternates[0], rho2, chain.alternates[1]).passed


def test_equivalence_witness_reflexive():
    chain = random_model_chain(1)
    rho = chain.morphisms[0]
    assert equivalence_witness(rho, rho) == 0


def test_compose_requires_matching_models():
    chain = random_model_chain(2)
    rho1, rho2 = chain.morphisms
    with pytest.raises(QuasiHomError):
        compose_morphisms(rho2, rho1)


def test_make_morphism_requires_shared_source(z6, z12):
    f = make_quasihom(z6, z6, list(range(6)), z6.singleton(0))
    g = make_quasihom(z12, z12, list(range(12)), z12.singleton(0))
    with pytest.raises(QuasiHomError):
        make_morphism(f, g, list(range(12)))


def test_universality_on_pipeline_model(coset_instance):
    tower = build_F_tower(coset_instance)
    f = model_of(coset_instance, tower)
    report = universality_construct(coset_instance, f, tower)
    assert report.passed
    assert report.l == 1
    assert report.budget["htilde_error"] == 37 * 5
    # h = f: the coset choice recovers f exactly
    assert np.array_equal(report.h_tilde[f.values], f.values)


def test_universality_with_seeded_choice(singleton_instance):
    inst = singleton_instance
    tower = build_F_tower(inst)
    target = FiniteGroup.cyclic(4)
    h = make_quasihom(inst.group, target, [g % 4 for g in range(12)], target.singleton(0))
    report = universality_construct(inst, h, tower, choice_seed=11)
    assert report.passed
    assert report.minimal["univ-htilde-factor"] == 0


def test_universality_rejects_foreign_group(coset_instance, z12):
    h = make_quasihom(z12, z12, list(range(12)), z12.singleton(0))
    with pytest.raises(QuasiHomError):
        universality_construct(coset_instance, h)


def test_uniqueness_bound_on_pipeline_model(coset_instance):
    tower = build_F_tower(coset_instance)
    f = model_of(coset_instance, tower)
    report = universality_construct(coset_instance, f, tower)
    rho = make_morphism(f, f, report.h_tilde)
    result = uniqueness_bound(report, rho, tower.C)
    assert result.passed
    assert result.exponents["n"] == 4 * max(result.exponents["m2"], rho.k + 12 * (4 * report.l + 1))
    assert result.witnesses["minimal"] == 0


def test_random_chain_models_share_source():
    chain = random_model_chain(3)
    f1, f2, f3 = chain.models
    assert f1.source is f2.source is f3.source is chain.instance.group
    assert all(f.err_exp <= 3 for f in chain.models)
    for f in chain.models:
        assert error_right(f) <= subset_power(f.error_base, f.err_exp)
