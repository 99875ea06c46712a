import json

import numpy as np
import pytest

import glcm_pipeline
from glcm_pipeline import (
    CHECK_SCHEMA,
    HorizonTooSmall,
    alt_error_sets,
    build_F_tower,
    build_instance,
    f_hat,
    f_map,
    random_instance,
    run_random_batch,
    theorem_certificate,
    verify_certificate_witnesses,
)


def test_horizon_refusal(z6):
    with pytest.raises(HorizonTooSmall) as info:
        build_instance(z6, z6.full(), n_max=10)
    assert info.value.needed == 34


def test_unknown_equivalence_mode(z6):
    with pytest.raises(ValueError):
        build_instance(z6, z6.full(), equivalence_mode="fine")


def test_coset_instance_structure(coset_instance):
    inst = coset_instance
    assert inst.algebra.atom_count == 2
    assert inst.quotient.order == 2
    assert inst.dec.H == frozenset({inst.u})


def test_coset_f_is_parity(coset_instance):
    f = f_map(coset_instance)
    Q = coset_instance.quotient
    assert f[0] == Q.identity
    assert f.tolist() == [f[0], f[1]] * 3
    assert f[0] != f[1]


def test_f_hat_extends_f(coset_instance):
    inst = coset_instance
    fh = f_hat(inst)
    assert np.array_equal(fh[inst.algebra.atom_of], f_map(inst))
    assert np.array_equal(fh[inst.dec.uM], inst.dec.projection[inst.dec.uM])


def test_singleton_f_is_bijective(singleton_instance):
    f = f_map(singleton_instance)
    assert sorted(f.tolist()) == list(range(12))
    assert f[0] == singleton_instance.quotient.identity


def test_tower_on_coset_instance(coset_instance):
    tower = build_F_tower(coset_instance)
    assert tower.F[1].to_list() == [0, 2, 4]
    assert tower.C == coset_instance.quotient.singleton(coset_instance.quotient.identity)


def test_tower_on_singleton_instance(singleton_instance):
    tower = build_F_tower(singleton_instance)
    assert tower.F[1].to_list() == [0]
    assert len(tower.C) == 1


@pytest.mark.parametrize("fixture", ["coset_instance", "singleton_instance"])
def test_certificate_passes(request, fixture):
    inst = request.getfixturevalue(fixture)
    cert = theorem_certificate(inst)
    assert cert.failures() == []
    assert {c.check_id for c in cert.checks} == set(CHECK_SCHEMA)


def test_coset_certificate_witnesses(coset_instance):
    cert = theorem_certificate(coset_instance)
    doc = json.loads(cert.to_json())
    assert doc["checks"]["thm-main-c30"]["witnesses"]["preimage_C"] == [0, 2, 4]
    assert doc["checks"]["thm-main-separation"]["witnesses"]["smallest_l"] == 1
    assert verify_certificate_witnesses(doc, coset_instance.group, coset_instance.X) == []


def test_certificate_selection_and_unknown(coset_instance):
    cert = theorem_certificate(coset_instance, checks=["collapse", "alt-base1"])
    assert [c.check_id for c in cert.checks] == ["collapse", "alt-base1"]
    with pytest.raises(ValueError):
        theorem_certificate(coset_instance, checks=["no-such-check"])


def test_certificate_is_deterministic(coset_instance):
    assert theorem_certificate(coset_instance, seed=3).to_json() == theorem_certificate(coset_instance, seed=3).to_json()


def test_alt_error_sets_report(singleton_instance):
    report = alt_error_sets(singleton_instance)
    assert all(c.passed for c in report["checks"])
    evidence = report["level_products"]
    assert evidence["forward_holds"].all()
    assert evidence["backward_holds"].all()


def test_coarse_mode_instance(s3):
    X = s3.subset(["()", "(0 1)", "(1 2)"])
    inst = build_instance(s3, X, equivalence_mode="coarse-atoms", label="s3")
    assert inst.group.order == 6
    # translates of X² = G \ {(0 2)} already isolate every point
    assert inst.equivalence.atom_count == inst.algebra.atom_count == 6
    assert theorem_certificate(inst).passed


def test_coarse_mode_ignores_point_seeds(z6):
    inst = build_instance(z6, z6.full(), seeds=(z6.subset([0, 2, 4]),), equivalence_mode="coarse-atoms")
    assert inst.algebra.atom_count == 2
    assert inst.equivalence.atom_count == 1
    tower = build_F_tower(inst)
    assert tower.F[1].to_list() == list(range(6))
    assert tower.C == inst.quotient.full()
    assert theorem_certificate(inst).passed


def test_coarse_mode_on_nonabelian_seed(s3):
    inst = build_instance(s3, s3.full(), seeds=(s3.subset(["()", "(0 1)"]),), equivalence_mode="coarse-atoms")
    assert inst.algebra.atom_count == 6
    assert inst.equivalence.atom_count == 1
    assert theorem_certificate(inst).passed


def test_generic_check_records_a_failed_cover(coset_instance, monkeypatch):
    monkeypatch.setattr(glcm_pipeline, "covering_number", lambda target, tile: (1, [0]))
    cert = theorem_certificate(coset_instance, checks=["thm-main-generic"])
    check = cert.checks[0]
    assert not check.passed
    assert check.witnesses["uncovered_X"] == [1, 3, 5]
    assert check.witnesses["uncovered_G"] == [1, 3, 5]


def test_alt_checks_extend_the_certificate(coset_instance):
    cert = theorem_certificate(coset_instance, checks=["alt-base3", "collapse"])
    assert [c.check_id for c in cert.checks] == ["collapse", "alt-base3"]
    assert cert.passed


def test_random_instances_are_seeded():
    a, b = random_instance(4), random_instance(4)
    assert a.label == b.label
    assert a.group.order == b.group.order
    assert a.X.to_list() == b.X.to_list()


def test_random_batch_small():
    frame = run_random_batch(count=3, seed=0, workers=1)
    assert len(frame) == 3
    assert (frame["error"] == "").all()
    assert frame["passed"].all()
