import json

import pytest

from certificate import CheckSpec
from cli import (
    EXIT_FAIL,
    EXIT_PASS,
    EXIT_USAGE,
    InstanceFileError,
    all_check_schemas,
    explain,
    load_instance,
    main,
    parse_instance,
    run_pipeline,
    run_suite,
)

HEADER = "schema: 1\ngroup:\n  kind: cyclic\n  n: 4\n"


def test_parse_minimal_instance():
    spec = parse_instance(HEADER + "X: [3, 0, 1]\n")
    assert spec["group"].order == 4
    assert spec["X"].to_list() == [0, 1, 3]
    assert spec["n_max"] == 34
    assert spec["equivalence_mode"] == "atoms"
    assert spec["checks"] is None
    assert spec["seed"] == 0


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        (HEADER + "X: [0]\nbogus: 1\n", 6, "unknown field 'bogus'"),
        ("schema: 2\n" + HEADER[len("schema: 1\n"):] + "X: [0]\n", 1, "schema must be 1"),
        ("schema: 1\ngroup:\n  kind: dihedral\nX: [0]\n", 3, "group kind"),
        (HEADER + "X: [9]\n", 5, "outside"),
        (HEADER + "X: [0]\nn_max: 12\n", 6, "n_max"),
        (HEADER + "X: [0]\nchecks: [collapse, nope]\n", 6, "nope"),
        (HEADER + "X: [0]\nseed: one\n", 6, "seed must be an integer"),
        (HEADER + "X: [0]\nequivalence_mode: fine\n", 6, "equivalence_mode"),
    ],
)
def test_parse_errors_name_the_line(text, line, fragment):
    with pytest.raises(InstanceFileError) as info:
        parse_instance(text, "inst.yaml")
    assert info.value.line == line
    assert str(info.value).startswith(f"inst.yaml:{line}:")
    assert fragment in str(info.value)


def test_parse_missing_field_and_non_mapping():
    with pytest.raises(InstanceFileError, match="missing required field 'X'"):
        parse_instance(HEADER, "inst.yaml")
    with pytest.raises(InstanceFileError) as info:
        parse_instance("- 1\n- 2\n", "inst.yaml")
    assert info.value.line == 1


def test_parse_yaml_syntax_error():
    with pytest.raises(InstanceFileError, match="YAML parse error"):
        parse_instance("schema: 1\nX: [0, 1\nseeds: []\n", "inst.yaml")


def test_parse_extension_with_carry_cocycle():
    text = "schema: 1\ngroup:\n  kind: extension\n  base: {kind: cyclic, n: 2}\n  modulus: 2\n  cocycle: carry\nX: [0]\n"
    spec = parse_instance(text)
    assert spec["group"].order == 4
    G = spec["group"]
    # cyclic of order 4, not the Klein group
    assert any(G.mul(g, g) != G.identity for g in range(4))


def test_load_instance_files(instance_path):
    spec, status = load_instance(instance_path("s3_nonabelian.yaml"))
    assert status == "Success"
    assert spec["equivalence_mode"] == "coarse-atoms"
    assert spec["group"].order == 6
    assert len(spec["X"]) == 3
    missing, status = load_instance(instance_path("no_such_file.yaml"))
    assert missing is None
    assert status.startswith("Cannot read instance file")


@pytest.mark.parametrize("name", ["z6_coset.yaml", "singleton_atoms.yaml", "s3_nonabelian.yaml"])
def test_run_pipeline_on_instance_files(instance_path, name):
    cert, status = run_pipeline(instance_path(name))
    assert status == "Success"
    assert cert.passed


def test_run_pipeline_is_deterministic(instance_path):
    first, _ = run_pipeline(instance_path("z6_coset.yaml"), seed=7)
    second, _ = run_pipeline(instance_path("z6_coset.yaml"), seed=7)
    assert first.to_json() == second.to_json()
    assert json.loads(first.to_json())["seed"] == 7


def test_run_pipeline_reports_bad_checks(instance_path):
    cert, status = run_pipeline(instance_path("z6_coset.yaml"), checks=["no-such-check"])
    assert cert is None
    assert status.startswith("Pipeline failed")


def test_main_prints_certificate(instance_path, capsys):
    assert main(["--instance", instance_path("z6_coset.yaml")]) == EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    assert doc["subject"]["label"] == "z6-coset"
    assert doc["passed"] is True
    assert all(check["verdict"] == "pass" for check in doc["checks"].values())


def test_main_writes_out_file(instance_path, tmp_path, capsys):
    out = tmp_path / "cert.json"
    code = main(["--instance", instance_path("z6_coset.yaml"), "--checks", "collapse,alt-base1", "--out", str(out)])
    assert code == EXIT_PASS
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert sorted(doc["checks"]) == ["alt-base1", "collapse"]
    assert "collapse" in capsys.readouterr().out


def test_main_refuses_short_horizon(instance_path, capsys):
    assert main(["--instance", instance_path("bad_horizon.yaml")]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "bad_horizon.yaml:7:" in err
    assert "n_max" in err


def test_main_rejects_malformed_file(instance_path, capsys):
    assert main(["--instance", instance_path("malformed.yaml")]) == EXIT_USAGE
    assert "YAML parse error" in capsys.readouterr().err


def test_explain(capsys):
    text, status = explain("thm-main-c30")
    assert status == "Success"
    lines = text.splitlines()
    assert lines[0] == "thm-main-c30"
    assert "f⁻¹[C] ⊆ X³⁰" in lines[1]
    assert "location:  Section 3.2, main theorem" in text
    assert r"Moreover, $f^{-1}[C] \subseteq X^{30}$" in text
    assert main(["--explain", "compose-k"]) == EXIT_PASS
    assert "formula:" in capsys.readouterr().out
    assert explain("no-such-check") == (None, "Unknown check id 'no-such-check'")
    assert main(["--explain", "no-such-check"]) == EXIT_USAGE


def test_explain_accepts_numbered_alias(capsys):
    text, status = explain("rem43-k")
    assert status == "Success"
    assert text.splitlines()[0] == "compose-k"
    assert "k = 4k₂ + k₂·n_{k₁}" in text
    assert "Remark 4.3" in text
    assert main(["--explain", "rem43-k"]) == EXIT_PASS
    assert "anchor:" in capsys.readouterr().out


def test_every_check_has_location_and_anchor():
    for check_id, spec in all_check_schemas().items():
        assert isinstance(spec, CheckSpec), check_id
        assert spec.location and spec.anchor, check_id


def test_nonstd_expr(capsys):
    assert main(["--nonstd-expr", "(- b 1000000)"]) == EXIT_PASS
    out = capsys.readouterr().out.splitlines()
    assert out == ["sign: +", "leading term: 1*b", "depth: 8"]
    assert main(["--nonstd-expr", "(- (/ 1 b) x)"]) == EXIT_PASS
    assert capsys.readouterr().out.startswith("sign: -")


def test_nonstd_expr_errors(capsys):
    assert main(["--nonstd-expr", "(+ 1"]) == EXIT_USAGE
    assert "Missing ')'" in capsys.readouterr().err
    assert main(["--nonstd-expr", "(- (/ 1 (- 1 x)) (/ 1 (- 1 x)))"]) == EXIT_FAIL
    assert "depth cap" in capsys.readouterr().err


def test_unknown_suite(capsys):
    frame, status = run_suite("nope")
    assert frame is None
    assert status.startswith("Unknown suite")
    assert main(["--suite", "nope"]) == EXIT_USAGE


def test_suite_document(tmp_path, capsys):
    out = tmp_path / "sl2.json"
    assert main(["--suite", "sl2", "--samples", "25", "--seed", "4", "--out", str(out)]) == EXIT_PASS
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert doc["suite"] == "sl2"
    assert doc["seed"] == 4
    assert doc["passed"] is True


def test_target_is_required():
    with pytest.raises(SystemExit):
        main([])
