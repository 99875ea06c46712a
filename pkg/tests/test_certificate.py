import json

import numpy as np
import pytest

from certificate import Certificate, CheckResult, CheckSpec, merge_schemas, plain


def test_plain_converts_numpy_and_sets():
    value = {"a": np.int64(3), "b": np.array([1, 2]), "c": {3, 1}, "d": np.bool_(True), 4: (np.float64(0.5),)}
    assert plain(value) == {"a": 3, "b": [1, 2], "c": [1, 3], "d": True, "4": [0.5]}


def test_certificate_document_and_failures():
    cert = Certificate({"label": "demo"}, [CheckResult("ok", True), CheckResult("bad", False, note="why")], seed=5)
    assert not cert.passed
    assert cert.failures() == ["bad"]
    doc = json.loads(cert.to_json())
    assert doc["schema"] == 1
    assert doc["seed"] == 5
    assert doc["checks"]["bad"] == {"verdict": "fail", "exponents": {}, "witnesses": {}, "note": "why"}
    frame = cert.to_frame()
    assert frame["verdict"].tolist() == ["pass", "fail"]


def test_certificate_json_is_stable():
    make = lambda: Certificate({"x": [2, 1]}, [CheckResult("c", True, {"n": np.int64(2)})])  # noqa: E731
    assert make().to_json() == make().to_json()


def test_certificate_extend_updates_verdict():
    cert = Certificate({"label": "demo"}, [CheckResult("ok", True)])
    assert cert.passed
    cert.extend(CheckResult(c, c != "late-bad") for c in ("late-ok", "late-bad"))
    assert [c.check_id for c in cert.checks] == ["ok", "late-ok", "late-bad"]
    assert cert.failures() == ["late-bad"]


def test_merge_schemas_rejects_duplicates():
    a = CheckSpec("f", "s", "here", "quote")
    b = CheckSpec("g", "t", "there", "other quote")
    assert merge_schemas({"a": a}, {"b": b}) == {"a": a, "b": b}
    with pytest.raises(ValueError):
        merge_schemas({"a": a}, {"a": b})
