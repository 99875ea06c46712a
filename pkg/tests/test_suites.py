import pytest

import config
from suites import ellis_suite, nonstd_suite, pipeline_suite, quasihom_suite, sl2_suite


def test_ellis_suite():
    frame = ellis_suite.run(seed=0, samples=8)
    assert len(frame) == 9
    assert frame["passed"].all()
    assert frame["brute_force_match"].all()


def test_rees_fixtures_are_seeded():
    names = [fx.name for fx in ellis_suite.rees_fixtures(seed=3, count=5)]
    assert names == [fx.name for fx in ellis_suite.rees_fixtures(seed=3, count=5)]
    assert names[0] == "M(C1; 1, 1)#0"


def test_sl2_suite():
    frame = sl2_suite.run(seed=0, samples=40)
    assert frame["passed"].all()
    assert frame["check_id"].iloc[-1] == "sl2-cocycle-identity (grid)"


def test_nonstd_suite():
    frame = nonstd_suite.run(seed=0, samples=60)
    assert frame["passed"].all()
    assert frame["check_id"].iloc[-1] == "nonstd-oracle-soundness"


def test_quasihom_suite():
    frame = quasihom_suite.run(seed=0, samples=2)
    assert set(frame["chain"]) == {0, 1}
    assert frame["passed"].all()
    assert "uniqueness-n" in set(frame["check_id"])


def test_pipeline_suite():
    frame = pipeline_suite.run(seed=0, samples=2)
    assert len(frame) == 2
    assert frame["passed"].all()


@pytest.mark.parametrize("raw, expected", [("3", 3), ("0", 1), ("many", 1)])
def test_worker_count(monkeypatch, raw, expected):
    monkeypatch.setenv("GLCM_WORKERS", raw)
    assert config.worker_count() == expected


def test_worker_count_default(monkeypatch):
    monkeypatch.delenv("GLCM_WORKERS", raising=False)
    assert config.worker_count() == 1
