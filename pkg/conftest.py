# conftest.py
import os
import sys

import pytest

ROOT = os.path.dirname(os.path.abspath(__file__))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from glcm_pipeline import build_instance  # noqa: E402
from group_core import FiniteGroup  # noqa: E402

INSTANCE_DIR = os.path.join(ROOT, "instances")


@pytest.fixture(scope="session")
def z6():
    return FiniteGroup.cyclic(6)


@pytest.fixture(scope="session")
def z12():
    return FiniteGroup.cyclic(12)


@pytest.fixture(scope="session")
def s3():
    return FiniteGroup.from_permutations([[1, 0, 2], [1, 2, 0]])


@pytest.fixture(scope="session")
def coset_instance(z6):
    """ℤ/6 with X = G and the even subgroup as a seed: atoms are the two cosets."""
    return build_instance(z6, z6.full(), seeds=(z6.subset([0, 2, 4]),), label="z6-coset")


@pytest.fixture(scope="session")
def singleton_instance(z12):
    return build_instance(z12, z12.subset([10, 11, 0, 1, 2]), seeds=(z12.singleton(0),), label="z12-singletons")


@pytest.fixture
def instance_path():
    def path(name):
        return os.path.join(INSTANCE_DIR, name)

    return path
