import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from diffweil import BaseFieldSpec, KRing, RatFunc, monogenic_extension


@pytest.fixture(scope="session")
def base_t():
    """K = Q(t) with a single derivation, d t = 1."""
    return BaseFieldSpec(1, 1, [[RatFunc.const(1, 1)]])


@pytest.fixture(scope="session")
def base_2d():
    """K = Q(t) with two commuting derivations: d1 t = 1, d2 t = 0."""
    return BaseFieldSpec(1, 2, [[RatFunc.const(1, 1)], [RatFunc.const(1, 0)]])


@pytest.fixture(scope="session")
def kring_t(base_t):
    return KRing(base_t)


@pytest.fixture(scope="session")
def kring_2d(base_2d):
    return KRing(base_2d)


@pytest.fixture(scope="session")
def sqrt_t_ext(base_t):
    """The Example-4.3 extension: b^2 = t with the induced derivation."""
    t = base_t.gen(1)
    return monogenic_extension(base_t, [-t, base_t.zero(), base_t.one()])
