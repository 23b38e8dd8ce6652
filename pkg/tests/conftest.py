"""Shared strategies, helpers and the acceptance summary hook."""

from __future__ import annotations

import random
from fractions import Fraction as F

import pytest
from hypothesis import settings, strategies as st

from coinflip.core import CoinFlipSpec
from coinflip.randomtrees import random_tree

# exact arithmetic on random trees has heavy-tailed cost; no per-example deadline
settings.register_profile("repo", deadline=None)
settings.load_profile("repo")

# acceptance tests append (number, passed, detail) here
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def fractions(max_denom: int = 16):
    """Probabilities k/d with small denominators."""
    return st.integers(1, max_denom).flatmap(
        lambda d: st.integers(0, d).map(lambda k: F(k, d)))


@st.composite
def specs(draw, max_denom: int = 12) -> CoinFlipSpec:
    """Arbitrary valid rational coin-flip specs."""
    p0s, p1s, ps0, ps1 = (draw(fractions(max_denom)) for _ in range(4))
    p00 = draw(fractions(max_denom)) * min(p0s, ps0)
    p11 = draw(fractions(max_denom)) * min(p1s, ps1, 1 - p00)
    return CoinFlipSpec(p00, p11, p0s, p1s, ps0, ps1)


@st.composite
def trees(draw, wcf_rate: float = 0.2, mode: str = "rational"):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_tree(random.Random(seed), mode, wcf_rate=wcf_rate)


@pytest.fixture
def cf1_fair():
    from coinflip import build_coinflip1
    return build_coinflip1(F(1, 2), F(1, 2), F(1), F(1))


@pytest.fixture
def cf2_symmetric():
    from coinflip import build_coinflip2, coinflip2_params, make_spec
    return build_coinflip2(coinflip2_params(make_spec("7/16", "7/16", "3/4", "3/4", "3/4", "3/4")))
