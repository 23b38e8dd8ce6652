"""Random protocol trees and specs for property tests."""

from __future__ import annotations

import random
from fractions import Fraction

from .core import (
    FLOAT,
    Branch,
    CoinFlipSpec,
    LeafNode,
    Outcome,
    Party,
    ProtocolTree,
    SendNode,
    WcfNode,
)

OUTCOMES = (Outcome.ZERO, Outcome.ONE, Outcome.ABORT)


def _split_unit(rng: random.Random, n: int, denom: int) -> list[Fraction]:
    """``n`` random non-negative multiples of 1/denom summing to one."""
    cuts = sorted(rng.randint(0, denom) for _ in range(n - 1))
    edges = [0] + cuts + [denom]
    return [Fraction(edges[i + 1] - edges[i], denom) for i in range(n)]


def random_node(rng: random.Random, depth: int = 4, branching: int = 3,
                wcf_rate: float = 0.2, leaf_rate: float = 0.3, denom: int = 12,
                _level: int = 0):
    """A random rational tree of at most ``depth`` levels below this node."""
    if _level >= depth or (_level > 0 and rng.random() < leaf_rate):
        return LeafNode(rng.choice(OUTCOMES))

    def sub():
        return random_node(rng, depth, branching, wcf_rate, leaf_rate, denom, _level + 1)

    if rng.random() < wcf_rate:
        z = Fraction(rng.randint(0, denom), denom)
        eps = Fraction(rng.randint(0, denom // 4), denom)
        return WcfNode(z, eps, sub(), sub())
    n = rng.randint(1, branching)
    probs = _split_unit(rng, n, denom)
    sender = rng.choice((Party.ALICE, Party.BOB))
    return SendNode(sender, tuple(Branch(str(i), p, sub()) for i, p in enumerate(probs)))


def random_tree(rng: random.Random, mode: str = "rational", **kwargs) -> ProtocolTree:
    tree = ProtocolTree(random_node(rng, **kwargs))
    if mode == FLOAT:
        from .core import convert_tree

        tree = convert_tree(tree, FLOAT)
    return tree


def random_quantum_spec(rng: random.Random, denom: int = 64) -> CoinFlipSpec:
    """A rational spec inside the quantum region with both cheating sums above one."""
    while True:
        p0s, p1s, ps0, ps1 = (Fraction(rng.randint(denom // 4, denom), denom) for _ in range(4))
        if p0s + p1s <= 1 or ps0 + ps1 <= 1:
            continue
        p00 = p0s * ps0 * Fraction(rng.randint(0, denom), denom)
        room = min(p1s * ps1, 1 - p00)
        p11 = room * Fraction(rng.randint(0, denom), denom)
        return CoinFlipSpec(p00, p11, p0s, p1s, ps0, ps1)
