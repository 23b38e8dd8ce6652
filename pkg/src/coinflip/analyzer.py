"""Exact optimal-cheating analysis of protocol trees.

:func:`analyze` runs backward induction: at a node where the honest player
sends, every quantity is averaged over the honest message distribution; at a
node where the cheater sends, the cheater's forcing values take the best
message. WCF resource nodes let the cheater pick any Alice-win probability in
its interval, and since the value is linear in that probability only the two
endpoints matter.

:func:`brute_force_analyze` is an independent check: it enumerates every
deterministic cheating strategy and evaluates each one by a forward sweep.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .bounds import classical_bound_rhs
from .core import (
    FLOAT,
    CoinFlipSpec,
    ExplosionGuard,
    LeafNode,
    MalformedTree,
    Number,
    Outcome,
    Party,
    ProtocolTree,
    SendNode,
    WcfNode,
    constants,
    fmt,
    root_of,
    tolerance,
    tree_mode,
    validate_tree,
    walk,
)

RESULT_FIELDS = ("p00", "p11", "abort", "force_a0", "force_a1", "force_b0", "force_b1")

# float-mode slack used when picking the best branch for an extracted strategy
TIE_SLACK = 1e-12


@dataclass(frozen=True)
class AnalysisResult:
    """Honest output distribution and the four optimal forcing probabilities.

    ``force_a0`` is the largest probability with which a cheating Alice makes
    Bob output 0; ``force_b1`` the largest probability with which a cheating
    Bob makes Alice output 1; and so on.
    """

    p00: Number
    p11: Number
    abort: Number
    force_a0: Number
    force_a1: Number
    force_b0: Number
    force_b1: Number

    def as_tuple(self) -> tuple[Number, ...]:
        return tuple(getattr(self, f) for f in RESULT_FIELDS)

    def force(self, cheater: Party, target: int) -> Number:
        side = "a" if cheater is Party.ALICE else "b"
        return getattr(self, f"force_{side}{target}")

    def as_spec(self) -> CoinFlipSpec:
        """The tightest coin-flip spec this result implements."""
        return CoinFlipSpec(self.p00, self.p11, self.force_b0, self.force_b1,
                            self.force_a0, self.force_a1)

    def swap_parties(self) -> AnalysisResult:
        return AnalysisResult(self.p00, self.p11, self.abort,
                              self.force_b0, self.force_b1, self.force_a0, self.force_a1)

    def swap_outputs(self) -> AnalysisResult:
        return AnalysisResult(self.p11, self.p00, self.abort,
                              self.force_a1, self.force_a0, self.force_b1, self.force_b0)

    def to_json(self) -> dict:
        values = self.as_tuple()
        out = {"mode": "float" if isinstance(self.p00, float) else "rational"}
        out.update({k: float(v) for k, v in zip(RESULT_FIELDS, values)})
        if not isinstance(self.p00, float):
            out["exact"] = {k: fmt(v) for k, v in zip(RESULT_FIELDS, values)}
        return out


# (h0, h1, a0, a1, b0, b1): honest P[0], honest P[1], and the forcing values
Values = tuple


def _leaf_values(output: Outcome, zero, one) -> Values:
    if output is Outcome.ZERO:
        return (one, zero, one, zero, one, zero)
    if output is Outcome.ONE:
        return (zero, one, zero, one, zero, one)
    return (zero,) * 6


def _values(node, memo: dict, zero, one) -> Values:
    key = id(node)
    hit = memo.get(key)
    if hit is not None:
        return hit[1]
    if isinstance(node, LeafNode):
        v = _leaf_values(node.output, zero, one)
    elif isinstance(node, SendNode):
        kids = [(b.prob, _values(b.child, memo, zero, one)) for b in node.branches]
        avg = [sum((r * c[i] for r, c in kids), zero) for i in range(6)]
        best = [max(c[i] for _, c in kids) for i in range(6)]
        if node.sender is Party.ALICE:
            v = (avg[0], avg[1], best[2], best[3], avg[4], avg[5])
        else:
            v = (avg[0], avg[1], avg[2], avg[3], best[4], best[5])
    elif isinstance(node, WcfNode):
        win = _values(node.alice_wins, memo, zero, one)
        lose = _values(node.bob_wins, memo, zero, one)
        z = node.z

        def mix(q, i):
            return q * win[i] + (one - q) * lose[i]

        qa = node.spec.alice_interval()
        qb = node.spec.bob_interval()
        v = (mix(z, 0), mix(z, 1),
             max(mix(q, 2) for q in qa), max(mix(q, 3) for q in qa),
             max(mix(q, 4) for q in qb), max(mix(q, 5) for q in qb))
    else:
        raise MalformedTree(f"unknown node type {type(node).__name__}")
    # keep the node alive so its id cannot be reused during this call
    memo[key] = (node, v)
    return v


def _prepare(tree) -> tuple:
    root = root_of(tree)
    report = validate_tree(root)
    if not report.ok:
        raise MalformedTree("; ".join(report.defects))
    zero, one = constants(tree_mode(root))
    return root, zero, one


def analyze(tree: ProtocolTree) -> AnalysisResult:
    """Honest distribution and optimal forcing probabilities of ``tree``."""
    root, zero, one = _prepare(tree)
    h0, h1, a0, a1, b0, b1 = _values(root, {}, zero, one)
    return AnalysisResult(h0, h1, one - h0 - h1, a0, a1, b0, b1)


# -- optimal strategies ------------------------------------------------------


def optimal_decisions(tree: ProtocolTree, cheater: Party, target: int) -> dict:
    """A deterministic strategy attaining ``cheater``'s optimal forcing value.

    Returns ``{path: choice}`` for every node where the cheater decides: a
    branch index at the cheater's own send nodes, an Alice-win probability at
    WCF nodes. Ties go to the first branch.
    """
    root, zero, one = _prepare(tree)
    memo: dict = {}
    idx = (2 if cheater is Party.ALICE else 4) + target
    slack = TIE_SLACK if isinstance(one, float) else 0
    decisions: dict = {}
    stack = [((), root)]
    while stack:
        path, node = stack.pop()
        if isinstance(node, SendNode):
            if node.sender is cheater:
                vals = [_values(b.child, memo, zero, one)[idx] for b in node.branches]
                top = max(vals)
                decisions[path] = next(i for i, v in enumerate(vals) if v >= top - slack)
            for i, b in enumerate(node.branches):
                stack.append((path + (i,), b.child))
        elif isinstance(node, WcfNode):
            win = _values(node.alice_wins, memo, zero, one)[idx]
            lose = _values(node.bob_wins, memo, zero, one)[idx]
            lo, hi = node.spec.interval(cheater)
            decisions[path] = hi if win >= lose - slack else lo
            stack.append((path + (0,), node.alice_wins))
            stack.append((path + (1,), node.bob_wins))
    return decisions


# -- brute-force oracle ------------------------------------------------------


DEFAULT_STRATEGY_LIMIT = 100_000


def count_strategies(tree: ProtocolTree, cheater: Party) -> int:
    """Number of deterministic strategies :func:`brute_force_analyze` visits."""

    def count(node) -> int:
        if isinstance(node, SendNode):
            counts = [count(b.child) for b in node.branches]
            if node.sender is cheater:
                return sum(counts)
            n = 1
            for c in counts:
                n *= c
            return n
        if isinstance(node, WcfNode):
            lo, hi = node.spec.interval(cheater)
            return (1 if lo == hi else 2) * count(node.alice_wins) * count(node.bob_wins)
        return 1

    return count(root_of(tree))


def _strategies(node, path, cheater):
    """Yield each deterministic strategy as a tuple of (path, choice) pairs.

    Only decision points reachable under the strategy itself are fixed, which
    removes duplicates that differ on unreachable nodes.
    """
    if isinstance(node, LeafNode):
        yield ()
    elif isinstance(node, SendNode):
        if node.sender is cheater:
            for i, b in enumerate(node.branches):
                for rest in _strategies(b.child, path + (i,), cheater):
                    yield ((path, i),) + rest
        else:
            subs = [list(_strategies(b.child, path + (i,), cheater))
                    for i, b in enumerate(node.branches)]
            for combo in itertools.product(*subs):
                yield tuple(itertools.chain.from_iterable(combo))
    else:
        lo, hi = node.spec.interval(cheater)
        qs = (lo,) if lo == hi else (lo, hi)
        wins = list(_strategies(node.alice_wins, path + (0,), cheater))
        loses = list(_strategies(node.bob_wins, path + (1,), cheater))
        for q in qs:
            for w, l in itertools.product(wins, loses):
                yield ((path, q),) + w + l


def _sweep(root, choose, zero, one) -> tuple[Number, Number]:
    """Forward pass: probability mass reaching 0- and 1-leaves.

    ``choose(path, node)`` returns a list of ``(weight, child_index)`` pairs.
    """
    mass = {Outcome.ZERO: zero, Outcome.ONE: zero, Outcome.ABORT: zero}
    stack = [((), root, one)]
    while stack:
        path, node, w = stack.pop()
        if isinstance(node, LeafNode):
            mass[node.output] += w
            continue
        kids = [b.child for b in node.branches] if isinstance(node, SendNode) \
            else [node.alice_wins, node.bob_wins]
        for weight, i in choose(path, node):
            if weight:
                stack.append((path + (i,), kids[i], w * weight))
    return mass[Outcome.ZERO], mass[Outcome.ONE]


def _honest_choice(one):
    def choose(path, node):
        if isinstance(node, SendNode):
            return [(b.prob, i) for i, b in enumerate(node.branches)]
        return [(node.z, 0), (one - node.z, 1)]
    return choose


def _strategy_choice(strategy: dict, cheater: Party, one):
    honest = _honest_choice(one)

    def choose(path, node):
        if isinstance(node, SendNode):
            if node.sender is cheater:
                return [(one, strategy[path])]
            return honest(path, node)
        q = strategy[path]
        return [(q, 0), (one - q, 1)]

    return choose


def evaluate_strategy(tree: ProtocolTree, cheater: Party, decisions: dict) -> tuple[Number, Number]:
    """Exact probabilities that the honest party outputs 0 and 1 when
    ``cheater`` follows ``decisions`` (as returned by :func:`optimal_decisions`).

    WCF nodes without a decision are played honestly.
    """
    root, zero, one = _prepare(tree)
    strategy = dict(decisions)
    for path, node in walk(root):
        if isinstance(node, WcfNode) and path not in strategy:
            strategy[path] = node.z
    return _sweep(root, _strategy_choice(strategy, cheater, one), zero, one)


def brute_force_analyze(tree: ProtocolTree, limit: int = DEFAULT_STRATEGY_LIMIT) -> AnalysisResult:
    """Same result as :func:`analyze`, by exhaustive strategy enumeration.

    Raises ExplosionGuard when either player has more than ``limit``
    deterministic strategies.
    """
    root, zero, one = _prepare(tree)
    h0, h1 = _sweep(root, _honest_choice(one), zero, one)
    forces = {}
    for cheater in (Party.ALICE, Party.BOB):
        n = count_strategies(root, cheater)
        if n > limit:
            raise ExplosionGuard(f"{cheater.value} has {n} strategies (limit {limit})")
        best0 = best1 = zero
        for strategy in _strategies(root, (), cheater):
            f0, f1 = _sweep(root, _strategy_choice(dict(strategy), cheater, one), zero, one)
            best0 = max(best0, f0)
            best1 = max(best1, f1)
        forces[cheater] = (best0, best1)
    a0, a1 = forces[Party.ALICE]
    b0, b1 = forces[Party.BOB]
    return AnalysisResult(h0, h1, one - h0 - h1, a0, a1, b0, b1)


# -- checks against a specification -----------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    value: Number
    bound: Number
    passed: bool

    def __str__(self):
        mark = "ok" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {fmt(self.value)} vs {fmt(self.bound)}"


@dataclass(frozen=True)
class ImplementsReport:
    checks: tuple[Check, ...]
    result: AnalysisResult

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self):
        return "\n".join(str(c) for c in self.checks)


def verify_implements(tree: ProtocolTree, spec: CoinFlipSpec, tol=None) -> ImplementsReport:
    """Does ``tree`` implement ``spec``?

    Honest probabilities must match within ``tol`` and each forcing value may
    exceed its bound by at most ``tol`` (default: 0 for rational trees, 1e-9
    for float trees).
    """
    result = analyze(tree)
    if tol is None:
        tol = tolerance(FLOAT if isinstance(result.p00, float) else "rational")
    checks = [
        Check("p00 == spec.p00", result.p00, spec.p00, abs(result.p00 - spec.p00) <= tol),
        Check("p11 == spec.p11", result.p11, spec.p11, abs(result.p11 - spec.p11) <= tol),
    ]
    for name, bound in (("force_a0", spec.ps0), ("force_a1", spec.ps1),
                        ("force_b0", spec.p0s), ("force_b1", spec.p1s)):
        value = getattr(result, name)
        checks.append(Check(f"{name} <= bound", value, bound, value <= bound + tol))
    return ImplementsReport(tuple(checks), result)


def bound_law_holds(result: AnalysisResult) -> bool:
    """Classical impossibility inequalities evaluated on an analysis result."""
    rhs = classical_bound_rhs(result.force_b0, result.force_b1, result.force_a0, result.force_a1)
    return (result.p00 <= result.force_b0 * result.force_a0
            and result.p11 <= result.force_b1 * result.force_a1
            and result.p00 + result.p11 <= rhs)
