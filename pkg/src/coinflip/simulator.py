"""Seeded Monte-Carlo runs of protocol trees.

Randomness comes from numpy's Philox4x64-10 counter-based generator keyed by
the master seed. Trial ``t`` reads row ``t`` of a ``trials x depth`` block of
uniforms, i.e. the draws at counter positions ``t*depth .. t*depth+depth-1``,
one per random node on its path. Counts are therefore reproducible across
platforms and do not depend on the order in which trials are evaluated.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field

import numpy as np

from .analyzer import optimal_decisions
from .core import (
    LeafNode,
    Outcome,
    Party,
    ProtocolTree,
    ScriptMismatch,
    SendNode,
    WcfNode,
    MalformedTree,
    fmt,
    node_at,
    parse_number,
    root_of,
    validate_tree,
)


CHUNK = 1 << 15


def uniform_rows(seed: int, start: int, count: int, width: int) -> np.ndarray:
    """Rows ``start .. start+count-1`` of the uniform block for ``seed``."""
    bitgen = np.random.Philox(key=seed % (1 << 128))
    # each 256-bit counter step yields four 64-bit outputs, one double each
    offset = start * width
    bitgen.advance(offset // 4)
    skip = offset % 4
    draws = np.random.Generator(bitgen).random(skip + count * width)
    return draws[skip:].reshape(count, width)


@dataclass(frozen=True)
class AdversaryScript:
    """A deterministic strategy for one cheating party.

    ``decisions`` maps a node path (tuple of branch indices) to a branch index
    at the party's own send nodes, or to an Alice-win probability at WCF
    nodes. WCF nodes without a decision are played honestly.
    """

    party: Party
    decisions: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        moves = []
        for path, choice in sorted(self.decisions.items()):
            entry = {"path": list(path)}
            if isinstance(choice, int):
                entry["branch"] = choice
            else:
                entry["q"] = fmt(choice) if not isinstance(choice, float) else choice
            moves.append(entry)
        return {"party": self.party.value, "moves": moves}

    @classmethod
    def from_json(cls, doc: dict, tree: ProtocolTree) -> AdversaryScript:
        """Parse a script; ``{"msg": label}`` moves are resolved against ``tree``."""
        try:
            party = Party(doc["party"])
            moves = doc.get("moves", [])
        except (KeyError, ValueError, TypeError) as exc:
            raise ScriptMismatch(f"bad script document: {exc}") from None
        decisions = {}
        for move in moves:
            path = tuple(move.get("path", []))
            try:
                node = node_at(tree, path)
            except KeyError:
                raise ScriptMismatch(f"script names missing node {list(path)}") from None
            if "branch" in move:
                decisions[path] = int(move["branch"])
            elif "msg" in move:
                if not isinstance(node, SendNode):
                    raise ScriptMismatch(f"message move at non-send node {list(path)}")
                labels = [b.msg for b in node.branches]
                if move["msg"] not in labels:
                    raise ScriptMismatch(f"no message {move['msg']!r} at {list(path)}; have {labels}")
                decisions[path] = labels.index(move["msg"])
            elif "q" in move:
                decisions[path] = parse_number(move["q"])
            else:
                raise ScriptMismatch(f"move at {list(path)} has no branch, msg or q")
        return cls(party, decisions)


def optimal_script(tree: ProtocolTree, party: Party, target: int) -> AdversaryScript:
    """Script realising ``party``'s optimal forcing of output ``target``."""
    return AdversaryScript(party, optimal_decisions(tree, party, target))


@dataclass(frozen=True)
class EmpiricalDistribution:
    zero: int
    one: int
    abort: int
    trials: int
    seed: int

    def frequency(self, outcome: Outcome) -> float:
        count = {Outcome.ZERO: self.zero, Outcome.ONE: self.one, Outcome.ABORT: self.abort}[outcome]
        return count / self.trials

    def to_json(self) -> dict:
        return {"zero": self.zero, "one": self.one, "abort": self.abort,
                "trials": self.trials, "seed": self.seed}


def sigma(p: float, trials: int) -> float:
    """Binomial standard deviation of a frequency estimate."""
    return math.sqrt(p * (1 - p) / trials)


def _pick(u: float, weights) -> int:
    acc = 0.0
    last = 0
    for i, w in enumerate(weights):
        if w <= 0:
            continue
        last = i
        acc += float(w)
        if u < acc:
            return i
    return last


def _play(root, row, script: AdversaryScript | None) -> Outcome:
    """Walk one path; the k-th random node on it consumes ``row[k]``."""
    node = root
    path: tuple[int, ...] = ()
    cheater = script.party if script is not None else None
    level = 0
    while not isinstance(node, LeafNode):
        u = row[level]
        level += 1
        if isinstance(node, SendNode):
            if node.sender is cheater:
                i = script.decisions[path]
            else:
                i = _pick(u, [b.prob for b in node.branches])
            node = node.branches[i].child
        else:
            q = node.z
            if cheater is not None and path in script.decisions:
                q = script.decisions[path]
            i = 0 if u < float(q) else 1
            node = node.alice_wins if i == 0 else node.bob_wins
        path += (i,)
    return node.output


def _check_tree(tree):
    root = root_of(tree)
    report = validate_tree(root)
    if not report.ok:
        raise MalformedTree("; ".join(report.defects))
    return root, max(report.depth, 1)


def run_trial(tree: ProtocolTree, seed: int, trial: int,
              script: AdversaryScript | None = None) -> Outcome:
    """Outcome of trial number ``trial`` under master ``seed``."""
    root, width = _check_tree(tree)
    return _play(root, uniform_rows(seed, trial, 1, width)[0].tolist(), script)


def run_honest(tree: ProtocolTree, seed: int) -> Outcome:
    """One honest execution (trial 0 of ``seed``); deterministic in ``seed``."""
    return run_trial(tree, seed, 0)


def _aggregate(root, width: int, trials: int, seed: int, script) -> EmpiricalDistribution:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    counts = {Outcome.ZERO: 0, Outcome.ONE: 0, Outcome.ABORT: 0}
    for start in range(0, trials, CHUNK):
        n = min(CHUNK, trials - start)
        for row in uniform_rows(seed, start, n, width).tolist():
            counts[_play(root, row, script)] += 1
    return EmpiricalDistribution(counts[Outcome.ZERO], counts[Outcome.ONE],
                                 counts[Outcome.ABORT], trials, seed)


def estimate_honest(tree: ProtocolTree, trials: int, seed: int) -> EmpiricalDistribution:
    root, width = _check_tree(tree)
    return _aggregate(root, width, trials, seed, None)


def validate_script(tree: ProtocolTree, script: AdversaryScript) -> None:
    """Raise ScriptMismatch unless ``script`` is a complete, legal strategy.

    Every decision must sit at one of the party's send nodes (a valid branch
    index) or at a WCF node (a probability inside the party's interval), and
    every send node of the party reachable under the script needs a decision.
    """
    root = root_of(tree)
    for path, choice in script.decisions.items():
        try:
            node = node_at(root, path)
        except KeyError:
            raise ScriptMismatch(f"script names missing node {list(path)}") from None
        if isinstance(node, SendNode):
            if node.sender is not script.party:
                raise ScriptMismatch(f"node {list(path)} is sent by {node.sender.value}, "
                                     f"not {script.party.value}")
            if isinstance(choice, bool) or not isinstance(choice, int) \
                    or not 0 <= choice < len(node.branches):
                raise ScriptMismatch(f"bad branch choice {choice!r} at {list(path)}")
        elif isinstance(node, WcfNode):
            lo, hi = node.spec.interval(script.party)
            if isinstance(choice, bool) or not isinstance(choice, numbers.Real):
                raise ScriptMismatch(f"bad forcing probability {choice!r} at {list(path)}")
            if not lo <= choice <= hi:
                raise ScriptMismatch(f"forcing probability {fmt(choice)} at {list(path)} "
                                     f"outside [{fmt(lo)}, {fmt(hi)}]")
        else:
            raise ScriptMismatch(f"decision at leaf {list(path)}")

    stack = [((), root)]
    while stack:
        path, node = stack.pop()
        if isinstance(node, SendNode):
            if node.sender is script.party:
                if path not in script.decisions:
                    raise ScriptMismatch(f"no decision for reachable node {list(path)}")
                i = script.decisions[path]
                stack.append((path + (i,), node.branches[i].child))
            else:
                stack.extend((path + (i,), b.child) for i, b in enumerate(node.branches) if b.prob > 0)
        elif isinstance(node, WcfNode):
            q = script.decisions.get(path, node.z)
            if q > 0:
                stack.append((path + (0,), node.alice_wins))
            if q < 1:
                stack.append((path + (1,), node.bob_wins))


def run_adversarial(tree: ProtocolTree, script: AdversaryScript, trials: int,
                    seed: int) -> EmpiricalDistribution:
    """Distribution of the honest player's output against ``script``."""
    root, width = _check_tree(tree)
    validate_script(root, script)
    return _aggregate(root, width, trials, seed, script)
