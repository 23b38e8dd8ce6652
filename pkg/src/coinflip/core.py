"""Shared domain types: probabilities, coin-flip specifications, protocol trees.

Probabilities live in one of two arithmetic modes. ``"rational"`` uses
:class:`fractions.Fraction` and is exact; ``"float"`` uses binary doubles and
compares with an absolute tolerance of ``FLOAT_TOL``. A single computation
never mixes the two: specs and trees are normalised to one mode when they are
built, and :func:`tree_mode` rejects trees that carry both kinds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Union

RATIONAL = "rational"
FLOAT = "float"
MODES = (RATIONAL, FLOAT)

FLOAT_TOL = 1e-9

Number = Union[Fraction, float]


class CoinFlipError(Exception):
    """Base class for all errors raised by this package."""


class ProbabilityError(CoinFlipError, ValueError):
    pass


class ConstraintViolation(CoinFlipError, ValueError):
    """A coin-flip specification breaks one of its defining inequalities."""


class PreconditionViolation(CoinFlipError, ValueError):
    pass


class InfeasibleSpec(CoinFlipError):
    pass


class MalformedTree(CoinFlipError, ValueError):
    pass


class ExplosionGuard(CoinFlipError):
    pass


class ScriptMismatch(CoinFlipError, ValueError):
    pass


# -- probabilities -----------------------------------------------------------


def parse_number(value, mode: str | None = None) -> Number:
    """Convert ``value`` to a number in the requested arithmetic mode.

    Accepts ints, floats, Fractions, Decimals and strings (``"0.25"``,
    ``"1/4"``). With ``mode=None`` floats stay floats and everything else
    becomes a Fraction.
    """
    if mode is not None and mode not in MODES:
        raise ValueError(f"unknown arithmetic mode {mode!r}")
    if isinstance(value, bool):
        raise ProbabilityError(f"not a probability: {value!r}")
    if isinstance(value, str):
        text = value.strip()
        try:
            if mode == FLOAT and "/" not in text:
                return float(text)
            exact = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ProbabilityError(f"cannot parse {value!r} as a number") from exc
        return float(exact) if mode == FLOAT else exact
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ProbabilityError(f"not a finite number: {value!r}")
        return Fraction(value) if mode == RATIONAL else value
    try:
        exact = Fraction(value)
    except (TypeError, ValueError) as exc:
        raise ProbabilityError(f"cannot interpret {value!r} as a number") from exc
    return float(exact) if mode == FLOAT else exact


def prob(value, mode: str | None = None) -> Number:
    """Parse ``value`` and insist that it lies in [0, 1]."""
    x = parse_number(value, mode)
    if not 0 <= x <= 1:
        raise ProbabilityError(f"probability out of range [0, 1]: {value!r}")
    return x


def mode_of(x: Number) -> str:
    return FLOAT if isinstance(x, float) else RATIONAL


def infer_mode(values: Iterable) -> str:
    """Float if any value is a float, rational otherwise."""
    return FLOAT if any(isinstance(v, float) for v in values) else RATIONAL


def tolerance(mode: str) -> Number:
    return FLOAT_TOL if mode == FLOAT else Fraction(0)


def constants(mode: str) -> tuple[Number, Number]:
    """The (zero, one) pair for ``mode``."""
    if mode == FLOAT:
        return 0.0, 1.0
    return Fraction(0), Fraction(1)


def snap_unit(x: Number, mode: str, what: str = "value") -> Number:
    """Clamp ``x`` into [0, 1] when it is outside by no more than the mode's tolerance.

    Derived protocol parameters computed in float mode pick up rounding noise
    at the ends of the unit interval; genuine violations still raise.
    """
    tol = tolerance(mode)
    zero, one = constants(mode)
    if x < -tol or x > one + tol:
        raise PreconditionViolation(f"{what} = {x} lies outside [0, 1]")
    if mode == FLOAT and abs(x) <= tol:
        return zero
    if mode == FLOAT and abs(x - one) <= tol:
        return one
    return min(max(x, zero), one)


def fmt(x: Number) -> str:
    """Render a number for messages and file output."""
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return repr(float(x))


# -- outcomes and parties ----------------------------------------------------


class Outcome(enum.Enum):
    ZERO = "0"
    ONE = "1"
    ABORT = "abort"

    @property
    def flipped(self) -> Outcome:
        return {Outcome.ZERO: Outcome.ONE, Outcome.ONE: Outcome.ZERO}.get(self, self)

    @classmethod
    def of(cls, bit: int) -> Outcome:
        return cls.ZERO if bit == 0 else cls.ONE


class Party(enum.Enum):
    ALICE = "alice"
    BOB = "bob"

    @property
    def other(self) -> Party:
        return Party.BOB if self is Party.ALICE else Party.ALICE


# -- coin-flip specifications ------------------------------------------------


@dataclass(frozen=True)
class CoinFlipSpec:
    """The six parameters of a generalised coin flip.

    ``p00``/``p11`` are the honest output probabilities, ``p0s``/``p1s`` bound
    how likely a cheating Bob can make Alice output 0/1, and ``ps0``/``ps1``
    bound how likely a cheating Alice can make Bob output 0/1.
    """

    p00: Number
    p11: Number
    p0s: Number
    p1s: Number
    ps0: Number
    ps1: Number

    def __post_init__(self):
        values = self.as_tuple()
        for name, v in zip(SPEC_FIELDS, values):
            if isinstance(v, bool) or not isinstance(v, (Fraction, float)):
                raise ProbabilityError(f"{name} must be a Fraction or float, got {v!r}")
            if not 0 <= v <= 1:
                raise ProbabilityError(f"{name} = {fmt(v)} is outside [0, 1]")
        if len({type(v) for v in values}) > 1:
            raise ProbabilityError("spec mixes rational and float values")
        if self.p00 + self.p11 > 1:
            raise ConstraintViolation(
                f"p00 + p11 <= 1 violated: {fmt(self.p00 + self.p11)} > 1"
            )
        if self.p00 > min(self.p0s, self.ps0):
            raise ConstraintViolation(
                f"p00 <= min(p0s, ps0) violated: {fmt(self.p00)} > "
                f"{fmt(min(self.p0s, self.ps0))}"
            )
        if self.p11 > min(self.p1s, self.ps1):
            raise ConstraintViolation(
                f"p11 <= min(p1s, ps1) violated: {fmt(self.p11)} > "
                f"{fmt(min(self.p1s, self.ps1))}"
            )

    @property
    def mode(self) -> str:
        return mode_of(self.p00)

    def as_tuple(self) -> tuple[Number, ...]:
        return (self.p00, self.p11, self.p0s, self.p1s, self.ps0, self.ps1)

    def swap_parties(self) -> CoinFlipSpec:
        """Spec of the same protocol with the roles of Alice and Bob exchanged."""
        return CoinFlipSpec(self.p00, self.p11, self.ps0, self.ps1, self.p0s, self.p1s)

    def swap_outputs(self) -> CoinFlipSpec:
        """Spec of the same protocol with output values 0 and 1 exchanged."""
        return CoinFlipSpec(self.p11, self.p00, self.p1s, self.p0s, self.ps1, self.ps0)

    def to_json(self) -> dict:
        return {name: fmt(v) if isinstance(v, Fraction) else v
                for name, v in zip(SPEC_FIELDS, self.as_tuple())}


SPEC_FIELDS = ("p00", "p11", "p0s", "p1s", "ps0", "ps1")


def make_spec(p00, p11, p0s, p1s, ps0, ps1, mode: str | None = None) -> CoinFlipSpec:
    """Validated constructor for :class:`CoinFlipSpec`.

    Inputs may be numbers or strings. Without an explicit ``mode`` the spec is
    rational unless some input is a float.
    """
    raw = (p00, p11, p0s, p1s, ps0, ps1)
    if mode is None:
        mode = infer_mode(raw)
    values = [prob(v, mode) for v in raw]
    return CoinFlipSpec(*values)


@dataclass(frozen=True)
class WcfSpec:
    """Unbalanced weak coin flip: Alice wins (output 0) with probability ``z``,
    and either side can raise its own winning chance by at most ``eps``."""

    z: Number
    eps: Number

    def alice_interval(self) -> tuple[Number, Number]:
        """Range of Alice-win probabilities a cheating Alice can enforce."""
        zero, one = constants(mode_of(self.z))
        return zero, min(one, self.z + self.eps)

    def bob_interval(self) -> tuple[Number, Number]:
        """Range of Alice-win probabilities a cheating Bob can enforce."""
        zero, one = constants(mode_of(self.z))
        return max(zero, self.z - self.eps), one

    def interval(self, cheater: Party) -> tuple[Number, Number]:
        return self.alice_interval() if cheater is Party.ALICE else self.bob_interval()


# -- protocol trees ----------------------------------------------------------


@dataclass(frozen=True)
class LeafNode:
    output: Outcome


@dataclass(frozen=True)
class Branch:
    msg: str
    prob: Number
    child: "Node"


@dataclass(frozen=True)
class SendNode:
    sender: Party
    branches: tuple[Branch, ...]

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))


@dataclass(frozen=True)
class WcfNode:
    z: Number
    eps: Number
    alice_wins: "Node"
    bob_wins: "Node"

    @property
    def spec(self) -> WcfSpec:
        return WcfSpec(self.z, self.eps)


Node = Union[LeafNode, SendNode, WcfNode]


@dataclass(frozen=True)
class ProtocolTree:
    root: Node

    def nodes(self) -> Iterator[tuple[tuple[int, ...], Node]]:
        return walk(self.root)


def send(sender: Party, *branches: tuple) -> SendNode:
    """Shorthand: ``send(Party.ALICE, ("0", p, child), ("1", 1 - p, child2))``."""
    return SendNode(sender, tuple(Branch(m, p, c) for m, p, c in branches))


def leaf(output) -> LeafNode:
    if not isinstance(output, Outcome):
        output = Outcome(str(output))
    return LeafNode(output)


ZERO_LEAF = LeafNode(Outcome.ZERO)
ONE_LEAF = LeafNode(Outcome.ONE)
ABORT_LEAF = LeafNode(Outcome.ABORT)


def root_of(tree: ProtocolTree | Node) -> Node:
    return tree.root if isinstance(tree, ProtocolTree) else tree


def children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, SendNode):
        return tuple(b.child for b in node.branches)
    if isinstance(node, WcfNode):
        return (node.alice_wins, node.bob_wins)
    return ()


def walk(node: Node, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], Node]]:
    """Pre-order traversal yielding ``(path, node)``.

    A path lists branch indices from the root; at a WCF node index 0 is the
    Alice-wins child and index 1 the Bob-wins child.
    """
    stack = [(path, node)]
    while stack:
        p, n = stack.pop()
        yield p, n
        kids = children(n)
        for i in range(len(kids) - 1, -1, -1):
            stack.append((p + (i,), kids[i]))


def node_at(tree: ProtocolTree | Node, path: Iterable[int]) -> Node:
    node = root_of(tree)
    for i in path:
        kids = children(node)
        if not 0 <= i < len(kids):
            raise KeyError(f"no node at path {list(path)}")
        node = kids[i]
    return node


def tree_numbers(tree: ProtocolTree | Node) -> Iterator[Number]:
    for _, node in walk(root_of(tree)):
        if isinstance(node, SendNode):
            for b in node.branches:
                yield b.prob
        elif isinstance(node, WcfNode):
            yield node.z
            yield node.eps


def tree_mode(tree: ProtocolTree | Node) -> str:
    """Arithmetic mode of a tree; raises MalformedTree on mixed modes."""
    kinds = {mode_of(x) for x in tree_numbers(tree)}
    if len(kinds) > 1:
        raise MalformedTree("tree mixes rational and float probabilities")
    return kinds.pop() if kinds else RATIONAL


def convert_tree(tree: ProtocolTree | Node, mode: str) -> ProtocolTree:
    """Re-express every probability in ``tree`` in ``mode``."""

    def conv(node: Node) -> Node:
        if isinstance(node, SendNode):
            return SendNode(node.sender, tuple(
                Branch(b.msg, parse_number(b.prob, mode), conv(b.child))
                for b in node.branches))
        if isinstance(node, WcfNode):
            return WcfNode(parse_number(node.z, mode), parse_number(node.eps, mode),
                           conv(node.alice_wins), conv(node.bob_wins))
        return node

    return ProtocolTree(conv(root_of(tree)))


# -- well-formedness ---------------------------------------------------------


@dataclass(frozen=True)
class TreeReport:
    defects: tuple[str, ...]
    node_count: int
    depth: int

    @property
    def ok(self) -> bool:
        return not self.defects


def validate_tree(tree: ProtocolTree | Node) -> TreeReport:
    """Check a tree for probability and structure defects without raising."""
    root = root_of(tree)
    defects: list[str] = []
    count = 0
    depth = 0
    kinds: set[str] = set()
    for path, node in walk(root):
        count += 1
        depth = max(depth, len(path))
        where = f"at node path {list(path)}"
        if isinstance(node, LeafNode):
            if not isinstance(node.output, Outcome):
                defects.append(f"leaf output {node.output!r} is not an Outcome {where}")
        elif isinstance(node, SendNode):
            if not isinstance(node.sender, Party):
                defects.append(f"sender {node.sender!r} is not a Party {where}")
            if not node.branches:
                defects.append(f"send node without branches {where}")
                continue
            labels = [b.msg for b in node.branches]
            if len(set(labels)) != len(labels):
                defects.append(f"duplicate message labels {labels} {where}")
            total = 0
            for b in node.branches:
                if isinstance(b.prob, bool) or not isinstance(b.prob, (Fraction, float)):
                    defects.append(f"branch {b.msg!r} probability {b.prob!r} is not a number {where}")
                    total = None
                    break
                kinds.add(mode_of(b.prob))
                if not 0 <= b.prob <= 1:
                    defects.append(f"branch {b.msg!r} probability {fmt(b.prob)} outside [0, 1] {where}")
                total += b.prob
            if total is not None:
                tol = FLOAT_TOL if isinstance(total, float) else 0
                if abs(total - 1) > tol:
                    defects.append(f"branch sum {fmt(total)} {where}")
        elif isinstance(node, WcfNode):
            for name in ("z", "eps"):
                v = getattr(node, name)
                if isinstance(v, bool) or not isinstance(v, (Fraction, float)):
                    defects.append(f"wcf {name} {v!r} is not a number {where}")
                    continue
                kinds.add(mode_of(v))
                if not 0 <= v <= 1:
                    defects.append(f"wcf {name} = {fmt(v)} outside [0, 1] {where}")
        else:
            defects.append(f"unknown node type {type(node).__name__} {where}")
    if len(kinds) > 1:
        defects.append("tree mixes rational and float probabilities")
    return TreeReport(tuple(defects), count, depth)


# -- relabelling -------------------------------------------------------------


def swap_parties(tree: ProtocolTree | Node) -> ProtocolTree:
    """Exchange the roles of Alice and Bob.

    WCF resources keep their output convention (0 means the new Alice won), so
    a node ``WCF(z)`` becomes ``WCF(1 - z)`` with its children exchanged.
    """

    def go(node: Node) -> Node:
        if isinstance(node, SendNode):
            return SendNode(node.sender.other, tuple(
                Branch(b.msg, b.prob, go(b.child)) for b in node.branches))
        if isinstance(node, WcfNode):
            _, one = constants(mode_of(node.z))
            return WcfNode(one - node.z, node.eps, go(node.bob_wins), go(node.alice_wins))
        return node

    return ProtocolTree(go(root_of(tree)))


def swap_outputs(tree: ProtocolTree | Node) -> ProtocolTree:
    """Exchange output values 0 and 1 at every leaf; messages are untouched."""

    def go(node: Node) -> Node:
        if isinstance(node, SendNode):
            return SendNode(node.sender, tuple(
                Branch(b.msg, b.prob, go(b.child)) for b in node.branches))
        if isinstance(node, WcfNode):
            return WcfNode(node.z, node.eps, go(node.alice_wins), go(node.bob_wins))
        return LeafNode(node.output.flipped)

    return ProtocolTree(go(root_of(tree)))


def mirror(tree: ProtocolTree | Node) -> ProtocolTree:
    """The Alice<->Bob, 0<->1 relabelling involution."""
    return swap_outputs(swap_parties(tree))
