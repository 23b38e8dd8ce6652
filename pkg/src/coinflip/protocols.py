"""Constructors for the optimal coin-flipping protocols and their wrappers.

Classical protocols:

* ``CoinFlip1`` - Alice sends a three-valued coin, Bob confirms or aborts.
* ``CoinFlip2`` - three rounds; reaches the classical trade-off boundary when
  both cheating-sum conditions exceed one.

Protocols using an ideal weak-coin-flip resource:

* ``QCoinFlip1`` - no honest aborts, reaches p00 = p0s*ps0, p11 = p1s*ps1 on
  the curve p0s*ps0 + p1s*ps1 = 1.
* ``QCoinFlip2`` - QCoinFlip1 followed by one-sided abort announcements.

:func:`synthesize` chains these with dilution to implement any feasible spec.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

from .analyzer import AnalysisResult, analyze, verify_implements
from .bounds import CLASSICAL, classical_bound_rhs, feasible
from .core import (
    FLOAT,
    RATIONAL,
    ABORT_LEAF,
    Branch,
    CoinFlipSpec,
    InfeasibleSpec,
    LeafNode,
    Number,
    Outcome,
    Party,
    PreconditionViolation,
    ProtocolTree,
    SendNode,
    WcfNode,
    constants,
    fmt,
    mode_of,
    parse_number,
    root_of,
    snap_unit,
    swap_outputs,
    swap_parties,
    tolerance,
)


def _leaf(bit: int) -> LeafNode:
    return LeafNode(Outcome.of(bit))


def _require(cond: bool, message: str):
    if not cond:
        raise PreconditionViolation(message)


def _gt(x, y, mode) -> bool:
    """Strict ``x > y``; in float mode the margin must beat the tolerance."""
    return x > y + tolerance(mode)


def _coin(sender: Party, probs, children, labels=("0", "1")) -> SendNode | LeafNode:
    """Binary message; a certain outcome collapses to that single branch."""
    zero, one = constants(mode_of(probs[0]))
    for p, child, label in zip(probs, children, labels):
        if p == one:
            return SendNode(sender, (Branch(label, one, child),))
    return SendNode(sender, tuple(Branch(l, p, c) for l, p, c in zip(labels, probs, children)))


# -- CoinFlip1 ---------------------------------------------------------------


def build_coinflip1(p0s: Number, p1s: Number, ps0: Number, ps1: Number) -> ProtocolTree:
    """Alice announces 0, 1 or abort with probabilities (p0s, p1s, rest);
    Bob keeps a value ``i`` with probability ``ps_i`` and aborts otherwise."""
    mode = mode_of(p0s)
    zero, one = constants(mode)
    _require(not _gt(p0s + p1s, one, mode),
             f"CoinFlip1 needs p0s + p1s <= 1, got {fmt(p0s + p1s)}")
    rest = snap_unit(one - p0s - p1s, mode, "abort probability")

    def confirm(bit, keep):
        return SendNode(Party.BOB, (Branch(str(bit), keep, _leaf(bit)),
                                    Branch("abort", one - keep, ABORT_LEAF)))

    root = SendNode(Party.ALICE, (
        Branch("0", p0s, confirm(0, ps0)),
        Branch("1", p1s, confirm(1, ps1)),
        Branch("abort", rest, ABORT_LEAF),
    ))
    return ProtocolTree(root)


# -- CoinFlip2 ---------------------------------------------------------------


@dataclass(frozen=True)
class CoinFlip2Params:
    p: Number
    x0: Number
    x1: Number
    y0: Number | None
    y1: Number | None

    def to_json(self) -> dict:
        return {k: None if v is None else _num_json(v) for k, v in asdict(self).items()}


def _num_json(x):
    return fmt(x) if isinstance(x, Fraction) else float(x)


def coinflip2_params(spec: CoinFlipSpec) -> CoinFlip2Params:
    """Parameters of CoinFlip2 realising ``spec`` exactly.

    The spec must sit on the classical boundary with both cheating sums above
    one; the honest probabilities then pin down Alice's first-coin bias.
    """
    mode = spec.mode
    zero, one = constants(mode)
    tol = tolerance(mode)
    p00, p11, p0s, p1s, ps0, ps1 = spec.as_tuple()
    _require(_gt(p0s + p1s, one, mode), "CoinFlip2 needs p0s + p1s > 1")
    _require(_gt(ps0 + ps1, one, mode), "CoinFlip2 needs ps0 + ps1 > 1")
    _require(p00 <= p0s * ps0 + tol, "CoinFlip2 needs p00 <= p0s*ps0")
    _require(p11 <= p1s * ps1 + tol, "CoinFlip2 needs p11 <= p1s*ps1")
    boundary = p0s * ps0 + p1s * ps1 - (p0s + p1s - one) * (ps0 + ps1 - one)
    _require(abs(p00 + p11 - boundary) <= tol,
             f"CoinFlip2 needs p00 + p11 on the classical boundary {fmt(boundary)}, "
             f"got {fmt(p00 + p11)}")

    p = snap_unit((p00 - p0s + p0s * ps1) / (ps0 + ps1 - one), mode, "p")
    # the derivation places p in [1 - p1s, p0s]; float noise may nudge it out
    p = min(max(p, one - p1s), p0s)
    y0 = snap_unit((p0s - p) / (one - p), mode, "y0") if p < one else None
    y1 = snap_unit((p1s + p - one) / p, mode, "y1") if p > zero else None
    return CoinFlip2Params(p, ps0, ps1, y0, y1)


def build_coinflip2(params: CoinFlip2Params) -> ProtocolTree:
    """Alice sends ``a`` (0 w.p. ``p``); Bob echoes it w.p. ``x_a`` or sends the
    other bit ``b``; on disagreement Alice confirms ``b`` w.p. ``y_b`` or aborts."""
    mode = mode_of(params.p)
    zero, one = constants(mode)
    x = (params.x0, params.x1)
    y = (params.y0, params.y1)

    def disagreement(b):
        yb = y[b]
        if yb is None:
            raise PreconditionViolation(f"y{b} undefined but reachable")
        return SendNode(Party.ALICE, (Branch(str(b), yb, _leaf(b)),
                                      Branch("abort", one - yb, ABORT_LEAF)))

    def reply(a):
        keep = x[a]
        if a == 0:
            return SendNode(Party.BOB, (Branch("0", keep, _leaf(0)),
                                        Branch("1", one - keep, disagreement(1))))
        return SendNode(Party.BOB, (Branch("0", one - keep, disagreement(0)),
                                    Branch("1", keep, _leaf(1))))

    if params.p == one:
        root = SendNode(Party.ALICE, (Branch("0", one, reply(0)),))
    elif params.p == zero:
        root = SendNode(Party.ALICE, (Branch("1", one, reply(1)),))
    else:
        root = SendNode(Party.ALICE, (Branch("0", params.p, reply(0)),
                                      Branch("1", one - params.p, reply(1))))
    return ProtocolTree(root)


# -- leaf wrappers -----------------------------------------------------------


def _wrap_leaves(tree, announcers: dict) -> ProtocolTree:
    """Append to each leaf whose output is in ``announcers`` a message by
    ``party`` that keeps the value with probability ``keep`` and otherwise
    announces abort. ``announcers`` maps output -> (party, keep)."""
    memo: dict = {}

    def go(node):
        key = id(node)
        if key in memo:
            return memo[key][1]
        if isinstance(node, SendNode):
            out = SendNode(node.sender, tuple(Branch(b.msg, b.prob, go(b.child))
                                              for b in node.branches))
        elif isinstance(node, WcfNode):
            out = WcfNode(node.z, node.eps, go(node.alice_wins), go(node.bob_wins))
        elif node.output in announcers:
            party, keep = announcers[node.output]
            _, one = constants(mode_of(keep))
            out = SendNode(party, (Branch(node.output.value, keep, node),
                                   Branch("abort", one - keep, ABORT_LEAF)))
        else:
            out = node
        memo[key] = (node, out)
        return out

    return ProtocolTree(go(root_of(tree)))


def dilute(tree: ProtocolTree, current: AnalysisResult, target_p00: Number,
           target_p11: Number) -> ProtocolTree:
    """Lower the honest output probabilities to the targets without raising any
    forcing value: after a value-``i`` outcome Alice turns it into an abort with
    probability ``1 - target_ii / p_ii``."""
    announcers = {}
    for outcome, have, want in ((Outcome.ZERO, current.p00, target_p00),
                                (Outcome.ONE, current.p11, target_p11)):
        _require(want <= have, f"dilution cannot raise the honest probability of "
                               f"{outcome.value}: {fmt(want)} > {fmt(have)}")
        if have == 0:
            continue
        keep = want / have
        if keep != 1:
            announcers[outcome] = (Party.ALICE, keep)
    if not announcers:
        return tree if isinstance(tree, ProtocolTree) else ProtocolTree(tree)
    return _wrap_leaves(tree, announcers)


# -- unbalanced weak coin flips ---------------------------------------------


def truncate_bits(z: Number, k: int) -> Fraction:
    """Largest k-bit binary fraction 0.b1..bk not exceeding ``z``.

    For ``z = 1`` this is ``1 - 2**-k`` (all bits set).
    """
    exact = Fraction(z)
    return Fraction(min((exact * 2 ** k).__floor__(), 2 ** k - 1), 2 ** k)


def build_unbalanced_wcf(z: Number, k: int, eps: Number) -> ProtocolTree:
    """A WCF with Alice-win probability ``truncate_bits(z, k)`` from ``k``
    balanced WCF(1/2, eps) rounds.

    Round ``i`` looks at bit ``b_i`` of the truncation: if it is 1, an Alice
    win settles the game for Alice and a Bob win moves on; if it is 0, a Bob
    win settles it for Bob and an Alice win moves on. Past the last bit Bob
    wins.
    """
    if k < 1:
        raise PreconditionViolation("k must be at least 1")
    mode = FLOAT if FLOAT in (mode_of(z), mode_of(eps)) else RATIONAL
    x = truncate_bits(z, k)
    bits = [(x.numerator * 2 ** k // x.denominator >> (k - 1 - i)) & 1 for i in range(k)]
    half = parse_number(Fraction(1, 2), mode)
    eps = parse_number(eps, mode)
    node = _leaf(1)
    for b in reversed(bits):
        if b:
            node = WcfNode(half, eps, _leaf(0), node)
        else:
            node = WcfNode(half, eps, node, _leaf(1))
    return ProtocolTree(node)


def shift_wcf(z_prime: Number, eps: Number, z: Number) -> ProtocolTree:
    """WCF(z, eps + z' - z) from one WCF(z', eps): after winning, Alice gives
    up her win with probability ``1 - z/z'``."""
    mode = FLOAT if FLOAT in map(mode_of, (z_prime, eps, z)) else RATIONAL
    z_prime, eps, z = (parse_number(v, mode) for v in (z_prime, eps, z))
    zero, one = constants(mode)
    _require(zero < z < z_prime < one, "shift_wcf needs 0 < z < z' < 1")
    flip = one - z / z_prime
    after_win = SendNode(Party.ALICE, (Branch("keep", one - flip, _leaf(0)),
                                       Branch("flip", flip, _leaf(1))))
    return ProtocolTree(WcfNode(z_prime, eps, after_win, _leaf(1)))


def substitute_wcf_eps(tree, eps: Number) -> ProtocolTree:
    """Replace the error of every WCF resource in ``tree`` by ``eps``."""

    def go(node):
        if isinstance(node, SendNode):
            return SendNode(node.sender, tuple(Branch(b.msg, b.prob, go(b.child))
                                               for b in node.branches))
        if isinstance(node, WcfNode):
            return WcfNode(node.z, eps, go(node.alice_wins), go(node.bob_wins))
        return node

    return ProtocolTree(go(root_of(tree)))


# -- QCoinFlip1 --------------------------------------------------------------


@dataclass(frozen=True)
class QCoinFlip1Params:
    x: Number
    z0: Number
    z1: Number
    p0: Number
    p1: Number

    def to_json(self) -> dict:
        return {k: _num_json(v) for k, v in asdict(self).items()}


def qcoinflip1_params(p0s: Number, p1s: Number, ps0: Number, ps1: Number) -> QCoinFlip1Params:
    mode = mode_of(p0s)
    _, one = constants(mode)
    tol = tolerance(mode)
    _require(_gt(ps0 + ps1, one, mode), f"QCoinFlip1 needs ps0 + ps1 > 1, got {fmt(ps0 + ps1)}")
    _require(_gt(p0s + p1s, one, mode), f"QCoinFlip1 needs p0s + p1s > 1, got {fmt(p0s + p1s)}")
    total = p0s * ps0 + p1s * ps1
    _require(abs(total - one) <= tol, f"QCoinFlip1 needs p0s*ps0 + p1s*ps1 = 1, got {fmt(total)}")
    excess = ps0 + ps1 - one
    return QCoinFlip1Params(
        x=snap_unit((p0s * ps0 + ps1 - one) / excess, mode, "x"),
        z0=snap_unit(excess / ps1, mode, "z0"),
        z1=snap_unit(excess / ps0, mode, "z1"),
        p0=snap_unit(one - ps1, mode, "p0"),
        p1=snap_unit(one - ps0, mode, "p1"),
    )


def build_qcoinflip1(params: QCoinFlip1Params) -> ProtocolTree:
    """Alice sends ``a``; a WCF(z_a) decides who settles the coin. If Alice
    wins the output is ``a``; if Bob wins he picks ``b``, equal to ``a`` with
    probability ``p_a``."""
    mode = mode_of(params.x)
    zero, one = constants(mode)
    z = (params.z0, params.z1)
    keep = (params.p0, params.p1)

    def round_for(a):
        if a == 0:
            bob = SendNode(Party.BOB, (Branch("0", keep[0], _leaf(0)),
                                       Branch("1", one - keep[0], _leaf(1))))
        else:
            bob = SendNode(Party.BOB, (Branch("0", one - keep[1], _leaf(0)),
                                       Branch("1", keep[1], _leaf(1))))
        return WcfNode(z[a], zero, _leaf(a), bob)

    root = _coin(Party.ALICE, (params.x, one - params.x), (round_for(0), round_for(1)))
    return ProtocolTree(root)


# -- QCoinFlip2 --------------------------------------------------------------


@dataclass(frozen=True)
class QCoinFlip2Params:
    p0s_prime: Number
    ps1_prime: Number
    eps0: Number
    eps1: Number

    def to_json(self) -> dict:
        return {k: _num_json(v) for k, v in asdict(self).items()}


def qcoinflip2_params(spec: CoinFlipSpec) -> QCoinFlip2Params:
    """Raise p0s and ps1 onto the curve p0s*ps0 + p1s*ps1 = 1 and compute the
    abort rates that bring them back down afterwards.

    Assumes ``ps0 + p1s > 1``; the other case is handled by relabelling the
    outputs (see :func:`synthesize`).
    """
    mode = spec.mode
    zero, one = constants(mode)
    tol = tolerance(mode)
    p00, p11, p0s, p1s, ps0, ps1 = spec.as_tuple()
    _require(_gt(ps0 + ps1, one, mode), "QCoinFlip2 needs ps0 + ps1 > 1")
    _require(_gt(p0s + p1s, one, mode), "QCoinFlip2 needs p0s + p1s > 1")
    _require(p0s * ps0 + p1s * ps1 <= one + tol, "QCoinFlip2 needs p0s*ps0 + p1s*ps1 <= 1")
    _require(_gt(ps0 + p1s, one, mode), "QCoinFlip2 needs ps0 + p1s > 1 (swap outputs otherwise)")
    _require(abs(p00 - p0s * ps0) <= tol and abs(p11 - p1s * ps1) <= tol,
             "QCoinFlip2 targets p00 = p0s*ps0 and p11 = p1s*ps1")
    p0s_prime = min(one, (one - p1s * ps1) / ps0)
    p0s_prime = max(p0s_prime, p0s)
    ps1_prime = snap_unit((one - p0s_prime * ps0) / p1s, mode, "ps1'")
    ps1_prime = max(ps1_prime, ps1)
    eps0 = snap_unit(one - p0s / p0s_prime, mode, "eps0")
    eps1 = snap_unit(one - ps1 / ps1_prime, mode, "eps1")
    return QCoinFlip2Params(p0s_prime, ps1_prime, eps0, eps1)


def build_qcoinflip2(inner: ProtocolTree, eps0: Number, eps1: Number) -> ProtocolTree:
    """After ``inner`` ends in 0 Alice aborts with probability ``eps0``; after it
    ends in 1 Bob aborts with probability ``eps1``."""
    _, one = constants(mode_of(eps0))
    announcers = {}
    if eps0:
        announcers[Outcome.ZERO] = (Party.ALICE, one - eps0)
    if eps1:
        announcers[Outcome.ONE] = (Party.BOB, one - eps1)
    if not announcers:
        return inner if isinstance(inner, ProtocolTree) else ProtocolTree(inner)
    return _wrap_leaves(inner, announcers)


# -- synthesis ---------------------------------------------------------------


def _boundary_targets(spec: CoinFlipSpec, boundary: Number) -> tuple[Number, Number]:
    """Honest targets on the classical boundary dominating ``spec``'s.

    Scales (p00, p11) up proportionally, clamps each at its product bound and
    hands the remainder to the other coordinate.
    """
    zero, one = constants(spec.mode)
    cap0, cap1 = spec.p0s * spec.ps0, spec.p1s * spec.ps1
    total = spec.p00 + spec.p11
    t00 = spec.p00 * boundary / total if total > zero else boundary / 2
    t00 = min(max(t00, boundary - cap1), cap0)
    t00 = max(t00, spec.p00)
    t11 = boundary - t00
    return t00, t11


def _finish(tree: ProtocolTree, spec: CoinFlipSpec) -> ProtocolTree:
    """Dilute ``tree`` down to ``spec``'s honest probabilities where needed."""
    result = analyze(tree)
    tol = tolerance(spec.mode)
    t00 = spec.p00 if result.p00 > spec.p00 + tol else result.p00
    t11 = spec.p11 if result.p11 > spec.p11 + tol else result.p11
    return dilute(tree, result, t00, t11)


def _classical(spec: CoinFlipSpec) -> ProtocolTree:
    mode = spec.mode
    zero, one = constants(mode)
    if not _gt(spec.p0s + spec.p1s, one, mode):
        return _finish(build_coinflip1(spec.p0s, spec.p1s, spec.ps0, spec.ps1), spec)
    if not _gt(spec.ps0 + spec.ps1, one, mode):
        tree = build_coinflip1(spec.ps0, spec.ps1, spec.p0s, spec.p1s)
        return _finish(swap_parties(tree), spec)
    boundary = classical_bound_rhs(spec.p0s, spec.p1s, spec.ps0, spec.ps1)
    t00, t11 = _boundary_targets(spec, boundary)
    target = CoinFlipSpec(t00, t11, spec.p0s, spec.p1s, spec.ps0, spec.ps1)
    tree = build_coinflip2(coinflip2_params(target))
    return _finish(tree, spec)


def _quantum(spec: CoinFlipSpec) -> ProtocolTree:
    mode = spec.mode
    zero, one = constants(mode)
    if not (_gt(spec.p0s + spec.p1s, one, mode) and _gt(spec.ps0 + spec.ps1, one, mode)):
        return _classical(spec)
    # lower Bob's caps until the honest targets are exactly the products
    p0s = min(spec.p0s, spec.p00 / spec.ps0)
    p1s = min(spec.p1s, spec.p11 / spec.ps1)
    reduced = CoinFlipSpec(p0s * spec.ps0 if mode == FLOAT else spec.p00,
                           p1s * spec.ps1 if mode == FLOAT else spec.p11,
                           p0s, p1s, spec.ps0, spec.ps1)
    if not _gt(p0s + p1s, one, mode):
        return _finish(_classical(reduced), spec)
    relabel = not _gt(reduced.ps0 + reduced.p1s, one, mode)
    work = reduced.swap_outputs() if relabel else reduced
    params = qcoinflip2_params(work)
    inner = build_qcoinflip1(qcoinflip1_params(params.p0s_prime, work.p1s,
                                               work.ps0, params.ps1_prime))
    tree = build_qcoinflip2(inner, params.eps0, params.eps1)
    if relabel:
        tree = swap_outputs(tree)
    return _finish(tree, spec)


def synthesize(spec: CoinFlipSpec, setting: str = CLASSICAL) -> ProtocolTree:
    """A protocol tree implementing ``spec`` in the given setting.

    Quantum trees use ideal WCF(z, 0) resources; see
    :func:`substitute_wcf_eps` for their noisy counterparts.
    """
    verdict = feasible(spec, setting)
    if not verdict.feasible:
        raise InfeasibleSpec(f"{setting} infeasible: " + "; ".join(map(str, verdict.violated)))
    tree = _classical(spec) if setting == CLASSICAL else _quantum(spec)
    report = verify_implements(tree, spec)
    if not report.passed:
        raise AssertionError(f"synthesised tree misses its spec:\n{report}")
    return tree
