"""Reading and writing protocol trees in the ``cf-tree/1`` JSON format.

Node objects::

    {"kind": "send", "sender": "alice"|"bob",
     "branches": [{"msg": str, "prob": P, "child": Node}, ...]}
    {"kind": "wcf", "z": P, "eps": P, "alice_wins": Node, "bob_wins": Node}
    {"kind": "leaf", "output": "0"|"1"|"abort"}

``P`` is a JSON number or a string ``"a/b"``. The document is
``{"format": "cf-tree/1", "root": Node}``.
"""

from __future__ import annotations

import json
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

from .core import (
    Branch,
    LeafNode,
    MalformedTree,
    Number,
    Outcome,
    Party,
    ProtocolTree,
    ProbabilityError,
    SendNode,
    WcfNode,
    parse_number,
    root_of,
)

FORMAT = "cf-tree/1"


def encode_number(x: Number):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return float(x)


def node_to_json(node) -> dict:
    if isinstance(node, LeafNode):
        return {"kind": "leaf", "output": node.output.value}
    if isinstance(node, SendNode):
        return {
            "kind": "send",
            "sender": node.sender.value,
            "branches": [
                {"msg": b.msg, "prob": encode_number(b.prob), "child": node_to_json(b.child)}
                for b in node.branches
            ],
        }
    if isinstance(node, WcfNode):
        return {
            "kind": "wcf",
            "z": encode_number(node.z),
            "eps": encode_number(node.eps),
            "alice_wins": node_to_json(node.alice_wins),
            "bob_wins": node_to_json(node.bob_wins),
        }
    raise MalformedTree(f"cannot serialise {type(node).__name__}")


def tree_to_json(tree) -> dict:
    return {"format": FORMAT, "root": node_to_json(root_of(tree))}


def dumps(tree, indent: int | None = 2) -> str:
    return json.dumps(tree_to_json(tree), indent=indent)


def _number(raw, mode, where):
    if isinstance(raw, bool) or not isinstance(raw, (str, int, float, Decimal)):
        raise MalformedTree(f"{where}: expected a number or 'a/b' string, got {raw!r}")
    if isinstance(raw, str) and "/" not in raw:
        raise MalformedTree(f"{where}: string probabilities must have the form 'a/b'")
    try:
        return parse_number(raw, mode)
    except ProbabilityError as exc:
        raise MalformedTree(f"{where}: {exc}") from None


def _field(obj, key, where):
    try:
        return obj[key]
    except KeyError:
        raise MalformedTree(f"{where}: missing field {key!r}") from None


def node_from_json(obj, mode: str | None = None, where: str = "root"):
    """Build a node from parsed JSON.

    With ``mode=None`` JSON numbers become floats and ``"a/b"`` strings become
    Fractions (mixing is then reported by :func:`~coinflip.core.validate_tree`).
    """
    if not isinstance(obj, dict):
        raise MalformedTree(f"{where}: expected an object, got {type(obj).__name__}")
    kind = _field(obj, "kind", where)
    if kind == "leaf":
        raw = _field(obj, "output", where)
        try:
            return LeafNode(Outcome(raw))
        except ValueError:
            raise MalformedTree(f"{where}: unknown output {raw!r}") from None
    if kind == "send":
        raw = _field(obj, "sender", where)
        try:
            sender = Party(raw)
        except ValueError:
            raise MalformedTree(f"{where}: unknown sender {raw!r}") from None
        branches = _field(obj, "branches", where)
        if not isinstance(branches, list):
            raise MalformedTree(f"{where}.branches: expected a list")
        out = []
        for i, b in enumerate(branches):
            bw = f"{where}.branches[{i}]"
            if not isinstance(b, dict):
                raise MalformedTree(f"{bw}: expected an object")
            msg = _field(b, "msg", bw)
            if not isinstance(msg, str):
                raise MalformedTree(f"{bw}.msg: expected a string")
            p = _number(_field(b, "prob", bw), mode, f"{bw}.prob")
            out.append(Branch(msg, p, node_from_json(_field(b, "child", bw), mode, f"{bw}.child")))
        return SendNode(sender, tuple(out))
    if kind == "wcf":
        return WcfNode(
            _number(_field(obj, "z", where), mode, f"{where}.z"),
            _number(_field(obj, "eps", where), mode, f"{where}.eps"),
            node_from_json(_field(obj, "alice_wins", where), mode, f"{where}.alice_wins"),
            node_from_json(_field(obj, "bob_wins", where), mode, f"{where}.bob_wins"),
        )
    raise MalformedTree(f"{where}: unknown node kind {kind!r}")


def tree_from_json(doc, mode: str | None = None) -> ProtocolTree:
    if not isinstance(doc, dict):
        raise MalformedTree("document: expected a JSON object")
    if doc.get("format") != FORMAT:
        raise MalformedTree(f"document: format must be {FORMAT!r}, got {doc.get('format')!r}")
    return ProtocolTree(node_from_json(_field(doc, "root", "document"), mode))


def loads(text: str, mode: str | None = None) -> ProtocolTree:
    """Parse a cf-tree/1 document.

    Decimal literals are read exactly, so ``mode="rational"`` turns ``0.1``
    into ``1/10`` rather than the nearest double.
    """
    try:
        doc = json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise MalformedTree(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if mode is None:
        doc = _decimals_to_float(doc)
    return tree_from_json(doc, mode)


def _decimals_to_float(obj):
    if isinstance(obj, Decimal):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _decimals_to_float(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decimals_to_float(v) for v in obj]
    return obj


def load(path, mode: str | None = None) -> ProtocolTree:
    return loads(Path(path).read_text(encoding="utf-8"), mode)


def save(tree, path) -> None:
    Path(path).write_text(dumps(tree) + "\n", encoding="utf-8")
