"""Tight feasibility conditions for classical and quantum coin flipping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import CoinFlipSpec, Number, constants, fmt, mode_of, tolerance

CLASSICAL = "classical"
QUANTUM = "quantum"
DEFINITIONAL = "definitional"


@dataclass(frozen=True)
class Violation:
    name: str
    lhs: Number
    rhs: Number

    def __str__(self):
        return f"{self.name}: {fmt(self.lhs)} > {fmt(self.rhs)}"


@dataclass(frozen=True)
class FeasibilityVerdict:
    setting: str
    violated: tuple[Violation, ...] = ()
    # quantum only: achievability needs an arbitrarily small slack on the
    # four cheating parameters
    needs_slack: bool = False
    checks: tuple[tuple[str, Number, Number], ...] = field(default=(), compare=False)

    @property
    def feasible(self) -> bool:
        return not self.violated

    def to_json(self) -> dict:
        def num(x):
            return fmt(x) if mode_of(x) == "rational" else float(x)

        return {
            "setting": self.setting,
            "feasible": self.feasible,
            "achievable_with_arbitrarily_small_slack": self.needs_slack,
            "checks": [{"inequality": n, "lhs": num(l), "rhs": num(r)} for n, l, r in self.checks],
            "violated": [{"inequality": v.name, "lhs": num(v.lhs), "rhs": num(v.rhs)}
                         for v in self.violated],
        }


def classical_bound_rhs(p0s: Number, p1s: Number, ps0: Number, ps1: Number) -> Number:
    """Largest total honest success p00 + p11 a classical protocol can reach.

    ``p0s*ps0 + p1s*ps1 - max(0, p0s+p1s-1) * max(0, ps0+ps1-1)``
    """
    zero, one = constants(mode_of(p0s))
    return (p0s * ps0 + p1s * ps1
            - max(zero, p0s + p1s - one) * max(zero, ps0 + ps1 - one))


def _verdict(spec: CoinFlipSpec, setting: str, total_cap: Number) -> FeasibilityVerdict:
    tol = tolerance(spec.mode)
    checks = (
        ("p00 <= p0s*ps0", spec.p00, spec.p0s * spec.ps0),
        ("p11 <= p1s*ps1", spec.p11, spec.p1s * spec.ps1),
        ("p00 + p11 <= " + ("classical bound" if setting == CLASSICAL else "1"),
         spec.p00 + spec.p11, total_cap),
    )
    violated = tuple(Violation(n, lhs, rhs) for n, lhs, rhs in checks if lhs > rhs + tol)
    return FeasibilityVerdict(setting, violated, setting == QUANTUM, checks)


def classical_feasible(spec: CoinFlipSpec) -> FeasibilityVerdict:
    rhs = classical_bound_rhs(spec.p0s, spec.p1s, spec.ps0, spec.ps1)
    return _verdict(spec, CLASSICAL, rhs)


def quantum_feasible(spec: CoinFlipSpec) -> FeasibilityVerdict:
    """Closed quantum region; points on its boundary are reachable only up to
    an arbitrarily small additive slack on the cheating parameters, which the
    verdict records in ``needs_slack``."""
    _, one = constants(spec.mode)
    return _verdict(spec, QUANTUM, one)


def feasible(spec: CoinFlipSpec, setting: str) -> FeasibilityVerdict:
    if setting == CLASSICAL:
        return classical_feasible(spec)
    if setting == QUANTUM:
        return quantum_feasible(spec)
    raise ValueError(f"unknown setting {setting!r}")


def symmetric_tradeoff(a, setting: str) -> float:
    """Optimal cheating probability for a symmetric coin flip with abort rate ``a``.

    ``definitional`` is the trivial floor (1-a)/2 every coin flip obeys.
    """
    a = float(a)
    if not 0 <= a <= 1:
        raise ValueError(f"abort probability {a} outside [0, 1]")
    if setting == QUANTUM:
        return math.sqrt((1 - a) / 2)
    if setting == CLASSICAL:
        return 1 - math.sqrt(a / 2) if a < 0.5 else math.sqrt((1 - a) / 2)
    if setting == DEFINITIONAL:
        return (1 - a) / 2
    raise ValueError(f"unknown setting {setting!r}")
