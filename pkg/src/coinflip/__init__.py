"""Generalised two-party coin flipping: specs, optimal protocols, exact analysis."""

from .analyzer import (
    AnalysisResult,
    analyze,
    brute_force_analyze,
    evaluate_strategy,
    optimal_decisions,
    verify_implements,
)
from .bounds import (
    FeasibilityVerdict,
    classical_bound_rhs,
    classical_feasible,
    quantum_feasible,
    symmetric_tradeoff,
)
from .core import (
    Branch,
    CoinFlipSpec,
    ConstraintViolation,
    ExplosionGuard,
    InfeasibleSpec,
    LeafNode,
    MalformedTree,
    Outcome,
    Party,
    PreconditionViolation,
    ProtocolTree,
    ScriptMismatch,
    SendNode,
    WcfNode,
    WcfSpec,
    make_spec,
    prob,
    validate_tree,
)
from .protocols import (
    build_coinflip1,
    build_coinflip2,
    build_qcoinflip1,
    build_qcoinflip2,
    build_unbalanced_wcf,
    coinflip2_params,
    dilute,
    qcoinflip1_params,
    qcoinflip2_params,
    shift_wcf,
    substitute_wcf_eps,
    synthesize,
)
from .simulator import (
    AdversaryScript,
    EmpiricalDistribution,
    estimate_honest,
    optimal_script,
    run_adversarial,
    run_honest,
    run_trial,
)

__version__ = "0.1.0"
