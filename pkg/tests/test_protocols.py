import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings, strategies as st

from coinflip import (
    analyze,
    brute_force_analyze,
    build_coinflip1,
    build_coinflip2,
    build_qcoinflip1,
    build_qcoinflip2,
    build_unbalanced_wcf,
    coinflip2_params,
    dilute,
    make_spec,
    qcoinflip1_params,
    qcoinflip2_params,
    shift_wcf,
    substitute_wcf_eps,
    synthesize,
    verify_implements,
)
from coinflip.bounds import CLASSICAL, QUANTUM, classical_feasible, quantum_feasible
from coinflip.core import (
    CoinFlipSpec,
    InfeasibleSpec,
    Outcome,
    PreconditionViolation,
    SendNode,
    WcfNode,
)
from coinflip.protocols import truncate_bits
from coinflip.randomtrees import random_quantum_spec

from conftest import fractions, specs

H = F(1, 2)
R = 1 / math.sqrt(2)


def wcf_nodes(tree):
    return [n for _, n in tree.nodes() if isinstance(n, WcfNode)]


class TestCoinFlip1:
    def test_fair(self):
        r = analyze(build_coinflip1(H, H, F(1), F(1)))
        assert r.as_tuple() == (H, H, 0, 1, 1, H, H)

    def test_one_sided(self):
        r = analyze(build_coinflip1(F(1), F(0), H, F(1)))
        assert (r.p00, r.p11) == (H, 0)

    def test_always_abort(self):
        r = analyze(build_coinflip1(F(0), F(0), H, H))
        assert r.abort == 1

    @given(fractions(), fractions(), fractions(), fractions())
    def test_products_and_caps(self, p0s, p1s, ps0, ps1):
        assume(p0s + p1s <= 1)
        r = analyze(build_coinflip1(p0s, p1s, ps0, ps1))
        assert (r.p00, r.p11) == (p0s * ps0, p1s * ps1)
        assert (r.force_a0, r.force_a1) == (ps0, ps1)
        assert (r.force_b0, r.force_b1) == (p0s, p1s)

    def test_needs_small_sum(self):
        with pytest.raises(PreconditionViolation):
            build_coinflip1(F(3, 4), F(3, 4), H, H)


class TestCoinFlip2:
    SYM = ("7/16", "7/16", "3/4", "3/4", "3/4", "3/4")

    def test_symmetric_params(self):
        p = coinflip2_params(make_spec(*self.SYM))
        assert (p.p, p.x0, p.x1, p.y0, p.y1) == (H, F(3, 4), F(3, 4), H, H)
        # honest zero: p*x0 + (1-p)*(1-x1)*y0
        assert p.p * p.x0 + (1 - p.p) * (1 - p.x1) * p.y0 == F(7, 16)

    def test_degenerate_params(self):
        p = coinflip2_params(make_spec("1/2", "1/4", "1", "1/2", "1/2", "1"))
        assert (p.p, p.x0, p.x1, p.y1, p.y0) == (1, H, 1, H, None)
        tree = build_coinflip2(p)
        assert len(tree.root.branches) == 1 and tree.root.branches[0].prob == 1
        assert analyze(tree).force_b0 == 1

    def test_off_boundary(self):
        with pytest.raises(PreconditionViolation, match="boundary"):
            coinflip2_params(make_spec("1/4", "7/16", "3/4", "3/4", "3/4", "3/4"))

    def test_symmetric_tree(self, cf2_symmetric):
        r = analyze(cf2_symmetric)
        assert (r.p00, r.p11, r.abort) == (F(7, 16), F(7, 16), F(1, 8))

    @settings(max_examples=60)
    @given(fractions(8), fractions(8), fractions(8), fractions(8), fractions(8))
    def test_boundary_specs_are_met_exactly(self, p0s, p1s, ps0, ps1, share):
        assume(p0s + p1s > 1 and ps0 + ps1 > 1)
        total = p0s * ps0 + p1s * ps1 - (p0s + p1s - 1) * (ps0 + ps1 - 1)
        lo, hi = max(0, total - p1s * ps1), min(p0s * ps0, total)
        p00 = lo + (hi - lo) * share
        spec = CoinFlipSpec(p00, total - p00, p0s, p1s, ps0, ps1)
        tree = build_coinflip2(coinflip2_params(spec))
        assert verify_implements(tree, spec, tol=0).passed
        assert brute_force_analyze(tree) == analyze(tree)


class TestDilute:
    def test_example(self, cf1_fair):
        out = analyze(dilute(cf1_fair, analyze(cf1_fair), F(1, 4), H))
        assert (out.p00, out.p11, out.force_a0) == (F(1, 4), H, 1)

    def test_identity(self, cf1_fair):
        r = analyze(cf1_fair)
        assert dilute(cf1_fair, r, H, H) == cf1_fair

    def test_to_zero(self, cf1_fair):
        r = analyze(cf1_fair)
        out = analyze(dilute(cf1_fair, r, 0, 0))
        assert out.abort == 1
        assert all(a <= b for a, b in zip(out.as_tuple()[3:], r.as_tuple()[3:]))

    def test_cannot_raise(self, cf1_fair):
        with pytest.raises(PreconditionViolation):
            dilute(cf1_fair, analyze(cf1_fair), F(3, 4), H)

    @given(st.integers(0, 2**32 - 1), fractions(), fractions())
    def test_never_raises_forcing(self, seed, s0, s1):
        from coinflip.randomtrees import random_tree
        tree = random_tree(random.Random(seed))
        r = analyze(tree)
        out = analyze(dilute(tree, r, r.p00 * s0, r.p11 * s1))
        assert (out.p00, out.p11) == (r.p00 * s0, r.p11 * s1)
        assert all(a <= b for a, b in zip(out.as_tuple()[3:], r.as_tuple()[3:]))


class TestWcfConstructions:
    def test_unbalanced_exact(self):
        r = analyze(build_unbalanced_wcf(F(3, 8), 3, F(0)))
        assert r.p00 == F(3, 8)
        assert (r.force_a0, r.force_b1) == (F(3, 8), F(5, 8))

    def test_single_round(self):
        tree = build_unbalanced_wcf(H, 1, F(0))
        assert isinstance(tree.root, WcfNode) and tree.root.z == H
        assert tree.root.alice_wins.output is Outcome.ZERO
        assert tree.root.bob_wins.output is Outcome.ONE

    def test_noisy(self):
        r = analyze(build_unbalanced_wcf(F(3, 8), 3, F(1, 100)))
        assert r.force_a0 <= F(3, 8) + F(2, 100)
        assert r.force_b1 <= F(5, 8) + F(2, 100)

    @given(fractions(64), st.integers(1, 8))
    def test_truncation(self, z, k):
        x = truncate_bits(z, k)
        assert analyze(build_unbalanced_wcf(z, k, F(0))).p00 == x
        assert 0 <= z - x <= F(1, 2 ** k)
        assert len(wcf_nodes(build_unbalanced_wcf(z, k, F(0)))) <= k

    def test_shift_examples(self):
        r = analyze(shift_wcf(H, F(0), F(1, 4)))
        assert r.p00 == F(1, 4) and r.force_a0 == H
        near = shift_wcf(0.5, 0.0, 0.5 - 1e-9)
        flip = near.root.alice_wins.branches[1].prob
        assert flip == pytest.approx(0, abs=1e-8)
        assert analyze(shift_wcf(0.75, 0.05, 0.5)).force_b1 <= 0.5 + 0.05 + 1e-12

    @given(fractions(), fractions(), fractions(20))
    def test_shift_caps(self, zp, z, eps):
        assume(0 < z < zp < 1)
        r = analyze(shift_wcf(zp, eps, z))
        assert r.p00 == z
        assert r.force_a0 <= zp + eps
        assert r.force_b1 <= 1 - z + eps

    def test_shift_precondition(self):
        with pytest.raises(PreconditionViolation):
            shift_wcf(F(1, 4), F(0), H)


class TestQCoinFlip1:
    def test_sqrt_params(self):
        p = qcoinflip1_params(R, R, R, R)
        assert p.x == pytest.approx(0.5, abs=1e-12)
        assert p.z0 == pytest.approx(2 - math.sqrt(2), abs=1e-12) == p.z1
        assert p.p0 == pytest.approx(1 - R, abs=1e-12) == p.p1

    def test_sqrt_tree(self):
        r = analyze(build_qcoinflip1(qcoinflip1_params(R, R, R, R)))
        assert r.p00 == pytest.approx(0.5, abs=1e-9) and r.p11 == pytest.approx(0.5, abs=1e-9)
        assert all(abs(f - R) <= 1e-9 for f in r.as_tuple()[3:])

    def test_rational_params(self):
        p = qcoinflip1_params(F(3, 4), H, F(1), H)
        assert (p.z0, p.z1, p.x, p.p0, p.p1) == (1, H, H, H, 0)
        # x z0 + x (1 - z0) p0 + (1 - x)(1 - z1)(1 - p1)
        assert p.x * p.z0 + p.x * (1 - p.z0) * p.p0 + (1 - p.x) * (1 - p.z1) * (1 - p.p1) == F(3, 4)

    def test_rational_tree(self):
        r = analyze(build_qcoinflip1(qcoinflip1_params(F(3, 4), H, F(1), H)))
        assert (r.p00, r.p11, r.force_b0, r.force_a1) == (F(3, 4), F(1, 4), F(3, 4), H)

    def test_boundary_excluded(self):
        with pytest.raises(PreconditionViolation):
            qcoinflip1_params(H, H, H, H)

    def test_certain_first_message_collapses(self):
        params = qcoinflip1_params(F(1), H, H, F(1))
        assert params.x == 1
        root = build_qcoinflip1(params).root
        assert isinstance(root, SendNode)
        assert [(b.msg, b.prob) for b in root.branches] == [("0", 1)]


class TestQCoinFlip2:
    SPEC = ("9/16", "3/8", "3/4", "3/4", "3/4", "1/2")

    def test_golden_params(self):
        p = qcoinflip2_params(make_spec(*self.SPEC))
        assert (p.p0s_prime, p.ps1_prime, p.eps0, p.eps1) == (F(5, 6), H, F(1, 10), 0)
        assert p.p0s_prime * F(3, 4) + F(3, 4) * p.ps1_prime == 1

    def test_golden_tree(self):
        p = qcoinflip2_params(make_spec(*self.SPEC))
        inner = build_qcoinflip1(qcoinflip1_params(p.p0s_prime, F(3, 4), F(3, 4), p.ps1_prime))
        r = analyze(build_qcoinflip2(inner, p.eps0, p.eps1))
        assert (r.p00, r.p11, r.force_b0, r.force_a1) == (F(9, 16), F(3, 8), F(3, 4), H)

    def test_on_curve_is_noop(self):
        p = qcoinflip2_params(make_spec("3/4", "1/4", "3/4", "1/2", "1", "1/2"))
        assert p.eps0 == p.eps1 == 0

    def test_precondition(self):
        with pytest.raises(PreconditionViolation):
            qcoinflip2_params(make_spec(*["1/4"] * 2, *["1/2"] * 4))

    def test_wrapper_extremes(self):
        inner = build_qcoinflip1(qcoinflip1_params(F(3, 4), H, F(1), H))
        assert build_qcoinflip2(inner, F(0), F(0)) == inner
        r = analyze(build_qcoinflip2(inner, F(1), F(1)))
        assert r.abort == 1
        # surviving Alice's veto on 0 is impossible for a cheating Bob
        assert r.force_b0 == 0 and r.force_a1 == 0


class TestSynthesize:
    def test_classical_golden(self):
        spec = make_spec("7/16", "7/16", "3/4", "3/4", "3/4", "3/4")
        tree = synthesize(spec, CLASSICAL)
        assert analyze(tree).as_tuple() == (F(7, 16), F(7, 16), F(1, 8)) + (F(3, 4),) * 4
        assert not wcf_nodes(tree)

    def test_quantum_golden(self):
        tree = synthesize(make_spec(0.5, 0.5, R, R, R, R), QUANTUM)
        assert len(wcf_nodes(tree)) == 2
        assert all(abs(f - R) <= 1e-9 for f in analyze(tree).as_tuple()[3:])

    def test_infeasible(self):
        with pytest.raises(InfeasibleSpec):
            synthesize(make_spec(*["1/2"] * 6), CLASSICAL)

    def test_weak_coin_flip_uses_resources(self):
        spec = make_spec("1/2", "1/2", "1", "51/100", "51/100", "1")
        tree = synthesize(spec, QUANTUM)
        assert wcf_nodes(tree)
        assert verify_implements(tree, spec, tol=0).passed

    @settings(max_examples=80)
    @given(specs(8))
    def test_classical_round_trip(self, spec):
        if not classical_feasible(spec).feasible:
            with pytest.raises(InfeasibleSpec):
                synthesize(spec, CLASSICAL)
            return
        tree = synthesize(spec, CLASSICAL)
        assert verify_implements(tree, spec, tol=0).passed
        assert not wcf_nodes(tree)

    @settings(max_examples=80)
    @given(specs(8))
    def test_quantum_round_trip(self, spec):
        if not quantum_feasible(spec).feasible:
            with pytest.raises(InfeasibleSpec):
                synthesize(spec, QUANTUM)
            return
        assert verify_implements(synthesize(spec, QUANTUM), spec, tol=0).passed

    @given(st.integers(0, 2**32 - 1))
    def test_random_quantum_specs(self, seed):
        spec = random_quantum_spec(random.Random(seed))
        assert verify_implements(synthesize(spec, QUANTUM), spec, tol=0).passed

    @given(st.integers(0, 2**32 - 1), fractions(40))
    def test_resource_error_costs_at_most_twice_eps(self, seed, eps):
        eps = eps / 10
        tree = synthesize(random_quantum_spec(random.Random(seed)), QUANTUM)
        base, noisy = analyze(tree), analyze(substitute_wcf_eps(tree, eps))
        assert all(n - b <= 2 * eps for n, b in zip(noisy.as_tuple()[3:], base.as_tuple()[3:]))
