from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from aqtlab.adversaries import example_A1, wave_flows
from aqtlab.boundedness import check_local
from aqtlab.bundling import (c_reduce_flows, c_reduce_pattern, hetero_bundle, reduced_params,
                             verify_uniform_bundling)
from aqtlab.flows import Flow, FlowFamily, ArrivalCurve
from aqtlab.generators import random_bounded_pattern
from aqtlab.injection import BoundParams, InjectionPattern, PacketSpec
from aqtlab.topology import Route, ValidationError

from conftest import small_patterns

Q = Fraction


def _pattern(*records, n=1):
    return InjectionPattern.from_counts(records, n=n)


class TestCReduction:
    def test_identity_flows(self):
        F = wave_flows(4)
        assert c_reduce_flows(F, 1) == F

    def test_wave_halved(self):
        G = c_reduce_flows(wave_flows(16), 2)
        assert G.n == 16 and all(f.curve(32) == 1 and f.curve.tail_slope == Q(1, 32) for f in G.flows)

    def test_single_flow_scaling(self):
        f = Flow(ArrivalCurve.linear(4), Route(1), 2, 4)
        g = c_reduce_flows(FlowFamily((f,), 4, 0, 1), 4).flows[0]
        assert g.rate == 1 and g.b == Q(1, 2)

    def test_exact_division(self):
        J = c_reduce_pattern(_pattern((1, 1, 4)), 4)
        assert [(p.round, p.origin) for p in J.items] == [(1, 1)]

    def test_carry(self):
        J = c_reduce_pattern(_pattern((1, 1, 3), (2, 1, 3)), 4)
        assert [(p.round, p.origin) for p in J.items] == [(2, 1)]

    @given(small_patterns())
    def test_identity_pattern(self, A):
        assert c_reduce_pattern(A, 1) == A

    @given(small_patterns(), st.integers(1, 5))
    def test_jumbo_count_is_floor(self, A, C):
        J = c_reduce_pattern(A, C)
        for o in range(1, A.n + 1):
            for t in range(A.horizon + 1):
                got = sum(1 for p in J.items if p.origin == o and p.round <= t)
                want = sum(1 for p in A.items if p.origin == o and p.round <= t) // C
                assert got == want

    def test_rejects_sizes(self):
        A = InjectionPattern(0, (PacketSpec(0, Route(1), Q(1, 2)),))
        with pytest.raises(ValidationError):
            c_reduce_pattern(A, 2)

    def test_reduced_params(self):
        p = reduced_params(BoundParams(2, 4, {1: 6}, 2), 2)
        assert (p.rho, p.sigma, p.b(1), p.b(2)) == (1, 2, 4, 2)


class TestUniformProposition:
    def test_a1(self):
        v = verify_uniform_bundling(example_A1(16, 64), BoundParams.uniform(1, 0, 1), 2)
        assert v.ok

    @given(small_patterns(max_h=6), st.data())
    def test_c_one(self, A, data):
        params = BoundParams.uniform(1, 0, 0)
        from aqtlab.boundedness import min_global_burst
        params = BoundParams(1, min_global_burst(A, 1, 0), {}, 0)
        assert verify_uniform_bundling(A, params, 1).ok

    def test_precondition(self):
        with pytest.raises(ValidationError):
            verify_uniform_bundling(example_A1(4, 9), BoundParams(1, 0), 2)

    @pytest.mark.parametrize("seed", range(20))
    def test_random(self, seed):
        rng = np.random.default_rng(seed)
        n, C = int(rng.integers(2, 7)), int(rng.integers(2, 5))
        params = BoundParams(int(rng.integers(1, 4)), int(rng.integers(0, 4)),
                             {i: int(rng.integers(0, 4)) for i in range(1, n + 1)})
        A = random_bounded_pattern(n, 25, params, rng, activity=0.8)
        assert verify_uniform_bundling(A, params, C).ok


class TestHetero:
    def test_two_thirds(self):
        A = InjectionPattern(1, tuple(PacketSpec(1, Route(1), Q(2, 3)) for _ in range(3)), 1)
        out, state = hetero_bundle(A, 1)
        assert [b.weight for b in state.bundles] == [Q(2, 3)] * 3
        assert [b.members for b in state.bundles] == [(0,), (1,), (2,)]
        assert state.total_reserve == 0

    def test_threshold_is_strict(self):
        A = InjectionPattern(0, (PacketSpec(0, Route(1), 1),), 1)
        out, state = hetero_bundle(A, 2)
        assert len(out) == 0 and state.reserve_weight(1) == 1

    def test_empty(self):
        out, state = hetero_bundle(InjectionPattern(3, (), 2), 3)
        assert len(out) == 0 and state.total_reserve == 0

    def test_oversize(self):
        with pytest.raises(ValidationError):
            hetero_bundle(InjectionPattern(0, (PacketSpec(0, Route(1), 3),), 1), 2)

    def test_overflowing_packet_travels_alone(self):
        sizes = [Q(1, 5), Q(1, 5), Q(9, 10)]
        A = InjectionPattern(0, tuple(PacketSpec(0, Route(1), s) for s in sizes), 1)
        out, state = hetero_bundle(A, 1)
        # 2/5 + 9/10 > C, so 9/10 leaves alone and the small ones wait
        assert [b.weight for b in state.bundles] == [Q(9, 10)]
        assert state.reserve_weight(1) == Q(2, 5)

    @settings(max_examples=200)
    @given(small_patterns(sizes=[Q(1, 6), Q(1, 3), Q(1, 2), Q(2, 3), Q(1), Q(3, 2), Q(2)]), st.integers(2, 4))
    def test_bundle_shape_and_conservation(self, A, C):
        out, state = hetero_bundle(A, C)
        assert out.total_weight + state.total_reserve == A.total_weight
        for b in state.bundles:
            assert Q(C, 2) <= b.weight <= C
        for o in state.reserve:
            assert state.reserve_weight(o) <= Q(C, 2)
        members = sorted(i for b in state.bundles for i in b.members)
        assert len(members) == len(set(members))
        for b in state.bundles:
            assert b.weight == sum(A.items[i].size for i in b.members)
            assert all(A.items[i].origin == b.origin and A.items[i].round <= b.round for i in b.members)

    def test_rate_claim_counterexample(self):
        # nine unit packets at once, C = 2: every bundle weighs exactly C/2
        A = InjectionPattern.from_counts([(0, 1, 9)], n=1)
        params = BoundParams.uniform(1, 0, 8)
        assert check_local(A, params).ok
        out, _ = hetero_bundle(A, 2)
        assert len(out) == 8
        assert not check_local(out.unit_slots(), BoundParams.uniform(1, 0, 1 + Q(8, 2))).ok
        assert check_local(out.unit_slots(), BoundParams.uniform(1, 0, 1 + Q(2 * 8, 2))).ok

    @pytest.mark.parametrize("seed", range(40))
    def test_doubled_burst_bound(self, seed):
        rng = np.random.default_rng(1000 + seed)
        C = int(rng.integers(2, 5))
        n = int(rng.integers(1, 6))
        params = BoundParams(Q(int(rng.integers(1, C + 1)), 2), int(rng.integers(0, 4)),
                             {i: int(rng.integers(0, 4)) for i in range(1, n + 1)})
        sizes = [Q(a, 2 * C) for a in range(1, 2 * C * C + 1)]
        A = random_bounded_pattern(n, 20, params, rng, sizes=sizes, activity=0.8)
        out, _ = hetero_bundle(A, C)
        bundled = BoundParams(1, 2 * params.sigma / C, {i: 1 + 2 * params.b(i) / C for i in range(1, n + 1)})
        assert check_local(out.unit_slots(), bundled).ok
