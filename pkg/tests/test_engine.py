from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from aqtlab.adversaries import example_A0, example_A1, lower_bound_adaptive
from aqtlab.engine import (InvariantViolation, Plateau, PlateauMonitor, SimState, greedy_decision, inject,
                           is_plateau, load_above, oed_decision, oed_proof_bound, plateaus, replay,
                           resolve_protocol, run, simulate_loads, step)
from aqtlab.generators import random_bounded_pattern
from aqtlab.injection import BoundParams, InjectionPattern, PacketSpec
from aqtlab.topology import PathTopology, Route, ValidationError

from conftest import small_patterns

Q = Fraction
FIG = (0, 1, 0, 3, 4, 5, 2, 2, 1, 0)


def state_with(loads, capacity=1):
    s = SimState(PathTopology(len(loads), capacity))
    inject(s, [PacketSpec(0, Route(i)) for i, c in enumerate(loads, start=1) for _ in range(c)])
    return s


class TestRules:
    @pytest.mark.parametrize("L,expected", [((2, 1), True), ((1, 1), True), ((2, 2), False),
                                            ((1, 2), False), ((3, 3), True), ((0, 0), False)])
    def test_oed(self, L, expected):
        assert oed_decision(L, 1) is expected

    def test_oed_last_buffer_sees_empty_destination(self):
        assert oed_decision((0, 1), 2) and not oed_decision((1, 0), 2)

    @pytest.mark.parametrize("L,expected", [((1, 0), True), ((0, 0), False), ((5, 9), True)])
    def test_greedy(self, L, expected):
        assert greedy_decision(L, 1) is expected

    def test_unknown_protocol(self):
        with pytest.raises(ValidationError):
            resolve_protocol("fifo")


class TestStep:
    def test_downhill(self):
        s = step(state_with((1, 0)), [], "oed")
        assert s.loads == [0, 1]

    def test_simultaneous(self):
        s = step(state_with((2, 2, 0)), [], "oed")
        assert s.loads == [2, 1, 1]

    def test_empty(self):
        s = step(SimState(PathTopology(3)), [], "oed")
        assert s.loads == [0, 0, 0] and s.round == 1

    def test_lifo(self):
        s = SimState(PathTopology(2))
        step(s, [PacketSpec(0, Route(1)), PacketSpec(0, Route(1))], "greedy")
        # the later (top) packet leaves first
        assert [p.id for p in s.stacks[1]] == [1] and [p.id for p in s.stacks[0]] == [0]

    def test_capacity(self):
        s = step(state_with((5, 0), capacity=3), [], "greedy")
        assert s.loads == [2, 3]

    def test_weighted_capacity(self):
        s = SimState(PathTopology(1, 1), weighted=True)
        specs = [PacketSpec(0, Route(1), Q(2, 3)) for _ in range(3)]
        step(s, specs, "greedy")
        assert s.load(1) == Q(4, 3) and s.delivered_weight == Q(2, 3)

    def test_round_mismatch(self):
        with pytest.raises(ValidationError):
            step(SimState(PathTopology(2)), [PacketSpec(4, Route(1))], "oed")


class TestRun:
    def test_a1_greedy(self):
        tr = run(PathTopology(16), example_A1(16, 64), "greedy", 64)
        assert tr.max_load() == 1

    @pytest.mark.parametrize("protocol", ["oed", "greedy"])
    def test_a0_burst(self, protocol):
        tr = run(PathTopology(16), example_A0(16, 16), protocol, 16)
        assert tr.loads[1][0] == 16

    def test_empty(self):
        tr = run(PathTopology(5), InjectionPattern(0, (), 5), "oed", 30)
        assert tr.max_load() == 0 and len(tr.loads) == 31

    def test_csv_shapes(self):
        tr = run(PathTopology(3), example_A1(3, 6), "oed", 6)
        assert tr.trace_csv().splitlines()[0] == "round,buffer,load"
        assert len(tr.trace_csv().splitlines()) == 1 + 7 * 3
        assert tr.summary_csv().splitlines()[0] == "buffer,max_load,argmax_round"

    def test_realized_pattern(self):
        tr = run(PathTopology(64), lower_bound_adaptive(64, 1, 0), "oed", 63)
        assert len(tr.meta["realized"]) == tr.injected

    @given(small_patterns(), st.sampled_from(["oed", "greedy"]))
    def test_conservation(self, A, protocol):
        tr = run(PathTopology(A.n), A, protocol, A.horizon + 2 * A.n)
        state = tr.meta["final_state"]
        assert tr.delivered + state.in_network == len(A)

    @given(small_patterns(), st.sampled_from(["oed", "greedy"]))
    def test_replay_matches_final_state(self, A, protocol):
        tr = run(PathTopology(A.n), A, protocol, A.horizon + 3)
        stacks = replay(tr.events, A.n)
        assert stacks == [[p.id for p in s] for s in tr.meta["final_state"].stacks]

    @given(small_patterns(), st.sampled_from(["oed", "greedy"]))
    def test_deterministic(self, A, protocol):
        a = run(PathTopology(A.n), A, protocol, A.horizon)
        b = run(PathTopology(A.n), A, protocol, A.horizon)
        assert a.trace_csv() == b.trace_csv() and a.events_jsonl() == b.events_jsonl()


class TestFastPath:
    @settings(max_examples=150)
    @given(small_patterns(max_n=8, max_h=12), st.sampled_from(["oed", "greedy"]), st.integers(1, 3))
    def test_matches_run(self, A, protocol, C):
        H = A.horizon + 4
        tr = run(PathTopology(A.n, C), A, protocol, H, record_events=False)
        hist = simulate_loads(A.n, A, protocol, H, capacity=C)
        assert hist.tolist() == [list(L) for L in tr.loads]

    @pytest.mark.parametrize("protocol", ["oed", "greedy"])
    def test_adaptive_matches_run(self, protocol):
        tr = run(PathTopology(64), lower_bound_adaptive(64, 1, 2), protocol, 63, record_events=False)
        hist = simulate_loads(64, lower_bound_adaptive(64, 1, 2), protocol, 63)
        assert hist.tolist() == [list(L) for L in tr.loads]

    def test_rejects_sizes(self):
        A = InjectionPattern(0, (PacketSpec(0, Route(1), Q(1, 2)),))
        with pytest.raises(ValidationError):
            simulate_loads(1, A, "oed", 3)


class TestPlateaus:
    def test_figure_loads(self):
        assert plateaus(FIG, 2) == [Plateau(4, 8, 2)]

    def test_height_zero(self):
        assert plateaus(FIG, 0) == [Plateau(1, 10, 0)]

    def test_none(self):
        assert plateaus((0, 0, 0), 1) == []

    def test_load_above(self):
        assert load_above(FIG, Plateau(4, 8, 2)) == 6

    def test_flat(self):
        assert load_above((2, 2, 2), Plateau(1, 3, 2)) == 0

    def test_single(self):
        assert load_above((0, 5, 0), Plateau(2, 2, 2)) == 3

    def test_not_maximal(self):
        assert not is_plateau(FIG, Plateau(5, 8, 2))
        with pytest.raises(ValidationError):
            load_above(FIG, Plateau(5, 8, 2))

    @given(st.lists(st.integers(0, 6), min_size=1, max_size=12), st.integers(0, 7))
    def test_maximal_runs(self, L, h):
        ps = plateaus(L, h)
        covered = {i for p in ps for i in p}
        assert covered == {i for i, v in enumerate(L, start=1) if v >= h}
        assert all(is_plateau(L, p) for p in ps)


class TestProofBound:
    def test_values(self):
        assert oed_proof_bound(64, 2, 0) == 65
        assert oed_proof_bound(2, 0, 0) == 5

    @given(st.integers(2, 5000), st.integers(0, 6), st.integers(0, 10))
    def test_sigma_shift(self, n, B, s):
        assert oed_proof_bound(n, B, s) - oed_proof_bound(n, B, 0) == 2 * s

    @given(st.integers(2, 5000), st.integers(0, 6))
    def test_log_is_exact_ceiling(self, n, B):
        Be = B + B % 2
        m = (oed_proof_bound(n, B, 0) - Be - 3) / (Be + 2)
        base = Q(Be + 2, Be + 1)
        assert m == int(m) and base ** int(m) >= n and (m == 0 or base ** (int(m) - 1) < n)

    def test_small_n(self):
        with pytest.raises(ValidationError):
            oed_proof_bound(1, 1, 0)


class TestMonitor:
    @pytest.mark.parametrize("seed", range(6))
    def test_random_bounded(self, seed):
        rng = np.random.default_rng(seed)
        n, B, s = 12, int(rng.integers(0, 4)), int(rng.integers(0, 5))
        params = BoundParams.uniform(1, s, B)
        A = random_bounded_pattern(n, 10 * n, params, rng, activity=0.9, burst=0.5)
        mon = PlateauMonitor(B, s)
        tr = run(PathTopology(n), A, "oed", 10 * n, monitor=mon, record_events=False)
        assert mon.violations == [] and mon.checks > 0
        assert tr.max_load() <= oed_proof_bound(n, B, s)

    def test_greedy_breaks_persistence(self):
        mon = PlateauMonitor(1, 0)
        s = state_with((2, 2))
        step(s, [], "greedy", monitor=mon)
        assert any("fell below" in v for v in mon.violations)

    def test_strict_raises(self):
        mon = PlateauMonitor(1, 0, strict=True)
        with pytest.raises(InvariantViolation):
            step(state_with((2, 2)), [], "greedy", monitor=mon)

    def test_upper_load_flags_overload(self):
        mon = PlateauMonitor(0, 0)
        step(state_with((0, 0)), [PacketSpec(0, Route(1))] * 3, "oed", monitor=mon)
        assert any("L_0" in v for v in mon.violations)
