"""Synchronous-round forwarding on a path with LIFO height bookkeeping.

Each round: the adversary injects (new packets go on top of their origin
stack), every buffer decides from the same post-injection load snapshot, then
all forwarding buffers pop their top packets at once and the popped packets
land on top of the next stack (or are delivered when leaving buffer ``n``).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .injection import InjectionPattern, PacketSpec, to_q
from .topology import PathTopology, ValidationError


class InvariantViolation(AssertionError):
    """A checked load invariant or bookkeeping invariant failed during a run."""


# -- protocols -------------------------------------------------------------

def _next_load(L: Sequence, i: int):
    return L[i] if i < len(L) else 0


def oed_decision(L: Sequence, i: int) -> bool:
    """Odd-even downhill: forward iff ``L(i) > L(i+1)``, or they are equal and odd.

    ``L[i-1]`` is the load of buffer ``i``; ``L(n+1)`` is taken as 0.
    """
    here, there = L[i - 1], _next_load(L, i)
    return here > there or (here == there and here % 2 == 1)


def greedy_decision(L: Sequence, i: int) -> bool:
    return L[i - 1] > 0


PROTOCOLS: dict[str, Callable] = {"oed": oed_decision, "greedy": greedy_decision}
KERNEL_CODES = {"oed": kernels.OED, "greedy": kernels.GREEDY}


def resolve_protocol(protocol) -> tuple[str, Callable]:
    if callable(protocol):
        for name, fn in PROTOCOLS.items():
            if fn is protocol:
                return name, fn
        return getattr(protocol, "__name__", "custom"), protocol
    try:
        return protocol, PROTOCOLS[protocol]
    except KeyError:
        raise ValidationError(f"unknown protocol {protocol!r}; choose from {sorted(PROTOCOLS)}") from None


# -- state -----------------------------------------------------------------

class Packet:
    __slots__ = ("id", "round", "origin", "size", "injection_height")

    def __init__(self, pid, round_, origin, size, injection_height):
        self.id = pid
        self.round = round_
        self.origin = origin
        self.size = size
        self.injection_height = injection_height

    def __repr__(self):
        return f"Packet(id={self.id}, round={self.round}, origin={self.origin}, size={self.size})"


@dataclass
class SimState:
    topology: PathTopology
    round: int = 0
    stacks: list = None
    weighted: bool = False
    delivered: int = 0
    delivered_weight: Fraction = Fraction(0)
    next_id: int = 0

    def __post_init__(self):
        if self.stacks is None:
            self.stacks = [[] for _ in range(self.topology.n)]

    @property
    def n(self) -> int:
        return self.topology.n

    def load(self, i: int):
        stack = self.stacks[i - 1]
        if self.weighted:
            return sum((p.size for p in stack), Fraction(0))
        return len(stack)

    @property
    def loads(self) -> list:
        return [self.load(i) for i in range(1, self.n + 1)]

    @property
    def in_network(self) -> int:
        return sum(len(s) for s in self.stacks)


@dataclass
class Trace:
    n: int
    protocol: str
    loads: list = field(default_factory=list)      # per round, post-injection snapshot
    decisions: list = field(default_factory=list)  # per round, tuple of bools
    events: list | None = field(default_factory=list)
    delivered: int = 0
    injected: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def rounds(self) -> int:
        return len(self.loads)

    def max_load(self):
        return max((max(L) for L in self.loads if L), default=0)

    def per_buffer_max(self) -> list[tuple]:
        """``(buffer, max_load, first round attaining it)`` for each buffer."""
        out = []
        for i in range(self.n):
            best, when = 0, 0
            for t, L in enumerate(self.loads):
                if L[i] > best:
                    best, when = L[i], t
            out.append((i + 1, best, when))
        return out

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "buffer", "load"])
        for t, L in enumerate(self.loads):
            for i, v in enumerate(L):
                w.writerow([t, i + 1, _fmt(v)])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["buffer", "max_load", "argmax_round"])
        for i, best, when in self.per_buffer_max():
            w.writerow([i, _fmt(best), when])
        return buf.getvalue()

    def events_jsonl(self) -> str:
        return "".join(json.dumps(ev, default=_fmt) + "\n" for ev in (self.events or []))


def _fmt(v):
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return v


# -- one round ---------------------------------------------------------------

def inject(state: SimState, injections: Sequence[PacketSpec], events=None) -> list[Packet]:
    new = []
    for spec in injections:
        if spec.round != state.round:
            raise ValidationError(f"injection for round {spec.round} offered in round {state.round}")
        state.topology.check_buffer(spec.origin)
        stack = state.stacks[spec.origin - 1]
        pkt = Packet(state.next_id, state.round, spec.origin, spec.size, len(stack) + 1)
        state.next_id += 1
        stack.append(pkt)
        new.append(pkt)
        if events is not None:
            events.append({"ev": "inject", "round": state.round, "id": pkt.id,
                           "buffer": spec.origin, "height": pkt.injection_height, "size": spec.size})
    return new


def forward(state: SimState, decide: Callable, events=None) -> tuple:
    """Forwarding step from the current loads; returns the decision tuple."""
    L = state.loads
    n = state.n
    C = state.topology.capacity
    decisions = tuple(bool(L[i - 1]) and decide(L, i) for i in range(1, n + 1))
    moving = []
    for i in range(1, n + 1):
        if not decisions[i - 1]:
            continue
        stack = state.stacks[i - 1]
        k, used = 0, 0
        while k < len(stack):
            size = stack[-1 - k].size if state.weighted else 1
            if used + size > C:
                break
            used += size
            k += 1
        if k == 0:
            continue
        block = stack[len(stack) - k:]
        del stack[len(stack) - k:]
        moving.append((i, block))
    for i, block in moving:
        if i == n:
            for p in block:
                state.delivered += 1
                state.delivered_weight += p.size
                if events is not None:
                    events.append({"ev": "deliver", "round": state.round, "id": p.id})
        else:
            dest = state.stacks[i]
            for p in block:
                dest.append(p)
                if events is not None:
                    events.append({"ev": "forward", "round": state.round, "id": p.id,
                                   "from": i, "to": i + 1, "height": len(dest)})
    return decisions


def step(state: SimState, injections: Sequence[PacketSpec], protocol, events=None,
         monitor=None) -> SimState:
    """Run one synchronous round in place and return the state."""
    _, decide = resolve_protocol(protocol)
    inject(state, injections, events)
    before = state.loads
    if monitor is not None:
        monitor.before_forward(state, before)
    forward(state, decide, events)
    if monitor is not None:
        monitor.after_forward(state, before, state.loads)
    state.round += 1
    return state


# -- adversaries as seen by the runner --------------------------------------

class FixedAdversary:
    """Replays an injection pattern; ignores load feedback."""

    def __init__(self, pattern: InjectionPattern):
        self.pattern = pattern
        self._by_round: dict[int, list] = {}
        for p in pattern.items:
            self._by_round.setdefault(p.round, []).append(p)

    def reset(self, seed=None):
        pass

    def injections(self, t: int, loads) -> list[PacketSpec]:
        return self._by_round.get(t, [])


def as_adversary(adversary):
    if isinstance(adversary, InjectionPattern):
        return FixedAdversary(adversary)
    return adversary


def run(topology: PathTopology, adversary, protocol, H: int, seed=None, monitor=None,
        record_events: bool = True, weighted: bool = False) -> Trace:
    """Simulate rounds ``0..H``.

    ``adversary`` is an :class:`InjectionPattern` or an object with
    ``injections(round, loads)`` (and optionally ``reset(seed)``); it sees
    the pre-injection load vector every round.
    """
    name, decide = resolve_protocol(protocol)
    adv = as_adversary(adversary)
    if hasattr(adv, "reset"):
        adv.reset(seed)
    state = SimState(topology, weighted=weighted)
    events = [] if record_events else None
    trace = Trace(topology.n, name, events=events)
    realized = []
    for t in range(H + 1):
        specs = list(adv.injections(t, state.loads))
        realized.extend(specs)
        inject(state, specs, events)
        before = state.loads
        trace.loads.append(tuple(before))
        if monitor is not None:
            monitor.before_forward(state, before)
        trace.decisions.append(forward(state, decide, events))
        if monitor is not None:
            monitor.after_forward(state, before, state.loads)
        state.round += 1
        if state.delivered + state.in_network != len(realized):
            raise InvariantViolation(f"packet conservation broken in round {t}")
    trace.delivered = state.delivered
    trace.injected = len(realized)
    trace.meta["realized"] = InjectionPattern(H, tuple(realized), topology.n)
    trace.meta["final_state"] = state
    return trace


def replay(events, n: int) -> list[list[int]]:
    """Rebuild the final per-buffer stacks (packet ids, bottom first) from an event log."""
    stacks = [[] for _ in range(n)]
    where = {}
    for ev in events:
        kind = ev["ev"]
        if kind == "inject":
            stacks[ev["buffer"] - 1].append(ev["id"])
            where[ev["id"]] = ev["buffer"]
        elif kind == "forward":
            stacks[ev["from"] - 1].remove(ev["id"])
            stacks[ev["to"] - 1].append(ev["id"])
            where[ev["id"]] = ev["to"]
        elif kind == "deliver":
            stacks[where.pop(ev["id"]) - 1].remove(ev["id"])
    return stacks


# -- load-only fast path -------------------------------------------------------

def simulate_loads(n: int, adversary, protocol, H: int, capacity: int = 1, seed=None) -> np.ndarray:
    """Post-injection load history, shape ``(H+1, n)``, via the compiled kernel.

    Unit packets only.  Gives the same loads as :func:`run` without packet
    identities, for sweeps and benchmarks.
    """
    name, _ = resolve_protocol(protocol)
    code = KERNEL_CODES[name]
    adv = as_adversary(adversary)
    if hasattr(adv, "reset"):
        adv.reset(seed)
    loads = np.zeros(n, dtype=np.int64)
    hist = np.zeros((H + 1, n), dtype=np.int64)
    fixed = isinstance(adv, FixedAdversary)
    if fixed:
        inj = np.zeros((H + 1, n), dtype=np.int64)
        for p in adv.pattern.items:
            if p.size != 1:
                raise ValidationError("simulate_loads handles unit packets only")
            if p.round <= H:
                inj[p.round, p.origin - 1] += 1
        kernels.run_rounds(loads, inj, code, capacity, hist)
        return hist
    row = np.zeros((1, n), dtype=np.int64)
    out = np.zeros((1, n), dtype=np.int64)
    for t in range(H + 1):
        row[:] = 0
        for p in adv.injections(t, loads.tolist()):
            row[0, p.origin - 1] += 1
        kernels.run_rounds(loads, row, code, capacity, out)
        hist[t] = out[0]
    return hist


# -- plateaus ------------------------------------------------------------------

@dataclass(frozen=True)
class Plateau:
    a: int
    b: int
    h: int

    def __len__(self):
        return self.b - self.a + 1

    def __iter__(self):
        return iter(range(self.a, self.b + 1))


def plateaus(L: Sequence, h) -> list[Plateau]:
    """Maximal runs of buffers (1-based) whose loads are all at least ``h``."""
    if h < 0:
        raise ValidationError("plateau height must be non-negative")
    out, start = [], None
    for i, v in enumerate(L, start=1):
        if v >= h:
            if start is None:
                start = i
        elif start is not None:
            out.append(Plateau(start, i - 1, h))
            start = None
    if start is not None:
        out.append(Plateau(start, len(L), h))
    return out


def is_plateau(L: Sequence, I: Plateau) -> bool:
    n = len(L)
    if not 1 <= I.a <= I.b <= n:
        return False
    if any(L[i - 1] < I.h for i in I):
        return False
    return (I.a == 1 or L[I.a - 2] < I.h) and (I.b == n or L[I.b] < I.h)


def load_above(L: Sequence, I: Plateau):
    """Packets sitting above plateau ``I``: the sum of ``L(i) - h`` over ``I``."""
    if not is_plateau(L, I):
        raise ValidationError(f"{I} is not a plateau of the given loads")
    return sum(L[i - 1] - I.h for i in I)


def _even_ceiling(B) -> int:
    k = math.ceil(to_q(B))
    return k + (k % 2)


def oed_proof_bound(n: int, B, sigma) -> Fraction:
    """Explicit OED load ceiling ``(B+2)*m + B + 2*sigma + 3`` with ``m = ceil(log_b n)``.

    ``b = (B+2)/(B+1)`` and ``B`` is first rounded up to an even integer.  The
    ceiling of the logarithm is computed exactly as the least ``m`` with
    ``b**m >= n``.
    """
    if n < 2:
        raise ValidationError("bound stated for n >= 2")
    B = _even_ceiling(B)
    sigma = to_q(sigma)
    if B < 0 or sigma < 0:
        raise ValidationError("B and sigma must be non-negative")
    num, den = B + 2, B + 1
    m, power_num, power_den = 0, 1, 1
    while power_num < n * power_den:
        m += 1
        power_num *= num
        power_den *= den
    return Fraction((B + 2) * m + B + 3) + 2 * sigma


# -- instrumentation --------------------------------------------------------------

class PlateauMonitor:
    """Checks the even-plateau invariants of OED forwarding every round.

    * persistence: an even plateau ``[a, b]`` of height ``h`` keeps load >= h
      on ``[a, b-1]`` after forwarding;
    * packet movement: once a packet sits at height <= h (h even, from
      ``movement_heights``) it never rises above h;
    * even plateau: packets above an even plateau were injected into it, at
      a height above h;
    * upper load: ``L_h(I) <= (B+1)|I| + sigma`` on every even plateau, and
      ``L_h(I) <= |I| + global_sigma`` when ``global_sigma`` is given.
    """

    def __init__(self, B, sigma, global_sigma=None, movement_heights=(2, 4, 6), strict=False):
        self.B = to_q(B)
        self.sigma = to_q(sigma)
        self.global_sigma = None if global_sigma is None else to_q(global_sigma)
        self.movement_heights = tuple(movement_heights)
        self.strict = strict
        self.violations: list[str] = []
        self.capped: dict[int, set] = {h: set() for h in self.movement_heights}
        self.checks = 0

    def _fail(self, msg):
        self.violations.append(msg)
        if self.strict:
            raise InvariantViolation(msg)

    def _movement(self, state: SimState, when: str):
        for stack in state.stacks:
            for pos, p in enumerate(stack):
                height = pos + 1
                for h in self.movement_heights:
                    capped = self.capped[h]
                    if p.id in capped:
                        if height > h:
                            self._fail(f"round {state.round} ({when}): packet {p.id} rose to "
                                       f"height {height} after being at most {h}")
                    elif height <= h:
                        capped.add(p.id)

    def before_forward(self, state: SimState, L):
        self._movement(state, "after injection")
        top = max(L, default=0)
        for h in range(0, top + 1, 2):
            for I in plateaus(L, h):
                self.checks += 1
                above = sum(L[i - 1] - h for i in I)
                bound = (self.B + 1) * len(I) + self.sigma
                if above > bound:
                    self._fail(f"round {state.round}: L_{h}({I.a}..{I.b}) = {above} > {bound}")
                if self.global_sigma is not None and above > len(I) + self.global_sigma:
                    self._fail(f"round {state.round}: L_{h}({I.a}..{I.b}) = {above} > "
                               f"|I| + sigma = {len(I) + self.global_sigma}")
                if h == 0:
                    continue
                for i in I:
                    for p in state.stacks[i - 1][h:]:
                        if not (I.a <= p.origin <= I.b and p.injection_height > h):
                            self._fail(f"round {state.round}: packet {p.id} above even plateau "
                                       f"{I.a}..{I.b} (h={h}) came from buffer {p.origin} at "
                                       f"height {p.injection_height}")

    def after_forward(self, state: SimState, before, after):
        top = max(before, default=0)
        for h in range(2, top + 1, 2):
            for I in plateaus(before, h):
                for i in range(I.a, I.b):
                    if after[i - 1] < h:
                        self._fail(f"round {state.round}: buffer {i} fell below {h} inside "
                                   f"even plateau {I.a}..{I.b}")
        self._movement(state, "after forwarding")
