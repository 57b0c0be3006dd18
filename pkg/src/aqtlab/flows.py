"""Piecewise-linear arrival curves, locally dependent flow families, discretization.

A curve is a list of breakpoints ``(time, value, slope)``: ``value`` is the
right limit ``a(time)`` and the curve rises with ``slope`` until the next
breakpoint, where it may jump.  The curve is 0 before its first breakpoint and
keeps the last slope forever after the final one.

Envelope checks quantify over all real ``s < t`` but only ever evaluate left
limits at breakpoints (for ``s``) and values at breakpoints (for ``t``); see
``docs/envelope-checks.md`` for why that is exhaustive.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .boundedness import Verdict
from .injection import BoundParams, InjectionPattern, PacketSpec, qstr, to_q
from .topology import Route, ValidationError


@dataclass(frozen=True)
class ArrivalCurve:
    breakpoints: tuple

    def __post_init__(self):
        bps = tuple((to_q(t), to_q(v), to_q(m)) for t, v, m in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        if not bps:
            raise ValidationError("arrival curve needs at least one breakpoint")
        if bps[0][0] < -1:
            raise ValidationError("curves start no earlier than t = -1")
        prev = None
        for t, v, m in bps:
            if v < 0 or m < 0:
                raise ValidationError(f"breakpoint ({t}, {v}, {m}) has negative value or slope")
            if prev is not None:
                pt, pv, pm = prev
                if t <= pt:
                    raise ValidationError("breakpoint times must strictly increase")
                if v < pv + pm * (t - pt):
                    raise ValidationError(f"curve decreases at t={t}")
            prev = (t, v, m)

    @classmethod
    def linear(cls, slope, start=0, value=0) -> "ArrivalCurve":
        return cls(((start, value, slope),))

    @classmethod
    def zero(cls) -> "ArrivalCurve":
        return cls(((0, 0, 0),))

    @property
    def times(self) -> list[Fraction]:
        return [t for t, _, _ in self.breakpoints]

    @property
    def tail_slope(self) -> Fraction:
        return self.breakpoints[-1][2]

    def _segment(self, t):
        lo, hi = 0, len(self.breakpoints) - 1
        if t < self.breakpoints[0][0]:
            return None
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.breakpoints[mid][0] <= t:
                lo = mid
            else:
                hi = mid - 1
        return self.breakpoints[lo]

    def __call__(self, t) -> Fraction:
        t = to_q(t)
        seg = self._segment(t)
        if seg is None:
            return Fraction(0)
        t0, v0, m0 = seg
        return v0 + m0 * (t - t0)

    def left_limit(self, t) -> Fraction:
        t = to_q(t)
        idx = None
        for k, (tk, _, _) in enumerate(self.breakpoints):
            if tk < t:
                idx = k
            else:
                break
        if idx is None:
            return Fraction(0)
        t0, v0, m0 = self.breakpoints[idx]
        return v0 + m0 * (t - t0)

    def scaled(self, factor) -> "ArrivalCurve":
        factor = to_q(factor)
        return ArrivalCurve(tuple((t, v * factor, m * factor) for t, v, m in self.breakpoints))

    def to_json(self) -> list:
        return [[qstr(t), qstr(v), qstr(m)] for t, v, m in self.breakpoints]


@dataclass(frozen=True)
class EnvelopeWitness:
    """Violation of an envelope as ``s -> s_time`` from the left and ``t = t_time``."""

    s: Fraction
    t: Fraction
    lhs: Fraction
    rhs: Fraction
    e: int | None = None
    flows: tuple = ()

    def describe(self) -> str:
        where = f"e={self.e} flows={list(self.flows)} " if self.e is not None else ""
        return f"{where}s={self.s}- t={self.t} lhs={self.lhs} > rhs={self.rhs}"


def check_curve(a: ArrivalCurve, r, b) -> Verdict:
    """Decide ``a(t) - a(s) <= r*(t - s) + b`` for all real ``s < t``."""
    r, b = to_q(r), to_q(b)
    if r < 0 or b < 0:
        raise ValidationError("rate and burst must be non-negative")
    if a.tail_slope > r:
        t_last = a.times[-1]
        d = b / (a.tail_slope - r) + 1
        lhs = a(t_last + d) - a.left_limit(t_last)
        return Verdict(False, EnvelopeWitness(t_last, t_last + d, lhs, r * d + b))
    best = None
    low = None  # argmin over s of a(s-) - r*s among breakpoints seen so far
    for t in a.times:
        m = a.left_limit(t) - r * t
        if low is None or m < low[0]:
            low = (m, t)
        excess = a(t) - r * t - low[0]
        if best is None or excess > best[0]:
            best = (excess, low[1], t)
    excess, s, t = best
    if excess > b:
        return Verdict(False, EnvelopeWitness(s, t, a(t) - a.left_limit(s), r * (t - s) + b))
    return Verdict(True)


def min_curve_burst(a: ArrivalCurve, r) -> Fraction:
    """Smallest ``b`` with ``check_curve(a, r, b)`` ok (requires ``tail_slope <= r``)."""
    r = to_q(r)
    if a.tail_slope > r:
        raise ValidationError("no finite burst: tail slope exceeds rate")
    best = Fraction(0)
    low = None
    for t in a.times:
        m = a.left_limit(t) - r * t
        low = m if low is None else min(low, m)
        best = max(best, a(t) - r * t - low)
    return best


@dataclass(frozen=True)
class Flow:
    curve: ArrivalCurve
    route: Route
    b: Fraction = Fraction(0)
    rate: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "b", to_q(self.b))
        object.__setattr__(self, "rate", to_q(self.rate))
        if self.b < 0 or self.rate < 0:
            raise ValidationError("flow rate and burst must be non-negative")

    @property
    def origin(self) -> int:
        return self.route.origin

    def envelope(self, extra_burst=0) -> Verdict:
        """The flow's own rate/burst envelope, optionally widened by a shared burst."""
        return check_curve(self.curve, self.rate, self.b + to_q(extra_burst))

    def scaled(self, factor) -> "Flow":
        factor = to_q(factor)
        return Flow(self.curve.scaled(factor), self.route, self.b * factor, self.rate * factor)


@dataclass(frozen=True)
class FlowFamily:
    flows: tuple
    r: Fraction = Fraction(0)
    sigma: Fraction = Fraction(0)
    n: int = 0

    def __post_init__(self):
        object.__setattr__(self, "flows", tuple(self.flows))
        object.__setattr__(self, "r", to_q(self.r))
        object.__setattr__(self, "sigma", to_q(self.sigma))
        if self.r < 0 or self.sigma < 0:
            raise ValidationError("family rate and burst must be non-negative")
        top = max((f.origin for f in self.flows), default=1)
        if self.n == 0:
            object.__setattr__(self, "n", top)
        elif top > self.n:
            raise ValidationError(f"flow origin {top} outside a path of {self.n} buffers")

    def __len__(self):
        return len(self.flows)

    def crossing(self, e: int) -> list[int]:
        """Indices of flows whose route contains buffer ``e``."""
        return [k for k, f in enumerate(self.flows) if f.route.contains(e)]


def check_dependent(F: FlowFamily) -> Verdict:
    """Decide the locally dependent rate bound for every edge, flow subset and ``s < t``.

    The subset quantifier is replaced by ``{phi : a_phi(t) - a_phi(s) > b_phi}``.
    As every route ends at the destination, the busiest edge is ``n``; the
    witness reports the smallest edge crossed by the whole extremal subset.
    """
    flows = F.flows
    if not flows:
        return Verdict(True)
    tail = [f for f in flows if f.curve.tail_slope > 0]
    tail_rate = sum((f.curve.tail_slope for f in tail), Fraction(0))
    times = sorted({t for f in flows for t in f.curve.times})
    if tail_rate > F.r:
        s = times[-1]
        d = math.ceil((F.sigma + sum((f.b for f in tail), Fraction(0))) / (tail_rate - F.r)) + 1
        return _dependent_witness(F, s, s + d)
    lefts = [[f.curve.left_limit(t) for t in times] for f in flows]
    vals = [[f.curve(t) for t in times] for f in flows]
    b = [f.b for f in flows]
    M = len(times)
    for j in range(M):
        for k in range(j, M):
            ex = Fraction(0)
            for q in range(len(flows)):
                d = vals[q][k] - lefts[q][j] - b[q]
                if d > 0:
                    ex += d
            if ex > F.r * (times[k] - times[j]) + F.sigma:
                return _dependent_witness(F, times[j], times[k])
    return Verdict(True)


def _dependent_witness(F: FlowFamily, s, t) -> Verdict:
    psi = tuple(k for k, f in enumerate(F.flows)
                if f.curve(t) - f.curve.left_limit(s) > f.b)
    lhs = sum((F.flows[k].curve(t) - F.flows[k].curve.left_limit(s) for k in psi), Fraction(0))
    rhs = F.r * (t - s) + F.sigma + sum((F.flows[k].b for k in psi), Fraction(0))
    e = max(F.flows[k].origin for k in psi)
    return Verdict(False, EnvelopeWitness(s, t, lhs, rhs, e, psi))


def _ramp_curve(counts: dict[int, Fraction]) -> ArrivalCurve:
    """Cumulative curve whose round-``k`` injections arrive evenly over ``(k-1, k]``."""
    bps: dict[int, tuple] = {}
    cum = Fraction(0)
    for k in sorted(counts):
        c = counts[k]
        bps[k - 1] = (cum, c)
        cum += c
        bps[k] = (cum, Fraction(0))
    return ArrivalCurve(tuple((t, v, m) for t, (v, m) in sorted(bps.items())))


def flows_from_pattern(A: InjectionPattern, params: BoundParams | None = None,
                       weighted: bool | None = None) -> FlowFamily:
    """One flow per distinct route, cumulative injections as the arrival curve.

    Each curve agrees with the cumulative count at every integer time.  With
    ``params`` the flows get rate ``rho`` and local burst ``beta(origin)``;
    without, rate 1, local burst 0 and the tightest global burst.
    """
    if weighted is None:
        weighted = not A.is_unit
    per_origin: dict[int, dict[int, Fraction]] = {}
    for p in A.items:
        slot = per_origin.setdefault(p.origin, {})
        slot[p.round] = slot.get(p.round, Fraction(0)) + (p.size if weighted else 1)
    if params is None:
        from .boundedness import min_global_burst
        params = BoundParams(1, min_global_burst(A, 1, 0, weighted))
    flows = tuple(
        Flow(_ramp_curve(per_origin[o]), Route(o), params.b(o), params.rho)
        for o in sorted(per_origin)
    )
    return FlowFamily(flows, params.rho, params.sigma, A.n)


def discretize(F: FlowFamily, horizon: int) -> InjectionPattern:
    """Inject ``floor(a(t)) - floor(a(t-1))`` unit packets per flow at each round ``t <= horizon``."""
    items = []
    for f in F.flows:
        prev = math.floor(f.curve(-1))
        for t in range(horizon + 1):
            cur = math.floor(f.curve(t))
            items.extend(PacketSpec(t, f.route) for _ in range(cur - prev))
            prev = cur
    return InjectionPattern(horizon, tuple(items), F.n)


def discretization_params(F: FlowFamily) -> BoundParams:
    """``(r, sigma, beta)`` with ``beta(e) = sum over flows starting at e of (1 + b_phi)``."""
    v = check_dependent(F)
    if not v.ok:
        raise ValidationError(f"family violates its dependent rate bound: {v.witness.describe()}")
    beta: dict[int, Fraction] = {}
    for f in F.flows:
        beta[f.origin] = beta.get(f.origin, Fraction(0)) + 1 + f.b
    return BoundParams(F.r, F.sigma, beta, 0)


# -- flow family files -----------------------------------------------------

def dump_family(F: FlowFamily) -> str:
    doc = {
        "n": F.n,
        "r": qstr(F.r),
        "sigma": qstr(F.sigma),
        "flows": [
            {"origin": f.origin, "rate": qstr(f.rate), "b": qstr(f.b),
             "breakpoints": f.curve.to_json()}
            for f in F.flows
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def load_family(text: str) -> FlowFamily:
    try:
        doc = json.loads(text)
        flows = tuple(
            Flow(ArrivalCurve(tuple(tuple(bp) for bp in fl["breakpoints"])), Route(int(fl["origin"])),
                 to_q(fl.get("b", 0)), to_q(fl.get("rate", 0)))
            for fl in doc.get("flows", [])
        )
        return FlowFamily(flows, to_q(doc.get("r", 0)), to_q(doc.get("sigma", 0)), int(doc.get("n", 0)))
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed flow family: {exc}") from exc


def write_family(F: FlowFamily, path) -> None:
    Path(path).write_text(dump_family(F))


def read_family(path) -> FlowFamily:
    return load_family(Path(path).read_text())
