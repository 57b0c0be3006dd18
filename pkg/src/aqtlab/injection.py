"""Injection patterns and edge-utilization counters.

An injection pattern is a finite multiset of ``(round, route, size)`` records
truncated to a horizon ``H``; rounds run over ``0..H``.  All arithmetic is
exact (:class:`fractions.Fraction`).
"""
from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .topology import Route, ValidationError

Q = Fraction


def to_q(x) -> Fraction:
    """Parse an int, Fraction or ``"p/q"`` string into a Fraction (floats refused)."""
    if isinstance(x, float):
        raise ValidationError(f"refusing float {x!r}; pass an int, Fraction or 'p/q' string")
    return Fraction(x)


def qstr(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True, order=True)
class PacketSpec:
    round: int
    route: Route
    size: Fraction = Fraction(1)

    def __post_init__(self):
        if not isinstance(self.round, int) or self.round < 0:
            raise ValidationError(f"injection round must be a non-negative int, got {self.round!r}")
        object.__setattr__(self, "size", to_q(self.size))
        if self.size <= 0:
            raise ValidationError(f"packet size must be positive, got {self.size}")

    @property
    def origin(self) -> int:
        return self.route.origin


@dataclass(frozen=True)
class InjectionPattern:
    """A realized adversary: packets with injection round, route and size.

    ``n`` is the size of the path the pattern lives on; it defaults to the
    largest origin that occurs.
    """

    horizon: int
    items: tuple = ()
    n: int = 0
    _by_round: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        items = tuple(sorted(self.items))
        object.__setattr__(self, "items", items)
        if not isinstance(self.horizon, int) or self.horizon < 0:
            raise ValidationError(f"horizon must be a non-negative int, got {self.horizon!r}")
        top = max((p.origin for p in items), default=1)
        if self.n == 0:
            object.__setattr__(self, "n", top)
        elif top > self.n:
            raise ValidationError(f"origin {top} outside a path of {self.n} buffers")
        for p in items:
            if p.round > self.horizon:
                raise ValidationError(f"injection at round {p.round} beyond horizon {self.horizon}")
        by_round: dict[int, dict[int, Fraction]] = defaultdict(lambda: defaultdict(Fraction))
        for p in items:
            by_round[p.round][p.origin] += p.size
        object.__setattr__(self, "_by_round", {t: dict(v) for t, v in sorted(by_round.items())})

    @classmethod
    def from_counts(cls, records: Iterable, horizon: int | None = None, n: int = 0):
        """Build from ``(round, origin, count[, size])`` records."""
        items = []
        last = 0
        for rec in records:
            t, origin, count = rec[0], rec[1], rec[2]
            size = rec[3] if len(rec) > 3 else 1
            if count < 0:
                raise ValidationError(f"negative count in record {rec!r}")
            items.extend(PacketSpec(t, Route(origin), size) for _ in range(count))
            last = max(last, t)
        return cls(last if horizon is None else horizon, tuple(items), n)

    def __len__(self):
        return len(self.items)

    @property
    def is_unit(self) -> bool:
        return all(p.size == 1 for p in self.items)

    @property
    def total_weight(self) -> Fraction:
        return sum((p.size for p in self.items), Fraction(0))

    def rounds(self) -> list[int]:
        """Rounds with at least one injection, ascending."""
        return list(self._by_round)

    def weight_by_round(self) -> dict[int, dict[int, Fraction]]:
        """``{round: {origin: injected weight}}`` (weight = count for unit packets)."""
        return self._by_round

    def count_by_round(self) -> dict[int, dict[int, int]]:
        out: dict[int, dict[int, int]] = {}
        for p in self.items:
            out.setdefault(p.round, {}).setdefault(p.origin, 0)
            out[p.round][p.origin] += 1
        return out

    def at_round(self, t: int) -> list[PacketSpec]:
        return [p for p in self.items if p.round == t]

    def restricted_to(self, origins) -> "InjectionPattern":
        keep = set(origins)
        return InjectionPattern(self.horizon, tuple(p for p in self.items if p.origin in keep), self.n)

    def with_horizon(self, horizon: int) -> "InjectionPattern":
        return InjectionPattern(horizon, tuple(p for p in self.items if p.round <= horizon), self.n)

    def unit_slots(self) -> "InjectionPattern":
        """Same injections with every size replaced by 1 (bundles as unit jumbo packets)."""
        return InjectionPattern(
            self.horizon, tuple(PacketSpec(p.round, p.route) for p in self.items), self.n
        )


@dataclass(frozen=True)
class BoundParams:
    """Parameters ``(rho, sigma, beta)`` of a locally bounded adversary.

    ``beta`` maps buffer index to local burst; buffers missing from the map use
    ``beta_default`` (so a uniform bound ``B`` is ``BoundParams(rho, sigma, {}, B)``).
    """

    rho: Fraction
    sigma: Fraction
    beta: Mapping[int, Fraction] = field(default_factory=dict)
    beta_default: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "rho", to_q(self.rho))
        object.__setattr__(self, "sigma", to_q(self.sigma))
        object.__setattr__(self, "beta_default", to_q(self.beta_default))
        object.__setattr__(self, "beta", {int(k): to_q(v) for k, v in dict(self.beta).items()})
        if self.rho < 0 or self.sigma < 0 or self.beta_default < 0:
            raise ValidationError("rho, sigma and beta must be non-negative")
        if any(v < 0 for v in self.beta.values()):
            raise ValidationError("beta values must be non-negative")

    @classmethod
    def uniform(cls, rho, sigma, B) -> "BoundParams":
        return cls(rho, sigma, {}, B)

    def b(self, i: int) -> Fraction:
        return self.beta.get(i, self.beta_default)

    def beta_vector(self, n: int) -> list[Fraction]:
        return [self.b(i) for i in range(1, n + 1)]

    def beta_sum(self, S) -> Fraction:
        return sum((self.b(f) for f in S), Fraction(0))

    def max_beta(self, n: int) -> Fraction:
        return max(self.beta_vector(n), default=Fraction(0))

    def to_json(self, n: int | None = None) -> dict:
        d = {"rho": qstr(self.rho), "sigma": qstr(self.sigma), "B": qstr(self.beta_default)}
        if self.beta:
            d["beta"] = {str(k): qstr(v) for k, v in sorted(self.beta.items())}
        return d

    @classmethod
    def from_json(cls, d: dict) -> "BoundParams":
        beta = {int(k): to_q(v) for k, v in d.get("beta", {}).items()}
        return cls(to_q(d["rho"]), to_q(d["sigma"]), beta, to_q(d.get("B", 0)))


def _check_interval(A: InjectionPattern, T, e: int) -> tuple[int, int]:
    if not 1 <= e <= A.n:
        raise ValidationError(f"edge {e} outside 1..{A.n}")
    r, s = T
    if not (0 <= r <= s <= A.horizon):
        raise ValidationError(f"interval [{r}, {s}] not inside [0, {A.horizon}]")
    return r, s


def utilization(A: InjectionPattern, e: int, T, S=None, weighted: bool = False) -> Fraction:
    """Packets (or their total size) injected during ``T`` into ``S`` whose route crosses ``e``.

    ``T`` is a closed round interval ``(r, s)``; ``S=None`` means every buffer.
    """
    r, s = _check_interval(A, T, e)
    S = None if S is None else set(S)
    total = Fraction(0)
    for p in A.items:
        if r <= p.round <= s and (S is None or p.origin in S) and p.route.contains(e):
            total += p.size if weighted else 1
    return total


def per_origin_utilization(A: InjectionPattern, e: int, T, weighted: bool = False) -> dict[int, Fraction]:
    r, s = _check_interval(A, T, e)
    m = {f: Fraction(0) for f in range(1, A.n + 1)}
    for p in A.items:
        if r <= p.round <= s and p.route.contains(e):
            m[p.origin] += p.size if weighted else 1
    return m


# -- pattern files ---------------------------------------------------------

HEADER = ["round", "origin", "count", "size"]


def dump_pattern(A: InjectionPattern) -> str:
    """Serialise as ``round,origin,count,size`` CSV; a leading comment carries horizon and n."""
    buf = io.StringIO()
    buf.write(f"# horizon={A.horizon} n={A.n}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    grouped: dict[tuple, int] = {}
    for p in A.items:
        key = (p.round, p.origin, p.size)
        grouped[key] = grouped.get(key, 0) + 1
    for (t, origin, size), count in sorted(grouped.items()):
        w.writerow([t, origin, count, qstr(size)])
    return buf.getvalue()


def load_pattern(text: str) -> InjectionPattern:
    horizon = None
    n = 0
    rows = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            for tok in stripped[1:].split():
                key, _, val = tok.partition("=")
                if key == "horizon":
                    horizon = int(val)
                elif key == "n":
                    n = int(val)
            continue
        rows.append(stripped)
    if not rows:
        return InjectionPattern(horizon or 0, (), n)
    reader = csv.DictReader(rows)
    if reader.fieldnames is None or not {"round", "origin", "count"} <= set(reader.fieldnames):
        raise ValidationError(f"pattern CSV needs header {','.join(HEADER)}")
    records = []
    for row in reader:
        try:
            size = to_q(row["size"]) if row.get("size") not in (None, "") else Fraction(1)
            records.append((int(row["round"]), int(row["origin"]), int(row["count"]), size))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"bad pattern row {row!r}: {exc}") from exc
    return InjectionPattern.from_counts(records, horizon, n)


def write_pattern(A: InjectionPattern, path) -> None:
    Path(path).write_text(dump_pattern(A))


def read_pattern(path) -> InjectionPattern:
    return load_pattern(Path(path).read_text())
