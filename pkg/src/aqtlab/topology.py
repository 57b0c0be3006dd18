"""Single-destination path networks.

Buffers are numbered ``1..n``; buffer ``i`` is the edge ``(i, i+1)`` and node
``n+1`` is the common destination of every packet.
"""
from __future__ import annotations

from dataclasses import dataclass


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


@dataclass(frozen=True)
class PathTopology:
    n: int
    capacity: int = 1

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValidationError(f"path needs at least one buffer, got n={self.n!r}")
        if not isinstance(self.capacity, int) or self.capacity < 1:
            raise ValidationError(f"capacity must be a positive integer, got {self.capacity!r}")

    @property
    def destination(self) -> int:
        return self.n + 1

    @property
    def buffers(self) -> range:
        return range(1, self.n + 1)

    def check_buffer(self, i: int) -> int:
        if not 1 <= i <= self.n:
            raise ValidationError(f"buffer {i} outside 1..{self.n}")
        return i


@dataclass(frozen=True, order=True)
class Route:
    """A route on the path, fully determined by the buffer it starts in."""

    origin: int

    def __post_init__(self):
        if not isinstance(self.origin, int) or self.origin < 1:
            raise ValidationError(f"route origin must be a buffer index >= 1, got {self.origin!r}")

    def contains(self, e: int) -> bool:
        return self.origin <= e


def make_path(n: int, capacity: int = 1) -> PathTopology:
    return PathTopology(n, capacity)


def route_contains(r: Route, e: int) -> bool:
    """True iff the route from ``r.origin`` to the destination crosses buffer ``e``."""
    return r.contains(e)
