"""
Simulated time.

All simulated instants and durations are integer microseconds so that
event ordering never depends on floating-point rounding.
"""

from typing import TypeAlias

SimTime: TypeAlias = int

US_PER_S = 1_000_000
US_PER_MS = 1_000


def from_seconds(seconds: float) -> SimTime:
    """Convert seconds to the fixed-point representation (nearest microsecond)."""
    return int(round(seconds * US_PER_S))


def from_millis(millis: float) -> SimTime:
    return int(round(millis * US_PER_MS))


def to_seconds(t: SimTime) -> float:
    return t / US_PER_S


def to_millis(t: SimTime) -> float:
    return t / US_PER_MS
