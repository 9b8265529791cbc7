"""
Radio and MAC models.

The radio is a unit disk with distance-dependent loss: inside range R a
frame is received with probability base_success * (1 - (d/R)^alpha),
outside it never is. The MAC is abstract: a per-attempt delay (base +
uniform jitter + air time), a bounded number of retries with uniform
backoff, and failure feedback once the retries are used up.
"""

import math

from pydantic import BaseModel, ConfigDict, Field

from llnroute.simtime import SimTime, from_millis


class RadioModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    range_m: float = Field(150.0, gt=0, description="Communication range R in meters")
    alpha: float = Field(2.0, gt=0, description="Distance loss exponent")
    base_success: float = Field(1.0, ge=0, le=1, description="Reception probability as d -> 0")
    distance_loss: bool = Field(
        True, description="False selects plain UDGM: base_success anywhere inside range"
    )

    def p_recv(self, d: float) -> float:
        return p_recv(d, self)

    def in_range(self, d: float) -> bool:
        return d <= self.range_m


def p_recv(d: float, model: RadioModel) -> float:
    """Per-attempt reception probability at distance `d` meters."""
    if d < 0:
        raise ValueError(f"distance must be non-negative, got {d}")
    if d > model.range_m:
        return 0.0
    if not model.distance_loss:
        return model.base_success
    return model.base_success * (1.0 - (d / model.range_m) ** model.alpha)


def distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


class MacModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    base_delay_ms: float = Field(8.0, gt=0, description="Fixed per-attempt transmission delay")
    jitter_ms: float = Field(8.0, ge=0, description="Upper bound of uniform per-attempt jitter")
    retries: int = Field(3, ge=0, description="Retransmissions after the first unicast attempt")
    backoff_ms: float = Field(20.0, ge=0, description="Upper bound of uniform backoff per retry")
    bitrate_bps: float = Field(
        250_000.0, ge=0, description="Air time per octet; 0 disables the size-dependent part"
    )

    @property
    def max_attempts(self) -> int:
        return 1 + self.retries

    def airtime(self, octets: int) -> SimTime:
        if self.bitrate_bps == 0:
            return 0
        return from_millis(octets * 8 * 1000.0 / self.bitrate_bps)
