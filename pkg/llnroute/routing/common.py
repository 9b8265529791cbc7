"""
Router plumbing shared by the LOADng and AODV state machines.

Routers never perform I/O. Every operation returns a list of effects
(`RouterActions`) that the simulation engine applies: transmissions,
timers, local deliveries and drops.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from collections import Counter
from collections.abc import Hashable
from dataclasses import dataclass, field
from enum import StrEnum
from typing import TypeAlias

from pydantic import BaseModel, ConfigDict, Field

from llnroute.simtime import SimTime, from_seconds
from llnroute.wire import Address, ControlMessage, DataPacket, SequenceNumber

logger = logging.getLogger(__name__)


# --- 1. Timer constants ---


class TimerConfig(BaseModel):
    """Protocol constants, shared by both protocols for a controlled comparison."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    route_hold_s: float = Field(100.0, gt=0, description="Route lifetime, refreshed on use")
    blacklist_s: float = Field(30.0, gt=0, description="How long a unidirectional neighbor is ignored")
    rrep_ack_timeout_s: float = Field(1.0, gt=0, description="RREP-ACK deadline")
    rreq_retries: int = Field(3, ge=0, description="RREQ retransmissions before giving up")
    rreq_backoff_s: float = Field(2.0, gt=0, description="First retry wait; doubles per attempt")
    dedup_hold_s: float = Field(30.0, gt=0, description="Lifetime of duplicate-suppression records")
    hop_limit: int = Field(32, ge=1, le=255, description="Maximum hops for RREQ/RREP and data")
    buffer_cap: int = Field(8, ge=1, description="Packets buffered per pending discovery")


# --- 2. Effects ---


class TimerKind(StrEnum):
    DISCOVERY_RETRY = "DISCOVERY_RETRY"
    PENDING_ACK = "PENDING_ACK"


class DropReason(StrEnum):
    BUFFER_FULL = "BUFFER_FULL"
    DISCOVERY_FAILED = "DISCOVERY_FAILED"
    LINK_FAILURE = "LINK_FAILURE"
    NO_ROUTE = "NO_ROUTE"
    HOP_LIMIT = "HOP_LIMIT"


@dataclass(frozen=True, slots=True)
class BroadcastControl:
    msg: ControlMessage


@dataclass(frozen=True, slots=True)
class UnicastControl:
    msg: ControlMessage
    to: Address


@dataclass(frozen=True, slots=True)
class UnicastData:
    pkt: DataPacket
    to: Address


@dataclass(frozen=True, slots=True)
class StartTimer:
    kind: TimerKind
    at: SimTime


@dataclass(frozen=True, slots=True)
class DropData:
    pkt: DataPacket
    reason: DropReason


@dataclass(frozen=True, slots=True)
class DeliverData:
    pkt: DataPacket


Effect: TypeAlias = (
    BroadcastControl | UnicastControl | UnicastData | StartTimer | DropData | DeliverData
)
RouterActions: TypeAlias = list[Effect]
Frame: TypeAlias = ControlMessage | DataPacket


# --- 3. Shared information bases ---


class RreqDedupCache:
    """Best metric seen per flooded message key, with expiry.

    A key is admitted again only with a strictly better metric.
    """

    def __init__(self, hold: SimTime) -> None:
        self._hold = hold
        self._seen: dict[Hashable, tuple[int, SimTime]] = {}

    def admits(self, key: Hashable, metric: int, now: SimTime) -> bool:
        seen = self._seen.get(key)
        if seen is None or seen[1] < now:
            return True
        return metric < seen[0]

    def record(self, key: Hashable, metric: int, now: SimTime) -> None:
        self._seen[key] = (metric, now + self._hold)

    def purge(self, now: SimTime) -> None:
        self._seen = {k: v for k, v in self._seen.items() if v[1] >= now}

    def __len__(self) -> int:
        return len(self._seen)


@dataclass
class PendingDiscovery:
    destination: Address
    buffered: list[DataPacket] = field(default_factory=list)
    retries_left: int = 0
    next_retry_at: SimTime = 0
    attempts: int = 0


# --- 4. Router base class ---


class Router(ABC):
    """Discovery buffering, retries and the data plane common to both protocols."""

    def __init__(self, address: Address, timers: TimerConfig) -> None:
        self.address = address
        self.timers = timers
        self.seq = SequenceNumber(0)
        self.pending: dict[Address, PendingDiscovery] = {}
        self.counters: Counter[str] = Counter()
        self.route_hold = from_seconds(timers.route_hold_s)
        self.rreq_dedup = RreqDedupCache(from_seconds(timers.dedup_hold_s))
        self.rrep_dedup = RreqDedupCache(from_seconds(timers.dedup_hold_s))

    # --- protocol hooks ---

    @abstractmethod
    def owns(self, address: Address) -> bool:
        """True if this router answers route requests for `address`."""

    @abstractmethod
    def next_hop(self, dest: Address, now: SimTime) -> Address | None:
        """Next hop of a valid route to `dest`, or None."""

    @abstractmethod
    def refresh_route(self, dest: Address, now: SimTime) -> None:
        """Extend the lifetime of the route to `dest` after use."""

    @abstractmethod
    def make_rreq(self, dest: Address) -> ControlMessage:
        """A fresh RREQ for `dest` stamped with the current own sequence number."""

    @abstractmethod
    def receive_control(self, msg: ControlMessage, prev_hop: Address, now: SimTime) -> RouterActions:
        """Dispatch an incoming control message by kind."""

    @abstractmethod
    def detect_broken_route(
        self, failed_next_hop: Address, orphan_pkt: DataPacket | None, now: SimTime
    ) -> RouterActions:
        """React to MAC failure feedback toward `failed_next_hop`."""

    @abstractmethod
    def no_route_error(self, pkt: DataPacket, prev_hop: Address, now: SimTime) -> RouterActions:
        """Route error emitted when a transit packet has no route."""

    @abstractmethod
    def protocol_tick(self, now: SimTime) -> RouterActions:
        """Protocol-specific expiry work run by `tick`."""

    @abstractmethod
    def route_snapshot(self, now: SimTime) -> dict[Address, Address]:
        """Valid routes as destination -> next hop."""

    @abstractmethod
    def route_metric(self, dest: Address, now: SimTime) -> int | None:
        """Hop count of the valid route to `dest`, or None."""

    @abstractmethod
    def dump_routes(self, now: SimTime) -> list[str]:
        """Debug rendering, one line per route."""

    def note_forward(self, pkt: DataPacket, prev_hop: Address, now: SimTime) -> None:
        """Called when a transit packet is forwarded; AODV records precursors."""

    def abandon_discovery(
        self, dest: Address, buffered: list[DataPacket], now: SimTime
    ) -> RouterActions:
        """Buffered packets of a discovery that ran out of retries."""
        return [DropData(pkt, DropReason.DISCOVERY_FAILED) for pkt in buffered]

    def route_missing(self, pkt: DataPacket, prev_hop: Address, now: SimTime) -> RouterActions:
        """A transit packet arrived for a destination with no valid route."""
        return [DropData(pkt, DropReason.NO_ROUTE), *self.no_route_error(pkt, prev_hop, now)]

    # --- application entry point ---

    def send_data(self, pkt: DataPacket, now: SimTime) -> RouterActions:
        if self.owns(pkt.dst):
            return [DeliverData(pkt)]
        nh = self.next_hop(pkt.dst, now)
        if nh is not None:
            self.refresh_route(pkt.dst, now)
            return [UnicastData(pkt, nh)]
        return self.originate_discovery(pkt.dst, pkt, now)

    def originate_discovery(self, dest: Address, pkt: DataPacket, now: SimTime) -> RouterActions:
        if self.owns(dest):
            return [DeliverData(pkt)]
        pending = self.pending.get(dest)
        if pending is not None:
            return self._buffer(pending, pkt)
        self.seq = self.seq.incremented()
        rreq = self.make_rreq(dest)
        self.rreq_dedup.record((self.address, rreq.seq), 0, now)
        at = now + self._backoff(0)
        self.pending[dest] = PendingDiscovery(
            destination=dest,
            buffered=[pkt],
            retries_left=self.timers.rreq_retries,
            next_retry_at=at,
        )
        logger.debug("%s: discovery for %s seq=%s", self.address, dest, rreq.seq)
        return [BroadcastControl(rreq), StartTimer(TimerKind.DISCOVERY_RETRY, at)]

    # --- forwarding plane ---

    def receive_data(self, pkt: DataPacket, prev_hop: Address, now: SimTime) -> RouterActions:
        if self.owns(pkt.dst):
            return [DeliverData(pkt)]
        if pkt.hops + 1 > self.timers.hop_limit:
            return [DropData(pkt, DropReason.HOP_LIMIT)]
        nh = self.next_hop(pkt.dst, now)
        if nh is None:
            return self.route_missing(pkt, prev_hop, now)
        self.refresh_route(pkt.dst, now)
        self.note_forward(pkt, prev_hop, now)
        return [UnicastData(pkt.forwarded(), nh)]

    def link_failed(self, next_hop: Address, frame: Frame, now: SimTime) -> RouterActions:
        orphan = frame if isinstance(frame, DataPacket) else None
        return self.detect_broken_route(next_hop, orphan, now)

    # --- timers ---

    def tick(self, now: SimTime) -> RouterActions:
        actions = self.protocol_tick(now)
        for dest, pending in list(self.pending.items()):
            if pending.next_retry_at > now:
                continue
            if pending.retries_left > 0:
                pending.retries_left -= 1
                pending.attempts += 1
                self.seq = self.seq.incremented()
                rreq = self.make_rreq(dest)
                self.rreq_dedup.record((self.address, rreq.seq), 0, now)
                pending.next_retry_at = now + self._backoff(pending.attempts)
                actions.append(BroadcastControl(rreq))
                actions.append(StartTimer(TimerKind.DISCOVERY_RETRY, pending.next_retry_at))
            else:
                del self.pending[dest]
                logger.warning(
                    "%s: discovery for %s failed, dropping %d packets",
                    self.address,
                    dest,
                    len(pending.buffered),
                )
                actions.extend(self.abandon_discovery(dest, pending.buffered, now))
        self.rreq_dedup.purge(now)
        self.rrep_dedup.purge(now)
        return actions

    # --- helpers for subclasses ---

    def flush_pending(self, dest: Address, now: SimTime) -> RouterActions:
        """Release packets buffered for `dest` once a route exists."""
        pending = self.pending.get(dest)
        if pending is None:
            return []
        nh = self.next_hop(dest, now)
        if nh is None:
            return []
        del self.pending[dest]
        self.refresh_route(dest, now)
        return [UnicastData(pkt, nh) for pkt in pending.buffered]

    def _buffer(self, pending: PendingDiscovery, pkt: DataPacket) -> RouterActions:
        pending.buffered.append(pkt)
        if len(pending.buffered) > self.timers.buffer_cap:
            oldest = pending.buffered.pop(0)
            return [DropData(oldest, DropReason.BUFFER_FULL)]
        return []

    def _backoff(self, attempt: int) -> SimTime:
        return from_seconds(self.timers.rreq_backoff_s * (2**attempt))
