"""
Metric collectors and the per-run report.

Packet delivery ratio and end-to-end delay are kept per direction
(MP2P: meter reports; P2MP: application acks and configuration pushes,
also split by kind). End-to-end delay runs from packet creation to
delivery, so it includes any route discovery wait. Control overhead
counts RREQ/RREP/RREP-ACK/RERR transmissions only, one per hop.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import StrEnum
from typing import TypeAlias

import numpy as np
from pydantic import BaseModel, ConfigDict

from llnroute.errors import AccountingError
from llnroute.routing.common import DropReason
from llnroute.simtime import SimTime, to_millis, to_seconds
from llnroute.wire import Address, ControlMessage, DataKind, DataPacket, size_in_octets


class Direction(StrEnum):
    MP2P = "mp2p"
    P2MP = "p2mp"


def direction_of(kind: DataKind) -> Direction:
    return Direction.MP2P if kind is DataKind.METER_REPORT else Direction.P2MP


_KINDS = {d: tuple(k for k in DataKind if direction_of(k) is d) for d in Direction}


# --- 1. Recordable events ---


@dataclass(frozen=True, slots=True)
class DataSent:
    pkt: DataPacket
    at: SimTime


@dataclass(frozen=True, slots=True)
class DataDelivered:
    pkt: DataPacket
    at: SimTime


@dataclass(frozen=True, slots=True)
class ControlTx:
    msg: ControlMessage
    at: SimTime


@dataclass(frozen=True, slots=True)
class Dropped:
    pkt: DataPacket
    reason: DropReason
    at: SimTime


RecordEvent: TypeAlias = DataSent | DataDelivered | ControlTx | Dropped


# --- 2. Report models ---


class DirectionStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    sent: int = 0
    delivered: int = 0
    pdr: float = 1.0
    no_traffic: bool = True
    delay_mean_ms: float = 0.0
    delay_p95_ms: float = 0.0


class ControlStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    packets_by_kind: dict[str, int] = {}
    packets: int = 0
    total_bytes: int = 0
    bytes_per_second: float = 0.0


class MetricsReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    duration_s: float
    mp2p: DirectionStats
    p2mp: DirectionStats
    p2mp_app_ack: DirectionStats
    p2mp_config: DirectionStats
    control: ControlStats
    drops_by_reason: dict[str, int]
    drops_total: int
    in_flight: int
    router_counters: dict[str, int]
    mac_attempts: int = 0
    frames_transmitted: int = 0
    frames_delivered: int = 0


# --- 3. Collector ---


@dataclass
class _Ledger:
    kind: DataKind
    created_at: SimTime
    counted: bool
    outcome: str | None = None


class MetricsCollector:
    """Owned by a single engine; `focus` restricts data metrics to one node's flows."""

    def __init__(self, focus: Address | None = None) -> None:
        self.focus = focus
        self._packets: dict[int, _Ledger] = {}
        self._delays: dict[DataKind, list[float]] = {k: [] for k in DataKind}
        self._sent: Counter[DataKind] = Counter()
        self._delivered: Counter[DataKind] = Counter()
        self._drops: Counter[str] = Counter()
        self._control_packets: Counter[str] = Counter()
        self._control_bytes = 0

    def record(self, event: RecordEvent) -> None:
        match event:
            case DataSent(pkt=pkt):
                if pkt.id in self._packets:
                    raise AccountingError(f"packet id {pkt.id} sent twice")
                counted = self.focus is None or self.focus in (pkt.src, pkt.dst)
                self._packets[pkt.id] = _Ledger(pkt.kind, pkt.created_at, counted)
                if counted:
                    self._sent[pkt.kind] += 1
            case DataDelivered(pkt=pkt, at=at):
                ledger = self._resolve(pkt, "delivered")
                if ledger.counted:
                    self._delivered[pkt.kind] += 1
                    self._delays[pkt.kind].append(to_millis(at - ledger.created_at))
            case Dropped(pkt=pkt, reason=reason):
                ledger = self._resolve(pkt, "dropped")
                if ledger.counted:
                    self._drops[reason.value] += 1
            case ControlTx(msg=msg):
                self._control_packets[msg.kind.value] += 1
                self._control_bytes += size_in_octets(msg)

    def _resolve(self, pkt: DataPacket, outcome: str) -> _Ledger:
        ledger = self._packets.get(pkt.id)
        if ledger is None:
            raise AccountingError(f"{outcome} record for unknown packet id {pkt.id}")
        if ledger.outcome is not None:
            raise AccountingError(f"packet id {pkt.id} {outcome} after being {ledger.outcome}")
        ledger.outcome = outcome
        return ledger

    def delivered_ids(self) -> list[int]:
        return sorted(i for i, led in self._packets.items() if led.outcome == "delivered")

    def _stats(self, kinds: tuple[DataKind, ...]) -> DirectionStats:
        sent = sum(self._sent[k] for k in kinds)
        delivered = sum(self._delivered[k] for k in kinds)
        delays = [d for k in kinds for d in self._delays[k]]
        return DirectionStats(
            sent=sent,
            delivered=delivered,
            pdr=delivered / sent if sent else 1.0,
            no_traffic=sent == 0,
            delay_mean_ms=float(np.mean(delays)) if delays else 0.0,
            delay_p95_ms=float(np.percentile(delays, 95)) if delays else 0.0,
        )

    def report(
        self,
        duration: SimTime,
        router_counters: Counter[str] | None = None,
        mac_attempts: int = 0,
        frames_transmitted: int = 0,
        frames_delivered: int = 0,
    ) -> MetricsReport:
        seconds = to_seconds(duration)
        counted = [led for led in self._packets.values() if led.counted]
        drops_total = sum(self._drops.values())
        delivered_total = sum(self._delivered.values())
        total_packets = sum(self._control_packets.values())
        return MetricsReport(
            duration_s=seconds,
            mp2p=self._stats(_KINDS[Direction.MP2P]),
            p2mp=self._stats(_KINDS[Direction.P2MP]),
            p2mp_app_ack=self._stats((DataKind.APP_ACK,)),
            p2mp_config=self._stats((DataKind.CONFIG,)),
            control=ControlStats(
                packets_by_kind=dict(sorted(self._control_packets.items())),
                packets=total_packets,
                total_bytes=self._control_bytes,
                bytes_per_second=self._control_bytes / seconds if seconds > 0 else 0.0,
            ),
            drops_by_reason=dict(sorted(self._drops.items())),
            drops_total=drops_total,
            in_flight=len(counted) - delivered_total - drops_total,
            router_counters=dict(sorted((router_counters or Counter()).items())),
            mac_attempts=mac_attempts,
            frames_transmitted=frames_transmitted,
            frames_delivered=frames_delivered,
        )
