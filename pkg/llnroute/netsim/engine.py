"""
Deterministic discrete-event engine.

One global queue ordered by (time, insertion counter) drives every router.
Router operations return effects; the engine turns transmissions into
future FrameDelivery / LinkFeedback events through the radio and MAC
models, timers into TimerFire events, and records metrics.

Randomness comes from one numpy stream per purpose derived from the run's
master seed, so changing, say, the traffic pattern never perturbs the
radio draws.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from collections import Counter
from dataclasses import dataclass
from enum import IntEnum, StrEnum
from typing import TextIO, TypeAlias

import numpy as np

from llnroute.errors import CausalityError
from llnroute.metrics import (
    ControlTx,
    DataDelivered,
    DataSent,
    Dropped,
    MetricsCollector,
    MetricsReport,
)
from llnroute.netsim.radio import MacModel, RadioModel, distance, p_recv
from llnroute.netsim.topology import NodeState
from llnroute.routing.aodv import AodvRouter
from llnroute.routing.common import (
    BroadcastControl,
    DeliverData,
    DropData,
    Frame,
    Router,
    RouterActions,
    StartTimer,
    TimerConfig,
    TimerKind,
    UnicastControl,
    UnicastData,
)
from llnroute.routing.loadng import LoadngRouter
from llnroute.simtime import SimTime, from_millis
from llnroute.traffic import (
    TrafficArrival,
    TrafficProfile,
    schedule_config_pushes,
    schedule_meter_reports,
)
from llnroute.wire import (
    Address,
    ControlMessage,
    DataKind,
    DataPacket,
    MessageKind,
    data_frame_octets,
    size_in_octets,
)

logger = logging.getLogger(__name__)


class Protocol(StrEnum):
    LOADNG = "loadng"
    AODV = "aodv"


class RngPurpose(IntEnum):
    TOPOLOGY = 0
    TRAFFIC = 1
    MAC = 2
    RADIO = 3


def seed_sequence(seed: int, purpose: RngPurpose) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(int(purpose),))


def rng_stream(seed: int, purpose: RngPurpose) -> np.random.Generator:
    """Independent generator for one purpose of one run."""
    return np.random.default_rng(seed_sequence(seed, purpose))


def make_router(protocol: Protocol, address: Address, timers: TimerConfig) -> Router:
    if protocol is Protocol.LOADNG:
        return LoadngRouter(address, timers)
    return AodvRouter(address, timers)


# --- 1. Events ---


class EventKind(StrEnum):
    FRAME_DELIVERY = "FrameDelivery"
    TIMER_FIRE = "TimerFire"
    TRAFFIC_ARRIVAL = "TrafficArrival"
    LINK_FEEDBACK = "LinkFeedback"


@dataclass(frozen=True, slots=True)
class FrameDelivery:
    frame: Frame
    prev_hop: Address


@dataclass(frozen=True, slots=True)
class TimerFire:
    timer: TimerKind


@dataclass(frozen=True, slots=True)
class LinkFeedback:
    next_hop: Address
    frame: Frame


EventDetail: TypeAlias = FrameDelivery | TimerFire | TrafficArrival | LinkFeedback

_KIND_OF = {
    FrameDelivery: EventKind.FRAME_DELIVERY,
    TimerFire: EventKind.TIMER_FIRE,
    TrafficArrival: EventKind.TRAFFIC_ARRIVAL,
    LinkFeedback: EventKind.LINK_FEEDBACK,
}


@dataclass(frozen=True, slots=True)
class SimEvent:
    at: SimTime
    seq_no: int
    node: Address
    detail: EventDetail

    @property
    def kind(self) -> EventKind:
        return _KIND_OF[type(self.detail)]

    def describe(self) -> str:
        match self.detail:
            case FrameDelivery(frame=frame, prev_hop=prev_hop):
                return f"from={prev_hop} {frame.describe()}"
            case TimerFire(timer=timer):
                return timer.value
            case TrafficArrival(dst=dst, kind=kind, payload_size=size):
                return f"{kind.value} to={dst} {size}B"
            case LinkFeedback(next_hop=next_hop, frame=frame):
                return f"failed to={next_hop} {frame.describe()}"
        return ""


class Broadcast:
    """Transmission mode marker for `Engine.transmit`."""


BROADCAST = Broadcast()


# --- 2. Engine ---


class Engine:
    def __init__(
        self,
        nodes: list[NodeState],
        protocol: Protocol,
        timers: TimerConfig,
        radio: RadioModel,
        mac: MacModel,
        seed: int,
        traffic: TrafficProfile | None = None,
        focus: Address | None = None,
        trace: TextIO | None = None,
    ) -> None:
        self.now: SimTime = 0
        self.protocol = protocol
        self.radio = radio
        self.mac = mac
        self.traffic = traffic or TrafficProfile()
        self.nodes = {n.id: n for n in sorted(nodes, key=lambda n: n.id)}
        self.routers: dict[Address, Router] = {
            a: make_router(protocol, a, timers) for a in self.nodes
        }
        sinks = [n.id for n in self.nodes.values() if n.is_sink]
        self.sink = sinks[0] if sinks else None
        self.metrics = MetricsCollector(focus)
        self.trace = trace
        self.seed = seed

        self._queue: list[tuple[SimTime, int, SimEvent]] = []
        self._seq_no = itertools.count()
        self._packet_ids = itertools.count(1)
        self._busy_until: dict[Address, SimTime] = dict.fromkeys(self.nodes, 0)
        self._killed: dict[frozenset[Address], SimTime] = {}
        self._mac_rng = rng_stream(seed, RngPurpose.MAC)
        self._radio_rng = rng_stream(seed, RngPurpose.RADIO)
        self._neighbors = self._neighbor_table()

        self.mac_attempts = 0
        self.mac_successes = 0
        # link-level frame copies: a broadcast counts once per in-range neighbor
        self.frames_transmitted = 0
        self.frames_delivered = 0
        self.frames_transmitted_by: Counter[Address] = Counter()
        self.frames_delivered_from: Counter[Address] = Counter()
        self.rrep_by_non_owner = 0

    def _neighbor_table(self) -> dict[Address, list[tuple[Address, float]]]:
        table: dict[Address, list[tuple[Address, float]]] = {a: [] for a in self.nodes}
        for a, na in self.nodes.items():
            for b, nb in self.nodes.items():
                if a != b:
                    d = distance(na.position, nb.position)
                    if self.radio.in_range(d):
                        table[a].append((b, d))
        return table

    # --- scheduling ---

    def schedule(self, at: SimTime, node: Address, detail: EventDetail) -> SimEvent:
        if at < self.now:
            raise CausalityError(f"event at {at} us scheduled while at {self.now} us")
        event = SimEvent(at, next(self._seq_no), node, detail)
        heapq.heappush(self._queue, (at, event.seq_no, event))
        return event

    def install_traffic(self, duration: SimTime) -> int:
        """Schedule the AMI traffic pattern; returns the number of arrivals."""
        rng = rng_stream(self.seed, RngPurpose.TRAFFIC)
        nodes = list(self.nodes.values())
        arrivals = schedule_meter_reports(self.traffic, nodes, rng, duration)
        if self.traffic.config_enabled:
            arrivals += schedule_config_pushes(self.traffic, nodes, rng, duration)
        for arrival in sorted(arrivals, key=lambda a: (a.at, a.src, a.dst)):
            self.schedule(arrival.at, arrival.src, arrival)
        return len(arrivals)

    def inject_data(
        self,
        src: Address,
        dst: Address,
        at: SimTime,
        kind: DataKind = DataKind.CONFIG,
        payload_size: int = 64,
    ) -> None:
        self.schedule(at, src, TrafficArrival(at, src, dst, kind, payload_size))

    def kill_link(self, a: Address, b: Address, at: SimTime | None = None) -> None:
        """Make the link between `a` and `b` drop everything from `at` (default: now) on."""
        self._killed[frozenset((a, b))] = self.now if at is None else max(at, self.now)

    # --- radio + MAC ---

    def _attempt_delay(self, octets: int) -> SimTime:
        jitter = from_millis(float(self._mac_rng.uniform(0.0, self.mac.jitter_ms)))
        return from_millis(self.mac.base_delay_ms) + jitter + self.mac.airtime(octets)

    def _backoff(self) -> SimTime:
        return from_millis(float(self._mac_rng.uniform(0.0, self.mac.backoff_ms)))

    def _link_up(self, a: Address, b: Address) -> bool:
        killed_at = self._killed.get(frozenset((a, b)))
        return killed_at is None or self.now < killed_at

    def transmit(self, sender: Address, frame: Frame, mode: Address | Broadcast) -> None:
        octets = size_in_octets(frame) if isinstance(frame, ControlMessage) else data_frame_octets(frame)
        start = max(self.now, self._busy_until[sender])

        if isinstance(mode, Broadcast):
            done = start + self._attempt_delay(octets)
            self._busy_until[sender] = done
            self._count_transmitted(sender, len(self._neighbors[sender]))
            for neighbor, d in self._neighbors[sender]:
                if self._link_up(sender, neighbor) and self._radio_rng.random() < p_recv(d, self.radio):
                    self._count_delivered(sender)
                    self.schedule(done, neighbor, FrameDelivery(frame, sender))
            return

        to = mode
        d = distance(self.nodes[sender].position, self.nodes[to].position)
        if not self.radio.in_range(d) or not self._link_up(sender, to):
            self.schedule(self.now, sender, LinkFeedback(to, frame))
            return
        p = p_recv(d, self.radio)
        self._count_transmitted(sender, 1)
        t = start
        for attempt in range(self.mac.max_attempts):
            t += self._attempt_delay(octets)
            self.mac_attempts += 1
            if self._radio_rng.random() < p:
                self.mac_successes += 1
                self._count_delivered(sender)
                self._busy_until[sender] = t
                self.schedule(t, to, FrameDelivery(frame, sender))
                return
            if attempt + 1 < self.mac.max_attempts:
                t += self._backoff()
        self._busy_until[sender] = t
        self.schedule(t, sender, LinkFeedback(to, frame))

    def _count_transmitted(self, sender: Address, copies: int) -> None:
        self.frames_transmitted += copies
        self.frames_transmitted_by[sender] += copies

    def _count_delivered(self, sender: Address) -> None:
        self.frames_delivered += 1
        self.frames_delivered_from[sender] += 1

    # --- effects ---

    def _apply(self, node: Address, actions: RouterActions) -> None:
        for effect in actions:
            match effect:
                case BroadcastControl(msg=msg):
                    self._control_tx(node, msg)
                    self.transmit(node, msg, BROADCAST)
                case UnicastControl(msg=msg, to=to):
                    self._control_tx(node, msg)
                    self.transmit(node, msg, to)
                case UnicastData(pkt=pkt, to=to):
                    self.transmit(node, pkt, to)
                case StartTimer(kind=kind, at=at):
                    self.schedule(max(at, self.now), node, TimerFire(kind))
                case DropData(pkt=pkt, reason=reason):
                    self.metrics.record(Dropped(pkt, reason, self.now))
                case DeliverData(pkt=pkt):
                    self.metrics.record(DataDelivered(pkt, self.now))
                    self._on_delivery(node, pkt)

    def _control_tx(self, node: Address, msg: ControlMessage) -> None:
        if (
            msg.kind is MessageKind.LOADNG_RREP
            and msg.hop_count == 0
            and not self.routers[node].owns(msg.destination)
        ):
            self.rrep_by_non_owner += 1
        self.metrics.record(ControlTx(msg, self.now))

    def _on_delivery(self, node: Address, pkt: DataPacket) -> None:
        if pkt.kind is DataKind.METER_REPORT and node == self.sink and self.traffic.app_ack_enabled:
            ack = self._new_packet(
                node, pkt.src, DataKind.APP_ACK, self.traffic.app_ack_payload, reply_to=pkt.id
            )
            self.metrics.record(DataSent(ack, self.now))
            self._apply(node, self.routers[node].send_data(ack, self.now))

    def _new_packet(
        self, src: Address, dst: Address, kind: DataKind, size: int, reply_to: int | None = None
    ) -> DataPacket:
        return DataPacket(src, dst, size, self.now, next(self._packet_ids), kind, reply_to=reply_to)

    # --- main loop ---

    def step(self) -> SimEvent:
        at, _, event = heapq.heappop(self._queue)
        if at < self.now:
            raise CausalityError(f"event at {at} us popped while at {self.now} us")
        self.now = at
        if self.trace is not None:
            self.trace.write(f"{at}\t{event.node}\t{event.kind.value}\t{event.describe()}\n")
        router = self.routers[event.node]
        actions: RouterActions = []
        match event.detail:
            case FrameDelivery(frame=ControlMessage() as msg, prev_hop=prev_hop):
                actions = router.receive_control(msg, prev_hop, at)
            case FrameDelivery(frame=DataPacket() as pkt, prev_hop=prev_hop):
                actions = router.receive_data(pkt, prev_hop, at)
            case TimerFire():
                actions = router.tick(at)
            case TrafficArrival(src=src, dst=dst, kind=kind, payload_size=size):
                pkt = self._new_packet(src, dst, kind, size)
                self.metrics.record(DataSent(pkt, at))
                actions = router.send_data(pkt, at)
            case LinkFeedback(next_hop=next_hop, frame=frame):
                actions = router.link_failed(next_hop, frame, at)
        self._apply(event.node, actions)
        return event

    def run(self, until: SimTime) -> MetricsReport:
        """Process every event up to `until` (inclusive) and report."""
        while self._queue and self._queue[0][0] <= until:
            self.step()
        self.now = max(self.now, until)
        return self.report()

    def pending_events(self) -> int:
        return len(self._queue)

    def data_in_flight(self) -> list[DataPacket]:
        """Data packets buffered at routers or on the air, ordered by id."""
        buffered = [
            pkt
            for router in self.routers.values()
            for pending in router.pending.values()
            for pkt in pending.buffered
        ]
        airborne = [
            event.detail.frame
            for _, _, event in self._queue
            if isinstance(event.detail, FrameDelivery | LinkFeedback)
            and isinstance(event.detail.frame, DataPacket)
        ]
        return sorted(buffered + airborne, key=lambda pkt: pkt.id)

    def router_counters(self) -> Counter[str]:
        total: Counter[str] = Counter()
        for router in self.routers.values():
            total.update(router.counters)
        if self.rrep_by_non_owner:
            total["rrep_generated_by_non_owner"] = self.rrep_by_non_owner
        return total

    def report(self) -> MetricsReport:
        return self.metrics.report(
            self.now,
            self.router_counters(),
            mac_attempts=self.mac_attempts,
            frames_transmitted=self.frames_transmitted,
            frames_delivered=self.frames_delivered,
        )

    # --- oracle views ---

    def route_snapshot(self) -> dict[Address, dict[Address, Address]]:
        return {a: r.route_snapshot(self.now) for a, r in self.routers.items()}

    def route_metric(self, node: Address, dest: Address) -> int | None:
        return self.routers[node].route_metric(dest, self.now)
