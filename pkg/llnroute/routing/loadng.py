"""
LOADng router state machine.

Only the destination answers a RREQ; intermediate routers forward it
(by unicast along a known route when one exists, the "Smart RREQ"),
every RREP hop is acknowledged with a RREP-ACK, neighbors that fail to
acknowledge are blacklisted, and a broken route is reported to the
source of the affected data packet only (no precursor lists). Packets
stranded by a broken or missing route wait at the router that noticed
it while that router rediscovers the destination.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from llnroute.routing.common import (
    BroadcastControl,
    Frame,
    Router,
    RouterActions,
    StartTimer,
    TimerConfig,
    TimerKind,
    UnicastControl,
)
from llnroute.simtime import SimTime, from_seconds, to_seconds
from llnroute.wire import (
    Address,
    ControlMessage,
    DataPacket,
    MessageKind,
    SequenceNumber,
    seqnum_is_newer,
)

logger = logging.getLogger(__name__)


# --- 1. Information bases ---


@dataclass
class RouteEntry:
    destination: Address
    next_hop: Address
    metric: int
    seq: SequenceNumber
    valid_until: SimTime
    bidirectional_confirmed: bool = False

    def is_valid(self, now: SimTime) -> bool:
        return now <= self.valid_until


class RoutingSet:
    """At most one route per destination."""

    def __init__(self) -> None:
        self._routes: dict[Address, RouteEntry] = {}

    def get(self, dest: Address, now: SimTime) -> RouteEntry | None:
        entry = self._routes.get(dest)
        if entry is None or not entry.is_valid(now):
            return None
        return entry

    def offer(
        self,
        dest: Address,
        next_hop: Address,
        metric: int,
        seq: SequenceNumber,
        now: SimTime,
        valid_until: SimTime,
    ) -> bool:
        """Install the route if preferred over the incumbent.

        Fresher sequence number wins, then lower metric; otherwise the
        incumbent stays (its lifetime is extended when the offer is identical).
        Returns True when the entry changed.
        """
        current = self.get(dest, now)
        if current is not None:
            fresher = seqnum_is_newer(seq, current.seq)
            better = seq == current.seq and metric < current.metric
            if not (fresher or better):
                if seq == current.seq and metric == current.metric and next_hop == current.next_hop:
                    current.valid_until = max(current.valid_until, valid_until)
                return False
        self._routes[dest] = RouteEntry(dest, next_hop, metric, seq, valid_until)
        return True

    def invalidate(self, dest: Address) -> None:
        self._routes.pop(dest, None)

    def invalidate_via(self, next_hop: Address, now: SimTime) -> list[Address]:
        broken = sorted(
            dest
            for dest, entry in self._routes.items()
            if entry.next_hop == next_hop and entry.is_valid(now)
        )
        for dest in broken:
            del self._routes[dest]
        return broken

    def purge(self, now: SimTime) -> None:
        self._routes = {d: e for d, e in self._routes.items() if e.is_valid(now)}

    def entries(self, now: SimTime) -> list[RouteEntry]:
        return [e for _, e in sorted(self._routes.items()) if e.is_valid(now)]

    def __len__(self) -> int:
        return len(self._routes)


class BlacklistNeighborSet:
    """Neighbors with unidirectional connectivity, ignored until expiry."""

    def __init__(self) -> None:
        self._until: dict[Address, SimTime] = {}

    def add(self, neighbor: Address, until: SimTime) -> None:
        self._until[neighbor] = max(until, self._until.get(neighbor, until))

    def is_blacklisted(self, neighbor: Address, now: SimTime) -> bool:
        until = self._until.get(neighbor)
        return until is not None and now < until

    def purge(self, now: SimTime) -> None:
        self._until = {n: t for n, t in self._until.items() if now < t}

    def __contains__(self, neighbor: object) -> bool:
        return neighbor in self._until

    def __len__(self) -> int:
        return len(self._until)


@dataclass(frozen=True)
class PendingAck:
    neighbor: Address
    rrep_destination: Address
    rrep_seq: SequenceNumber
    deadline: SimTime


class PendingAcknowledgmentSet:
    """One tuple per transmitted RREP still waiting for its RREP-ACK."""

    def __init__(self) -> None:
        self._tuples: list[PendingAck] = []

    def add(self, entry: PendingAck) -> None:
        self._tuples.append(entry)

    def acknowledge(self, neighbor: Address, rrep_destination: Address, seq: SequenceNumber) -> bool:
        before = len(self._tuples)
        self._tuples = [
            t
            for t in self._tuples
            if not (t.neighbor == neighbor and t.rrep_destination == rrep_destination and t.rrep_seq == seq)
        ]
        return len(self._tuples) != before

    def withdraw(self, neighbor: Address, rrep_destination: Address, seq: SequenceNumber) -> bool:
        """Drop the tuple of a RREP that never left the MAC."""
        return self.acknowledge(neighbor, rrep_destination, seq)

    def pop_expired(self, now: SimTime) -> list[PendingAck]:
        expired = [t for t in self._tuples if t.deadline <= now]
        if expired:
            self._tuples = [t for t in self._tuples if t.deadline > now]
        return expired

    def __len__(self) -> int:
        return len(self._tuples)


class DestinationAddressSet:
    """Addresses this router generates RREPs for; always holds its own."""

    def __init__(self, own: Address, hosted: frozenset[Address] = frozenset()) -> None:
        self._addresses = frozenset({own}) | hosted

    def __contains__(self, address: object) -> bool:
        return address in self._addresses


class LocalInterfaceSet:
    """Local LOADng interfaces; a single radio interface here."""

    def __init__(self, address: Address, name: str = "radio0") -> None:
        self._interfaces = {name: address}

    def addresses(self) -> list[Address]:
        return list(self._interfaces.values())

    def __len__(self) -> int:
        return len(self._interfaces)


# --- 2. Router ---


class LoadngRouter(Router):
    def __init__(
        self,
        address: Address,
        timers: TimerConfig,
        hosted: frozenset[Address] = frozenset(),
    ) -> None:
        super().__init__(address, timers)
        self.routing_set = RoutingSet()
        self.blacklist = BlacklistNeighborSet()
        self.pending_acks = PendingAcknowledgmentSet()
        self.destination_addresses = DestinationAddressSet(address, hosted)
        self.local_interfaces = LocalInterfaceSet(address)
        self.blacklist_time = from_seconds(timers.blacklist_s)
        self.ack_timeout = from_seconds(timers.rrep_ack_timeout_s)
        # neighbors that acknowledged a RREP recently
        self.confirmed_until: dict[Address, SimTime] = {}

    # --- hooks ---

    def owns(self, address: Address) -> bool:
        return address in self.destination_addresses

    def next_hop(self, dest: Address, now: SimTime) -> Address | None:
        entry = self.routing_set.get(dest, now)
        return entry.next_hop if entry is not None else None

    def refresh_route(self, dest: Address, now: SimTime) -> None:
        entry = self.routing_set.get(dest, now)
        if entry is not None:
            entry.valid_until = max(entry.valid_until, now + self.route_hold)

    def make_rreq(self, dest: Address) -> ControlMessage:
        return ControlMessage(
            kind=MessageKind.LOADNG_RREQ,
            originator=self.address,
            destination=dest,
            seq=self.seq,
            hop_count=0,
            hop_limit=self.timers.hop_limit,
        )

    def receive_control(self, msg: ControlMessage, prev_hop: Address, now: SimTime) -> RouterActions:
        match msg.kind:
            case MessageKind.LOADNG_RREQ:
                return self.process_rreq(msg, prev_hop, now)
            case MessageKind.LOADNG_RREP:
                return self.process_rrep(msg, prev_hop, now)
            case MessageKind.LOADNG_RREP_ACK:
                return self.process_rrep_ack(msg, prev_hop, now)
            case MessageKind.LOADNG_RERR:
                return self.process_rerr(msg, prev_hop, now)
            case _:
                self.counters["foreign_message"] += 1
                return []

    # --- route discovery ---

    def process_rreq(self, rreq: ControlMessage, prev_hop: Address, now: SimTime) -> RouterActions:
        if self.blacklist.is_blacklisted(prev_hop, now):
            self.counters["rreq_blacklisted"] += 1
            return []
        if rreq.originator == self.address:
            return []
        metric = rreq.hop_count + 1
        key = (rreq.originator, rreq.seq)
        if not self.rreq_dedup.admits(key, metric, now):
            self.counters["rreq_duplicate"] += 1
            return []
        self.rreq_dedup.record(key, metric, now)
        self.routing_set.offer(
            rreq.originator, prev_hop, metric, rreq.seq, now, now + self.route_hold
        )
        actions = self.flush_pending(rreq.originator, now)

        if self.owns(rreq.destination):
            reverse = self.next_hop(rreq.originator, now)
            if reverse is None:
                return actions
            self.seq = self.seq.incremented()
            rrep = ControlMessage(
                kind=MessageKind.LOADNG_RREP,
                originator=rreq.originator,
                destination=rreq.destination,
                seq=self.seq,
                hop_count=0,
                hop_limit=self.timers.hop_limit,
            )
            self.rrep_dedup.record((rrep.originator, rrep.destination, rrep.seq), 0, now)
            actions.extend(self._send_rrep(rrep, reverse, now))
            return actions

        if rreq.hop_count + 1 > rreq.hop_limit:
            return actions
        forwarded = rreq.forwarded()
        known = self.routing_set.get(rreq.destination, now)
        if known is not None and known.next_hop not in (prev_hop, rreq.originator):
            actions.append(UnicastControl(forwarded, known.next_hop))
        else:
            actions.append(BroadcastControl(forwarded))
        return actions

    def process_rrep(self, rrep: ControlMessage, prev_hop: Address, now: SimTime) -> RouterActions:
        at_originator = rrep.originator == self.address
        reverse = None if at_originator else self.next_hop(rrep.originator, now)
        if not at_originator and reverse is None:
            self.counters["rrep_orphaned"] += 1
            return []
        metric = rrep.hop_count + 1
        self.routing_set.offer(
            rrep.destination, prev_hop, metric, rrep.seq, now, now + self.route_hold
        )
        ack = ControlMessage(
            kind=MessageKind.LOADNG_RREP_ACK,
            originator=rrep.destination,
            destination=prev_hop,
            seq=rrep.seq,
            hop_limit=1,
        )
        actions: RouterActions = [UnicastControl(ack, prev_hop)]

        key = (rrep.originator, rrep.destination, rrep.seq)
        if not self.rrep_dedup.admits(key, metric, now):
            return actions
        self.rrep_dedup.record(key, metric, now)

        if at_originator:
            actions.extend(self.flush_pending(rrep.destination, now))
            return actions
        assert reverse is not None
        if rrep.hop_count + 1 > rrep.hop_limit or self.routing_set.get(rrep.destination, now) is None:
            return actions
        actions.extend(self._send_rrep(rrep.forwarded(), reverse, now))
        actions.extend(self.flush_pending(rrep.destination, now))
        return actions

    def process_rrep_ack(self, ack: ControlMessage, prev_hop: Address, now: SimTime) -> RouterActions:
        if self.pending_acks.acknowledge(prev_hop, ack.originator, ack.seq):
            self.confirmed_until[prev_hop] = now + self.blacklist_time
            for entry in self.routing_set.entries(now):
                if entry.next_hop == prev_hop:
                    entry.bidirectional_confirmed = True
        return []

    def expire_pending_ack(self, now: SimTime) -> RouterActions:
        for expired in self.pending_acks.pop_expired(now):
            if self.confirmed_until.get(expired.neighbor, now) > now:
                self.counters["rrep_ack_missed"] += 1
                continue
            logger.debug("%s: no RREP-ACK from %s, blacklisting", self.address, expired.neighbor)
            self.blacklist.add(expired.neighbor, now + self.blacklist_time)
            self.counters["blacklisted"] += 1
        return []

    # --- route maintenance ---

    def link_failed(self, next_hop: Address, frame: Frame, now: SimTime) -> RouterActions:
        if isinstance(frame, ControlMessage):
            if frame.kind is MessageKind.LOADNG_RREP_ACK:
                # the route just learned via next_hop stays; the neighbor decides on blacklisting
                self.counters["rrep_ack_lost"] += 1
                return []
            if frame.kind is MessageKind.LOADNG_RREP:
                # a RREP that never got through cannot be acknowledged
                self.pending_acks.withdraw(next_hop, frame.destination, frame.seq)
        return super().link_failed(next_hop, frame, now)

    def detect_broken_route(
        self, failed_next_hop: Address, orphan_pkt: DataPacket | None, now: SimTime
    ) -> RouterActions:
        """Invalidate routes via the failed neighbor and repair the orphan's route locally.

        The orphaned packet leaves over another valid route or waits behind a
        fresh discovery from this router; the data source still gets a RERR
        for the broken destinations.
        """
        broken = self.routing_set.invalidate_via(failed_next_hop, now)
        if orphan_pkt is None:
            return []
        actions: RouterActions = []
        if broken and orphan_pkt.src != self.address:
            actions.extend(self._route_error(orphan_pkt.src, tuple(broken), now))
        self.counters["route_repair"] += 1
        actions.extend(self.send_data(orphan_pkt, now))
        return actions

    def route_missing(self, pkt: DataPacket, prev_hop: Address, now: SimTime) -> RouterActions:
        self.counters["route_repair"] += 1
        return self.originate_discovery(pkt.dst, pkt.forwarded(), now)

    def abandon_discovery(
        self, dest: Address, buffered: list[DataPacket], now: SimTime
    ) -> RouterActions:
        actions = super().abandon_discovery(dest, buffered, now)
        notified: set[Address] = set()
        for pkt in buffered:
            if pkt.src == self.address or pkt.src in notified:
                continue
            notified.add(pkt.src)
            actions.extend(self.no_route_error(pkt, self.address, now))
        return actions

    def process_rerr(self, rerr: ControlMessage, prev_hop: Address, now: SimTime) -> RouterActions:
        for dest in rerr.unreachable:
            entry = self.routing_set.get(dest, now)
            if entry is not None and entry.next_hop == prev_hop:
                self.routing_set.invalidate(dest)
        if rerr.destination == self.address or rerr.hop_count + 1 > rerr.hop_limit:
            return []
        nh = self.next_hop(rerr.destination, now)
        if nh is None:
            self.counters["rerr_unroutable"] += 1
            return []
        return [UnicastControl(rerr.forwarded(), nh)]

    def no_route_error(self, pkt: DataPacket, prev_hop: Address, now: SimTime) -> RouterActions:
        return self._route_error(pkt.src, (pkt.dst,), now)

    def protocol_tick(self, now: SimTime) -> RouterActions:
        self.routing_set.purge(now)
        self.blacklist.purge(now)
        self.confirmed_until = {n: t for n, t in self.confirmed_until.items() if now < t}
        return self.expire_pending_ack(now)

    # --- views ---

    def route_snapshot(self, now: SimTime) -> dict[Address, Address]:
        return {e.destination: e.next_hop for e in self.routing_set.entries(now)}

    def route_metric(self, dest: Address, now: SimTime) -> int | None:
        entry = self.routing_set.get(dest, now)
        return entry.metric if entry is not None else None

    def dump_routes(self, now: SimTime) -> list[str]:
        return [
            f"{e.destination} {e.next_hop} {e.metric} {e.seq} "
            f"{to_seconds(e.valid_until):.6f} {int(e.bidirectional_confirmed)}"
            for e in self.routing_set.entries(now)
        ]

    # --- internals ---

    def _send_rrep(self, rrep: ControlMessage, to: Address, now: SimTime) -> RouterActions:
        deadline = now + self.ack_timeout
        self.pending_acks.add(PendingAck(to, rrep.destination, rrep.seq, deadline))
        return [UnicastControl(rrep, to), StartTimer(TimerKind.PENDING_ACK, deadline)]

    def _route_error(
        self, source: Address, unreachable: tuple[Address, ...], now: SimTime
    ) -> RouterActions:
        nh = self.next_hop(source, now)
        if nh is None:
            self.counters["rerr_unroutable"] += 1
            return []
        rerr = ControlMessage(
            kind=MessageKind.LOADNG_RERR,
            originator=self.address,
            destination=source,
            seq=self.seq,
            hop_limit=self.timers.hop_limit,
            unreachable=unreachable,
        )
        logger.debug("%s: RERR to %s for %s", self.address, source, unreachable)
        return [UnicastControl(rerr, nh)]
