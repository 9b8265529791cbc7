"""
AODV baseline (minimal RFC 3561 profile).

Differences from LOADng that matter for the comparison: intermediate
routers holding a fresh enough route answer RREQs themselves and send a
gratuitous RREP to the destination, routes keep precursor lists, and a
broken route is reported to every precursor, cascading upstream. No HELLO
messages, no local repair, no expanding ring search, no RREP-ACK.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from llnroute.routing.common import (
    BroadcastControl,
    DropData,
    DropReason,
    Router,
    RouterActions,
    TimerConfig,
    UnicastControl,
)
from llnroute.simtime import SimTime, to_seconds
from llnroute.wire import (
    Address,
    ControlMessage,
    DataPacket,
    MessageKind,
    SequenceNumber,
    seqnum_is_newer,
)

logger = logging.getLogger(__name__)


@dataclass
class AodvRouteEntry:
    destination: Address
    next_hop: Address
    hop_count: int
    dest_seq: SequenceNumber
    valid_until: SimTime
    precursors: set[Address] = field(default_factory=set)
    valid: bool = True

    def is_usable(self, now: SimTime) -> bool:
        return self.valid and now <= self.valid_until


class AodvRoutingTable:
    """Routes are invalidated in place so their sequence numbers are remembered."""

    def __init__(self) -> None:
        self._routes: dict[Address, AodvRouteEntry] = {}

    def get(self, dest: Address, now: SimTime) -> AodvRouteEntry | None:
        entry = self._routes.get(dest)
        if entry is None or not entry.is_usable(now):
            return None
        return entry

    def known_seq(self, dest: Address) -> SequenceNumber | None:
        entry = self._routes.get(dest)
        return entry.dest_seq if entry is not None else None

    def offer(
        self,
        dest: Address,
        next_hop: Address,
        hop_count: int,
        dest_seq: SequenceNumber,
        now: SimTime,
        valid_until: SimTime,
    ) -> bool:
        current = self._routes.get(dest)
        if current is not None:
            usable = current.is_usable(now)
            fresher = seqnum_is_newer(dest_seq, current.dest_seq)
            same_seq = dest_seq == current.dest_seq
            if not (fresher or (same_seq and (not usable or hop_count < current.hop_count))):
                if usable and same_seq and hop_count == current.hop_count and next_hop == current.next_hop:
                    current.valid_until = max(current.valid_until, valid_until)
                return False
            precursors = current.precursors if usable and current.next_hop == next_hop else set()
        else:
            precursors = set()
        self._routes[dest] = AodvRouteEntry(
            dest, next_hop, hop_count, dest_seq, valid_until, precursors
        )
        return True

    def invalidate(self, entry: AodvRouteEntry) -> None:
        entry.valid = False
        entry.dest_seq = entry.dest_seq.incremented()

    def invalidate_via(self, next_hop: Address, now: SimTime) -> list[AodvRouteEntry]:
        broken = [
            e for _, e in sorted(self._routes.items()) if e.next_hop == next_hop and e.is_usable(now)
        ]
        for entry in broken:
            self.invalidate(entry)
        return broken

    def purge(self, now: SimTime) -> None:
        for entry in self._routes.values():
            if entry.valid and now > entry.valid_until:
                entry.valid = False

    def entries(self, now: SimTime) -> list[AodvRouteEntry]:
        return [e for _, e in sorted(self._routes.items()) if e.is_usable(now)]

    def __len__(self) -> int:
        return len(self._routes)


class AodvRouter(Router):
    def __init__(self, address: Address, timers: TimerConfig) -> None:
        super().__init__(address, timers)
        self.table = AodvRoutingTable()

    # --- hooks ---

    def owns(self, address: Address) -> bool:
        return address == self.address

    def next_hop(self, dest: Address, now: SimTime) -> Address | None:
        entry = self.table.get(dest, now)
        return entry.next_hop if entry is not None else None

    def refresh_route(self, dest: Address, now: SimTime) -> None:
        entry = self.table.get(dest, now)
        if entry is not None:
            entry.valid_until = max(entry.valid_until, now + self.route_hold)

    def make_rreq(self, dest: Address) -> ControlMessage:
        return ControlMessage(
            kind=MessageKind.AODV_RREQ,
            originator=self.address,
            destination=dest,
            seq=self.seq,
            hop_count=0,
            hop_limit=self.timers.hop_limit,
            aodv_dest_seq=self.table.known_seq(dest),
        )

    def receive_control(self, msg: ControlMessage, prev_hop: Address, now: SimTime) -> RouterActions:
        match msg.kind:
            case MessageKind.AODV_RREQ:
                return self.process_rreq(msg, prev_hop, now)
            case MessageKind.AODV_RREP:
                return self.process_rrep(msg, prev_hop, now)
            case MessageKind.AODV_RERR:
                return self.process_rerr(msg, prev_hop, now)
            case _:
                self.counters["foreign_message"] += 1
                return []

    def note_forward(self, pkt: DataPacket, prev_hop: Address, now: SimTime) -> None:
        entry = self.table.get(pkt.dst, now)
        if entry is not None:
            entry.precursors.add(prev_hop)

    # --- route discovery ---

    def process_rreq(self, rreq: ControlMessage, prev_hop: Address, now: SimTime) -> RouterActions:
        if rreq.originator == self.address:
            return []
        hop_count = rreq.hop_count + 1
        key = (rreq.originator, rreq.seq)
        if not self.rreq_dedup.admits(key, hop_count, now):
            self.counters["rreq_duplicate"] += 1
            return []
        self.rreq_dedup.record(key, hop_count, now)
        self.table.offer(rreq.originator, prev_hop, hop_count, rreq.seq, now, now + self.route_hold)
        actions = self.flush_pending(rreq.originator, now)
        reverse = self.table.get(rreq.originator, now)
        if reverse is None:
            return actions

        if self.owns(rreq.destination):
            if rreq.aodv_dest_seq is not None and seqnum_is_newer(rreq.aodv_dest_seq, self.seq):
                self.seq = rreq.aodv_dest_seq
            self.seq = self.seq.incremented()
            rrep = ControlMessage(
                kind=MessageKind.AODV_RREP,
                originator=rreq.originator,
                destination=self.address,
                seq=self.seq,
                hop_count=0,
                hop_limit=self.timers.hop_limit,
            )
            self.rrep_dedup.record((rrep.originator, rrep.destination, rrep.seq), 0, now)
            actions.append(UnicastControl(rrep, reverse.next_hop))
            return actions

        cached = self.table.get(rreq.destination, now)
        fresh_enough = cached is not None and (
            rreq.aodv_dest_seq is None or not seqnum_is_newer(rreq.aodv_dest_seq, cached.dest_seq)
        )
        if cached is not None and fresh_enough and cached.hop_count <= self.timers.hop_limit:
            rrep = ControlMessage(
                kind=MessageKind.AODV_RREP,
                originator=rreq.originator,
                destination=rreq.destination,
                seq=cached.dest_seq,
                hop_count=cached.hop_count,
                hop_limit=self.timers.hop_limit,
            )
            gratuitous = ControlMessage(
                kind=MessageKind.AODV_RREP,
                originator=rreq.destination,
                destination=rreq.originator,
                seq=rreq.seq,
                hop_count=min(reverse.hop_count, self.timers.hop_limit),
                hop_limit=self.timers.hop_limit,
            )
            cached.precursors.add(reverse.next_hop)
            reverse.precursors.add(cached.next_hop)
            self.rrep_dedup.record((rrep.originator, rrep.destination, rrep.seq), rrep.hop_count, now)
            actions.append(UnicastControl(rrep, reverse.next_hop))
            actions.append(UnicastControl(gratuitous, cached.next_hop))
            return actions

        if rreq.hop_count + 1 <= rreq.hop_limit:
            actions.append(BroadcastControl(rreq.forwarded()))
        return actions

    def process_rrep(self, rrep: ControlMessage, prev_hop: Address, now: SimTime) -> RouterActions:
        at_originator = rrep.originator == self.address
        reverse = None if at_originator else self.table.get(rrep.originator, now)
        if not at_originator and reverse is None:
            self.counters["rrep_orphaned"] += 1
            return []
        hop_count = rrep.hop_count + 1
        self.table.offer(rrep.destination, prev_hop, hop_count, rrep.seq, now, now + self.route_hold)

        key = (rrep.originator, rrep.destination, rrep.seq)
        if not self.rrep_dedup.admits(key, hop_count, now):
            return []
        self.rrep_dedup.record(key, hop_count, now)

        if at_originator:
            return self.flush_pending(rrep.destination, now)
        assert reverse is not None
        forward = self.table.get(rrep.destination, now)
        if forward is None or rrep.hop_count + 1 > rrep.hop_limit:
            return []
        forward.precursors.add(reverse.next_hop)
        reverse.precursors.add(forward.next_hop)
        return [UnicastControl(rrep.forwarded(), reverse.next_hop)]

    # --- route maintenance ---

    def detect_broken_route(
        self, failed_next_hop: Address, orphan_pkt: DataPacket | None, now: SimTime
    ) -> RouterActions:
        broken = self.table.invalidate_via(failed_next_hop, now)
        actions: RouterActions = []
        if orphan_pkt is not None:
            actions.append(DropData(orphan_pkt, DropReason.LINK_FAILURE))
        actions.extend(self._notify_precursors(broken))
        return actions

    def process_rerr(self, rerr: ControlMessage, prev_hop: Address, now: SimTime) -> RouterActions:
        broken: list[AodvRouteEntry] = []
        for dest in rerr.unreachable:
            entry = self.table.get(dest, now)
            if entry is not None and entry.next_hop == prev_hop:
                self.table.invalidate(entry)
                broken.append(entry)
        return self._notify_precursors(broken)

    def no_route_error(self, pkt: DataPacket, prev_hop: Address, now: SimTime) -> RouterActions:
        rerr = ControlMessage(
            kind=MessageKind.AODV_RERR,
            originator=self.address,
            destination=prev_hop,
            seq=self.seq,
            hop_limit=1,
            unreachable=(pkt.dst,),
        )
        return [UnicastControl(rerr, prev_hop)]

    def protocol_tick(self, now: SimTime) -> RouterActions:
        self.table.purge(now)
        return []

    # --- views ---

    def route_snapshot(self, now: SimTime) -> dict[Address, Address]:
        return {e.destination: e.next_hop for e in self.table.entries(now)}

    def route_metric(self, dest: Address, now: SimTime) -> int | None:
        entry = self.table.get(dest, now)
        return entry.hop_count if entry is not None else None

    def precursors_of(self, dest: Address, now: SimTime) -> set[Address]:
        entry = self.table.get(dest, now)
        return set(entry.precursors) if entry is not None else set()

    def dump_routes(self, now: SimTime) -> list[str]:
        return [
            f"{e.destination} {e.next_hop} {e.hop_count} {e.dest_seq} "
            f"{to_seconds(e.valid_until):.6f} 0"
            for e in self.table.entries(now)
        ]

    # --- internals ---

    def _notify_precursors(self, broken: list[AodvRouteEntry]) -> RouterActions:
        targets: dict[Address, list[Address]] = {}
        for entry in broken:
            for precursor in entry.precursors:
                targets.setdefault(precursor, []).append(entry.destination)
            entry.precursors = set()
        actions: RouterActions = []
        for precursor in sorted(targets):
            rerr = ControlMessage(
                kind=MessageKind.AODV_RERR,
                originator=self.address,
                destination=precursor,
                seq=self.seq,
                hop_limit=1,
                unreachable=tuple(sorted(targets[precursor])),
            )
            actions.append(UnicastControl(rerr, precursor))
        if broken and not targets:
            logger.debug("%s: %d routes invalidated, no precursors", self.address, len(broken))
        return actions
