from collections.abc import Callable

import pytest

from llnroute.routing.common import (
    BroadcastControl,
    DeliverData,
    DropData,
    DropReason,
    StartTimer,
    TimerConfig,
    TimerKind,
    UnicastControl,
    UnicastData,
)
from llnroute.routing.loadng import LoadngRouter
from llnroute.simtime import from_seconds
from llnroute.wire import Address, ControlMessage, DataKind, DataPacket, MessageKind, SequenceNumber

A, B, C, D = Address(1), Address(2), Address(3), Address(4)
ACK_TIMEOUT = from_seconds(1)

MakePacket = Callable[..., DataPacket]


def rreq(seq: int = 1, hop_count: int = 0, originator: Address = A) -> ControlMessage:
    return ControlMessage(
        kind=MessageKind.LOADNG_RREQ,
        originator=originator,
        destination=C,
        seq=SequenceNumber(seq),
        hop_count=hop_count,
        metric=hop_count,
    )


def rrep(seq: int = 1, hop_count: int = 0) -> ControlMessage:
    return ControlMessage(
        kind=MessageKind.LOADNG_RREP,
        originator=A,
        destination=C,
        seq=SequenceNumber(seq),
        hop_count=hop_count,
        metric=hop_count,
    )


def rrep_ack(to: Address, seq: int = 1) -> ControlMessage:
    return ControlMessage(
        kind=MessageKind.LOADNG_RREP_ACK,
        originator=C,
        destination=to,
        seq=SequenceNumber(seq),
        hop_limit=1,
    )


@pytest.fixture
def router(timers: TimerConfig) -> Callable[[Address], LoadngRouter]:
    return lambda address: LoadngRouter(address, timers)


@pytest.fixture
def relay(router: Callable[[Address], LoadngRouter]) -> LoadngRouter:
    """B on the line A - B - C after forwarding A's RREQ and C's RREP."""
    b = router(B)
    b.process_rreq(rreq(), A, 10)
    b.process_rrep(rrep(), C, 30)
    return b


# --- discovery origination ---


def test_originate_broadcasts_rreq_and_buffers(router, make_packet: MakePacket) -> None:
    a = router(A)
    pkt = make_packet(A, C)

    actions = a.send_data(pkt, 0)

    assert actions == [
        BroadcastControl(ControlMessage(MessageKind.LOADNG_RREQ, A, C, SequenceNumber(1))),
        StartTimer(TimerKind.DISCOVERY_RETRY, from_seconds(2)),
    ]
    assert a.pending[C].buffered == [pkt]


def test_packet_to_self_is_delivered_locally(router, make_packet: MakePacket) -> None:
    a = router(A)
    pkt = make_packet(A, A)
    assert a.send_data(pkt, 0) == [DeliverData(pkt)]
    assert a.pending == {}


def test_second_packet_joins_pending_discovery(router, make_packet: MakePacket) -> None:
    a = router(A)
    a.send_data(make_packet(A, C), 0)
    assert a.send_data(make_packet(A, C), 5) == []
    assert len(a.pending[C].buffered) == 2
    assert a.seq == SequenceNumber(1)


def test_buffer_overflow_drops_oldest(router, make_packet: MakePacket, timers: TimerConfig) -> None:
    a = router(A)
    first = make_packet(A, C)
    a.send_data(first, 0)
    for _ in range(timers.buffer_cap - 1):
        assert a.send_data(make_packet(A, C), 0) == []

    assert a.send_data(make_packet(A, C), 0) == [DropData(first, DropReason.BUFFER_FULL)]
    assert len(a.pending[C].buffered) == timers.buffer_cap


def test_retries_follow_exponential_backoff(router, make_packet: MakePacket) -> None:
    a = router(A)
    pkt = make_packet(A, C)
    a.send_data(pkt, 0)

    assert a.tick(from_seconds(1)) == []
    rreq_times = []
    for t in (2, 6, 14):
        actions = a.tick(from_seconds(t))
        assert isinstance(actions[0], BroadcastControl)
        rreq_times.append(t)
    assert rreq_times == [2, 6, 14]
    assert a.seq == SequenceNumber(4)

    assert a.tick(from_seconds(29)) == []
    assert a.tick(from_seconds(30)) == [DropData(pkt, DropReason.DISCOVERY_FAILED)]
    assert a.pending == {}


# --- RREQ processing ---


def test_intermediate_rebroadcasts_and_installs_reverse_route(router) -> None:
    b = router(B)
    assert b.process_rreq(rreq(), A, 10) == [BroadcastControl(rreq().forwarded())]
    assert b.next_hop(A, 10) == A
    assert b.route_metric(A, 10) == 1


def test_destination_replies_with_rrep(router) -> None:
    c = router(C)
    actions = c.process_rreq(rreq(hop_count=1), B, 20)

    assert actions == [
        UnicastControl(rrep(), B),
        StartTimer(TimerKind.PENDING_ACK, 20 + ACK_TIMEOUT),
    ]
    assert c.route_metric(A, 20) == 2
    assert len(c.pending_acks) == 1


def test_smart_rreq_unicasts_along_known_route(router) -> None:
    b = router(B)
    b.routing_set.offer(C, C, 1, SequenceNumber(7), 0, from_seconds(100))
    assert b.process_rreq(rreq(), A, 10) == [UnicastControl(rreq().forwarded(), C)]


def test_smart_rreq_broadcasts_when_route_points_back(router) -> None:
    b = router(B)
    b.routing_set.offer(C, A, 2, SequenceNumber(7), 0, from_seconds(100))
    assert b.process_rreq(rreq(), A, 10) == [BroadcastControl(rreq().forwarded())]


def test_duplicate_rreq_is_suppressed(router) -> None:
    b = router(B)
    b.process_rreq(rreq(), A, 10)
    assert b.process_rreq(rreq(), A, 11) == []
    assert b.counters["rreq_duplicate"] == 1


def test_better_copy_is_forwarded_again(router) -> None:
    b = router(B)
    b.process_rreq(rreq(hop_count=3), D, 10)
    assert b.process_rreq(rreq(), A, 12) == [BroadcastControl(rreq().forwarded())]
    assert b.next_hop(A, 12) == A


def test_rreq_from_blacklisted_neighbor_is_ignored(router) -> None:
    b = router(B)
    b.blacklist.add(A, from_seconds(30))
    assert b.process_rreq(rreq(), A, 10) == []
    assert b.next_hop(A, 10) is None
    assert b.counters["rreq_blacklisted"] == 1


# --- RREP and RREP-ACK ---


def test_relay_acks_and_forwards_rrep(router) -> None:
    b = router(B)
    b.process_rreq(rreq(), A, 10)

    actions = b.process_rrep(rrep(), C, 30)

    assert actions == [
        UnicastControl(rrep_ack(C), C),
        UnicastControl(rrep().forwarded(), A),
        StartTimer(TimerKind.PENDING_ACK, 30 + ACK_TIMEOUT),
    ]
    assert b.next_hop(C, 30) == C


def test_originator_flushes_buffer_on_rrep(router, make_packet: MakePacket) -> None:
    a = router(A)
    pkt = make_packet(A, C)
    a.send_data(pkt, 0)

    actions = a.process_rrep(rrep(hop_count=1), B, 40)

    assert actions == [UnicastControl(rrep_ack(B), B), UnicastData(pkt, B)]
    assert a.pending == {}
    assert a.route_metric(C, 40) == 2


def test_orphan_rrep_is_counted(router) -> None:
    d = router(D)
    assert d.process_rrep(rrep(), C, 0) == []
    assert d.counters["rrep_orphaned"] == 1


def test_rrep_ack_clears_pending_and_confirms_link(relay: LoadngRouter) -> None:
    assert len(relay.pending_acks) == 1
    assert relay.process_rrep_ack(rrep_ack(B), A, 31) == []
    assert len(relay.pending_acks) == 0
    assert relay.routing_set.get(A, 31).bidirectional_confirmed  # type: ignore[union-attr]

    relay.process_rrep_ack(rrep_ack(B), A, 32)
    assert len(relay.pending_acks) == 0


def test_missing_ack_blacklists_neighbor(relay: LoadngRouter) -> None:
    deadline = 30 + ACK_TIMEOUT
    assert relay.tick(deadline - 1) == []
    assert not relay.blacklist.is_blacklisted(A, deadline)

    relay.tick(deadline)
    assert relay.blacklist.is_blacklisted(A, deadline + 1)
    assert len(relay.pending_acks) == 0

    # a late ack does not lift the blacklist
    relay.process_rrep_ack(rrep_ack(B), A, deadline + 2)
    assert relay.blacklist.is_blacklisted(A, deadline + 3)


def test_blacklist_expires(relay: LoadngRouter, timers: TimerConfig) -> None:
    deadline = 30 + ACK_TIMEOUT
    relay.tick(deadline)
    later = deadline + from_seconds(timers.blacklist_s)

    # C is still routed, so the RREQ goes out as a Smart RREQ
    assert relay.process_rreq(rreq(seq=2), A, later) == [UnicastControl(rreq(seq=2).forwarded(), C)]
    assert relay.routing_set.get(A, later).seq == SequenceNumber(2)  # type: ignore[union-attr]


def test_rrep_lost_at_mac_is_not_blacklisted(relay: LoadngRouter) -> None:
    assert relay.link_failed(A, rrep().forwarded(), 35) == []
    assert len(relay.pending_acks) == 0
    assert relay.next_hop(A, 35) is None

    relay.tick(30 + ACK_TIMEOUT)
    assert not relay.blacklist.is_blacklisted(A, 30 + ACK_TIMEOUT + 1)
    assert relay.counters["blacklisted"] == 0


def test_rrep_ack_lost_at_mac_keeps_route(router, make_packet: MakePacket) -> None:
    a = router(A)
    a.send_data(make_packet(A, C), 0)
    a.process_rrep(rrep(hop_count=1), B, 40)

    assert a.link_failed(B, rrep_ack(B), 45) == []
    assert a.next_hop(C, 45) == B
    assert a.counters["rrep_ack_lost"] == 1


def test_confirmed_neighbor_survives_a_missed_ack(relay: LoadngRouter) -> None:
    relay.process_rrep_ack(rrep_ack(B), A, 31)
    relay.process_rrep(rrep(seq=2), C, 40)
    assert len(relay.pending_acks) == 1

    relay.tick(40 + ACK_TIMEOUT)

    assert not relay.blacklist.is_blacklisted(A, 40 + ACK_TIMEOUT + 1)
    assert relay.counters["rrep_ack_missed"] == 1
    assert len(relay.pending_acks) == 0


def test_relay_releases_packets_waiting_for_the_rrep_destination(
    router, make_packet: MakePacket
) -> None:
    b = router(B)
    b.process_rreq(rreq(), A, 10)
    pkt = make_packet(A, C)
    b.receive_data(pkt, A, 20)

    actions = b.process_rrep(rrep(), C, 30)

    assert actions[-1] == UnicastData(pkt.forwarded(), C)
    assert b.pending == {}


# --- data plane and route maintenance ---


def test_transit_data_is_forwarded(relay: LoadngRouter, make_packet: MakePacket) -> None:
    pkt = make_packet(A, C)
    assert relay.receive_data(pkt, A, 40) == [UnicastData(pkt.forwarded(), C)]


def test_hop_limit_drops_data(relay: LoadngRouter, timers: TimerConfig) -> None:
    pkt = DataPacket(A, C, 64, 0, 99, DataKind.CONFIG, hops=timers.hop_limit)
    assert relay.receive_data(pkt, A, 40) == [DropData(pkt, DropReason.HOP_LIMIT)]


def test_no_route_buffers_and_rediscovers(router, make_packet: MakePacket) -> None:
    b = router(B)
    b.process_rreq(rreq(), A, 10)
    pkt = make_packet(A, D)

    actions = b.receive_data(pkt, A, 20)

    assert actions == [
        BroadcastControl(ControlMessage(MessageKind.LOADNG_RREQ, B, D, SequenceNumber(1))),
        StartTimer(TimerKind.DISCOVERY_RETRY, 20 + from_seconds(2)),
    ]
    assert b.pending[D].buffered == [pkt.forwarded()]
    assert b.counters["route_repair"] == 1


def test_failed_repair_reports_to_source(router, make_packet: MakePacket) -> None:
    b = router(B)
    b.process_rreq(rreq(), A, 10)
    pkt = make_packet(A, D)
    b.receive_data(pkt, A, 20)
    for t in (2, 6, 14):
        b.tick(20 + from_seconds(t))

    actions = b.tick(20 + from_seconds(30))

    rerr = ControlMessage(
        MessageKind.LOADNG_RERR, B, A, SequenceNumber(4), unreachable=(D,)
    )
    assert actions == [
        DropData(pkt.forwarded(), DropReason.DISCOVERY_FAILED),
        UnicastControl(rerr, A),
    ]
    assert b.pending == {}


def test_link_failure_sends_rerr_and_repairs_locally(
    relay: LoadngRouter, make_packet: MakePacket
) -> None:
    pkt = make_packet(A, C)

    actions = relay.link_failed(C, pkt, 50)

    rerr = ControlMessage(
        MessageKind.LOADNG_RERR, B, A, SequenceNumber(0), unreachable=(C,)
    )
    assert actions == [
        UnicastControl(rerr, A),
        BroadcastControl(ControlMessage(MessageKind.LOADNG_RREQ, B, C, SequenceNumber(1))),
        StartTimer(TimerKind.DISCOVERY_RETRY, 50 + from_seconds(2)),
    ]
    assert relay.next_hop(C, 50) is None
    assert relay.pending[C].buffered == [pkt]


def test_link_failure_on_unused_neighbor_reroutes_over_kept_route(
    relay: LoadngRouter, make_packet: MakePacket
) -> None:
    pkt = make_packet(A, C)
    assert relay.link_failed(D, pkt, 50) == [UnicastData(pkt, C)]
    assert relay.next_hop(C, 50) == C
    assert relay.next_hop(A, 50) == A


def test_rerr_without_route_to_source_is_counted(router, make_packet: MakePacket) -> None:
    b = router(B)
    b.routing_set.offer(C, C, 1, SequenceNumber(1), 0, from_seconds(100))
    b.link_failed(C, make_packet(A, C), 10)
    assert b.counters["rerr_unroutable"] == 1


def test_rerr_invalidates_route_at_source(router, make_packet: MakePacket) -> None:
    a = router(A)
    a.send_data(make_packet(A, C), 0)
    a.process_rrep(rrep(hop_count=1), B, 40)

    rerr = ControlMessage(MessageKind.LOADNG_RERR, B, A, SequenceNumber(0), unreachable=(C,))
    assert a.process_rerr(rerr, B, 50) == []
    assert a.next_hop(C, 50) is None

    actions = a.send_data(make_packet(A, C), 60)
    assert isinstance(actions[0], BroadcastControl)
    assert actions[0].msg.kind is MessageKind.LOADNG_RREQ


def test_relay_forwards_rerr_toward_source(relay: LoadngRouter) -> None:
    rerr = ControlMessage(MessageKind.LOADNG_RERR, C, A, SequenceNumber(0), unreachable=(D,))
    assert relay.process_rerr(rerr, C, 40) == [UnicastControl(rerr.forwarded(), A)]


def test_route_expires_after_hold_time(relay: LoadngRouter, timers: TimerConfig) -> None:
    expiry = 30 + from_seconds(timers.route_hold_s)
    assert relay.next_hop(C, expiry) == C
    relay.tick(expiry + 1)
    assert relay.next_hop(C, expiry + 1) is None


def test_dump_routes_lists_every_valid_entry(relay: LoadngRouter) -> None:
    lines = relay.dump_routes(40)
    assert len(lines) == 2
    assert lines[0].split()[:4] == ["1", "1", "1", "1"]


def test_identical_inputs_give_identical_actions(timers: TimerConfig) -> None:
    first, second = LoadngRouter(C, timers), LoadngRouter(C, timers)
    assert first.process_rreq(rreq(hop_count=1), B, 5) == second.process_rreq(rreq(hop_count=1), B, 5)
