import pytest

from llnroute.wire import (
    Address,
    ControlMessage,
    DataKind,
    DataPacket,
    MessageKind,
    SequenceNumber,
    Tlv,
    data_frame_octets,
    seqnum_is_newer,
    size_in_octets,
)

A, C = Address(1), Address(3)


def msg(kind: MessageKind, width: int = 2, **kwargs: object) -> ControlMessage:
    return ControlMessage(
        kind=kind,
        originator=Address(1, width),
        destination=Address(3, width),
        seq=SequenceNumber(1),
        **kwargs,  # type: ignore[arg-type]
    )


@pytest.mark.parametrize(
    "a, b, expected",
    [
        (5, 5, False),
        (6, 5, True),
        (5, 6, False),
        (2, 65534, True),
        (65534, 2, False),
        (0, 65535, True),
    ],
)
def test_seqnum_is_newer(a: int, b: int, expected: bool) -> None:
    assert seqnum_is_newer(SequenceNumber(a), SequenceNumber(b)) is expected


def test_seqnum_half_range_is_never_newer() -> None:
    a, b = SequenceNumber(0), SequenceNumber(32768)
    assert not seqnum_is_newer(a, b)
    assert not seqnum_is_newer(b, a)


def test_seqnum_antisymmetry_over_window() -> None:
    base = SequenceNumber(65530)
    for step in range(1, 40):
        other = SequenceNumber((base.value + step) % 65536)
        assert seqnum_is_newer(other, base) != seqnum_is_newer(base, other)


def test_sequence_number_wraps() -> None:
    assert SequenceNumber(65535).incremented() == SequenceNumber(0)
    with pytest.raises(ValueError):
        SequenceNumber(65536)


def test_address_must_fit_width() -> None:
    assert Address(255, 1).value == 255
    assert Address(0).is_unspecified
    with pytest.raises(ValueError):
        Address(256, 1)
    with pytest.raises(ValueError):
        Address(1, 17)


@pytest.mark.parametrize(
    "kind, expected",
    [
        (MessageKind.LOADNG_RREQ, 14),
        (MessageKind.LOADNG_RREP, 14),
        (MessageKind.LOADNG_RREP_ACK, 4),
        (MessageKind.AODV_RREQ, 24),
        (MessageKind.AODV_RREP, 20),
    ],
)
def test_size_table_at_width_2(kind: MessageKind, expected: int) -> None:
    assert size_in_octets(msg(kind)) == expected


def test_rerr_sizes_scale_with_unreachable_count() -> None:
    one = (C,)
    three = (C, Address(4), Address(5))
    assert size_in_octets(msg(MessageKind.LOADNG_RERR, unreachable=one)) == 12
    assert size_in_octets(msg(MessageKind.LOADNG_RERR, unreachable=three)) == 16
    assert size_in_octets(msg(MessageKind.AODV_RERR, unreachable=one)) == 8
    assert size_in_octets(msg(MessageKind.AODV_RERR, unreachable=three)) == 16


def test_tlv_adds_two_plus_length() -> None:
    plain = msg(MessageKind.LOADNG_RREQ)
    tagged = msg(MessageKind.LOADNG_RREQ, tlvs=(Tlv(1, b"abc"),))
    assert size_in_octets(tagged) == 19
    assert size_in_octets(tagged) > size_in_octets(plain)


@pytest.mark.parametrize("width", [1, 2, 4, 8, 16])
def test_loadng_discovery_messages_smaller_than_aodv(width: int) -> None:
    """Only discovery messages are compared: a one-address LOADng RERR is larger than AODV's."""
    assert size_in_octets(msg(MessageKind.LOADNG_RREQ, width)) < size_in_octets(
        msg(MessageKind.AODV_RREQ, width)
    )
    assert size_in_octets(msg(MessageKind.LOADNG_RREP, width)) < size_in_octets(
        msg(MessageKind.AODV_RREP, width)
    )


def test_hop_count_bounded_by_hop_limit() -> None:
    with pytest.raises(ValueError):
        msg(MessageKind.LOADNG_RREQ, hop_count=5, hop_limit=4)


def test_forwarded_increments_hop_count_and_metric() -> None:
    fwd = msg(MessageKind.LOADNG_RREQ).forwarded()
    assert (fwd.hop_count, fwd.metric) == (1, 1)
    assert fwd.seq == SequenceNumber(1)


def test_data_packet_rejects_empty_payload() -> None:
    with pytest.raises(ValueError):
        DataPacket(A, C, 0, 0, 1, DataKind.CONFIG)


def test_data_frame_octets_adds_header() -> None:
    assert data_frame_octets(DataPacket(A, C, 512, 0, 1, DataKind.METER_REPORT)) == 524
