"""
Addresses, sequence numbers and message types for LOADng and AODV.

Messages are never serialized to bits. Each one has a canonical octet size
(`size_in_octets`) so control overhead can be measured in bytes:

    kind              octets (address width W, no TLVs)
    LOADNG_RREQ       10 + 2W
    LOADNG_RREP       10 + 2W
    LOADNG_RREP_ACK   2 + W
    LOADNG_RERR       8 + 2W + W * (k - 1)     k = unreachable addresses
    AODV_RREQ         16 + 4W
    AODV_RREP         12 + 4W
    AODV_RERR         4 + (W + 2) * k

Every TLV adds 2 + length.

Field conventions follow RFC 3561 for both protocols: in RREQ and RREP,
`originator` is the router that asked for the route and `destination` is
the router the route leads to. A RREP therefore travels *toward* its
originator and is generated by (LOADng) or on behalf of (AODV) its
destination.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import StrEnum

from llnroute.simtime import SimTime

SEQNUM_MODULUS = 1 << 16
SEQNUM_HALF = 1 << 15
MAX_ADDRESS_WIDTH = 16
DEFAULT_ADDRESS_WIDTH = 2


@dataclass(frozen=True, order=True, slots=True)
class Address:
    """Router address; `value` 0 is reserved as unspecified."""

    value: int
    width: int = DEFAULT_ADDRESS_WIDTH

    def __post_init__(self) -> None:
        if not 1 <= self.width <= MAX_ADDRESS_WIDTH:
            raise ValueError(f"address width must be 1..{MAX_ADDRESS_WIDTH}, got {self.width}")
        if not 0 <= self.value < (1 << (8 * self.width)):
            raise ValueError(f"address {self.value} does not fit in {self.width} octets")

    @property
    def is_unspecified(self) -> bool:
        return self.value == 0

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True, order=True, slots=True)
class SequenceNumber:
    """Circular 16-bit freshness counter."""

    value: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.value < SEQNUM_MODULUS:
            raise ValueError(f"sequence number out of range: {self.value}")

    def incremented(self) -> SequenceNumber:
        return SequenceNumber((self.value + 1) % SEQNUM_MODULUS)

    def __str__(self) -> str:
        return str(self.value)


def seqnum_is_newer(a: SequenceNumber, b: SequenceNumber) -> bool:
    """True iff `a` is strictly fresher than `b` in circular order.

    The half-range distance compares as not newer in both directions.
    """
    diff = (a.value - b.value) % SEQNUM_MODULUS
    return 0 < diff < SEQNUM_HALF


class MessageKind(StrEnum):
    LOADNG_RREQ = "LOADNG_RREQ"
    LOADNG_RREP = "LOADNG_RREP"
    LOADNG_RREP_ACK = "LOADNG_RREP_ACK"
    LOADNG_RERR = "LOADNG_RERR"
    AODV_RREQ = "AODV_RREQ"
    AODV_RREP = "AODV_RREP"
    AODV_RERR = "AODV_RERR"

    @property
    def is_rreq(self) -> bool:
        return self in (MessageKind.LOADNG_RREQ, MessageKind.AODV_RREQ)

    @property
    def is_rrep(self) -> bool:
        return self in (MessageKind.LOADNG_RREP, MessageKind.AODV_RREP)

    @property
    def is_rerr(self) -> bool:
        return self in (MessageKind.LOADNG_RERR, MessageKind.AODV_RERR)


@dataclass(frozen=True, slots=True)
class Tlv:
    """Type-Length-Value extension element."""

    type: int
    value: bytes = b""

    def __post_init__(self) -> None:
        if not 0 <= self.type <= 0xFF:
            raise ValueError(f"TLV type must fit in one octet, got {self.type}")
        if len(self.value) > 0xFF:
            raise ValueError(f"TLV value too long: {len(self.value)} octets")

    @property
    def length(self) -> int:
        return len(self.value)


@dataclass(frozen=True, slots=True)
class ControlMessage:
    kind: MessageKind
    originator: Address
    destination: Address
    seq: SequenceNumber
    hop_count: int = 0
    hop_limit: int = 32
    metric: int = 0
    tlvs: tuple[Tlv, ...] = ()
    aodv_dest_seq: SequenceNumber | None = None
    unreachable: tuple[Address, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.hop_limit <= 0xFF:
            raise ValueError(f"hop_limit must fit in one octet, got {self.hop_limit}")
        if not 0 <= self.hop_count <= self.hop_limit:
            raise ValueError(f"hop_count {self.hop_count} exceeds hop_limit {self.hop_limit}")
        if not 0 <= self.metric <= 0xFFFF:
            raise ValueError(f"metric must fit in 16 bits, got {self.metric}")

    @property
    def address_width(self) -> int:
        return self.originator.width

    def forwarded(self) -> ControlMessage:
        """Copy for retransmission by the next hop (hop count metric + 1)."""
        return replace(self, hop_count=self.hop_count + 1, metric=self.metric + 1)

    def describe(self) -> str:
        text = f"{self.kind.value} {self.originator}->{self.destination} seq={self.seq} hc={self.hop_count}"
        if self.unreachable:
            text += " unreachable=" + ",".join(str(a) for a in self.unreachable)
        return text


def size_in_octets(msg: ControlMessage) -> int:
    """Canonical on-air size of a control message, TLVs included."""
    w = msg.address_width
    k = len(msg.unreachable)
    match msg.kind:
        case MessageKind.LOADNG_RREQ | MessageKind.LOADNG_RREP:
            base = 10 + 2 * w
        case MessageKind.LOADNG_RREP_ACK:
            base = 2 + w
        case MessageKind.LOADNG_RERR:
            base = 8 + 2 * w + w * max(0, k - 1)
        case MessageKind.AODV_RREQ:
            base = 16 + 4 * w
        case MessageKind.AODV_RREP:
            base = 12 + 4 * w
        case MessageKind.AODV_RERR:
            base = 4 + (w + 2) * k
    return base + sum(2 + tlv.length for tlv in msg.tlvs)


class DataKind(StrEnum):
    METER_REPORT = "METER_REPORT"
    APP_ACK = "APP_ACK"
    CONFIG = "CONFIG"


@dataclass(frozen=True, slots=True)
class DataPacket:
    """Application datagram. `created_at` is simulated microseconds."""

    src: Address
    dst: Address
    payload_size: int
    created_at: SimTime
    id: int
    kind: DataKind
    hops: int = 0
    reply_to: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.payload_size <= 0:
            raise ValueError(f"payload_size must be positive, got {self.payload_size}")

    def forwarded(self) -> DataPacket:
        return replace(self, hops=self.hops + 1)

    def describe(self) -> str:
        return f"{self.kind.value}#{self.id} {self.src}->{self.dst} {self.payload_size}B"


def data_frame_octets(pkt: DataPacket) -> int:
    """On-air size of a data frame: payload plus a fixed network header."""
    return pkt.payload_size + 8 + 2 * pkt.src.width
