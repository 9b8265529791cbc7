"""Shared fixtures: addresses, routers, small scripted topologies."""

from collections.abc import Callable

import pytest

from llnroute.netsim.topology import NodeState
from llnroute.routing.common import TimerConfig
from llnroute.simtime import SimTime
from llnroute.wire import Address, DataKind, DataPacket

A, B, C, D = Address(1), Address(2), Address(3), Address(4)


@pytest.fixture
def timers() -> TimerConfig:
    return TimerConfig()


@pytest.fixture
def make_packet() -> Callable[..., DataPacket]:
    counter = iter(range(1, 10_000))

    def _make(
        src: Address = A,
        dst: Address = C,
        created_at: SimTime = 0,
        kind: DataKind = DataKind.METER_REPORT,
        payload_size: int = 64,
    ) -> DataPacket:
        return DataPacket(src, dst, payload_size, created_at, next(counter), kind)

    return _make


@pytest.fixture
def line_nodes() -> Callable[[int, float], list[NodeState]]:
    """Nodes 1..n on the x axis, `spacing` meters apart; node 1 is the sink."""

    def _make(n: int, spacing: float = 100.0) -> list[NodeState]:
        return [
            NodeState(Address(i + 1), (i * spacing, 0.0), is_sink=(i == 0)) for i in range(n)
        ]

    return _make
