"""
Bidirectional AMI traffic.

MP2P: every client (meter) sends a METER_REPORT to the sink once per
period, starting at a uniform random offset inside the first period.
P2MP: the sink answers each delivered report with an APP_ACK (generated
by the engine at delivery time) and pushes CONFIG packets to uniformly
chosen clients as a Poisson process.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from llnroute.errors import TrafficError
from llnroute.netsim.topology import NodeState
from llnroute.simtime import SimTime, from_seconds, to_seconds
from llnroute.wire import Address, DataKind


class TrafficProfile(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    meter_report_period_s: float = Field(60.0, gt=0, description="CBR reporting interval")
    meter_payload: int = Field(512, gt=0, description="Report size in octets")
    app_ack_enabled: bool = Field(True, description="Sink acknowledges every delivered report")
    app_ack_payload: int = Field(16, gt=0, description="Application acknowledgment size")
    config_enabled: bool = Field(True, description="Sink pushes configuration data")
    config_push_mean_interval_s: float = Field(600.0, gt=0, description="Poisson mean inter-arrival")
    config_payload: int = Field(64, gt=0, description="Configuration push size in octets")


@dataclass(frozen=True, slots=True)
class TrafficArrival:
    at: SimTime
    src: Address
    dst: Address
    kind: DataKind
    payload_size: int


def _split(nodes: list[NodeState]) -> tuple[NodeState, list[NodeState]]:
    sinks = [n for n in nodes if n.is_sink]
    if len(sinks) != 1:
        raise TrafficError(f"expected exactly one sink, found {len(sinks)}")
    clients = sorted((n for n in nodes if not n.is_sink), key=lambda n: n.id)
    if not clients:
        raise TrafficError("traffic needs at least one client besides the sink")
    return sinks[0], clients


def schedule_meter_reports(
    profile: TrafficProfile,
    nodes: list[NodeState],
    rng: np.random.Generator,
    duration: SimTime,
) -> list[TrafficArrival]:
    sink, clients = _split(nodes)
    period = profile.meter_report_period_s
    horizon = to_seconds(duration)
    arrivals: list[TrafficArrival] = []
    for client in clients:
        t = float(rng.uniform(0.0, period))
        while t < horizon:
            arrivals.append(
                TrafficArrival(
                    from_seconds(t), client.id, sink.id, DataKind.METER_REPORT, profile.meter_payload
                )
            )
            t += period
    return arrivals


def schedule_config_pushes(
    profile: TrafficProfile,
    nodes: list[NodeState],
    rng: np.random.Generator,
    duration: SimTime,
) -> list[TrafficArrival]:
    sink, clients = _split(nodes)
    mean = profile.config_push_mean_interval_s
    horizon = to_seconds(duration)
    arrivals: list[TrafficArrival] = []
    t = float(rng.exponential(mean))
    while t < horizon:
        target = clients[int(rng.integers(len(clients)))]
        arrivals.append(
            TrafficArrival(from_seconds(t), sink.id, target.id, DataKind.CONFIG, profile.config_payload)
        )
        t += float(rng.exponential(mean))
    return arrivals
