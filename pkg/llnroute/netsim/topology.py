"""
Random deployments inside the field, conditioned on connectivity.

The sink (concentrator) always sits at the field center with address 1;
clients are numbered 2..n. Two placement modes exist:

- incremental: every client is resampled uniformly in the field until it
  lies within radio range of a node already placed, so the graph is
  connected by construction even when whole-graph sampling almost never is
  (25 nodes on 1 km^2 with a 150 m range);
- uniform: all clients are drawn at once and the whole placement is
  rejected until the graph is connected.

For distance sweeps a focus client is placed at exactly `dist_to_sink`
from the sink (random bearing) and the remaining clients act as relays.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import StrEnum

import networkx as nx
import numpy as np

from llnroute.errors import ConnectivityUnsatisfiable
from llnroute.netsim.radio import distance
from llnroute.wire import Address

logger = logging.getLogger(__name__)

SINK_ADDRESS_VALUE = 1
MAX_ATTEMPTS = 1000


class Placement(StrEnum):
    INCREMENTAL = "incremental"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class NodeState:
    """Where a node is; the engine attaches the router separately."""

    id: Address
    position: tuple[float, float]
    is_sink: bool = False
    is_focus: bool = False


def connectivity_graph(nodes: list[NodeState], range_m: float) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(n.id for n in nodes)
    for i, a in enumerate(nodes):
        for b in nodes[i + 1 :]:
            if distance(a.position, b.position) <= range_m:
                graph.add_edge(a.id, b.id)
    return graph


def is_connected(nodes: list[NodeState], range_m: float) -> bool:
    return len(nodes) < 2 or bool(nx.is_connected(connectivity_graph(nodes, range_m)))


def generate_topology(
    n: int,
    field_m: tuple[float, float],
    range_m: float,
    rng_seed: int | np.random.SeedSequence,
    dist_to_sink: float | None = None,
    placement: Placement = Placement.INCREMENTAL,
    address_width: int = 2,
) -> list[NodeState]:
    """Place `n` nodes (sink included) so the connectivity graph is connected."""
    if n < 2:
        raise ValueError(f"a topology needs at least 2 nodes, got {n}")
    if dist_to_sink is not None and dist_to_sink > min(field_m) / 2.0:
        raise ValueError(
            f"focus node at {dist_to_sink:g} m leaves the {field_m[0]:g}x{field_m[1]:g} m field"
        )
    rng = np.random.default_rng(rng_seed)
    width, height = field_m
    center = (width / 2.0, height / 2.0)
    sink = NodeState(Address(SINK_ADDRESS_VALUE, address_width), center, is_sink=True)

    def address(i: int) -> Address:
        return Address(SINK_ADDRESS_VALUE + i, address_width)

    for attempt in range(MAX_ATTEMPTS):
        nodes = [sink]
        if dist_to_sink is not None:
            bearing = rng.uniform(0.0, 2.0 * math.pi)
            focus_pos = (
                center[0] + dist_to_sink * math.cos(bearing),
                center[1] + dist_to_sink * math.sin(bearing),
            )
            focus = NodeState(address(1), focus_pos, is_focus=True)
            relays = _place(rng, placement, n - 2, [sink], field_m, range_m, first_index=2)
            nodes = [sink, focus, *(NodeState(address(i), p) for i, p in relays)]
        else:
            placed = _place(rng, placement, n - 1, [sink], field_m, range_m, first_index=1)
            nodes = [sink, *(NodeState(address(i), p) for i, p in placed)]
        if is_connected(nodes, range_m):
            if attempt:
                logger.info("topology connected after %d resamples", attempt)
            return nodes
    raise ConnectivityUnsatisfiable(
        f"no connected placement of {n} nodes in {width:g}x{height:g} m "
        f"(range {range_m:g} m) after {MAX_ATTEMPTS} attempts"
    )


def _place(
    rng: np.random.Generator,
    placement: Placement,
    count: int,
    anchors: list[NodeState],
    field_m: tuple[float, float],
    range_m: float,
    first_index: int,
) -> list[tuple[int, tuple[float, float]]]:
    width, height = field_m
    positions = [a.position for a in anchors]
    placed: list[tuple[int, tuple[float, float]]] = []
    for k in range(count):
        for _ in range(MAX_ATTEMPTS):
            pos = (float(rng.uniform(0.0, width)), float(rng.uniform(0.0, height)))
            if placement is Placement.UNIFORM or any(
                distance(pos, p) <= range_m for p in positions
            ):
                break
        else:
            raise ConnectivityUnsatisfiable(
                f"could not place node {first_index + k} within {range_m:g} m of the deployment "
                f"after {MAX_ATTEMPTS} attempts"
            )
        positions.append(pos)
        placed.append((first_index + k, pos))
    return placed
