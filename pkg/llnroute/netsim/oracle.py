"""Reference answers used to check the routers: shortest paths and loop detection."""

from __future__ import annotations

import networkx as nx

from llnroute.netsim.engine import Engine, Protocol
from llnroute.netsim.radio import MacModel, RadioModel
from llnroute.netsim.topology import NodeState, connectivity_graph
from llnroute.routing.common import TimerConfig
from llnroute.simtime import from_seconds
from llnroute.wire import Address, DataKind, DataPacket


def bfs_hops(nodes: list[NodeState], range_m: float, source: Address) -> dict[Address, int]:
    """Hop distance from `source` to every reachable node of the connectivity graph."""
    graph = connectivity_graph(nodes, range_m)
    return dict(nx.single_source_shortest_path_length(graph, source))


def follow_route(
    snapshot: dict[Address, dict[Address, Address]],
    source: Address,
    dest: Address,
    hop_limit: int = 32,
) -> list[Address] | None:
    """Path the data plane would take, or None if it breaks or loops."""
    path = [source]
    node = source
    while node != dest:
        nh = snapshot.get(node, {}).get(dest)
        if nh is None or nh in path or len(path) > hop_limit:
            return None
        path.append(nh)
        node = nh
    return path


def find_routing_loops(
    snapshot: dict[Address, dict[Address, Address]],
) -> list[tuple[Address, list[Address]]]:
    """Every (destination, cycle) formed by next-hop pointers in the snapshot."""
    loops: list[tuple[Address, list[Address]]] = []
    destinations = sorted({d for table in snapshot.values() for d in table})
    for dest in destinations:
        graph = nx.DiGraph()
        for node, table in snapshot.items():
            if dest in table and node != dest:
                graph.add_edge(node, table[dest])
        for cycle in nx.simple_cycles(graph):
            loops.append((dest, sorted(cycle)))
    return loops


# --- scripted oracle runs ---

LOSSLESS_RADIO = RadioModel(distance_loss=False)
JITTERLESS_MAC = MacModel(jitter_ms=0.0)
DISCOVERY_SPACING_S = 3.0


def discover_routes_to_sink(
    nodes: list[NodeState],
    protocol: Protocol,
    seed: int = 1,
    timers: TimerConfig | None = None,
    radio: RadioModel = LOSSLESS_RADIO,
    mac: MacModel = JITTERLESS_MAC,
) -> Engine:
    """Every client sends one packet to the sink, one discovery at a time.

    Without jitter and loss, flood copies arrive in breadth-first order, so
    the routes left behind must be shortest paths.
    """
    engine = Engine(nodes, protocol, timers or TimerConfig(), radio, mac, seed)
    sink = next(n.id for n in nodes if n.is_sink)
    clients = sorted(n.id for n in nodes if not n.is_sink)
    for i, client in enumerate(clients):
        engine.inject_data(client, sink, from_seconds(i * DISCOVERY_SPACING_S))
    engine.run(from_seconds(len(clients) * DISCOVERY_SPACING_S))
    return engine


def discovered_hops_to_sink(
    nodes: list[NodeState], protocol: Protocol, seed: int = 1
) -> dict[Address, int | None]:
    """Hop count each client learns to the sink from its own discovery on a cold network.

    One engine per client, so no cached or fresher route from an earlier
    discovery can stand in for the flood.
    """
    sink = next(n.id for n in nodes if n.is_sink)
    hops: dict[Address, int | None] = {}
    for client in sorted(n.id for n in nodes if not n.is_sink):
        engine = Engine(nodes, protocol, TimerConfig(), LOSSLESS_RADIO, JITTERLESS_MAC, seed)
        engine.inject_data(client, sink, 0)
        engine.run(from_seconds(DISCOVERY_SPACING_S))
        hops[client] = engine.route_metric(client, sink)
    return hops


def empirical_unicast_success(
    distance_m: float, radio: RadioModel, trials: int, seed: int = 1
) -> float:
    """Fraction of single MAC attempts received across `distance_m`."""
    a = NodeState(Address(1), (0.0, 0.0), is_sink=True)
    b = NodeState(Address(2), (distance_m, 0.0))
    engine = Engine([a, b], Protocol.LOADNG, TimerConfig(), radio, MacModel(retries=0), seed)
    packet = DataPacket(a.id, b.id, 16, 0, 0, DataKind.CONFIG)
    for _ in range(trials):
        engine.transmit(a.id, packet, b.id)
    return engine.mac_successes / engine.mac_attempts
