"""Discrete-event mesh simulation: radio, topology and the event engine."""

from llnroute.netsim.radio import MacModel, RadioModel, distance, p_recv
from llnroute.netsim.topology import NodeState, Placement, generate_topology, is_connected

__all__ = [
    "MacModel",
    "NodeState",
    "Placement",
    "RadioModel",
    "distance",
    "generate_topology",
    "is_connected",
    "p_recv",
]
