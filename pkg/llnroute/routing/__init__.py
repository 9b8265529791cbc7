"""LOADng and AODV routers as pure state machines."""

from llnroute.routing.aodv import AodvRouter
from llnroute.routing.common import DropReason, Router, RouterActions, TimerConfig, TimerKind
from llnroute.routing.loadng import LoadngRouter

__all__ = [
    "AodvRouter",
    "DropReason",
    "LoadngRouter",
    "Router",
    "RouterActions",
    "TimerConfig",
    "TimerKind",
]
