"""Exception hierarchy shared by every llnroute module."""

from __future__ import annotations


class LlnRouteError(Exception):
    """Base class for all llnroute errors."""


class ConfigError(LlnRouteError):
    """A scenario file is malformed or holds an invalid value."""

    def __init__(self, key: str, line: int | None, message: str) -> None:
        self.key = key
        self.line = line
        self.message = message
        where = f"line {line}" if line is not None else "defaults"
        super().__init__(f"{key} ({where}): {message}")


class SimulationError(LlnRouteError):
    """A simulation run cannot continue."""


class ConnectivityUnsatisfiable(SimulationError):
    """Topology sampling gave up before finding a connected placement."""


class TrafficError(SimulationError):
    """A traffic pattern cannot be scheduled on the given nodes."""


class AccountingError(SimulationError):
    """Metrics bookkeeping saw an impossible event (e.g. unknown packet id)."""


class CausalityError(SimulationError):
    """An event was scheduled before the current simulated time."""


class RunAborted(LlnRouteError):
    """One cell of a sweep failed; identifies the cell."""

    def __init__(
        self, protocol: str, axis: str, axis_value: float, seed: int, cause: BaseException
    ) -> None:
        self.protocol = protocol
        self.axis = axis
        self.axis_value = axis_value
        self.seed = seed
        self.cause = cause
        super().__init__(
            f"run aborted: protocol={protocol} {axis}={axis_value:g} seed={seed}: "
            f"{type(cause).__name__}: {cause}"
        )

    def __reduce__(self) -> tuple[type[RunAborted], tuple[str, str, float, int, BaseException]]:
        return (type(self), (self.protocol, self.axis, self.axis_value, self.seed, self.cause))


class ResultsWriteError(LlnRouteError):
    """Result files could not be written."""

    def __init__(self, path: str, cause: OSError) -> None:
        self.path = path
        super().__init__(f"cannot write {path}: {cause.strerror or cause}")
