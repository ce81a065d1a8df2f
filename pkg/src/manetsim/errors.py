"""Exception types raised by the simulator."""


class SimError(Exception):
    """Base class for simulator errors."""


class ScheduleInPastError(SimError, ValueError):
    pass


class EnergyNonPositiveError(SimError, ValueError):
    pass


class ZeroReceptionProbabilityError(SimError, ValueError):
    pass


class OffsetTooSmallError(SimError, ValueError):
    pass


class NoCandidateError(SimError, ValueError):
    pass


class OracleMismatchError(SimError, AssertionError):
    """A discovered route is shorter than the graph allows, or exists where
    the oracle finds no path. Always a simulator bug."""


class ScenarioParseError(SimError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ScenarioRangeError(SimError, ValueError):
    pass
