"""Exception types shared by every part of the engine.

Each exception carries a stable, machine-readable ``code`` used in protocol
error replies, failure events and CLI exit handling.
"""

from __future__ import annotations


class PowerError(Exception):
    code = "power-error"

    def __init__(self, message: str = "", **context):
        super().__init__(message or self.code)
        self.context = context


class DuplicateSource(PowerError):
    code = "duplicate-name"


class UnknownSource(PowerError):
    code = "unknown-source"


class DepletedBattery(PowerError):
    code = "depleted-battery"


class EmptyWindow(PowerError):
    code = "empty-window"


class UnknownDaemon(PowerError):
    code = "unknown-daemon"


class InvalidTransition(PowerError):
    code = "invalid-transition"


class EqualTimes(PowerError):
    code = "equal-times"


class MalformedTime(PowerError):
    code = "malformed-time"


class DisabledSchedule(PowerError):
    code = "disabled-schedule"


class PastInstant(PowerError):
    code = "past-instant"


class AlreadyArmed(PowerError):
    code = "already-armed"


class ClockRegression(PowerError):
    code = "clock-regression"


class CorruptImage(PowerError):
    code = "corrupt-image"


class DeviceAsleep(PowerError):
    code = "device-asleep"


class ParseError(PowerError):
    """Protocol line rejected; ``code`` is set per instance.

    ``token`` is the offending token and ``position`` its 1-based index in
    the whitespace-split line (0 when the whole line is at fault).
    """

    def __init__(self, code: str, message: str, token: str = "", position: int = 0):
        super().__init__(message)
        self.code = code
        self.token = token
        self.position = position


class ScenarioError(PowerError):
    code = "scenario-error"

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


class InvariantViolation(ScenarioError):
    code = "invariant-violation"
