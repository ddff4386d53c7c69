"""Line protocol spoken by the user-space client.

One UTF-8 command per LF-terminated line, one reply line per command::

    SET-SCHEDULE sleep=HH:MM wake=HH:MM level=<level>
    SET-MINIMAL names=<name>[,<name>...]      (names may be shell-quoted)
    STATUS
    DISABLE

Verbs are case-insensitive and keyword arguments may come in any order, each
exactly once. ``<level>`` is one of ``suspend-to-ram``, ``suspend-to-disk``,
``complete-off``. Replies start with ``OK `` followed by ``key=value`` pairs,
or ``ERR <code> <text>``.

Parse error codes: ``empty-line``, ``bad-syntax``, ``unknown-verb``,
``missing-argument``, ``unexpected-argument``, ``malformed-time``,
``unknown-level``, ``bad-name``. Apply error codes: ``device-asleep``,
``equal-times``, ``unknown-daemon``.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field
from typing import Union

from .errors import DeviceAsleep, MalformedTime, ParseError, PowerError
from .levels import SleepLevel
from .scheduler import SleepSchedule, format_hhmm, parse_hhmm


@dataclass(frozen=True)
class SetSchedule:
    sleep_time: int
    wake_time: int
    level: SleepLevel


@dataclass(frozen=True)
class SetMinimal:
    names: frozenset = field(default_factory=frozenset)


@dataclass(frozen=True)
class Status:
    pass


@dataclass(frozen=True)
class Disable:
    pass


Command = Union[SetSchedule, SetMinimal, Status, Disable]

_ARGS = {
    "SET-SCHEDULE": ("sleep", "wake", "level"),
    "SET-MINIMAL": ("names",),
    "STATUS": (),
    "DISABLE": (),
}


def parse_command(line: str) -> Command:
    if not line.strip():
        raise ParseError("empty-line", "empty command line")
    try:
        tokens = shlex.split(line)
    except ValueError as exc:
        raise ParseError("bad-syntax", str(exc)) from None

    verb = tokens[0].upper()
    if verb not in _ARGS:
        raise ParseError("unknown-verb", f"unknown verb {tokens[0]!r}", tokens[0], 1)
    wanted = _ARGS[verb]
    args: dict[str, tuple[str, str, int]] = {}
    for pos, tok in enumerate(tokens[1:], start=2):
        key, eq, value = tok.partition("=")
        if not eq or key not in wanted or key in args:
            raise ParseError("unexpected-argument", f"unexpected argument {tok!r}", tok, pos)
        args[key] = (value, tok, pos)
    for key in wanted:
        if key not in args:
            raise ParseError("missing-argument", f"{verb} needs {key}=", key, 0)

    if verb == "SET-SCHEDULE":
        times = []
        for key in ("sleep", "wake"):
            value, tok, pos = args[key]
            try:
                times.append(parse_hhmm(value))
            except MalformedTime:
                raise ParseError("malformed-time", f"malformed time {value!r}", value, pos) from None
        value, tok, pos = args["level"]
        try:
            level = SleepLevel.parse(value)
        except ValueError:
            raise ParseError("unknown-level", f"unknown level {value!r}", value, pos) from None
        return SetSchedule(times[0], times[1], level)
    if verb == "SET-MINIMAL":
        value, tok, pos = args["names"]
        names = value.split(",") if value else []
        if any(not n.strip() or n != n.strip() or "\n" in n for n in names):
            raise ParseError("bad-name", f"bad daemon name list {value!r}", value, pos)
        return SetMinimal(frozenset(names))
    return Status() if verb == "STATUS" else Disable()


def format_command(command: Command) -> str:
    """Canonical text of ``command``; ``parse_command`` inverts it."""
    if isinstance(command, SetSchedule):
        return (f"SET-SCHEDULE sleep={format_hhmm(command.sleep_time)} "
                f"wake={format_hhmm(command.wake_time)} level={command.level.value}")
    if isinstance(command, SetMinimal):
        value = ",".join(sorted(command.names))
        quoted = shlex.quote(value) if value else ""
        return f"SET-MINIMAL names={quoted}"
    if isinstance(command, Status):
        return "STATUS"
    if isinstance(command, Disable):
        return "DISABLE"
    raise TypeError(f"not a command: {command!r}")


@dataclass(frozen=True)
class Reply:
    ok: bool
    body: dict = field(default_factory=dict)
    code: str = ""
    message: str = ""

    def line(self) -> str:
        if not self.ok:
            return f"ERR {self.code} {self.message}"
        parts = []
        for k, v in self.body.items():
            if isinstance(v, float):
                v = f"{v:.6f}"
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, (list, tuple, set, frozenset)):
                v = ",".join(sorted(v))
            parts.append(f"{k}={shlex.quote(str(v)) if v != '' else ''}")
        return "OK " + " ".join(parts)

    @classmethod
    def error(cls, err: PowerError) -> "Reply":
        text = " ".join(str(err).split())
        return cls(False, code=err.code, message=text)


def apply_command(command: Command, engine) -> Reply:
    """Execute ``command`` against ``engine``; failures leave it untouched."""
    machine = engine.machine
    try:
        if machine.asleep and not (machine.level is SleepLevel.RAM and isinstance(command, Status)):
            raise DeviceAsleep(f"device is in {machine.level.value}")
        if isinstance(command, SetSchedule):
            schedule = SleepSchedule(command.sleep_time, command.wake_time, command.level)
            engine.set_schedule(schedule)
            return Reply(True, {"schedule": f"{format_hhmm(schedule.sleep_time)}-"
                                            f"{format_hhmm(schedule.wake_time)}",
                                "level": schedule.level.value})
        if isinstance(command, SetMinimal):
            engine.set_minimal(command.names)
            return Reply(True, {"minimal": sorted(command.names)})
        if isinstance(command, Disable):
            engine.set_schedule(None)
            return Reply(True, {"schedule": "none"})
        return Reply(True, engine.status())
    except PowerError as err:
        return Reply.error(err)


def handle_line(line: str, engine) -> str:
    try:
        command = parse_command(line)
    except ParseError as err:
        return Reply.error(err).line()
    return apply_command(command, engine).line()
