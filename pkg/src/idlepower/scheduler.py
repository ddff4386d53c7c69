"""The sleep time manager and the simulation engine it drives.

Times of day are minutes since midnight (0-1439). Simulation instants are
absolute minutes, with instant 0 at midnight of day 0, so the time of day of
instant ``t`` is ``t % 1440``.

A schedule window is closed at the sleep time and open at the wake time and
may cross midnight.
"""

from __future__ import annotations

import configparser
import heapq
import itertools
import logging
import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from . import power_state
from .battery import BatteryMonitor, BatteryState
from .errors import DisabledSchedule, EqualTimes, MalformedTime, PowerError
from .levels import SleepLevel
from .power_state import DeviceProfile, PowerStateMachine
from .rtc import BatteryTimer, SimClock, power_cut_roundtrip
from .services import ServiceRegistry, default_registry, set_minimal_functions

logger = logging.getLogger(__name__)

DAY = 1440
SAMPLE_EVERY = 10  # minutes between time-series samples

_HHMM = re.compile(r"(\d{2}):(\d{2})")


def parse_hhmm(text: str) -> int:
    m = _HHMM.fullmatch(text)
    if not m or int(m[1]) > 23 or int(m[2]) > 59:
        raise MalformedTime(f"malformed time {text!r}", token=text)
    return int(m[1]) * 60 + int(m[2])


def format_hhmm(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


@dataclass(frozen=True)
class SleepSchedule:
    sleep_time: int
    wake_time: int
    level: SleepLevel
    enabled: bool = True

    def __post_init__(self):
        for t in (self.sleep_time, self.wake_time):
            if not isinstance(t, int) or isinstance(t, bool) or not 0 <= t < DAY:
                raise MalformedTime(f"time of day must be an int in [0, {DAY}), got {t!r}")
        if self.sleep_time == self.wake_time:
            raise EqualTimes("sleep and wake times are equal")
        if not isinstance(self.level, SleepLevel):
            raise ValueError(f"level must be a SleepLevel, got {self.level!r}")

    @classmethod
    def from_hhmm(cls, sleep: str, wake: str, level: SleepLevel | str,
                  enabled: bool = True) -> "SleepSchedule":
        if isinstance(level, str):
            level = SleepLevel.parse(level)
        return cls(parse_hhmm(sleep), parse_hhmm(wake), level, enabled)

    @property
    def window_minutes(self) -> int:
        return (self.wake_time - self.sleep_time) % DAY

    def contains(self, instant: float) -> bool:
        return (instant % DAY - self.sleep_time) % DAY < self.window_minutes

    def window_start(self, instant: float) -> float:
        """Start instant of the window occurrence containing ``instant``."""
        return instant - (instant % DAY - self.sleep_time) % DAY

    def __str__(self) -> str:
        return f"{format_hhmm(self.sleep_time)}-{format_hhmm(self.wake_time)} {self.level}"


def next_event(now: float, schedule: SleepSchedule) -> tuple[str, float]:
    """Earliest upcoming schedule boundary: ``("wake", t)`` inside the window, else ``("sleep", t)``."""
    if not schedule.enabled:
        raise DisabledSchedule("schedule is disabled")
    day = math.floor(now / DAY) * DAY
    if schedule.contains(now):
        at = schedule.window_start(now) + schedule.window_minutes
        return "wake", at
    at = day + schedule.sleep_time
    if at <= now:
        at += DAY
    return "sleep", at


class ScheduleStore:
    """Durable home of the user's schedule and minimal-function set.

    The state file is INI text::

        [engine]
        version = 1
        [schedule]            ; section absent when no schedule is set
        sleep = 22:30
        wake = 06:30
        level = complete-off
        enabled = true
        [services]
        minimal = phone,sms   ; comma separated, sorted
    """

    VERSION = 1

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path is not None else None
        self.schedule: Optional[SleepSchedule] = None
        self.minimal: frozenset[str] = frozenset()
        if self.path is not None and self.path.exists():
            self.load()

    def load(self) -> None:
        cp = configparser.ConfigParser()
        cp.read(self.path, encoding="utf-8")
        self.schedule = None
        if cp.has_section("schedule"):
            s = cp["schedule"]
            self.schedule = SleepSchedule.from_hhmm(
                s["sleep"], s["wake"], s["level"], s.getboolean("enabled", True))
        names = cp.get("services", "minimal", fallback="")
        self.minimal = frozenset(n for n in names.split(",") if n)

    def save(self) -> None:
        if self.path is None:
            return
        cp = configparser.ConfigParser()
        cp["engine"] = {"version": str(self.VERSION)}
        if self.schedule is not None:
            s = self.schedule
            cp["schedule"] = {
                "sleep": format_hhmm(s.sleep_time),
                "wake": format_hhmm(s.wake_time),
                "level": s.level.value,
                "enabled": "true" if s.enabled else "false",
            }
        cp["services"] = {"minimal": ",".join(sorted(self.minimal))}
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=self.path.name)
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            cp.write(fh)
        os.replace(tmp, self.path)


def set_schedule(store: ScheduleStore, schedule: SleepSchedule | None) -> SleepSchedule | None:
    store.schedule = schedule
    store.save()
    return schedule


@dataclass(frozen=True)
class Event:
    at: float
    kind: str
    info: dict = field(default_factory=dict, compare=True, hash=False)

    def line(self) -> str:
        parts = [f"{self.at:.4f}", self.kind]
        for k, v in self.info.items():
            if isinstance(v, (tuple, list, set, frozenset)):
                v = ",".join(sorted(map(str, v)))
            parts.append(f"{k}={v}")
        return " ".join(parts)


def _record_info(record: power_state.TransitionRecord) -> dict:
    return {"level": record.level.value, "daemons": record.daemons,
            "cost_mah": repr(record.cost), "drains": record.drains}


class Engine:
    """Single-threaded event loop over a simulated clock.

    ``daemons`` is a list of ``(name, category, rate_mA)``; by default the six
    factory-reset daemons carry ``profile.idle_rate`` split 80 / 20 between
    the platform and application categories. ``step_minutes`` caps the length
    of each drain integration step; it changes nothing but rounding.
    """

    def __init__(self, profile: DeviceProfile, daemons: Iterable[tuple[str, str, float]] | None = None,
                 *, start: float = 0.0, state_path=None, timer_path=None,
                 lead_minutes: int = 0, step_minutes: float | None = None):
        self.profile = profile
        self.bmu = BatteryMonitor(BatteryState.full(profile.capacity))
        if daemons is None:
            self.services = default_registry(self.bmu.registry, 0.8 * profile.idle_rate,
                                             0.2 * profile.idle_rate)
        else:
            self.services = ServiceRegistry(self.bmu.registry)
            for name, category, rate in daemons:
                self.services.add(name, category, rate)
        self.machine = PowerStateMachine(entered_at=start)
        self.clock = SimClock(start)
        self.timer = BatteryTimer(path=timer_path)
        self.store = ScheduleStore(state_path)
        set_minimal_functions(self.services, self.store.minimal)
        self.lead_minutes = lead_minutes
        self.step_minutes = step_minutes
        self.start = start
        self.log: list[Event] = []
        self.series: list[tuple[float, float]] = [(start, self.bmu.state.remaining)]
        self.replies: list[tuple[float, str, str]] = []
        self._queue: list[tuple[float, int, str]] = []
        self._seq = itertools.count()
        self._slept_window: Optional[float] = None
        self._depletion_logged = False

    # -- user-facing state ------------------------------------------------
    @property
    def now(self) -> float:
        return self.clock.now

    @property
    def schedule(self) -> Optional[SleepSchedule]:
        return self.store.schedule

    @property
    def battery(self) -> BatteryState:
        return self.bmu.state

    def set_schedule(self, schedule: SleepSchedule | None) -> None:
        set_schedule(self.store, schedule)

    def set_minimal(self, names: Iterable[str]) -> None:
        names = frozenset(names)
        set_minimal_functions(self.services, names)
        self.store.minimal = names
        self.store.save()

    def submit(self, line: str, at: float | None = None) -> None:
        """Queue a protocol command for delivery at instant ``at`` (default: now)."""
        at = self.now if at is None else max(at, self.now)
        heapq.heappush(self._queue, (at, next(self._seq), line))

    # -- loop -------------------------------------------------------------
    def _emit(self, kind: str, at: float, **info) -> None:
        self.log.append(Event(at, kind, info))

    def _fail(self, at: float, op: str, err: PowerError) -> None:
        self._emit("failure", at, op=op, code=err.code)

    def _drain(self, t0: float, t1: float) -> None:
        if self.bmu.depleted or t1 <= t0:
            return
        active = self.machine.active_sources(self.services)
        step = self.step_minutes or (t1 - t0)
        n = max(1, math.ceil((t1 - t0) / step - 1e-9))
        for i in range(n):
            a = t0 + i * step
            b = t1 if i == n - 1 else t0 + (i + 1) * step
            self.bmu.integrate(active, a, b)
            if self.bmu.depleted:
                break
        if self.bmu.depleted and not self._depletion_logged:
            self._depletion_logged = True
            self._emit("depleted", self.bmu.state.depleted_at)

    def _maybe_sleep(self) -> None:
        s, now = self.schedule, self.now
        if s is None or not s.enabled or self.machine.asleep or self.bmu.depleted:
            return
        if not s.contains(now):
            return
        window = s.window_start(now)
        if window == self._slept_window:
            return
        self._slept_window = window
        wake_at = window + s.window_minutes - self.lead_minutes
        try:
            self.timer.arm(wake_at, now)
        except PowerError as err:
            self._fail(now, "arm", err)
            return
        self._emit("arm", now, wake_at=wake_at)
        try:
            record = power_state.enter_sleep(self.machine, s.level, self.profile,
                                             self.services, self.bmu, now)
        except PowerError as err:
            self.timer.disarm()
            self._fail(now, "enter_sleep", err)
            return
        self._emit("enter_sleep", now, **_record_info(record))
        if s.level is not SleepLevel.RAM:
            # main system power is gone; only the timer's own memory survives
            self.timer = power_cut_roundtrip(self.timer)
        if self.bmu.depleted and not self._depletion_logged:
            self._depletion_logged = True
            self._emit("depleted", self.bmu.state.depleted_at)

    def _on_fire(self, at: float) -> None:
        self._emit("timer_fire", at)
        try:
            record = power_state.wake(self.machine, self.profile, self.services, self.bmu, at)
        except PowerError as err:
            self._fail(at, "wake", err)
            return
        self._emit("wake", at, **_record_info(record))
        if self.bmu.depleted and not self._depletion_logged:
            self._depletion_logged = True
            self._emit("depleted", self.bmu.state.depleted_at)

    def _deliver_commands(self) -> None:
        from .protocol import handle_line

        while self._queue and self._queue[0][0] <= self.now:
            _, _, line = heapq.heappop(self._queue)
            reply = handle_line(line, self)
            self.replies.append((self.now, line, reply))
            self._emit("command", self.now, line=line.strip(), reply=reply)

    def _settle(self, end: float) -> None:
        self._deliver_commands()
        if self.now < end:
            self._maybe_sleep()

    def _next_instant(self, end: float) -> float:
        now = self.now
        cands = [end]
        if self.timer.armed:
            cands.append(self.timer.wake_at)
        if self._queue:
            cands.append(self._queue[0][0])
        s = self.schedule
        if s is not None and s.enabled and not self.machine.asleep and not self.bmu.depleted:
            cands.append(next_event(now, s)[1])
        k = math.floor((now - self.start) / SAMPLE_EVERY + 1e-9) + 1
        cands.append(self.start + k * SAMPLE_EVERY)
        return min(c for c in cands if c > now)

    def run_until(self, end: float) -> list[Event]:
        if end < self.now:
            raise ValueError(f"end {end} is before now {self.now}")
        self._settle(end)
        while self.now < end:
            t0 = self.now
            t = min(self._next_instant(end), end)
            self._drain(t0, t)
            fired = self.timer.advance(self.clock, t)
            if fired is not None:
                self._on_fire(fired.at)
            self._settle(end)
            if (t - self.start) % SAMPLE_EVERY == 0 or t == end:
                self.series.append((t, self.bmu.state.remaining))
        return self.log

    def status(self) -> dict:
        s = self.schedule
        return {
            "state": self.machine.state,
            "remaining_mah": self.bmu.state.remaining,
            "remaining_pct": self.bmu.state.percent,
            "schedule": "none" if s is None else
            f"{format_hhmm(s.sleep_time)}-{format_hhmm(s.wake_time)}",
            "level": "none" if s is None else s.level.value,
            "enabled": s is not None and s.enabled,
            "minimal": sorted(self.services.minimal),
        }


def run_until(engine: Engine, end: float) -> list[Event]:
    return engine.run_until(end)
