"""Scenario files, experiment runs, level comparisons and reports.

Scenario file (JSON)::

    {
      "version": 1,
      "name": "dual_core_phone",
      "profile": {"name": ..., "capacity_mah": ..., "idle_rate_ma": ...,
                  "ram_retention_rate_ma": ..., "timer_rate_ma": ...,
                  "peripheral_leak_rate_ma": 0, "snapshot_cost_mah": 0,
                  "restore_cost_mah": 0},
      "sources": [{"name": "cell standby", "category": "platform", "rate_ma": 10.5}, ...],
      "schedule": {"sleep": "22:30", "wake": "06:30", "level": "complete-off",
                   "enabled": false} or null,
      "minimal": [],
      "start": "22:30",
      "duration_hours": 8,
      "lead_minutes": 0,
      "seed": 0,
      "commands": [{"at_minutes": 0, "line": "STATUS"}]
    }

``sources`` are the service daemons; their rates must add up to the
profile's idle rate. ``start`` is the time of day on day 0 the run begins.
``commands`` are protocol lines delivered ``at_minutes`` after the start.
``seed`` is carried but unused: runs are deterministic.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .battery import Breakdown, Share, breakdown_report
from .errors import InvariantViolation, MalformedTime, PowerError, ScenarioError
from .levels import SleepLevel
from .power_state import DeviceProfile
from .scheduler import Engine, Event, SleepSchedule, format_hhmm, parse_hhmm

SCHEMA_VERSION = 1
RATE_TOL = 1e-6
SHIPPED = ("dual_core_phone", "quad_core_phone", "quad_core_tablet", "laptop")
CONFIGS = ("before",) + tuple(level.value for level in SleepLevel)
COMPARISON_COLUMNS = ("config", "device", "capacity_mah", "consumed_mah", "remaining_pct")
BREAKDOWN_COLUMNS = ("name", "consumed_mah", "share")


@dataclass(frozen=True)
class Scenario:
    name: str
    profile: DeviceProfile
    sources: tuple[tuple[str, str, float], ...]
    schedule: Optional[SleepSchedule] = None
    minimal: frozenset = frozenset()
    start: int = 0
    duration: float = 8.0  # hours
    lead_minutes: int = 0
    seed: int = 0
    commands: tuple[tuple[float, str], ...] = ()

    def __post_init__(self):
        total = math.fsum(rate for _, _, rate in self.sources)
        if abs(total - self.profile.idle_rate) > RATE_TOL:
            raise InvariantViolation(
                f"source rates sum to {total!r} mA, profile idle_rate is {self.profile.idle_rate!r} mA",
                "sources")
        if not self.duration >= 0:
            raise InvariantViolation(f"duration must be >= 0, got {self.duration}", "duration_hours")

    def with_level(self, level: SleepLevel | None) -> "Scenario":
        """Same scenario with scheduling off (``None``) or on at ``level``."""
        if level is None:
            return replace(self, schedule=None)
        if self.schedule is None:
            raise ScenarioError("scenario has no schedule window", "schedule")
        return replace(self, schedule=replace(self.schedule, level=level, enabled=True))


def _get(obj: dict, key: str, where: str, kind=None, default=...):
    path = f"{where}.{key}" if where else key
    if key not in obj:
        if default is ...:
            raise ScenarioError("missing field", path)
        return default
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"expected a number, got {value!r}", path)
        return float(value)
    if kind is not None and not isinstance(value, kind):
        raise ScenarioError(f"expected {kind.__name__}, got {type(value).__name__}", path)
    return value


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("top level must be an object")
    version = _get(data, "version", "", int)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported version {version}", "version")
    p = _get(data, "profile", "", dict)
    try:
        profile = DeviceProfile(
            name=_get(p, "name", "profile", str),
            capacity=_get(p, "capacity_mah", "profile", float),
            idle_rate=_get(p, "idle_rate_ma", "profile", float),
            ram_retention_rate=_get(p, "ram_retention_rate_ma", "profile", float),
            timer_rate=_get(p, "timer_rate_ma", "profile", float),
            peripheral_leak_rate=_get(p, "peripheral_leak_rate_ma", "profile", float, 0.0),
            snapshot_cost=_get(p, "snapshot_cost_mah", "profile", float, 0.0),
            restore_cost=_get(p, "restore_cost_mah", "profile", float, 0.0),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc), "profile") from None

    sources = []
    for i, s in enumerate(_get(data, "sources", "", list)):
        where = f"sources[{i}]"
        if not isinstance(s, dict):
            raise ScenarioError("expected an object", where)
        category = _get(s, "category", where, str)
        if category not in ("platform", "application"):
            raise ScenarioError(f"category must be platform or application, got {category!r}",
                                f"{where}.category")
        rate = _get(s, "rate_ma", where, float)
        if rate < 0:
            raise ScenarioError("rate must be >= 0", f"{where}.rate_ma")
        sources.append((_get(s, "name", where, str), category, rate))
    names = [n for n, _, _ in sources]
    if len(set(names)) != len(names):
        raise ScenarioError("duplicate source name", "sources")

    schedule = None
    raw = data.get("schedule")
    if raw is not None:
        if not isinstance(raw, dict):
            raise ScenarioError("expected an object or null", "schedule")
        try:
            schedule = SleepSchedule.from_hhmm(
                _get(raw, "sleep", "schedule", str), _get(raw, "wake", "schedule", str),
                _get(raw, "level", "schedule", str), _get(raw, "enabled", "schedule", bool, True))
        except (PowerError, ValueError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(str(exc), "schedule") from None

    minimal = frozenset(_get(data, "minimal", "", list, []))
    unknown = sorted(minimal - set(names))
    if unknown:
        raise ScenarioError(f"unknown daemon(s) {unknown}", "minimal")

    try:
        start = parse_hhmm(_get(data, "start", "", str, "00:00"))
    except MalformedTime as exc:
        raise ScenarioError(str(exc), "start") from None
    duration = _get(data, "duration_hours", "", float)
    if not duration > 0:
        raise InvariantViolation(f"duration must be > 0, got {duration}", "duration_hours")

    commands = []
    for i, c in enumerate(_get(data, "commands", "", list, [])):
        where = f"commands[{i}]"
        if not isinstance(c, dict):
            raise ScenarioError("expected an object", where)
        commands.append((_get(c, "at_minutes", where, float), _get(c, "line", where, str)))

    return Scenario(
        name=_get(data, "name", "", str),
        profile=profile,
        sources=tuple(sources),
        schedule=schedule,
        minimal=minimal,
        start=start,
        duration=duration,
        lead_minutes=_get(data, "lead_minutes", "", int, 0),
        seed=_get(data, "seed", "", int, 0),
        commands=tuple(commands),
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    p, s = scenario.profile, scenario.schedule
    return {
        "version": SCHEMA_VERSION,
        "name": scenario.name,
        "profile": {
            "name": p.name,
            "capacity_mah": p.capacity,
            "idle_rate_ma": p.idle_rate,
            "ram_retention_rate_ma": p.ram_retention_rate,
            "timer_rate_ma": p.timer_rate,
            "peripheral_leak_rate_ma": p.peripheral_leak_rate,
            "snapshot_cost_mah": p.snapshot_cost,
            "restore_cost_mah": p.restore_cost,
        },
        "sources": [{"name": n, "category": c, "rate_ma": r} for n, c, r in scenario.sources],
        "schedule": None if s is None else {
            "sleep": format_hhmm(s.sleep_time), "wake": format_hhmm(s.wake_time),
            "level": s.level.value, "enabled": s.enabled},
        "minimal": sorted(scenario.minimal),
        "start": format_hhmm(scenario.start),
        "duration_hours": scenario.duration,
        "lead_minutes": scenario.lead_minutes,
        "seed": scenario.seed,
        "commands": [{"at_minutes": at, "line": line} for at, line in scenario.commands],
    }


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file, or a shipped scenario by name (``"laptop"``)."""
    path = Path(path)
    if not path.exists() and str(path) in SHIPPED:
        text = resources.files("idlepower.scenarios").joinpath(f"{path}.json").read_text("utf-8")
    else:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario: {exc.strerror}", str(path)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, f"line {exc.lineno} col {exc.colno}") from None
    return scenario_from_dict(data)


@dataclass
class ExperimentResult:
    config: str
    device: str
    capacity: float
    consumed: float
    remaining: float
    breakdown: Breakdown
    event_log: list[Event] = field(default_factory=list)
    time_series: list[tuple[float, float]] = field(default_factory=list)

    @property
    def remaining_fraction(self) -> float:
        """Remaining charge as a percent of capacity."""
        return 100.0 * self.remaining / self.capacity

    def series_array(self) -> np.ndarray:
        """Time series as an ``(n, 2)`` array of (minutes, remaining mAh)."""
        return np.asarray(self.time_series, dtype=float).reshape(-1, 2)

    def to_dict(self) -> dict:
        b = self.breakdown
        return {
            "kind": "experiment",
            "config": self.config,
            "device": self.device,
            "capacity_mah": self.capacity,
            "consumed_mah": self.consumed,
            "remaining_mah": self.remaining,
            "remaining_pct": self.remaining_fraction,
            "breakdown": {
                "window": list(b.window),
                "per_source": [[s.name, s.consumed, s.share] for s in b.per_source],
                "per_category": [[s.name, s.consumed, s.share] for s in b.per_category],
            },
            "event_log": [{"at": e.at, "kind": e.kind, "info": _jsonable(e.info)}
                          for e in self.event_log],
            "time_series": [list(p) for p in self.time_series],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentResult":
        b = d["breakdown"]
        breakdown = Breakdown(tuple(b["window"]),
                              tuple(Share(*s) for s in b["per_source"]),
                              tuple(Share(*s) for s in b["per_category"]))
        events = [Event(e["at"], e["kind"],
                        {k: tuple(v) if isinstance(v, list) else v for k, v in e["info"].items()})
                  for e in d["event_log"]]
        return cls(d["config"], d["device"], d["capacity_mah"], d["consumed_mah"],
                   d["remaining_mah"], breakdown, events, [tuple(p) for p in d["time_series"]])


def _jsonable(info: dict) -> dict:
    return {k: list(v) if isinstance(v, (tuple, list, set, frozenset)) else v
            for k, v in info.items()}


def run_experiment(scenario: Scenario, *, duration_hours: float | None = None,
                   step_minutes: float | None = None, state_path=None, timer_path=None,
                   config: str | None = None) -> ExperimentResult:
    duration = scenario.duration if duration_hours is None else duration_hours
    if not duration >= 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    engine = Engine(scenario.profile, scenario.sources, start=scenario.start,
                    state_path=state_path, timer_path=timer_path,
                    lead_minutes=scenario.lead_minutes, step_minutes=step_minutes)
    engine.set_minimal(scenario.minimal)
    engine.set_schedule(scenario.schedule)
    for at, line in scenario.commands:
        engine.submit(line, scenario.start + at)

    end = scenario.start + duration * 60.0
    log = engine.run_until(end)
    if end > scenario.start:
        breakdown = breakdown_report(engine.bmu.ledger, (scenario.start, end))
    else:
        breakdown = Breakdown((scenario.start, end), (), ())
    if config is None:
        s = scenario.schedule
        config = s.level.value if s is not None and s.enabled else "before"
    state = engine.battery
    return ExperimentResult(config, scenario.profile.name, state.capacity, state.consumed,
                            state.remaining, breakdown, list(log), list(engine.series))


@dataclass(frozen=True)
class ComparisonRow:
    config: str
    device: str
    capacity: float
    consumed: float
    remaining_pct: float


@dataclass
class Comparison:
    rows: list[ComparisonRow] = field(default_factory=list)

    def remaining(self, device: str, config: str) -> float:
        row = next(r for r in self.rows if r.device == device and r.config == config)
        return row.capacity - row.consumed

    def savings_points(self, device: str, config: str = "complete-off") -> float:
        """Percentage points of capacity kept by ``config`` relative to "before"."""
        by = {r.config: r for r in self.rows if r.device == device}
        return by[config].remaining_pct - by["before"].remaining_pct

    def __add__(self, other: "Comparison") -> "Comparison":
        return Comparison(self.rows + other.rows)

    def to_dict(self) -> dict:
        return {"kind": "comparison",
                "rows": [[r.config, r.device, r.capacity, r.consumed, r.remaining_pct]
                         for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "Comparison":
        return cls([ComparisonRow(*r) for r in d["rows"]])


def compare_levels(scenario: Scenario, **kwargs) -> Comparison:
    """Run "before" and each sleep level over the scenario's window."""
    if scenario.schedule is None:
        raise ScenarioError("compare needs a schedule window", "schedule")
    rows = []
    for config in CONFIGS:
        level = None if config == "before" else SleepLevel.parse(config)
        result = run_experiment(scenario.with_level(level), config=config, **kwargs)
        rows.append(ComparisonRow(config, result.device, result.capacity, result.consumed,
                                  result.remaining_fraction))
    return Comparison(rows)


def _num(x: float, digits: int = 6) -> str:
    return repr(round(x, digits) + 0.0)


def render(result: ExperimentResult | Comparison, fmt: str = "csv") -> str:
    if fmt == "text":
        return json.dumps(result.to_dict(), indent=2) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(result, Comparison):
        w.writerow(COMPARISON_COLUMNS)
        for r in result.rows:
            w.writerow([r.config, r.device, _num(r.capacity), _num(r.consumed),
                        _num(r.remaining_pct, 4)])
    else:
        w.writerow(BREAKDOWN_COLUMNS)
        for s in result.breakdown.per_category + result.breakdown.per_source:
            w.writerow([s.name, _num(s.consumed), f"{s.share:.2f}"])
    return buf.getvalue()


def emit_report(result: ExperimentResult | Comparison, fmt: str, path: str | Path) -> Path:
    """Write ``result`` as ``csv`` or ``text`` (JSON) to ``path``."""
    path = Path(path)
    path.write_text(render(result, fmt), encoding="utf-8", newline="")
    return path


def load_result(path: str | Path) -> ExperimentResult | Comparison:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("kind") == "comparison":
        return Comparison.from_dict(data)
    return ExperimentResult.from_dict(data)
