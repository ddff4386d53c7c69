"""Battery and battery-monitoring-unit (BMU) model.

Drain is piecewise-constant current per source, integrated in closed form:
a source drawing ``rate`` mA for ``h`` hours consumes ``rate * h`` mAh.
Simulation instants are minutes; integration durations are hours.

Every charge movement is written to a :class:`ConsumptionLedger`, which is
what :func:`breakdown_report` attributes per source and per category.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .errors import DepletedBattery, DuplicateSource, EmptyWindow, UnknownSource

#: Absolute tolerance for charge comparisons (mAh).
CHARGE_TOL = 1e-6

CATEGORIES = ("platform", "application", "memory-retention", "peripheral", "timer")
#: Pseudo-category for one-off transition costs (snapshot / restore).
TRANSITION = "transition"


@dataclass(frozen=True)
class BatteryState:
    capacity: float
    remaining: float
    depleted_at: Optional[float] = None

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        if not 0 <= self.remaining <= self.capacity:
            raise ValueError(f"remaining {self.remaining} outside [0, {self.capacity}]")

    @classmethod
    def full(cls, capacity: float) -> "BatteryState":
        return cls(capacity=float(capacity), remaining=float(capacity))

    @property
    def depleted(self) -> bool:
        return self.depleted_at is not None

    @property
    def consumed(self) -> float:
        return self.capacity - self.remaining

    @property
    def percent(self) -> float:
        return 100.0 * self.remaining / self.capacity


@dataclass(frozen=True)
class DrainSource:
    name: str
    category: str
    rate: float  # mA

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if not (self.rate >= 0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be finite and >= 0, got {self.rate}")


class SourceRegistry:
    """Drain sources known to the BMU, addressed by integer id."""

    def __init__(self):
        self._sources: list[DrainSource] = []
        self._ids: dict[str, int] = {}

    def register(self, source: DrainSource) -> int:
        if source.name in self._ids:
            raise DuplicateSource(f"source {source.name!r} already registered")
        if source.name in CATEGORIES or source.name == TRANSITION:
            raise DuplicateSource(f"source name {source.name!r} clashes with a category")
        self._ids[source.name] = len(self._sources)
        self._sources.append(source)
        return self._ids[source.name]

    def __getitem__(self, sid: int) -> DrainSource:
        if not isinstance(sid, int) or not 0 <= sid < len(self._sources):
            raise UnknownSource(f"unknown source id {sid!r}")
        return self._sources[sid]

    def __len__(self) -> int:
        return len(self._sources)

    def __iter__(self):
        return iter(self._sources)

    def id_of(self, name: str) -> int:
        try:
            return self._ids[name]
        except KeyError:
            raise UnknownSource(f"unknown source {name!r}") from None

    def total_rate(self, active: Iterable[int]) -> float:
        return math.fsum(self[sid].rate for sid in active)


def register_source(registry: SourceRegistry, source: DrainSource) -> int:
    return registry.register(source)


@dataclass(frozen=True)
class LedgerEntry:
    name: str
    category: str
    start: float  # minutes
    end: float  # minutes; equals start for one-off costs
    mah: float


@dataclass
class ConsumptionLedger:
    entries: list[LedgerEntry] = field(default_factory=list)

    def record(self, entry: LedgerEntry) -> None:
        self.entries.append(entry)

    @property
    def total(self) -> float:
        return math.fsum(e.mah for e in self.entries)

    @property
    def span(self) -> tuple[float, float] | None:
        if not self.entries:
            return None
        return min(e.start for e in self.entries), max(e.end for e in self.entries)


def integrate_drain(
    battery: BatteryState,
    registry: SourceRegistry,
    active: Iterable[int],
    duration: float,
    start: float = 0.0,
    ledger: ConsumptionLedger | None = None,
) -> BatteryState:
    """Drain ``battery`` by the ``active`` sources for ``duration`` hours.

    ``start`` is the simulation instant (minutes) the interval begins at. If
    the demand exceeds the remaining charge the battery is clamped at zero and
    ``depleted_at`` is the exact instant charge ran out.
    """
    active = sorted(set(active))
    sources = [registry[sid] for sid in active]
    if duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    if duration == 0:
        return battery
    if battery.depleted:
        raise DepletedBattery(f"battery depleted at t={battery.depleted_at}")

    total = math.fsum(s.rate for s in sources)
    demand = total * duration
    hours = duration
    depleted_at = None
    remaining = battery.remaining - demand
    if remaining < CHARGE_TOL and total > 0:
        hours = min(duration, battery.remaining / total)
        depleted_at = start + hours * 60.0
        remaining = 0.0

    if ledger is not None:
        end = start + hours * 60.0
        for s in sources:
            ledger.record(LedgerEntry(s.name, s.category, start, end, s.rate * hours))
    return replace(battery, remaining=remaining, depleted_at=depleted_at)


def deduct_charge(
    battery: BatteryState,
    mah: float,
    at: float,
    name: str,
    ledger: ConsumptionLedger | None = None,
) -> BatteryState:
    """Take a one-off ``mah`` cost (e.g. a snapshot) out of the battery at ``at``."""
    if mah < 0:
        raise ValueError(f"cost must be >= 0, got {mah}")
    if mah == 0:
        return battery
    if battery.depleted:
        raise DepletedBattery(f"battery depleted at t={battery.depleted_at}")
    taken = min(mah, battery.remaining)
    remaining = battery.remaining - taken
    depleted_at = None
    if remaining < CHARGE_TOL:
        remaining, depleted_at = 0.0, at
    if ledger is not None:
        ledger.record(LedgerEntry(name, TRANSITION, at, at, taken))
    return replace(battery, remaining=remaining, depleted_at=depleted_at)


class BatteryMonitor:
    """The BMU: owns the battery, its source registry and consumption ledger."""

    def __init__(self, battery: BatteryState, registry: SourceRegistry | None = None):
        self.state = battery
        self.registry = registry if registry is not None else SourceRegistry()
        self.ledger = ConsumptionLedger()

    @property
    def depleted(self) -> bool:
        return self.state.depleted

    def register(self, source: DrainSource) -> int:
        return self.registry.register(source)

    def integrate(self, active: Iterable[int], start: float, end: float) -> BatteryState:
        """Integrate from instant ``start`` to ``end`` (both minutes)."""
        self.state = integrate_drain(
            self.state, self.registry, active, (end - start) / 60.0, start, self.ledger
        )
        return self.state

    def charge_cost(self, name: str, mah: float, at: float) -> BatteryState:
        self.state = deduct_charge(self.state, mah, at, name, self.ledger)
        return self.state


@dataclass(frozen=True)
class Share:
    name: str
    consumed: float  # mAh
    share: float


@dataclass(frozen=True)
class Breakdown:
    window: tuple[float, float]
    per_source: tuple[Share, ...]
    per_category: tuple[Share, ...]

    @property
    def total(self) -> float:
        return math.fsum(s.consumed for s in self.per_source)

    def source(self, name: str) -> Share:
        return next(s for s in self.per_source if s.name == name)

    def category(self, name: str) -> Share:
        return next(s for s in self.per_category if s.name == name)


def _overlap(entry: LedgerEntry, lo: float, hi: float) -> float:
    if entry.end == entry.start:
        return entry.mah if lo <= entry.start <= hi else 0.0
    a, b = max(entry.start, lo), min(entry.end, hi)
    if b <= a:
        return 0.0
    if a == entry.start and b == entry.end:
        return entry.mah
    return entry.mah * (b - a) / (entry.end - entry.start)


def breakdown_report(ledger: ConsumptionLedger, window: tuple[float, float]) -> Breakdown:
    """Attribute consumption inside ``window`` (minutes) per source and category."""
    lo, hi = window
    if not hi > lo:
        raise EmptyWindow(f"window ({lo}, {hi}) is empty or inverted")

    by_source: dict[str, list[float]] = {}
    category_of: dict[str, str] = {}
    for entry in ledger.entries:
        part = _overlap(entry, lo, hi)
        if part == 0.0 and not (entry.start < hi and entry.end > lo):
            continue
        by_source.setdefault(entry.name, []).append(part)
        category_of[entry.name] = entry.category

    totals = {name: math.fsum(parts) for name, parts in by_source.items()}
    grand = math.fsum(totals.values())

    def share(x: float) -> float:
        return x / grand if grand > 0 else 0.0

    per_source = tuple(Share(n, v, share(v)) for n, v in totals.items())
    per_category = []
    for cat in CATEGORIES + (TRANSITION,):
        members = [totals[n] for n in totals if category_of[n] == cat]
        if members:
            v = sum(members)
            per_category.append(Share(cat, v, share(v)))
    return Breakdown((lo, hi), per_source, tuple(per_category))
