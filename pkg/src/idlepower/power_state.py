"""The sleep level controller.

A two-phase state machine: ``Active`` or ``Asleep(level)``. Entering a level
stops daemons and installs that level's residual drains; waking restarts
every daemon. Suspend-to-disk additionally pays a one-off snapshot cost on
entry and a restore cost on wake.

While Active the battery timer runs off the main rail and its draw is part
of the measured idle rate, so it is only metered as its own source while
asleep.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .battery import BatteryMonitor, DrainSource, SourceRegistry
from .errors import DepletedBattery, InvalidTransition, UnknownSource
from .levels import SleepLevel
from .services import ServiceRegistry, restart_all, stop_for_level

TIMER_SOURCE = "battery-timer"
RETENTION_SOURCE = "ram-retention"
PERIPHERAL_SOURCE = "peripheral-leak"

# Reference device: the dual-core phone. 315 mAh over 8 h idle; the timer
# alone leaves 1 % of capacity consumed over the same 8 h.
_REF_CAPACITY = 1650.0
_REF_IDLE = 315.0 / 8
_REF_TIMER = _REF_CAPACITY / 100 / 8
_REF_RETENTION = 4.0


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    capacity: float  # mAh
    idle_rate: float  # mA, platform + application while Active
    ram_retention_rate: float  # mA
    timer_rate: float  # mA
    peripheral_leak_rate: float = 0.0  # mA, suspend-to-disk only
    snapshot_cost: float = 0.0  # mAh per suspend-to-disk entry
    restore_cost: float = 0.0  # mAh per suspend-to-disk wake

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError(f"{self.name}: capacity must be positive")
        for attr in ("idle_rate", "ram_retention_rate", "timer_rate",
                     "peripheral_leak_rate", "snapshot_cost", "restore_cost"):
            if getattr(self, attr) < 0:
                raise ValueError(f"{self.name}: {attr} must be >= 0")

    @classmethod
    def scaled(cls, name: str, capacity: float, **overrides) -> "DeviceProfile":
        """Default profile for ``capacity``, every rate scaled from the reference phone."""
        k = capacity / _REF_CAPACITY
        params = dict(
            idle_rate=_REF_IDLE * k,
            ram_retention_rate=_REF_RETENTION * k,
            timer_rate=_REF_TIMER * k,
        )
        params.update(overrides)
        return cls(name=name, capacity=float(capacity), **params)

    @property
    def ordered(self) -> bool:
        """True when idle > ram retention + timer > timer."""
        r = self.ram_retention_rate + self.timer_rate
        return self.idle_rate > r > self.timer_rate

    def with_(self, **changes) -> "DeviceProfile":
        return replace(self, **changes)


DEFAULT_PROFILES = {
    p.name: p
    for p in (
        DeviceProfile.scaled("dual_core_phone", 1650),
        DeviceProfile.scaled("quad_core_phone", 2100),
        DeviceProfile.scaled("quad_core_tablet", 4325),
        DeviceProfile.scaled("laptop", 4400),
    )
}


def residual_drain(level: SleepLevel, profile: DeviceProfile,
                   services: ServiceRegistry | None = None) -> set[DrainSource]:
    """Sources still drawing current while asleep at ``level``.

    Zero-rate peripheral leakage is omitted, which makes suspend-to-disk and
    complete-off draw identically.
    """
    drains = {DrainSource(TIMER_SOURCE, "timer", profile.timer_rate)}
    if level is SleepLevel.RAM:
        drains.add(DrainSource(RETENTION_SOURCE, "memory-retention", profile.ram_retention_rate))
        if services is not None:
            for d in services:
                if d.minimal:
                    drains.add(services.sources[d.source])
    elif level is SleepLevel.DISK and profile.peripheral_leak_rate > 0:
        drains.add(DrainSource(PERIPHERAL_SOURCE, "peripheral", profile.peripheral_leak_rate))
    return drains


def _source_id(registry: SourceRegistry, source: DrainSource) -> int:
    try:
        sid = registry.id_of(source.name)
    except UnknownSource:
        return registry.register(source)
    if registry[sid] != source:
        raise ValueError(f"source {source.name!r} registered with different parameters")
    return sid


@dataclass(frozen=True)
class TransitionRecord:
    kind: str  # "enter_sleep" | "wake"
    at: float
    level: SleepLevel
    daemons: tuple[str, ...]  # stopped on entry, restarted on wake
    cost: float
    drains: tuple[str, ...]


@dataclass
class PowerStateMachine:
    level: Optional[SleepLevel] = None  # None means Active
    entered_at: float = 0.0
    drains: set[int] = field(default_factory=set)  # installed while asleep

    @property
    def asleep(self) -> bool:
        return self.level is not None

    @property
    def state(self) -> str:
        return "active" if self.level is None else self.level.value

    def active_sources(self, services: ServiceRegistry) -> set[int]:
        return set(self.drains) if self.asleep else services.active_sources()


def enter_sleep(machine: PowerStateMachine, level: SleepLevel, profile: DeviceProfile,
                services: ServiceRegistry, bmu: BatteryMonitor, now: float) -> TransitionRecord:
    if machine.asleep:
        raise InvalidTransition(f"already asleep in {machine.level.value}")
    if bmu.depleted:
        raise DepletedBattery("cannot enter sleep with a depleted battery")

    drains = residual_drain(level, profile, services)
    ids = {_source_id(bmu.registry, s) for s in drains}
    stopped = stop_for_level(services, level)
    cost = profile.snapshot_cost if level is SleepLevel.DISK else 0.0
    if cost:
        bmu.charge_cost(f"{level.value} snapshot", cost, now)

    machine.level, machine.entered_at, machine.drains = level, now, ids
    return TransitionRecord("enter_sleep", now, level, tuple(sorted(stopped)), cost,
                            tuple(sorted(s.name for s in drains)))


def wake(machine: PowerStateMachine, profile: DeviceProfile, services: ServiceRegistry,
         bmu: BatteryMonitor, now: float) -> TransitionRecord:
    if not machine.asleep:
        raise InvalidTransition("already active")
    if bmu.depleted:
        raise DepletedBattery("cannot wake at zero charge")

    level = machine.level
    started = restart_all(services)
    cost = profile.restore_cost if level is SleepLevel.DISK else 0.0
    if cost:
        bmu.charge_cost(f"{level.value} restore", cost, now)

    machine.level, machine.entered_at, machine.drains = None, now, set()
    names = tuple(sorted(services.sources[sid].name for sid in services.active_sources()))
    return TransitionRecord("wake", now, level, tuple(sorted(started)), cost, names)
