"""Service daemons: running state, drain sources and the minimal-function set."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

from .battery import DrainSource, SourceRegistry
from .errors import UnknownDaemon
from .levels import SleepLevel

logger = logging.getLogger(__name__)

#: The six drain sources named in the factory-reset breakdown, by category.
DEFAULT_DAEMONS = (
    ("cell standby", "platform"),
    ("device idle", "platform"),
    ("Android OS", "platform"),
    ("Wi-Fi", "application"),
    ("Screen", "application"),
    ("Gmail", "application"),
)


@dataclass
class ServiceDaemon:
    name: str
    category: str
    source: int
    running: bool = True
    minimal: bool = False


class ServiceRegistry:
    def __init__(self, sources: SourceRegistry):
        self.sources = sources
        self._daemons: dict[str, ServiceDaemon] = {}

    def add(self, name: str, category: str, rate: float) -> ServiceDaemon:
        if category not in ("platform", "application"):
            raise ValueError(f"daemon category must be platform or application, got {category!r}")
        sid = self.sources.register(DrainSource(name, category, rate))
        daemon = ServiceDaemon(name, category, sid)
        self._daemons[name] = daemon
        return daemon

    def __getitem__(self, name: str) -> ServiceDaemon:
        try:
            return self._daemons[name]
        except KeyError:
            raise UnknownDaemon(f"unknown daemon {name!r}") from None

    def __iter__(self):
        return iter(self._daemons.values())

    def __len__(self) -> int:
        return len(self._daemons)

    @property
    def names(self) -> list[str]:
        return list(self._daemons)

    @property
    def running(self) -> set[str]:
        return {d.name for d in self if d.running}

    @property
    def minimal(self) -> set[str]:
        return {d.name for d in self if d.minimal}

    def active_sources(self) -> set[int]:
        """Source ids of running daemons; a stopped daemon draws nothing."""
        return {d.source for d in self if d.running}

    def snapshot(self) -> tuple:
        return tuple((d.name, d.running, d.minimal, d.source) for d in self)


def default_registry(sources: SourceRegistry, platform_rate: float = 31.5,
                     application_rate: float = 7.875) -> ServiceRegistry:
    """Registry with the six factory-reset daemons.

    Category totals are split equally across each category's three daemons.
    The defaults reproduce the dual-core phone's 252 / 63 mAh over 8 h.
    """
    registry = ServiceRegistry(sources)
    for name, category in DEFAULT_DAEMONS:
        total = platform_rate if category == "platform" else application_rate
        registry.add(name, category, total / 3)
    return registry


def set_minimal_functions(registry: ServiceRegistry, names: Iterable[str]) -> ServiceRegistry:
    names = set(names)
    unknown = sorted(n for n in names if n not in registry.names)
    if unknown:
        raise UnknownDaemon(f"unknown daemon(s): {', '.join(unknown)}", names=unknown)
    for d in registry:
        d.minimal = d.name in names
    return registry


def stop_for_level(registry: ServiceRegistry, level: SleepLevel) -> set[str]:
    """Stop daemons for ``level`` and return the names stopped by this call.

    Minimal functions survive only suspend-to-ram.
    """
    keep = registry.minimal if level is SleepLevel.RAM else set()
    if registry.minimal and level is not SleepLevel.RAM:
        logger.warning("minimal functions %s ignored for %s", sorted(registry.minimal), level.value)
    stopped = set()
    for d in registry:
        if d.running and d.name not in keep:
            d.running = False
            stopped.add(d.name)
    return stopped


def restart_all(registry: ServiceRegistry) -> set[str]:
    started = set()
    for d in registry:
        if not d.running:
            d.running = True
            started.add(d.name)
    return started
