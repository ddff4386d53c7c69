from __future__ import annotations

import enum


class SleepLevel(enum.Enum):
    RAM = "suspend-to-ram"
    DISK = "suspend-to-disk"
    OFF = "complete-off"

    @classmethod
    def parse(cls, token: str) -> "SleepLevel":
        """Look up a level by its canonical lowercase token."""
        for level in cls:
            if level.value == token:
                return level
        raise ValueError(f"unknown sleep level {token!r}")

    def __str__(self) -> str:
        return self.value
