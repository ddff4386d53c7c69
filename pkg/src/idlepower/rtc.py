"""The battery timer: a one-shot RTC alarm whose memory survives power cuts.

The clocksource half is :class:`SimClock` (monotone simulated minutes); the
clockevent half is :meth:`BatteryTimer.arm` / :meth:`BatteryTimer.advance`.

Persisted image layout, 20 bytes, big-endian::

    offset  size  field
    0       4     magic b"BTMR"
    4       1     format version (1)
    5       1     flags, bit 0 = armed; other bits zero
    6       2     reserved, zero
    8       8     wake_at, signed minutes (0 when disarmed)
    16      4     CRC-32 (zlib) of bytes 0..15

Any length, checksum, magic, version, flag or reserved-field mismatch is
reported as :class:`~idlepower.errors.CorruptImage`.
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import AlreadyArmed, ClockRegression, CorruptImage, PastInstant

MAGIC = b"BTMR"
VERSION = 1
_BODY = struct.Struct(">4sBBHq")
IMAGE_SIZE = _BODY.size + 4


@dataclass(frozen=True)
class TimerMemory:
    armed: bool = False
    wake_at: Optional[int] = None

    def __post_init__(self):
        if self.armed != (self.wake_at is not None):
            raise ValueError("wake_at must be set exactly when armed")


def serialize(memory: TimerMemory) -> bytes:
    body = _BODY.pack(MAGIC, VERSION, int(memory.armed), 0, memory.wake_at or 0)
    return body + struct.pack(">I", zlib.crc32(body))


def deserialize(image: bytes) -> TimerMemory:
    if len(image) != IMAGE_SIZE:
        raise CorruptImage(f"image is {len(image)} bytes, expected {IMAGE_SIZE}")
    body, (crc,) = image[:-4], struct.unpack(">I", image[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptImage("checksum mismatch")
    magic, version, flags, reserved, wake_at = _BODY.unpack(body)
    if magic != MAGIC or version != VERSION or flags > 1 or reserved:
        raise CorruptImage("bad header")
    if flags:
        return TimerMemory(True, wake_at)
    if wake_at:
        raise CorruptImage("disarmed image carries a wake instant")
    return TimerMemory()


@dataclass(frozen=True)
class WakeEvent:
    at: int


class SimClock:
    def __init__(self, now: float = 0.0):
        self.now = now

    def advance(self, to: float) -> float:
        if to < self.now:
            raise ClockRegression(f"clock at {self.now}, asked for {to}")
        self.now = to
        return self.now


class BatteryTimer:
    """One-shot alarm with minute resolution.

    The persisted image is rewritten before :meth:`arm` or a firing returns,
    so a power cut at any point afterwards still sees the latest state. If
    ``path`` is given the image is also written there atomically.
    """

    def __init__(self, memory: TimerMemory | None = None, path: str | os.PathLike | None = None):
        self.path = Path(path) if path is not None else None
        self._persist(memory or TimerMemory())

    @property
    def armed(self) -> bool:
        return self.memory.armed

    @property
    def wake_at(self) -> Optional[int]:
        return self.memory.wake_at

    def _persist(self, memory: TimerMemory) -> None:
        self.memory = memory
        self.image = serialize(memory)
        if self.path is not None:
            fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=self.path.name)
            with os.fdopen(fd, "wb") as fh:
                fh.write(self.image)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)

    def arm(self, wake_at: int, now: float) -> "BatteryTimer":
        if int(wake_at) != wake_at:
            raise ValueError(f"wake_at must be a whole minute, got {wake_at}")
        if self.armed:
            raise AlreadyArmed(f"already armed for t={self.wake_at}")
        if not wake_at > now:
            raise PastInstant(f"wake_at {wake_at} is not after now {now}")
        self._persist(TimerMemory(True, int(wake_at)))
        return self

    def disarm(self) -> None:
        self._persist(TimerMemory())

    def advance(self, clock: SimClock, to: float) -> Optional[WakeEvent]:
        """Move ``clock`` to ``to``; fire if the alarm instant was reached.

        The event carries the armed instant, not ``to``.
        """
        clock.advance(to)
        if self.armed and self.wake_at <= to:
            event = WakeEvent(self.wake_at)
            self.disarm()
            return event
        return None

    @classmethod
    def from_image(cls, image: bytes, path=None) -> "BatteryTimer":
        return cls(deserialize(image), path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "BatteryTimer":
        return cls.from_image(Path(path).read_bytes(), path)


def power_cut_roundtrip(timer: BatteryTimer) -> BatteryTimer:
    """Rebuild ``timer`` purely from its persisted image, as after total power loss."""
    if timer.path is not None and timer.path.exists():
        return BatteryTimer.load(timer.path)
    return BatteryTimer.from_image(timer.image, timer.path)
