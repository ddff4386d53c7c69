"""
The battery timer survives a power cut
======================================

The wake instant lives in a 20-byte checksummed image. Rebuilding the timer
from that image alone restores it exactly; a damaged image is refused.
"""

import tempfile
from pathlib import Path

from idlepower import BatteryTimer, SimClock, power_cut_roundtrip
from idlepower.errors import CorruptImage
from idlepower.rtc import deserialize

path = Path(tempfile.mkdtemp()) / "timer.img"
timer = BatteryTimer(path=path).arm(1830, now=1350)
print("image:", path.read_bytes().hex(" "))

# all that is left after the cut is the file
restored = power_cut_roundtrip(timer)
print("restored:", restored.memory)

clock = SimClock(1350)
print("fires at:", restored.advance(clock, 2000))

damaged = bytearray(path.read_bytes())
damaged[9] ^= 0x40
try:
    deserialize(bytes(damaged))
except CorruptImage as err:
    print("damaged image refused:", err)
