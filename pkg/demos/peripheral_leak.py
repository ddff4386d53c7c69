"""
When suspend-to-disk loses to complete-off
==========================================

With no peripheral leakage, suspend-to-disk and complete-off only power the
battery timer and drain identically. Any current left flowing into
peripherals during suspend-to-disk (an SoC design matter) tips the balance.
"""

from dataclasses import replace

import numpy as np

from idlepower import SleepLevel, load_scenario, run_experiment

base = load_scenario("dual_core_phone")

for leak in np.array([0.0, 0.1, 0.5, 2.0]):
    scenario = replace(base, profile=base.profile.with_(peripheral_leak_rate=float(leak)))
    disk = run_experiment(scenario.with_level(SleepLevel.DISK))
    off = run_experiment(scenario.with_level(SleepLevel.OFF))
    print(f"leak {leak:4.1f} mA: disk keeps {disk.remaining:8.3f} mAh, "
          f"off keeps {off.remaining:8.3f} mAh")

# snapshot and restore are one-off costs on top of the leak
costly = replace(base, profile=base.profile.with_(snapshot_cost=1.0, restore_cost=1.0))
r = run_experiment(costly.with_level(SleepLevel.DISK))
print(f"with 1 mAh snapshot + 1 mAh restore: consumed {r.consumed:.2f} mAh")
