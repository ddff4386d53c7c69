"""
Before vs the three sleep levels, on all four devices
=====================================================

Every device idles 22:30 to 06:30. "before" keeps every daemon running; the
other three configurations sleep for the whole window.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from idlepower import SleepLevel, compare_levels, load_scenario, run_experiment
from idlepower.harness import SHIPPED, render

table = None
for name in SHIPPED:
    c = compare_levels(load_scenario(name))
    table = c if table is None else table + c
    print(f"{name:17s} complete-off keeps {c.savings_points(name):.2f} more points of capacity")

print()
print(render(table, "csv"))

# remaining-capacity curves for the dual-core phone, sampled every 10 min
scenario = load_scenario("dual_core_phone")
fig, ax = plt.subplots()
for level in (None, *SleepLevel):
    r = run_experiment(scenario.with_level(level))
    series = r.series_array()
    hours = (series[:, 0] - series[0, 0]) / 60
    ax.plot(hours, 100 * series[:, 1] / r.capacity, label=r.config)
ax.set_xlabel("hours since 22:30")
ax.set_ylabel("available capacity (%)")
ax.legend()
fig.savefig("level_comparison.png", dpi=100)
print("wrote level_comparison.png")
