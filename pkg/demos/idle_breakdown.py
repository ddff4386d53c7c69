"""
Where the idle drain goes
=========================

Eight hours of factory-reset idling on the dual-core phone, attributed per
source and per category by the battery monitor.
"""

from idlepower import load_scenario, run_experiment
from idlepower.harness import render

scenario = load_scenario("dual_core_phone")
result = run_experiment(scenario)

print(f"consumed {result.consumed:.1f} mAh of {result.capacity:.0f} mAh "
      f"({100 - result.remaining_fraction:.2f} %)")

# platform vs application, then the six daemons
for share in result.breakdown.per_category:
    print(f"  {share.name:12s} {share.consumed:6.1f} mAh  {share.share:.0%}")

print()
print(render(result, "csv"))
