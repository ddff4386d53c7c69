"""
Driving the engine through the client protocol
==============================================

The user sets a schedule and the phone / SMS minimal functions, then the
simulated clock runs across one night. Commands sent while the device is
asleep are refused unless it sits in suspend-to-ram and only asks for status.
"""

import tempfile
from pathlib import Path

from idlepower import Engine, handle_line, load_scenario

scenario = load_scenario("dual_core_phone")
# phone and SMS are not among the six default daemons; add them with no drain of their own
sources = scenario.sources + (("phone", "application", 0.0), ("sms", "application", 0.0))

state = Path(tempfile.mkdtemp()) / "engine.ini"
engine = Engine(scenario.profile, sources, start=scenario.start, state_path=state)

for line in ["STATUS",
             "SET-MINIMAL names=phone,sms",
             "SET-SCHEDULE sleep=23:00 wake=07:00 level=suspend-to-ram",
             "SET-SCHEDULE sleep=25:00 wake=07:00 level=suspend-to-ram"]:
    print(f"> {line}\n  {handle_line(line, engine)}")

# queue two commands for the middle of the night, then run until 07:30
engine.submit("STATUS", at=scenario.start + 120)
engine.submit("DISABLE", at=scenario.start + 121)
for event in engine.run_until(scenario.start + 9 * 60):
    print(event.line())

print(f"\nstate file {state}:\n{state.read_text()}")

# a restarted engine picks the schedule back up from the state file
again = Engine(scenario.profile, sources, state_path=state)
print(handle_line("STATUS", again))
