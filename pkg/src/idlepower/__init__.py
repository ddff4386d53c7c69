"""User-aware power management engine and idle-drain battery simulator."""

from .battery import (BatteryMonitor, BatteryState, Breakdown, DrainSource, SourceRegistry,
                      breakdown_report, integrate_drain, register_source)
from .harness import (Comparison, ExperimentResult, Scenario, compare_levels, emit_report,
                      load_scenario, run_experiment)
from .levels import SleepLevel
from .power_state import DEFAULT_PROFILES, DeviceProfile, PowerStateMachine, enter_sleep, wake
from .protocol import apply_command, format_command, handle_line, parse_command
from .rtc import BatteryTimer, SimClock, TimerMemory, power_cut_roundtrip
from .scheduler import Engine, SleepSchedule, next_event, run_until, set_schedule
from .services import ServiceRegistry, restart_all, set_minimal_functions, stop_for_level

__version__ = "0.1.0"
