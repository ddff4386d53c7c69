"""Acceptance gate: one test per exit criterion, each at its stated tolerance.

A PASS / FAIL line per criterion is printed in the terminal summary.
"""

import json
import math
import random
import time

import numpy as np
import pytest

from oracles import expected_consumption

from idlepower.cli import main
from idlepower.errors import CorruptImage
from idlepower.harness import SHIPPED, Scenario, compare_levels, load_scenario, run_experiment
from idlepower.levels import SleepLevel
from idlepower.power_state import DeviceProfile
from idlepower.protocol import (Disable, SetMinimal, SetSchedule, Status, format_command,
                                handle_line, parse_command)
from idlepower.rtc import BatteryTimer, TimerMemory, deserialize, power_cut_roundtrip, serialize
from idlepower.scheduler import Engine, SleepSchedule

DAEMONS = (("cell standby", "platform"), ("device idle", "platform"), ("Android OS", "platform"),
           ("Wi-Fi", "application"), ("Screen", "application"), ("Gmail", "application"))


def random_scenario(rng: np.random.Generator, *, leak=0.0, snapshot=0.0, restore=0.0,
                    sleep=None, wake=None, level=SleepLevel.OFF, start=None, hours=None,
                    minimal=()):
    idle = float(rng.uniform(5, 100))
    timer = float(rng.uniform(0.01, 0.2 * idle))
    retention = float(rng.uniform(0.01, 0.9 * (idle - timer)))
    profile = DeviceProfile("random", float(idle * rng.uniform(60, 200)), idle, retention,
                            timer, leak, snapshot, restore)
    weights = rng.dirichlet(np.ones(len(DAEMONS)))
    rates = [idle * float(w) for w in weights[:-1]]
    rates.append(idle - math.fsum(rates))
    sources = tuple((n, c, r) for (n, c), r in zip(DAEMONS, rates))
    sleep = int(rng.integers(1440)) if sleep is None else sleep
    if wake is None:
        wake = (sleep + int(rng.integers(1, 1440))) % 1440
    schedule = SleepSchedule(sleep, wake, level)
    start = sleep if start is None else start
    hours = schedule.window_minutes / 60 if hours is None else hours
    return Scenario("random", profile, sources, schedule, frozenset(minimal), start, hours)


def test_ac1_fig1_baseline_reproduction(tmp_path):
    out = tmp_path / "baseline.json"
    t0 = time.perf_counter()
    code = main(["run", "dual_core_phone", "--format", "text", "--out", str(out)])
    elapsed = time.perf_counter() - t0
    r = json.loads(out.read_text())
    cats = {name: (mah, share) for name, mah, share in r["breakdown"]["per_category"]}
    print(f"AC1 consumed={r['consumed_mah']} remaining={r['remaining_pct']:.4f}% "
          f"categories={cats} runtime={elapsed:.3f}s")
    assert code == 0
    assert r["consumed_mah"] == pytest.approx(315, abs=0.001)
    assert r["remaining_pct"] == pytest.approx(80.91, abs=0.01)
    assert cats["platform"][0] == pytest.approx(252, abs=0.001 * 315)
    assert cats["application"][0] == pytest.approx(63, abs=0.001 * 315)
    assert cats["platform"][1] == pytest.approx(0.80, abs=0.001)
    assert cats["application"][1] == pytest.approx(0.20, abs=0.001)
    assert elapsed < 1.0


def test_ac2_eighteen_point_savings(tmp_path):
    out = tmp_path / "compare.json"
    t0 = time.perf_counter()
    code = main(["compare", *SHIPPED, "--format", "text", "--out", str(out)])
    elapsed = time.perf_counter() - t0
    rows = json.loads(out.read_text())["rows"]
    pct = {(device, config): remaining for config, device, _, _, remaining in rows}
    savings = {d: pct[d, "complete-off"] - pct[d, "before"] for d in SHIPPED}
    print(f"AC2 savings(points)={savings} runtime={elapsed:.3f}s")
    assert code == 0
    for device in SHIPPED:
        assert savings[device] == pytest.approx(18, abs=0.5)
    assert elapsed < 5.0


def test_ac3_level_ordering_random_profiles():
    rng = np.random.default_rng(3)
    for _ in range(100):
        sc = random_scenario(rng)
        assert sc.profile.ordered
        c = compare_levels(sc)
        rem = {r.config: c.remaining("random", r.config) for r in c.rows}
        assert rem["before"] < rem["suspend-to-ram"] < rem["suspend-to-disk"]
        assert rem["suspend-to-disk"] == pytest.approx(rem["complete-off"], abs=1e-6)
    print("AC3 100 random profiles ordered before < ram < disk = off")


def test_ac4_case_a_anomaly():
    rng = np.random.default_rng(4)
    lengths = [1, 2, 5] + [int(x) for x in rng.integers(1, 1440, 97)]
    for minutes in lengths:
        leak = float(rng.uniform(1e-3, 5.0))
        sleep = int(rng.integers(1440))
        sc = random_scenario(rng, leak=leak, sleep=sleep, wake=(sleep + minutes) % 1440)
        disk = run_experiment(sc.with_level(SleepLevel.DISK))
        off = run_experiment(sc.with_level(SleepLevel.OFF))
        assert disk.remaining < off.remaining, (minutes, leak)
    print("AC4 100 random leak rates: remaining(disk) < remaining(off)")


def test_ac5_wake_guarantee():
    rng = np.random.default_rng(5)
    cycles = 0
    for i in range(1000):
        level = list(SleepLevel)[i % 3]
        sc = random_scenario(rng, level=level)
        start = int(rng.integers(0, 1440))
        engine = Engine(sc.profile, sc.sources, start=start)
        names = set(engine.services.names)
        if level is SleepLevel.RAM:
            engine.set_minimal(rng.choice(sorted(names), int(rng.integers(0, 3)), replace=False))
        engine.set_schedule(sc.schedule)
        pre_sleep = engine.services.running
        log = engine.run_until(start + 2 * 1440)
        assert not engine.battery.depleted
        kinds = [e.kind for e in log]
        assert "failure" not in kinds
        entered = [j for j, k in enumerate(kinds) if k == "enter_sleep"]
        assert entered
        for j in entered:
            arm = log[j - 1]
            assert arm.kind == "arm"
            wake_at = arm.info["wake_at"]
            assert wake_at % 1440 == sc.schedule.wake_time
            later = log[j + 1:]
            fires = [e for e in later if e.kind == "timer_fire"]
            if wake_at > engine.now:
                assert not fires
                continue
            assert fires[0].at == wake_at
            wakes = [e for e in later if e.kind == "wake"]
            assert wakes[0].at == wake_at
            assert later.index(wakes[0]) == later.index(fires[0]) + 1
            assert set(wakes[0].info["drains"]) == pre_sleep
            cycles += 1
        # one wake per successful sleep that came due
        due = sum(1 for j in entered if log[j - 1].info["wake_at"] <= engine.now)
        assert kinds.count("wake") == kinds.count("timer_fire") == due
        if not engine.machine.asleep:
            assert engine.services.running == pre_sleep
    print(f"AC5 1000 random schedules, {cycles} sleep/wake cycles verified")


def test_ac6_timer_persistence_fuzz():
    rng = random.Random(6)
    for _ in range(1000):
        if rng.random() < 0.2:
            timer = BatteryTimer()
        else:
            now = rng.randrange(-(2**62), 2**62)
            timer = BatteryTimer().arm(now + rng.randrange(1, 2**61), now)
        assert power_cut_roundtrip(timer).memory == timer.memory
    rejected = 0
    for _ in range(1000):
        memory = TimerMemory(True, rng.randrange(-(2**63), 2**63)) if rng.random() < 0.8 \
            else TimerMemory()
        corrupt = bytearray(serialize(memory))
        for _ in range(rng.randint(1, 3)):
            corrupt[rng.randrange(len(corrupt))] ^= rng.randrange(1, 256)
        if rng.random() < 0.1:
            corrupt = corrupt[: rng.randrange(len(corrupt))]
        if bytes(corrupt) == serialize(memory):
            corrupt[0] ^= 0xFF
        try:
            deserialize(bytes(corrupt))
        except CorruptImage:
            rejected += 1
    print(f"AC6 1000 round trips identical, {rejected}/1000 corrupted images rejected")
    assert rejected == 1000


def test_ac7_integration_oracle():
    rng = np.random.default_rng(7)
    worst_oracle = worst_step = 0.0
    for i in range(500):
        level = list(SleepLevel)[i % 3]
        disk = level is SleepLevel.DISK
        snapshot = float(rng.uniform(0, 2)) if disk else 0.0
        restore = float(rng.uniform(0, 2)) if disk else 0.0
        leak = float(rng.uniform(0, 1)) if disk else 0.0
        minimal = ()
        if level is SleepLevel.RAM:
            minimal = tuple(rng.choice([n for n, _ in DAEMONS], int(rng.integers(0, 3)),
                                       replace=False))
        start = int(rng.integers(0, 1440))
        minutes = int(rng.integers(1, 1441))
        sc = random_scenario(rng, leak=leak, snapshot=snapshot, restore=restore, level=level,
                             start=start, hours=minutes / 60, minimal=minimal)
        coarse = run_experiment(sc)
        fine = run_experiment(sc, step_minutes=1)

        p = sc.profile
        asleep = p.timer_rate + {
            SleepLevel.RAM: p.ram_retention_rate + sum(r for n, _, r in sc.sources if n in minimal),
            SleepLevel.DISK: p.peripheral_leak_rate,
            SleepLevel.OFF: 0.0}[level]
        expected = expected_consumption(start, minutes, sc.schedule.sleep_time,
                                        sc.schedule.wake_time, p.idle_rate, asleep,
                                        snapshot, restore)
        worst_oracle = max(worst_oracle, abs(coarse.consumed - expected) / expected)
        worst_step = max(worst_step, abs(coarse.consumed - fine.consumed) / coarse.consumed)
    print(f"AC7 500 scenarios: max rel err vs closed form {worst_oracle:.2e}, "
          f"single vs 1-minute steps {worst_step:.2e}")
    assert worst_oracle <= 1e-6
    assert worst_step <= 1e-9


def _valid_corpus(rng: random.Random, n: int):
    pool = ["phone", "sms", "cell standby", "Wi-Fi", "o'clock", "a=b", "x y z"]
    for _ in range(n):
        k = rng.randrange(4)
        if k == 0:
            yield SetSchedule(rng.randrange(1440), rng.randrange(1440), rng.choice(list(SleepLevel)))
        elif k == 1:
            yield SetMinimal(frozenset(rng.sample(pool, rng.randrange(len(pool) + 1))))
        else:
            yield (Status(), Disable())[k - 2]


MALFORMED = [
    ("", "empty-line"),
    ("   \t", "empty-line"),
    ("REBOOT", "unknown-verb"),
    ("SET_SCHEDULE sleep=22:30 wake=06:30 level=complete-off", "unknown-verb"),
    ("SET-SCHEDULE sleep=24:00 wake=06:30 level=complete-off", "malformed-time"),
    ("SET-SCHEDULE sleep=22:60 wake=06:30 level=complete-off", "malformed-time"),
    ("SET-SCHEDULE sleep=22:30 wake=6:30 level=complete-off", "malformed-time"),
    ("SET-SCHEDULE sleep=22:30 wake=06:30 level=hibernate", "unknown-level"),
    ("SET-SCHEDULE sleep=22:30 wake=06:30 level=Complete-Off", "unknown-level"),
    ("SET-SCHEDULE sleep=22:30 wake=06:30", "missing-argument"),
    ("SET-SCHEDULE sleep=22:30 wake=06:30 level=complete-off mode=x", "unexpected-argument"),
    ("STATUS now", "unexpected-argument"),
    ("SET-MINIMAL names='phone", "bad-syntax"),
    ("SET-MINIMAL names=phone,,sms", "bad-name"),
    ("SET-MINIMAL names=pager", "unknown-daemon"),
    ("SET-SCHEDULE sleep=10:00 wake=10:00 level=complete-off", "equal-times"),
]


def test_ac8_protocol_round_trip():
    rng = random.Random(8)
    count = 0
    for command in _valid_corpus(rng, 3000):
        text = format_command(command)
        assert parse_command(text) == command
        assert format_command(parse_command(text)) == text
        count += 1

    sc = load_scenario("dual_core_phone")
    sources = sc.sources + (("phone", "application", 0.0), ("sms", "application", 0.0))
    engine = Engine(sc.profile, sources, start=sc.start)
    handle_line("SET-SCHEDULE sleep=01:00 wake=02:00 level=suspend-to-ram", engine)
    handle_line("SET-MINIMAL names=phone", engine)

    def state():
        return (engine.schedule, engine.store.minimal, engine.services.snapshot(),
                engine.machine.state, engine.battery)

    malformed = list(MALFORMED)
    for _ in range(500):
        hh, mm = rng.choice([(rng.randrange(24, 100), 0), (0, rng.randrange(60, 100))])
        malformed.append((f"SET-SCHEDULE sleep={hh:02d}:{mm:02d} wake=06:30 level=complete-off",
                          "malformed-time"))
    before = state()
    for line, code in malformed:
        reply = handle_line(line, engine)
        assert reply.startswith(f"ERR {code} "), (line, reply)
        assert state() == before
    print(f"AC8 {count} valid commands round-trip, {len(malformed)} malformed lines "
          "rejected with stable codes and no state change")
