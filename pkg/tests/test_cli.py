import json

import pytest

from idlepower.cli import main


def test_run_prints_baseline(capsys):
    assert main(["run", "dual_core_phone"]) == 0
    out = capsys.readouterr().out
    assert "consumed 315.000 mAh, remaining 80.91%" in out
    assert "platform,252.0,0.80" in out


def test_run_duration_override(tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", "--scenario", "laptop", "--duration-hours", "1",
                 "--format", "text", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["consumed_mah"] == pytest.approx(4400 * 315 / 1650 / 8)


def test_compare_all_devices(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["compare", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "config,device,capacity_mah,consumed_mah,remaining_pct"
    assert len(lines) == 1 + 4 * 4


def test_report_from_text_result(tmp_path, capsys):
    saved = tmp_path / "r.json"
    main(["run", "dual_core_phone", "--format", "text", "--out", str(saved)])
    assert main(["report", str(saved), "--format", "csv"]) == 0
    assert "application,63.0,0.20" in capsys.readouterr().out


def test_client_round(tmp_path, capsys):
    state = tmp_path / "state.ini"
    assert main(["client", "--state", str(state),
                 "SET-SCHEDULE sleep=22:30 wake=06:30 level=suspend-to-disk"]) == 0
    assert main(["client", "--state", str(state), "STATUS"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-1].startswith("OK state=active")
    assert "schedule=22:30-06:30 level=suspend-to-disk" in out[-1]


def test_client_rejects(capsys):
    assert main(["client", "SET-SCHEDULE sleep=25:00 wake=06:30 level=complete-off"]) == 5
    assert capsys.readouterr().out.startswith("ERR malformed-time ")


def test_bad_scenario_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["run", str(bad)]) == 3
    assert "scenario-error" in capsys.readouterr().err


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
