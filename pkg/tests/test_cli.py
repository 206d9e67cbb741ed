import json
from pathlib import Path

import pytest

from drwlog.cli import EXIT_CLAMP, EXIT_CONFIG, EXIT_FAIL, EXIT_OK, ConfigError, main, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def verify(tmp_path, name, *extra):
    out = tmp_path / f"{name}.json"
    code = main(["verify", "--config", str(CONFIGS / name), "--out", str(out), *extra])
    return code, out


@pytest.mark.parametrize("name,expected", [
    ("acceptance.toml", EXIT_OK), ("negative_control.toml", EXIT_FAIL), ("literal_readings.toml", EXIT_FAIL),
    ("malformed.toml", EXIT_CONFIG), ("clamp.toml", EXIT_CLAMP),
])
def test_exit_codes(tmp_path, name, expected):  # [TRIVIAL]
    assert verify(tmp_path, name)[0] == expected


def test_reports_are_byte_identical_across_jobs(tmp_path):  # [TRIVIAL]
    _, one = verify(tmp_path, "acceptance.toml")
    text_one = one.read_bytes()
    code, two = verify(tmp_path, "acceptance.toml", "--jobs", "3")
    assert code == EXIT_OK and two.read_bytes() == text_one
    reports = json.loads(text_one)
    assert all(r["elapsed_ms"] is None and r["schema"] == 1 for r in reports)


def test_timings_are_opt_in(tmp_path):  # [TRIVIAL]
    _, out = verify(tmp_path, "negative_control.toml", "--timings")
    assert all(isinstance(r["elapsed_ms"], int) for r in json.loads(out.read_text()))


def test_negative_control_names_a_witness(tmp_path):  # [TRIVIAL]
    _, out = verify(tmp_path, "negative_control.toml")
    report = json.loads(out.read_text())[0]
    assert not report["passed"] and "generator outside G^r" in report["witnesses"][0]


def test_environment_seed_overrides_config(monkeypatch):  # [TRIVIAL]
    text = (CONFIGS / "acceptance.toml").read_text()
    monkeypatch.setenv("DRWLOG_SEED", "12345")
    assert {s.seed for s in parse_config(text)} == {12345}
    monkeypatch.setenv("DRWLOG_SEED", "-1")
    with pytest.raises(ConfigError):
        parse_config(text)
    monkeypatch.setenv("DRWLOG_SEED", "abc")
    with pytest.raises(ConfigError):
        parse_config(text)


@pytest.mark.parametrize("text", [
    "schema = 2\n[[scenario]]\np = 3\nr = [1]\nq = 1\nN = 5\nsuites = ['thm1']\n",
    "[[scenario]]\np = 3\nr = [1]\nq = 1\nN = 5\nsuites = ['nope']\n",
    "[[scenario]]\np = 3\nr = [1]\nq = 1\nN = 5\nsuites = ['thm1']\nreading = 'loose'\n",
    "[[scenario]]\np = 3\nq = 1\nN = 5\nsuites = ['thm1']\n",
    "[[scenario]\n",
])
def test_config_errors(text):  # [TRIVIAL]
    with pytest.raises(ConfigError):
        parse_config(text)


def test_decompose_command(capsys):  # [TRIVIAL]
    code = main(["decompose", "--model", "p=3 e=1 f=1 g=1 r=1 N=5", "--form", "dlog(1+T1) + 2*dlog(1+T1^2)"])
    out = capsys.readouterr().out
    assert code == EXIT_OK and "# round trip: ok" in out
    code = main(["decompose", "--model", "p=3 e=1 f=1 g=1 r=1 N=5", "--form", "T1^3*dlog(T1)"])  # T^2 dT is not exact
    assert code == EXIT_FAIL
    assert main(["decompose", "--model", "p=3 e=0 f=1 g=1 r=1", "--form", "dlog(T1 +"]) == EXIT_CONFIG


def test_explore_command(tmp_path):  # [TRIVIAL]
    out = tmp_path / "explore.json"
    assert main(["explore", "--config", str(CONFIGS / "explore.toml"), "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["violations"] == []


def test_usage_errors():  # [TRIVIAL]
    assert main(["verify"]) == EXIT_CONFIG
    assert main(["verify", "--config", "x.toml", "--jobs", "0"]) == EXIT_CONFIG
    assert main(["verify", "--config", "/nonexistent.toml"]) == EXIT_CONFIG
