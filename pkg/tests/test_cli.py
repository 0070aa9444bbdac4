"""Config loading diagnostics and command line behavior."""

import re
import textwrap

import pytest

from ptpsec import ConfigError, load_config
from ptpsec.cli import main

MINIMAL = textwrap.dedent("""\
    [scenario]
    name = t
    horizon_s = 2
    seed = 5

    [link]
    base_delay_us = 100
    jitter_us = 30

    [node.gm]
    address = mac:00:11:22:33:44:55
    security_mode = none
    master = true
    priority1 = 64

    [node.slave1]
    address = mac:00:11:22:66:77:88
    security_mode = none
""")


def _write(tmp_path, text, name="t.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


# -- load_config diagnostics -----------------------------------------


def test_missing_scenario_section(tmp_path):
    path = _write(tmp_path, "[node.a]\naddress = mac:00:11:22:33:44:55\n")
    with pytest.raises(ConfigError, match=r"\[scenario\]"):
        load_config(path)


def test_no_nodes(tmp_path):
    path = _write(tmp_path, "[scenario]\nname = t\n")
    with pytest.raises(ConfigError, match="node"):
        load_config(path)


def test_duplicate_address(tmp_path):
    text = MINIMAL.replace("mac:00:11:22:66:77:88", "mac:00:11:22:33:44:55")
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(_write(tmp_path, text))


def test_bad_address(tmp_path):
    text = MINIMAL.replace("mac:00:11:22:66:77:88", "mac:zz:11")
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, text))


def test_unknown_security_mode(tmp_path):
    text = MINIMAL.replace("security_mode = none\nmaster", "security_mode = tls\nmaster")
    with pytest.raises(ConfigError, match="security_mode"):
        load_config(_write(tmp_path, text))


def test_unknown_adversary_class(tmp_path):
    text = MINIMAL + (
        "\n[adversary]\nclass = quantum\naddress = mac:0a:bb:cc:dd:ee:ff\n"
        "attack = sync_spoof\n"
    )
    with pytest.raises(ConfigError, match="class"):
        load_config(_write(tmp_path, text))


def test_unknown_attack(tmp_path):
    text = MINIMAL + (
        "\n[adversary]\nclass = oob_applicative\naddress = mac:0a:bb:cc:dd:ee:ff\n"
        "attack = teleport\n"
    )
    config = load_config(_write(tmp_path, text))
    from ptpsec.scenario import build

    with pytest.raises(ConfigError, match="teleport"):
        build(config)


def test_proxy_target_must_be_a_node(tmp_path):
    text = MINIMAL + (
        "\n[adversary]\nclass = in_band\naddress = mac:0a:bb:cc:dd:ee:ff\n"
        "attack = proxy_grandmaster\ntarget = nobody\n"
    )
    config = load_config(_write(tmp_path, text))
    from ptpsec.scenario import build

    with pytest.raises(ConfigError, match="nobody"):
        build(config)


# -- CLI exit codes and output ---------------------------------------


def test_run_exit_zero(tmp_path, capsys):
    path = _write(tmp_path, MINIMAL)
    code = main(["run", str(path), "--out", str(tmp_path)])
    captured = capsys.readouterr()
    assert code == 0
    assert "scenario: t" in captured.out
    assert (tmp_path / "t_offsets.csv").is_file()
    assert (tmp_path / "t_verdicts.csv").is_file()
    assert (tmp_path / "t_summary.txt").is_file()


def test_malformed_config_exit_two_with_line_number(tmp_path, capsys):
    path = _write(tmp_path, "[scenario]\nname = t\nthis line has no key separator\n")
    code = main(["run", str(path), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 2
    assert re.search(r"line\s*:?\s*\[?3", err), err


def test_semantic_config_error_exit_two(tmp_path, capsys):
    path = _write(tmp_path, "[scenario]\nname = t\n")
    code = main(["run", str(path), "--out", str(tmp_path)])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_missing_scenario_name_exit_two(tmp_path, capsys):
    code = main(["run", "no_such_scenario_anywhere", "--out", str(tmp_path)])
    assert code == 2


def test_capability_violation_exit_one(tmp_path, capsys):
    # An applicative adversary asking to spoof the source address
    # exceeds its declared capabilities at send time.
    text = MINIMAL + (
        "\n[adversary]\nclass = oob_applicative\naddress = mac:0a:bb:cc:dd:ee:ff\n"
        "attack = sync_spoof\nspoof_addr = true\nstart_s = 0.5\nrate_pps = 2\n"
    )
    path = _write(tmp_path, text)
    code = main(["run", str(path), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 1
    assert "capability violation" in err


def test_list_names_at_least_ten_scenarios(capsys):
    assert main(["list"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
    assert len(lines) >= 10
    assert any(l.startswith("baseline_no_attack") for l in lines)


def test_bench_reports_latencies(capsys):
    assert main(["bench", "--iters", "100"]) == 0
    out = capsys.readouterr().out
    assert "sign" in out and "verify" in out


def test_seed_override_changes_outputs(tmp_path, capsys):
    path = _write(tmp_path, MINIMAL)
    a = tmp_path / "a"
    b = tmp_path / "b"
    c = tmp_path / "c"
    for out, seed in ((a, None), (b, "99"), (c, "99")):
        out.mkdir()
        argv = ["run", str(path), "--out", str(out)]
        if seed is not None:
            argv += ["--seed", seed]
        assert main(argv) == 0
    capsys.readouterr()
    base = (a / "t_offsets.csv").read_bytes()
    alt = (b / "t_offsets.csv").read_bytes()
    alt2 = (c / "t_offsets.csv").read_bytes()
    assert alt != base  # different seed, different jitter trace
    assert alt == alt2  # same seed, byte-identical
