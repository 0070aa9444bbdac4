"""Acceptance gate: one pass/fail line per headline requirement.

Each test exercises one externally stated guarantee end to end, prints a
single [PASS]/[FAIL] line, and asserts it.  Run with `pytest -v` (add
`-s` to see the lines inline).
"""

import csv
import math
import random
import textwrap
import time
from dataclasses import replace
from pathlib import Path

import pytest

from ptpsec import SecurityMode, load_config, run_scenario, security, wire
from ptpsec.attacks import snatch_time_seconds
from ptpsec.identity import clock_id_from_network
from ptpsec.scenario import build
from ptpsec.simnet import Envelope
from ptpsec.timemath import ExchangeSample, compute_delay, compute_offset
from ptpsec.wire import (
    AnnounceBody,
    ClockIdentity,
    FollowUpBody,
    MessageType,
    Mode,
    PtpHeader,
    PtpMessage,
    SyncBody,
    Timestamp,
)

SECONDS = 1_000_000_000
SCENARIO_DIR = Path(__file__).resolve().parents[1] / "src" / "ptpsec" / "scenarios"


def check(label: str, ok: bool, detail: str = ""):
    line = f"[{'PASS' if ok else 'FAIL'}] {label}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


def run_bundled(name: str, out_dir: Path) -> dict:
    config = load_config(SCENARIO_DIR / f"{name}.ini")
    paths = run_scenario(config, out_dir)
    return parse_summary(paths["summary"])


def parse_summary(path: Path) -> dict:
    summary = {}
    for line in path.read_text().splitlines():
        key, _, value = line.partition(":")
        summary[key.strip()] = value.strip()
    return summary


def read_verdicts(out_dir: Path, name: str):
    with open(out_dir / f"{name}_verdicts.csv", newline="") as handle:
        return list(csv.DictReader(handle))


def write_ini(tmp_path: Path, text: str, name: str = "cfg.ini") -> Path:
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return path


# -- 1. exchange-equation inversion ----------------------------------


def test_exchange_inversion_exact():
    rng = random.Random(12345)
    started = time.monotonic()
    for _ in range(10**5):
        delay = rng.randrange(0, 10**9)
        offset = rng.randrange(-(10**9), 10**9)
        t1 = rng.randrange(10**9, 10**12)
        t2 = t1 + delay + offset
        t3 = t2 + rng.randrange(0, 10**6)
        t4 = t3 + delay - offset
        sample = ExchangeSample(
            Timestamp.from_ns(t1),
            Timestamp.from_ns(t2),
            Timestamp.from_ns(t3),
            Timestamp.from_ns(t4),
        )
        assert compute_delay(sample) == delay
        assert compute_offset(sample) == offset
    elapsed = time.monotonic() - started
    check(
        "exchange inversion: 1e5 ground truths recovered exactly, < 1 s",
        elapsed < 1.0,
        f"{elapsed:.2f}s",
    )


# -- 2. the attack/defense matrix ------------------------------------


def _accepted_attack_rows(rows, node, msg_types):
    return [
        r
        for r in rows
        if r["from_adversary"] == "1"
        and r["node"] == node
        and r["verdict"] == "accept"
        and r["msg_type"] in msg_types
    ]


def test_arms_race_matrix(tmp_path):
    started = time.monotonic()

    # sync spoofing: open mode falls, address binding holds.
    spoof_open = run_bundled("fig3_sync_spoof", tmp_path)
    check(
        "matrix: sync spoof succeeds with no protections",
        spoof_open["attack_success"] == "True",
    )
    spoof_bound = run_bundled("fig6_sync_spoof_binding", tmp_path)
    check(
        "matrix: address binding blocks applicative sync spoof, 0 accepted",
        spoof_bound["attack_success"] == "False"
        and spoof_bound["accepted_attack_packets"] == "0",
    )

    # a network adversary spoofs the master's source address: binding
    # falls, the random sequence window reduces it to blind luck.
    net_tpl = """\
        [scenario]
        name = net_spoof_{mode}
        horizon_s = 60
        seed = {seed}

        [link]
        base_delay_us = 100
        jitter_us = 20

        [node.gm]
        address = mac:00:11:22:33:44:55
        security_mode = {mode}
        master = true
        priority1 = 64
        clock_class = 6

        [node.slave1]
        address = mac:00:11:22:66:77:88
        security_mode = {mode}

        [adversary]
        class = oob_network
        address = mac:0a:bb:cc:dd:ee:ff
        attack = sync_spoof
        spoof_addr = true
        rate_pps = {rate}
        start_s = 1.3
    """
    config = load_config(
        write_ini(tmp_path, net_tpl.format(mode="binding", seed=5, rate=1), "nb.ini")
    )
    net_binding = parse_summary(run_scenario(config, tmp_path)["summary"])
    check(
        "matrix: network spoofing defeats address binding",
        net_binding["attack_success"] == "True",
    )

    config = load_config(
        write_ini(tmp_path, net_tpl.format(mode="session16", seed=6, rate=200), "ns.ini")
    )
    paths = run_scenario(config, tmp_path)
    rows = read_verdicts(tmp_path, "net_spoof_session16")
    hostile_syncs = [
        r
        for r in rows
        if r["from_adversary"] == "1"
        and r["node"] == "slave1"
        and r["msg_type"] == "SYNC"
    ]
    hits = sum(1 for r in hostile_syncs if r["verdict"] == "accept")
    n = len(hostile_syncs)
    p = 50 / 65536  # default window width over the 16-bit id space
    sigma = math.sqrt(n * p * (1 - p))
    check(
        "matrix: random windows cut network spoofing to ~w/65536 per packet",
        n >= 10**4 and abs(hits - n * p) <= 3 * sigma,
        f"{hits} hits over {n} packets, expected {n * p:.1f} +/- {3 * sigma:.1f}",
    )

    # window snatching: linear cost on 16-bit ids, hopeless on 32-bit.
    snatch = run_bundled("snatch_small_space", tmp_path)
    check(
        "matrix: window snatch defeats 16-bit sequence windows",
        snatch["attack_success"] == "True",
    )
    snatch32 = run_bundled("fig8_snatch_session32", tmp_path)
    check(
        "matrix: 32-bit ids make snatching infeasible (> 3 days at 1000 pps)",
        snatch32["attack_success"] == "False"
        and snatch_time_seconds(2**32, 16, 1000.0) > 3 * 24 * 3600,
    )

    # insider with the group key: symmetric falls, signatures hold.
    for scenario_name, label in (
        ("insider_masquerade_symmetric", "insider masquerade defeats the group key"),
        ("insider_rogue_master", "insider rogue master defeats the group key"),
    ):
        summary = run_bundled(scenario_name, tmp_path)
        check(f"matrix: {label}", summary["attack_success"] == "True")

    for scenario_name, label in (
        ("insider_masquerade_publickey", "signatures block insider masquerade"),
        ("rogue_master_publickey", "certificates block the rogue master"),
    ):
        summary = run_bundled(scenario_name, tmp_path)
        rows = read_verdicts(tmp_path, scenario_name)
        authenticated_accepts = _accepted_attack_rows(
            rows, "slave1", {"FOLLOW_UP", "ANNOUNCE"}
        )
        check(
            f"matrix: {label}, 0 accepted",
            summary["attack_success"] == "False" and not authenticated_accepts,
        )

    elapsed = time.monotonic() - started
    check("matrix: full sweep under 60 s", elapsed < 60.0, f"{elapsed:.1f}s")


# -- 3./4. servo corridors -------------------------------------------


def test_delay_spoof_corridor(tmp_path):
    summary = run_bundled("fig2_delay_spoof", tmp_path)
    shift = int(summary["max_abs_offset_error_ns"])
    packets = int(summary["attack_packets_sent"])
    check(
        "delay spoofing under slew limits lands in the 15-30 ms corridor",
        15_000_000 <= shift <= 30_000_000 and packets <= 90,
        f"{shift / 1e6:.2f} ms with {packets} packets",
    )


def test_duplicate_master_average(tmp_path):
    config = load_config(SCENARIO_DIR / "fig4_dup_masters.ini")
    paths = run_scenario(config, tmp_path)
    final = {}
    with open(paths["offsets"], newline="") as handle:
        for row in csv.DictReader(handle):
            final[row["node"]] = int(row["true_offset_ns"])
    settled = final["slave1"]
    check(
        "dueling +800 ms masters settle within 10% of the +400 ms average",
        abs(settled - 400_000_000) <= 40_000_000,
        f"{settled / 1e6:.1f} ms at 120 s",
    )


# -- 5. message-cost accounting --------------------------------------


def test_snatch_and_naive_costs(tmp_path):
    config = load_config(SCENARIO_DIR / "snatch_small_space.ini")
    sim = build(config)
    sim.run(int(config.horizon_s * SECONDS))
    probes = sim.adversary.attack.probes_sent
    check(
        "snatch on 4096 ids with window 16 costs 255 probes (+<=16 slack)",
        255 <= probes <= 255 + 16,
        f"{probes} probes",
    )

    naive_ini = write_ini(
        tmp_path,
        """\
        [scenario]
        name = naive_cost
        horizon_s = 40
        seed = 9

        [node.gm]
        address = mac:00:11:22:33:44:55
        security_mode = session16
        master = true
        priority1 = 64
        id_space_bits = 12
        window_size = 16

        [node.slave1]
        address = mac:00:11:22:66:77:88
        security_mode = session16
        id_space_bits = 12
        window_size = 16

        [adversary]
        class = oob_network
        address = mac:0a:bb:cc:dd:ee:ff
        attack = naive_window_attack
        id_space_bits = 12
        window_size = 16
        k = 10
        rate_pps = 100
        start_s = 2
        """,
        "naive.ini",
    )
    config = load_config(naive_ini)
    sim = build(config)
    sim.run(int(config.horizon_s * SECONDS))
    sent = sim.adversary.attack.sent
    check(
        "naive per-window repetition costs at least (R/w)*K = 2560 messages",
        sent >= (4096 // 16) * 10,
        f"{sent} messages",
    )


# -- 6. exact wire sizes ---------------------------------------------


def test_wire_sizes():
    cid = ClockIdentity(bytes(8))

    def header(msg_type, flags=0):
        return PtpHeader(
            messageType=msg_type, sourceClockIdentity=cid, sequenceId=1, flagField=flags
        )

    sizes = {
        "header (SYNC total 44 - 10 B body)": (
            len(wire.encode(PtpMessage(header(MessageType.SYNC), SyncBody()), Mode.BASELINE)),
            34 + 10,
        ),
        "baseline ANNOUNCE 64 B": (
            len(
                wire.encode(
                    PtpMessage(
                        header(MessageType.ANNOUNCE),
                        AnnounceBody(grandmasterIdentity=cid),
                    ),
                    Mode.BASELINE,
                )
            ),
            64,
        ),
        "extended ANNOUNCE 160 B": (
            len(
                wire.encode(
                    PtpMessage(
                        header(MessageType.ANNOUNCE, wire.SECURITY_FLAG),
                        AnnounceBody(
                            grandmasterIdentity=cid,
                            publicKey=bytes(32),
                            managementSignature=bytes(64),
                        ),
                    ),
                    Mode.EXTENDED,
                )
            ),
            160,
        ),
        "baseline FOLLOW_UP 44 B": (
            len(
                wire.encode(
                    PtpMessage(
                        header(MessageType.FOLLOW_UP), FollowUpBody(Timestamp.from_ns(1))
                    ),
                    Mode.BASELINE,
                )
            ),
            44,
        ),
        "extended FOLLOW_UP 108 B": (
            len(
                wire.encode(
                    PtpMessage(
                        header(MessageType.FOLLOW_UP, wire.SECURITY_FLAG),
                        FollowUpBody(Timestamp.from_ns(1), bytes(64)),
                    ),
                    Mode.EXTENDED,
                )
            ),
            108,
        ),
    }
    ok = all(actual == expected for actual, expected in sizes.values())
    detail = ", ".join(f"{k}={a}" for k, (a, _) in sizes.items())
    check("wire sizes exact: header 34, ANNOUNCE 64/160, FOLLOW_UP 44/108", ok, detail)


# -- 7. replay isolation ---------------------------------------------

SIGNED_PAIR_INI = """\
    [scenario]
    name = signed_pair
    horizon_s = {horizon}
    seed = 3

    [node.gm]
    address = mac:00:11:22:33:44:55
    security_mode = public_key
    master = true
    priority1 = 64
    clock_class = 6
    {gm_extra}

    [node.slave1]
    address = mac:00:11:22:66:77:88
    security_mode = public_key
    {slave_extra}
"""


def _signed_pair_sim(tmp_path, horizon=6, gm_extra="", slave_extra=""):
    ini = write_ini(
        tmp_path,
        SIGNED_PAIR_INI.format(horizon=horizon, gm_extra=gm_extra, slave_extra=slave_extra),
        "pair.ini",
    )
    config = load_config(ini)
    sim = build(config)
    sim.run(int(horizon * SECONDS))
    return sim


def test_replayed_signed_followup_fails_the_window_not_the_signature(tmp_path):
    sim = _signed_pair_sim(tmp_path)
    gm = sim.nodes["gm"]
    slave = sim.nodes["slave1"]
    assert slave.parent is not None and slave.parent.masterPublicKey is not None
    now = int(6.5 * SECONDS)

    def deliver(msg):
        env = Envelope(
            msg=msg,
            mode=Mode.EXTENDED,
            claimed_addr=gm.address,
            sender="gm",
            dest_addr=None,
        )
        _, verdicts = slave.on_message(env, now)
        return verdicts[0]

    def header(msg_type, seq):
        return PtpHeader(
            messageType=msg_type,
            sourceClockIdentity=gm.clock_id,
            sequenceId=seq,
            flagField=wire.SECURITY_FLAG,
        )

    seq = slave.parent.windows[MessageType.SYNC].expected
    sync = PtpMessage(header(MessageType.SYNC, seq), SyncBody())
    follow = PtpMessage(
        header(MessageType.FOLLOW_UP, seq), FollowUpBody(Timestamp.from_ns(now))
    )
    follow = PtpMessage(
        follow.header,
        replace(follow.body, signature=security.sign_followup(follow, gm.config.keys)),
    )
    assert deliver(sync).accepted
    assert deliver(follow).accepted

    # March the receive window forward by 100 window-widths of genuine
    # traffic, then re-inject the recorded (still validly signed) pair.
    width = slave.config.window_size
    space = 1 << 32
    for step in range(1, 100 * width + 1):
        assert deliver(PtpMessage(header(MessageType.SYNC, (seq + step) % space), SyncBody())).accepted

    replay_sync = deliver(sync)
    replay_follow = deliver(follow)
    signature_ok = security.verify_followup(follow, slave.parent.masterPublicKey)
    check(
        "replayed signed pair: signature still valid, window verdict false",
        signature_ok
        and not replay_sync.accepted
        and replay_sync.reason == "window_reject"
        and not replay_follow.accepted,
        f"sync reason {replay_sync.reason}, follow-up reason {replay_follow.reason}",
    )


# -- 8. certificate verification caching -----------------------------


def test_certificate_cache_verifies_once(tmp_path):
    sim = _signed_pair_sim(tmp_path, horizon=3)
    gm = sim.nodes["gm"]
    verifier = security.CertificateVerifier(gm.config.mgmt_pub)
    results = [verifier.verify(gm.clock_id, gm.config.certificate) for _ in range(100)]
    check(
        "100 identical certified announces cost exactly 1 crypto check",
        all(results) and verifier.crypto_checks == 1,
        f"{verifier.crypto_checks} checks",
    )


# -- 9. crypto performance -------------------------------------------


def test_crypto_latency_and_sustained_rate(tmp_path):
    bench = security.benchmark_crypto(iterations=200)
    check(
        "sign and verify medians under 2 ms",
        bench["sign"] < 2e6 and bench["verify"] < 2e6,
        f"sign {bench['sign'] / 1e6:.3f} ms, verify {bench['verify'] / 1e6:.3f} ms",
    )

    started = time.monotonic()
    sim = _signed_pair_sim(
        tmp_path,
        horizon=2,
        gm_extra="sync_interval_s = 0.0078125",
    )
    wall = time.monotonic() - started
    signed_ok = sum(
        1
        for v in sim.metrics.verdicts
        if v.node == "slave1" and v.msg_type == "FOLLOW_UP" and v.accepted
    )
    check(
        "128 signed follow-ups per second sustained faster than real time",
        signed_ok >= 200 and wall < 2.0,
        f"{signed_ok} verified pairs in {wall:.2f}s wall for 2 simulated seconds",
    )


# -- 10. determinism -------------------------------------------------


def test_every_bundled_scenario_is_deterministic(tmp_path):
    mismatches = []
    for ini in sorted(SCENARIO_DIR.glob("*.ini")):
        config_a = load_config(ini)
        config_b = load_config(ini)
        dir_a = tmp_path / f"a_{ini.stem}"
        dir_b = tmp_path / f"b_{ini.stem}"
        dir_a.mkdir()
        dir_b.mkdir()
        paths_a = run_scenario(config_a, dir_a)
        paths_b = run_scenario(config_b, dir_b)
        for key in ("offsets", "verdicts"):
            if paths_a[key].read_bytes() != paths_b[key].read_bytes():
                mismatches.append(f"{ini.stem}:{key}")
    check(
        "byte-identical CSVs on repeat runs of every bundled scenario",
        not mismatches,
        ", ".join(mismatches) or "18 scenarios",
    )
