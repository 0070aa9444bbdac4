"""Event loop determinism, capability enforcement, and MITM taps."""

import pytest

from ptpsec import scenario
from ptpsec.identity import NetworkAddress
from ptpsec.node import NodeConfig, PtpNode, SecurityMode
from ptpsec.simnet import (
    DELAY,
    DROP,
    PASS,
    Adversary,
    AdversaryCapability,
    CapabilityViolation,
    LinkModel,
    Simulation,
)
from ptpsec.timemath import ServoState
from ptpsec.wire import MessageType

SECONDS = 10**9
GM = NetworkAddress.mac("00:11:22:33:44:55")
SLAVE = NetworkAddress.mac("00:11:22:66:77:88")
EVIL = NetworkAddress.mac("0a:bb:cc:dd:ee:ff")


def uncapped_servo():
    return ServoState(maxSlewRate=10**15)


def two_node_sim(seed=1, link=None, slave_drift=0):
    sim = Simulation(seed=seed, link=link or LinkModel())
    sim.add_node(
        PtpNode(
            NodeConfig(
                name="gm",
                address=GM,
                master_capable=True,
                priority1=64,
                clock_class=6,
                servo=uncapped_servo(),
            ),
            sim.rng,
        )
    )
    sim.add_node(
        PtpNode(
            NodeConfig(
                name="slave",
                address=SLAVE,
                drift_ppb=slave_drift,
                servo=uncapped_servo(),
            ),
            sim.rng,
        )
    )
    return sim


def test_no_adversary_convergence_below_10us():
    sim = two_node_sim(slave_drift=200)
    metrics = sim.run(30 * SECONDS)
    tail = [off for t, n, off in metrics.offsets if n == "slave" and t > 20 * SECONDS]
    assert tail and max(abs(o) for o in tail) < 10_000


def test_same_seed_same_trace():
    a = two_node_sim(seed=77, link=LinkModel(jitter_ns=50_000)).run(20 * SECONDS)
    b = two_node_sim(seed=77, link=LinkModel(jitter_ns=50_000)).run(20 * SECONDS)
    assert a.offsets == b.offsets
    assert a.verdicts == b.verdicts
    assert a.counters == b.counters


def test_different_seed_different_jitter_trace():
    a = two_node_sim(seed=1, link=LinkModel(jitter_ns=50_000)).run(20 * SECONDS)
    b = two_node_sim(seed=2, link=LinkModel(jitter_ns=50_000)).run(20 * SECONDS)
    assert a.offsets != b.offsets


def test_message_conservation():
    metrics = two_node_sim().run(30 * SECONDS)
    c = metrics.counters
    assert c["sent_copies"] == c["delivered"] + c.get("adv_dropped", 0) + c.get(
        "in_flight_at_end", 0
    ) + c.get("dropped_no_route", 0)


def test_fifo_per_sender_receiver_pair():
    metrics = two_node_sim(link=LinkModel(jitter_ns=80_000)).run(30 * SECONDS)
    sync_times = [
        (v.time_ns, v.seq_id)
        for v in metrics.verdicts
        if v.node == "slave" and v.msg_type == "SYNC"
    ]
    assert sync_times == sorted(sync_times)
    assert [s for _, s in sync_times] == sorted(s for _, s in sync_times)


class _NullAttack:
    def start(self, sim):
        pass

    def on_observe(self, env, now):
        pass


def test_spoofing_requires_capability():
    sim = two_node_sim()
    adversary = Adversary(EVIL, AdversaryCapability.oob_applicative(), _NullAttack())
    sim.set_adversary(adversary)
    from ptpsec.wire import Mode, PtpHeader, PtpMessage, SyncBody
    from ptpsec.identity import clock_id_from_network

    msg = PtpMessage(
        PtpHeader(
            messageType=MessageType.SYNC,
            sourceClockIdentity=clock_id_from_network(GM),
            sequenceId=1,
        ),
        SyncBody(),
    )
    with pytest.raises(CapabilityViolation):
        adversary.send(msg, Mode.BASELINE, claimed_addr=GM)
    # From its own address the same message is allowed.
    adversary.send(msg, Mode.BASELINE, claimed_addr=EVIL)


def test_tap_requires_capability():
    sim = two_node_sim()
    adversary = Adversary(EVIL, AdversaryCapability.oob_network(), _NullAttack())
    sim.set_adversary(adversary)
    with pytest.raises(CapabilityViolation):
        adversary.install_tap(lambda env, receiver, now: PASS)


def test_delay_tap_biases_clock_by_half():
    """Delaying every SYNC by 5 ms while leaving the reverse path alone
    makes the path asymmetric; the slave settles near -d/2 = -2.5 ms."""
    sim = two_node_sim()
    adversary = Adversary(EVIL, AdversaryCapability.in_band(), _NullAttack())
    sim.set_adversary(adversary)

    def tap(env, receiver, now):
        if env.msg.header.messageType is MessageType.SYNC:
            return DELAY(5_000_000)
        return PASS

    adversary.install_tap(tap)
    metrics = sim.run(60 * SECONDS)
    tail = [off for t, n, off in metrics.offsets if n == "slave" and t > 50 * SECONDS]
    assert tail
    mean = sum(tail) / len(tail)
    assert mean == pytest.approx(-2_500_000, rel=0.05)


def test_drop_tap_starves_the_slave():
    sim = two_node_sim(slave_drift=1000)
    adversary = Adversary(EVIL, AdversaryCapability.in_band(), _NullAttack())
    sim.set_adversary(adversary)
    adversary.install_tap(lambda env, receiver, now: DROP)
    metrics = sim.run(30 * SECONDS)
    assert metrics.counters["adv_dropped"] > 0
    assert metrics.counters.get("delivered", 0) == 0
    # Nothing reaches the slave, so its drift goes uncorrected.
    final = [off for t, n, off in metrics.offsets if n == "slave"][-1]
    assert final == pytest.approx(30_000, abs=2_000)


def test_duplicate_node_address_rejected():
    sim = two_node_sim()
    with pytest.raises(ValueError):
        sim.add_node(
            PtpNode(NodeConfig(name="other", address=SLAVE), sim.rng)
        )


def test_scenario_outputs_are_byte_identical_across_runs():
    cfg = scenario.load_config("src/ptpsec/scenarios/baseline_no_attack.ini")
    runs = []
    for _ in range(2):
        sim = scenario.build(cfg)
        metrics = sim.run(int(cfg.horizon_s * SECONDS))
        runs.append(
            scenario.offsets_csv(metrics) + scenario.verdicts_csv(metrics)
        )
    assert runs[0] == runs[1]
