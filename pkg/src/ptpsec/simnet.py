"""Deterministic discrete-event network.

Integer-ns virtual time, per-(sender, receiver) FIFO links with uniform
jitter, multicast fan-out, adversary capability enforcement at the
single send gate, and optional man-in-the-middle taps applied per
delivered copy.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field, replace as dc_replace

from .identity import NetworkAddress
from .wire import Mode, PtpMessage


class CapabilityViolation(Exception):
    """An actor attempted an action outside its capability row; scenario bug."""


@dataclass(frozen=True)
class AdversaryCapability:
    canSpoofNetAddr: bool
    seesUnicast: bool
    canDropModifyDelay: bool
    holdsGroupKey: bool

    # Adversary ladder, weakest to strongest.
    @classmethod
    def oob_applicative(cls) -> "AdversaryCapability":
        return cls(False, False, False, False)

    @classmethod
    def oob_network(cls) -> "AdversaryCapability":
        return cls(True, False, False, False)

    @classmethod
    def in_band(cls) -> "AdversaryCapability":
        return cls(True, True, True, False)

    @classmethod
    def insider_slave(cls) -> "AdversaryCapability":
        return cls(True, True, True, True)


CAPABILITY_CLASSES = {
    "oob_applicative": AdversaryCapability.oob_applicative,
    "oob_network": AdversaryCapability.oob_network,
    "in_band": AdversaryCapability.in_band,
    "insider_slave": AdversaryCapability.insider_slave,
}


@dataclass(frozen=True)
class LinkModel:
    base_delay_ns: int = 100_000
    jitter_ns: int = 0  # uniform half-width

    def __post_init__(self):
        if self.base_delay_ns < 0 or self.jitter_ns < 0:
            raise ValueError("link delay parameters must be non-negative")


@dataclass(frozen=True)
class Envelope:
    msg: PtpMessage
    mode: Mode
    claimed_addr: NetworkAddress  # what receivers observe as the source
    sender: str
    dest_addr: NetworkAddress | None  # None = multicast
    tag: bytes | None = None  # group-key ICV, carried out of band
    from_adversary: bool = False
    send_time: int = 0


@dataclass(frozen=True)
class Send:
    """A node's request to transmit, returned from its handlers."""

    msg: PtpMessage
    mode: Mode
    dest_addr: NetworkAddress | None = None  # None = multicast
    claimed_addr: NetworkAddress | None = None  # defaults to the real address
    tag: bytes | None = None


@dataclass(frozen=True)
class Verdict:
    time_ns: int
    node: str
    msg_type: str
    seq_id: int
    accepted: bool
    reason: str
    from_adversary: bool = False


@dataclass
class MetricsLog:
    offsets: list[tuple[int, str, int]] = field(default_factory=list)
    verdicts: list[Verdict] = field(default_factory=list)
    elections: list[tuple[int, str, str]] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)

    def bump(self, key: str, amount: int = 1) -> None:
        self.counters[key] = self.counters.get(key, 0) + amount


# MITM tap outcomes.
PASS = ("pass",)
DROP = ("drop",)


def MODIFY(msg: PtpMessage, tag: bytes | None = None):
    return ("modify", msg, tag)


def DELAY(extra_ns: int):
    return ("delay", extra_ns)


class Simulation:
    """Sequential event loop over integer-ns virtual time."""

    def __init__(
        self,
        seed: int,
        link: LinkModel | None = None,
        metrics_interval_ns: int = 100_000_000,
    ):
        self.rng = random.Random(seed)
        self.link = link or LinkModel()
        self.now = 0
        self.metrics_interval_ns = metrics_interval_ns
        self.metrics = MetricsLog()
        self.nodes: dict[str, object] = {}
        self._by_addr: dict[tuple, object] = {}
        self.adversary = None
        self._events: list = []
        self._eseq = 0
        self._fifo_clock: dict[tuple[str, str], int] = {}
        self._in_flight = 0

    # -- topology -----------------------------------------------------

    def add_node(self, node) -> None:
        if node.name in self.nodes:
            raise ValueError(f"duplicate node name {node.name}")
        key = self._addr_key(node.address)
        if key in self._by_addr:
            raise ValueError(f"duplicate node address {node.address}")
        self.nodes[node.name] = node
        self._by_addr[key] = node
        node.attach(self)

    def set_adversary(self, adversary) -> None:
        self.adversary = adversary
        adversary.attach(self)

    @staticmethod
    def _addr_key(addr: NetworkAddress) -> tuple:
        return (addr.kind, addr.octets)

    # -- scheduling ---------------------------------------------------

    def schedule(self, at_ns: int, callback) -> None:
        if at_ns < self.now:
            raise ValueError("cannot schedule into the past")
        heapq.heappush(self._events, (at_ns, self._eseq, callback))
        self._eseq += 1

    def schedule_periodic(self, start_ns: int, period_ns: int, callback) -> None:
        def tick():
            callback()
            self.schedule(self.now + period_ns, tick)

        self.schedule(start_ns, tick)

    # -- transmission -------------------------------------------------

    def schedule_send(
        self,
        sender: str,
        msg: PtpMessage,
        mode: Mode,
        claimed_addr: NetworkAddress,
        dest_addr: NetworkAddress | None = None,
        tag: bytes | None = None,
    ) -> None:
        """Single enforcement point for adversary capabilities."""
        from_adversary = self.adversary is not None and sender == self.adversary.name
        if from_adversary:
            real = self.adversary.address
            if self._addr_key(claimed_addr) != self._addr_key(real):
                if not self.adversary.capability.canSpoofNetAddr:
                    raise CapabilityViolation(
                        f"{sender} may not spoof address {claimed_addr}"
                    )
            self.metrics.bump("attack_sent")
        env = Envelope(
            msg=msg,
            mode=mode,
            claimed_addr=claimed_addr,
            sender=sender,
            dest_addr=dest_addr,
            tag=tag,
            from_adversary=from_adversary,
            send_time=self.now,
        )
        self.metrics.bump("sent")
        if dest_addr is None:
            self._fan_out_multicast(env)
        else:
            self._deliver_unicast(env)

    def _fan_out_multicast(self, env: Envelope) -> None:
        for node in self.nodes.values():
            if node.name == env.sender:
                continue
            self._schedule_delivery(env, node)
        if self.adversary is not None and env.sender != self.adversary.name:
            self._schedule_observation(env)

    def _deliver_unicast(self, env: Envelope) -> None:
        key = self._addr_key(env.dest_addr)
        target = self._by_addr.get(key)
        if target is not None and target.name != env.sender:
            self._schedule_delivery(env, target)
        elif (
            self.adversary is not None
            and key == self._addr_key(self.adversary.address)
        ):
            # Unicast addressed to the adversary's own address.
            self._schedule_observation(env)
        else:
            self.metrics.bump("dropped_no_route")
            return
        if (
            self.adversary is not None
            and target is not None
            and env.sender != self.adversary.name
            and self.adversary.capability.seesUnicast
        ):
            self._schedule_observation(env)

    def _link_delay(self) -> int:
        jitter = self.link.jitter_ns
        if jitter == 0:
            return self.link.base_delay_ns
        return self.link.base_delay_ns + self.rng.randint(-jitter, jitter)

    def _schedule_delivery(self, env: Envelope, node) -> None:
        self.metrics.bump("sent_copies")
        extra = 0
        delivered_env = env
        if (
            self.adversary is not None
            and not env.from_adversary
            and self.adversary.tap is not None
        ):
            if not self.adversary.capability.canDropModifyDelay:
                raise CapabilityViolation(
                    f"{self.adversary.name} may not install a MITM tap"
                )
            decision = self.adversary.tap(env, node.name, self.now)
            if decision[0] == "drop":
                self.metrics.bump("adv_dropped")
                return
            if decision[0] == "modify":
                delivered_env = dc_replace(env, msg=decision[1], tag=decision[2])
            elif decision[0] == "delay":
                extra = decision[1]

        fifo_key = (env.sender, node.name)
        at = self.now + max(0, self._link_delay() + extra)
        floor = self._fifo_clock.get(fifo_key, 0)
        at = max(at, floor + 1)
        self._fifo_clock[fifo_key] = at
        self._in_flight += 1

        def deliver():
            self._in_flight -= 1
            self.metrics.bump("delivered")
            sends, verdicts = node.on_message(delivered_env, self.now)
            self.metrics.verdicts.extend(verdicts)
            self._emit(node, sends)

        self.schedule(at, deliver)

    def _schedule_observation(self, env: Envelope) -> None:
        adversary = self.adversary

        def observe():
            adversary.on_observe(env, self.now)

        self.schedule(self.now + self.link.base_delay_ns, observe)

    def _emit(self, actor, sends) -> None:
        for send in sends:
            claimed = send.claimed_addr or actor.address
            self.schedule_send(
                actor.name, send.msg, send.mode, claimed, send.dest_addr, send.tag
            )

    # -- execution ----------------------------------------------------

    def _sample_offsets(self) -> None:
        for name in sorted(self.nodes):
            node = self.nodes[name]
            self.metrics.offsets.append((self.now, name, node.true_offset(self.now)))

    def run(self, horizon_ns: int) -> MetricsLog:
        self.schedule_periodic(0, self.metrics_interval_ns, self._sample_offsets)
        if self.adversary is not None and self.adversary.attack is not None:
            self.adversary.attack.start(self)
        while self._events and self._events[0][0] <= horizon_ns:
            at, _, callback = heapq.heappop(self._events)
            self.now = at
            callback()
        self.now = horizon_ns
        self.metrics.bump("in_flight_at_end", self._in_flight)
        return self.metrics

    def log_election(self, node_name: str, chosen: str) -> None:
        self.metrics.elections.append((self.now, node_name, chosen))


class Adversary:
    """The adversary actor: one per scenario, driven by an attack generator."""

    def __init__(
        self,
        address: NetworkAddress,
        capability: AdversaryCapability,
        attack=None,
        name: str = "adversary",
    ):
        self.name = name
        self.address = address
        self.capability = capability
        self.attack = attack
        self.tap = None
        self.sim: Simulation | None = None

    def attach(self, sim: Simulation) -> None:
        self.sim = sim

    def install_tap(self, tap) -> None:
        if not self.capability.canDropModifyDelay:
            raise CapabilityViolation("tap requires an in-band adversary")
        self.tap = tap

    def on_observe(self, env: Envelope, now: int) -> None:
        if self.attack is not None:
            self.attack.on_observe(env, now)

    def send(
        self,
        msg: PtpMessage,
        mode: Mode,
        claimed_addr: NetworkAddress | None = None,
        dest_addr: NetworkAddress | None = None,
        tag: bytes | None = None,
    ) -> None:
        self.sim.schedule_send(
            self.name, msg, mode, claimed_addr or self.address, dest_addr, tag
        )
