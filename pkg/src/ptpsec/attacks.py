"""Executable attack generators, driven by the simulator's event loop.

Each attack is a pure action source: it observes multicast traffic (and
whatever unicast its adversary class may see), and emits forged messages
through the adversary's single send gate, where capability enforcement
lives.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import security, session, wire
from .identity import NetworkAddress
from .simnet import Envelope, Simulation
from .wire import (
    AnnounceBody,
    ClockIdentity,
    DelayRespBody,
    FollowUpBody,
    MessageType,
    Mode,
    PtpHeader,
    PtpMessage,
    SyncBody,
    Timestamp,
)

SECONDS = 1_000_000_000


def _interval(rate_pps: float) -> int:
    return max(1, int(SECONDS / rate_pps))


class AttackBase:
    """Common plumbing: master discovery from observed ANNOUNCEs."""

    def __init__(self):
        self.sim: Simulation | None = None
        self.master_clock_id: ClockIdentity | None = None
        self.master_addr: NetworkAddress | None = None
        self.master_mode: Mode = Mode.BASELINE
        self.observed_announce: Envelope | None = None
        self.last_master_sync_seq: int | None = None

    @property
    def adversary(self):
        return self.sim.adversary

    def start(self, sim: Simulation) -> None:
        self.sim = sim
        self.on_start()

    def on_start(self) -> None:
        pass

    def on_observe(self, env: Envelope, now: int) -> None:
        hdr = env.msg.header
        if hdr.messageType is MessageType.ANNOUNCE and not env.from_adversary:
            self.master_clock_id = hdr.sourceClockIdentity
            self.master_addr = env.claimed_addr
            self.master_mode = env.mode
            self.observed_announce = env
        elif hdr.messageType is MessageType.SYNC and not env.from_adversary:
            self.last_master_sync_seq = hdr.sequenceId
        self.handle_observation(env, now)

    def handle_observation(self, env: Envelope, now: int) -> None:
        pass

    def _id_space(self) -> int:
        return (
            session.ID_SPACE_32
            if self.master_mode is Mode.EXTENDED
            else session.ID_SPACE_16
        )

    def _forged_header(self, msg_type: MessageType, seq: int) -> PtpHeader:
        flags = wire.SECURITY_FLAG if self.master_mode is Mode.EXTENDED else 0
        return PtpHeader(
            messageType=msg_type,
            sourceClockIdentity=self.master_clock_id,
            sequenceId=seq,
            flagField=flags,
        )

    def _blank_signature(self) -> bytes | None:
        return bytes(wire.SIGNATURE_SIZE) if self.master_mode is Mode.EXTENDED else None

    def _send_forged(self, msg: PtpMessage, claimed: NetworkAddress, dest=None) -> None:
        tag = None
        if self.group_key is not None:
            tag = security.hmac_tag(wire.encode(msg, self.master_mode), self.group_key)
        self.adversary.send(msg, self.master_mode, claimed, dest, tag)

    group_key: security.GroupKey | None = None

    def _hostile_sync_pair(self, seq: int, hostile_t1_ns: int, claimed: NetworkAddress):
        sync = PtpMessage(self._forged_header(MessageType.SYNC, seq), SyncBody())
        follow = PtpMessage(
            self._forged_header(MessageType.FOLLOW_UP, seq),
            FollowUpBody(Timestamp.from_ns(max(0, hostile_t1_ns)), self._blank_signature()),
        )
        self._send_forged(sync, claimed)
        self._send_forged(follow, claimed)


class SyncSpoof(AttackBase):
    """Spoofed SYNC/FOLLOW_UP pairs with hostile timestamps.

    With `spoof_addr` the forged network source is the master's address
    (requires address-spoofing capability); sequence ids are blind random
    draws unless `track_window`, which follows the observed master
    counter (insider/in-band knowledge).
    """

    def __init__(
        self,
        time_shift_ns: int,
        rate_pps: float = 1.0,
        spoof_addr: bool = False,
        track_window: bool = False,
        start_s: float = 10.0,
        stop_s: float | None = None,
        group_key: security.GroupKey | None = None,
    ):
        super().__init__()
        self.time_shift_ns = time_shift_ns
        self.rate_pps = rate_pps
        self.spoof_addr = spoof_addr
        self.track_window = track_window
        self.start_ns = int(start_s * SECONDS)
        self.stop_ns = int(stop_s * SECONDS) if stop_s is not None else None
        self.group_key = group_key
        self._next_tracked: int | None = None

    def on_start(self) -> None:
        self.sim.schedule_periodic(self.start_ns, _interval(self.rate_pps), self._fire)

    def _fire(self) -> None:
        now = self.sim.now
        if self.master_clock_id is None:
            return
        if self.stop_ns is not None and now > self.stop_ns:
            return
        if self.track_window:
            if self.last_master_sync_seq is None:
                return
            if self._next_tracked is None:
                self._next_tracked = (self.last_master_sync_seq + 1) % self._id_space()
            seq = self._next_tracked
            self._next_tracked = (seq + 1) % self._id_space()
        else:
            seq = self.sim.rng.randrange(self._id_space())
        claimed = self.master_addr if self.spoof_addr else self.adversary.address
        self._hostile_sync_pair(seq, now + self.time_shift_ns, claimed)


class InsiderSyncMasquerade(SyncSpoof):
    """Group-key holder forging master SYNCs; in-window ids from observation."""

    def __init__(self, time_shift_ns: int, group_key=None, **kwargs):
        kwargs.setdefault("track_window", True)
        kwargs.setdefault("spoof_addr", True)
        super().__init__(time_shift_ns, group_key=group_key, **kwargs)


class DelaySpoof(AttackBase):
    """Forged DELAY_RESPONSEs after bending DELAY_REQs via ANNOUNCE replay.

    Phase 1 replays the master's ANNOUNCE from the attacker's own
    address, so the victim registers the attacker as the master's
    network identity.  Phase 2 answers the bent DELAY_REQs with a
    receive timestamp shifted by `delay_shift_ns`.
    """

    def __init__(
        self,
        delay_shift_ns: int,
        replay_pps: float = 0.5,
        start_s: float = 5.0,
        stop_s: float | None = None,
    ):
        super().__init__()
        self.delay_shift_ns = delay_shift_ns
        self.replay_pps = replay_pps
        self.start_ns = int(start_s * SECONDS)
        self.stop_ns = int(stop_s * SECONDS) if stop_s is not None else None

    def _active(self, now: int) -> bool:
        return now >= self.start_ns and (self.stop_ns is None or now <= self.stop_ns)

    def handle_observation(self, env: Envelope, now: int) -> None:
        if env.from_adversary or not self._active(now):
            return
        hdr = env.msg.header
        if hdr.messageType is MessageType.ANNOUNCE:
            # Replay each genuine ANNOUNCE verbatim from our own address;
            # arriving second, it wins the victim's address registration,
            # so the next delay exchanges are bent toward us.
            self._send_forged(env.msg, self.adversary.address)
            return
        if (
            hdr.messageType is not MessageType.DELAY_REQ
            or env.dest_addr is None
            or self.master_clock_id is None
        ):
            return
        # A bent DELAY_REQ reached us; forge the master's response.
        resp = PtpMessage(
            self._forged_header(MessageType.DELAY_RESP, hdr.sequenceId),
            DelayRespBody(
                receiveTimestamp=Timestamp.from_ns(max(0, now + self.delay_shift_ns)),
                requestingClockIdentity=hdr.sourceClockIdentity,
                requestingPortNumber=hdr.sourcePortNumber,
            ),
        )
        self._send_forged(resp, self.adversary.address, dest=env.claimed_addr)


class BlindWindowSnatch(AttackBase):
    """Stride-w probing of the sequence space, then sync spoofing.

    Probes send ids i*w + (w-1) for i in [0, R/w - 1); one of them lands
    in any possible window position, and every later probe stays in the
    advanced window, so the true master's counter is left behind.
    """

    def __init__(
        self,
        id_space: int,
        window_size: int,
        rate_pps: float = 10.0,
        time_shift_ns: int = 30 * SECONDS,
        passes: int = 1,
        start_s: float = 5.0,
    ):
        super().__init__()
        self.id_space = id_space
        self.window_size = window_size
        self.rate_pps = rate_pps
        self.time_shift_ns = time_shift_ns
        self.passes = passes
        self.start_ns = int(start_s * SECONDS)
        self.probes_sent = 0
        self.snatch_done_at: int | None = None
        self._phase2_seq: int | None = None

    def probe_ids(self) -> list[int]:
        w = self.window_size
        return [i * w + (w - 1) for i in range(self.id_space // w - 1)]

    def _probe_at(self, index: int) -> int:
        # Lazy indexing into probe_ids() * passes; the full plan for a
        # 32-bit space would be hundreds of millions of entries.
        w = self.window_size
        stride_count = self.id_space // w - 1
        return (index % stride_count) * w + (w - 1)

    def on_start(self) -> None:
        self._plan_len = (self.id_space // self.window_size - 1) * self.passes
        self.sim.schedule_periodic(self.start_ns, _interval(self.rate_pps), self._fire)

    def _fire(self) -> None:
        if self.master_clock_id is None:
            return
        now = self.sim.now
        if self.probes_sent < self._plan_len:
            seq = self._probe_at(self.probes_sent)
            self.probes_sent += 1
            sync = PtpMessage(self._forged_header(MessageType.SYNC, seq), SyncBody())
            self._send_forged(sync, self.master_addr)
            if self.probes_sent == self._plan_len:
                self.snatch_done_at = now
                self._phase2_seq = (self._probe_at(self._plan_len - 1) + 1) % self.id_space
            return
        # Phase 2: the window is ours; spoof hostile time in sequence.
        seq = self._phase2_seq
        self._phase2_seq = (seq + 1) % self.id_space
        self._hostile_sync_pair(seq, now + self.time_shift_ns, self.master_addr)


class NaiveWindowAttack(AttackBase):
    """Baseline strategy: repeat the K-message attack for every window slot."""

    def __init__(self, id_space: int, window_size: int, k: int, rate_pps: float = 100.0,
                 time_shift_ns: int = 30 * SECONDS, start_s: float = 5.0):
        super().__init__()
        self.id_space = id_space
        self.window_size = window_size
        self.k = k
        self.rate_pps = rate_pps
        self.time_shift_ns = time_shift_ns
        self.start_ns = int(start_s * SECONDS)
        self._plan: list[int] = []
        self.sent = 0

    def on_start(self) -> None:
        for slot in range(self.id_space // self.window_size):
            base = slot * self.window_size
            self._plan.extend((base + j) % self.id_space for j in range(self.k))
        self.sim.schedule_periodic(self.start_ns, _interval(self.rate_pps), self._fire)

    def _fire(self) -> None:
        if self.master_clock_id is None or self.sent >= len(self._plan):
            return
        seq = self._plan[self.sent]
        self.sent += 1
        sync = PtpMessage(self._forged_header(MessageType.SYNC, seq), SyncBody())
        self._send_forged(sync, self.master_addr)


BEST_DATASET = dict(
    priority1=0,
    priority2=0,
    clockClass=6,  # ATOMIC_CLOCK-grade
    clockAccuracy=0x20,
    offsetScaledLogVariance=0,
    timeSource=0x10,
)


class RogueMaster(AttackBase):
    """Fabricated best-clock ANNOUNCEs, then hostile time distribution.

    The rogue announces under its own identity (binding holds), with an
    unbeatable dataset.  An insider variant tags with the group key; a
    self-signed certificate variant demonstrates the public-key defense.
    """

    def __init__(
        self,
        time_shift_ns: int = 30 * SECONDS,
        announce_pps: float = 0.5,
        sync_pps: float = 1.0,
        start_s: float = 10.0,
        stop_s: float | None = None,
        group_key: security.GroupKey | None = None,
        self_sign_key: security.KeyPair | None = None,
        extended: bool = False,
    ):
        super().__init__()
        self.time_shift_ns = time_shift_ns
        self.announce_pps = announce_pps
        self.sync_pps = sync_pps
        self.start_ns = int(start_s * SECONDS)
        self.stop_ns = int(stop_s * SECONDS) if stop_s is not None else None
        self.group_key = group_key
        self.self_sign_key = self_sign_key
        self.extended = extended
        self._seq = {MessageType.ANNOUNCE: 0, MessageType.SYNC: 0}

    def rogue_clock_id(self) -> ClockIdentity:
        from .identity import clock_id_from_network

        return clock_id_from_network(self.adversary.address)

    def _announce_body(self) -> AnnounceBody:
        body = AnnounceBody(
            grandmasterIdentity=self.rogue_clock_id(), **BEST_DATASET
        )
        if self.master_mode is not Mode.EXTENDED:
            return body
        if self.self_sign_key is not None:
            # Insider's own key, not the management key: verification fails.
            return security.make_certificate(
                body, self.self_sign_key.publicKey, self.self_sign_key
            )
        return replace(
            body,
            publicKey=bytes(wire.PUBLIC_KEY_SIZE),
            managementSignature=bytes(wire.SIGNATURE_SIZE),
        )

    def on_start(self) -> None:
        if self.extended:
            self.master_mode = Mode.EXTENDED
        self.sim.schedule_periodic(
            self.start_ns, _interval(self.announce_pps), self._announce
        )
        self.sim.schedule_periodic(
            self.start_ns + 100_000_000, _interval(self.sync_pps), self._sync
        )

    def _active(self, now: int) -> bool:
        return self.stop_ns is None or now <= self.stop_ns

    def _header(self, msg_type: MessageType) -> PtpHeader:
        seq = self._seq[msg_type]
        self._seq[msg_type] = (seq + 1) % self._id_space()
        flags = wire.SECURITY_FLAG if self.master_mode is Mode.EXTENDED else 0
        return PtpHeader(
            messageType=msg_type,
            sourceClockIdentity=self.rogue_clock_id(),
            sequenceId=seq,
            flagField=flags,
        )

    def _id_space(self) -> int:
        return session.ID_SPACE_32 if self.master_mode is Mode.EXTENDED else session.ID_SPACE_16

    def _announce(self) -> None:
        if not self._active(self.sim.now):
            return
        msg = PtpMessage(self._header(MessageType.ANNOUNCE), self._announce_body())
        self._send_forged(msg, self.adversary.address)

    def _sync(self) -> None:
        now = self.sim.now
        if not self._active(now):
            return
        seq_header = self._header(MessageType.SYNC)
        sync = PtpMessage(seq_header, SyncBody())
        blank = bytes(wire.SIGNATURE_SIZE) if self.master_mode is Mode.EXTENDED else None
        follow = PtpMessage(
            PtpHeader(
                messageType=MessageType.FOLLOW_UP,
                sourceClockIdentity=self.rogue_clock_id(),
                sequenceId=seq_header.sequenceId,
                flagField=seq_header.flagField,
            ),
            FollowUpBody(Timestamp.from_ns(max(0, now + self.time_shift_ns)), blank),
        )
        self._send_forged(sync, self.adversary.address)
        self._send_forged(follow, self.adversary.address)


class ProxyGrandmaster(AttackBase):
    """Management SETs boosting a victim's dataset, then SET_TIME control."""

    def __init__(
        self,
        target_addr: NetworkAddress,
        time_shift_ns: int = 30 * SECONDS,
        spoof_addr: NetworkAddress | None = None,
        start_s: float = 5.0,
        settime_after_s: float = 15.0,
        rate_pps: float = 1.0,
    ):
        super().__init__()
        self.target_addr = target_addr
        self.time_shift_ns = time_shift_ns
        self.spoof_addr = spoof_addr
        self.start_ns = int(start_s * SECONDS)
        self.settime_after_ns = int(settime_after_s * SECONDS)
        self.rate_pps = rate_pps
        self._seq = 0

    def on_start(self) -> None:
        self.sim.schedule(self.start_ns, self._boost)
        self.sim.schedule(self.start_ns + self.settime_after_ns, self._set_time)

    def _mgmt(self, action: wire.MgmtAction, value: int) -> None:
        seq = self._seq
        self._seq += 1
        msg = PtpMessage(
            PtpHeader(
                messageType=MessageType.MGMT_SET,
                sourceClockIdentity=self.rogue_clock_id(),
                sequenceId=seq % session.ID_SPACE_16,
            ),
            wire.MgmtSetBody(action, value),
        )
        claimed = self.spoof_addr or self.adversary.address
        self.adversary.send(msg, Mode.BASELINE, claimed, self.target_addr)

    def rogue_clock_id(self) -> ClockIdentity:
        from .identity import clock_id_from_network

        return clock_id_from_network(self.adversary.address)

    def _boost(self) -> None:
        self._mgmt(wire.MgmtAction.SET_PRIORITY1, 0)
        self._mgmt(wire.MgmtAction.SET_PRIORITY2, 0)
        self._mgmt(wire.MgmtAction.SET_CLOCK_ACCURACY, 0x20)

    def _set_time(self) -> None:
        self._mgmt(wire.MgmtAction.SET_TIME, self.time_shift_ns)


def snatch_message_count(id_space: int, window_size: int, k: int = 0) -> int:
    """Blind snatch message complexity: |R|/w + K."""
    return id_space // window_size + k


def naive_message_count(id_space: int, window_size: int, k: int) -> int:
    """Naive per-window repetition complexity: (|R|/w) * K."""
    return (id_space // window_size) * k


def two_pass_snatch_count(id_space: int, window_size: int, k: int = 0) -> int:
    """Wrap-around-safe variant: 2 * |R|/w + K."""
    return 2 * (id_space // window_size) + k


def snatch_time_seconds(id_space: int, window_size: int, rate_pps: float) -> float:
    """Analytic duration of one snatch pass at the given send rate."""
    return (id_space / window_size) / rate_pps
