"""Master and slave protocol state machines.

A `PtpNode` wires the wire/timemath/identity/session/security/bmc layers
into a running clock.  Received messages pass a fixed gate order per the
configured security mode: binding check, then sequence window or
challenge, then HMAC/signature, and only then the servo.  Every drop is
logged with its reason.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from . import bmc, security, session, wire
from .identity import AddressKind, NetworkAddress, clock_id_from_network, verify_binding
from .session import SequenceWindow
from .simnet import Envelope, Send, Verdict
from .timemath import ServoAction, ServoState, servo_update
from .wire import (
    AnnounceBody,
    ClockIdentity,
    DelayReqBody,
    DelayRespBody,
    FollowUpBody,
    MessageType,
    MgmtAction,
    MgmtSetBody,
    Mode,
    PtpHeader,
    PtpMessage,
    SyncBody,
    Timestamp,
)


class SecurityMode(enum.IntEnum):
    """Arms-race tiers; each level keeps all weaker network defenses."""

    NONE = 0
    BINDING = 1
    SESSION16 = 2
    SESSION32 = 3
    SYMMETRIC = 4
    PUBLIC_KEY = 5


MODE_NAMES = {m.name.lower(): m for m in SecurityMode}


def network_from_clock_id(clock_id: ClockIdentity, kind: AddressKind) -> NetworkAddress:
    """Invert the clock-ID derivation; the master address a slave sends to."""
    o = clock_id.octets
    if kind is AddressKind.MAC6:
        return NetworkAddress(kind, o[:3] + o[5:])
    return NetworkAddress(kind, bytes([o[1], o[2], o[5], o[6]]))


@dataclass
class NodeConfig:
    name: str
    address: NetworkAddress
    security_mode: SecurityMode = SecurityMode.NONE
    master_capable: bool = False
    priority1: int = 128
    priority2: int = 128
    clock_class: int = 248
    clock_accuracy: int = 0xFE
    offset_scaled_log_variance: int = 0xFFFF
    time_source: int = 0xA0
    drift_ppb: int = 0  # ground-truth rate error of the free-running clock
    sync_interval_ns: int = 1_000_000_000
    announce_interval_ns: int = 2_000_000_000
    delayreq_interval_ns: int = 1_000_000_000
    window_size: int = session.DEFAULT_WINDOW_SIZE
    id_space_bits: int | None = None  # None: 16 or 32 per security mode
    servo: ServoState = field(default_factory=ServoState)
    mgmt_whitelist: frozenset[tuple] | None = None  # None = whitelist disabled
    keys: security.KeyPair | None = None
    certificate: AnnounceBody | None = None  # mgmt-signed, PUBLIC_KEY masters
    mgmt_pub: bytes | None = None
    group_key: security.GroupKey | None = None

    def require_credentials(self) -> None:
        """Master-capable public-key nodes cannot announce without a
        signed certificate; checked at node construction, not config
        parse time, so provisioning can happen in between."""
        if (
            self.security_mode >= SecurityMode.PUBLIC_KEY
            and self.master_capable
            and (self.keys is None or self.certificate is None)
        ):
            raise ValueError(
                f"{self.name}: PUBLIC_KEY master-capable nodes need keys and a certificate"
            )


@dataclass
class ParentDataset:
    masterClockId: ClockIdentity
    masterAddr: NetworkAddress
    masterPublicKey: bytes | None = None
    windows: dict[MessageType, SequenceWindow] = field(default_factory=dict)
    extendedSeqCapable: bool | None = None  # fixed on first message of the session


@dataclass
class _PendingSync:
    seq_id: int
    t2_local: int


class PtpNode:
    def __init__(self, config: NodeConfig, rng):
        config.require_credentials()
        self.config = config
        self.name = config.name
        self.address = config.address
        self.rng = rng
        self.clock_id = clock_id_from_network(config.address)
        self.mode = config.security_mode

        self.clock_offset_ns = 0
        self.servo = config.servo
        self.role = bmc.Role.MASTER if config.master_capable else bmc.Role.SLAVE
        self.records: dict[bytes, bmc.ForeignMasterRecord] = {}
        self.parent: ParentDataset | None = None
        self.cert_verifier = (
            security.CertificateVerifier(config.mgmt_pub)
            if config.mgmt_pub is not None
            else None
        )

        # Announced dataset; management SETs mutate these.
        self.priority1 = config.priority1
        self.priority2 = config.priority2
        self.clock_class = config.clock_class
        self.clock_accuracy = config.clock_accuracy

        self._counters: dict[MessageType, int] = {}
        self._challenges = session.ChallengeState(self._id_space())
        self._pending_sync: _PendingSync | None = None
        self._sync_pair: tuple[int, int] | None = None  # (t1, t2) local ns
        self._mean_path_delay: int | None = None
        self._delay_req_t3: dict[int, int] = {}  # seq id -> t3 egress stamp
        self._last_servo_now: int | None = None
        self.sim = None

    # -- clock --------------------------------------------------------

    def local_time(self, now: int) -> int:
        return now + self.clock_offset_ns + self.config.drift_ppb * now // 1_000_000_000

    def true_offset(self, now: int) -> int:
        return self.local_time(now) - now

    def _adjust_clock(self, delta: int) -> None:
        self.clock_offset_ns += delta

    # -- wiring -------------------------------------------------------

    def attach(self, sim) -> None:
        self.sim = sim
        phase = len(sim.nodes)  # deterministic stagger between nodes
        if self.config.master_capable:
            sim.schedule_periodic(
                1_000_000 * phase, self.config.announce_interval_ns, self._timer_announce
            )
            sim.schedule_periodic(
                10_000_000 + 1_000_000 * phase,
                self.config.sync_interval_ns,
                self._timer_sync,
            )
        sim.schedule_periodic(
            500_000_000 + 1_000_000 * phase,
            self.config.delayreq_interval_ns,
            self._timer_delay_req,
        )
        sim.schedule_periodic(
            self.config.announce_interval_ns,
            self.config.announce_interval_ns,
            self._timer_housekeeping,
        )

    def _send(self, sends: list[Send]) -> None:
        self.sim._emit(self, sends)

    # -- message construction -----------------------------------------

    def _wire_mode(self) -> Mode:
        return Mode.EXTENDED if self.mode >= SecurityMode.SESSION32 else Mode.BASELINE

    def _id_space(self) -> int:
        if self.config.id_space_bits is not None:
            return 1 << self.config.id_space_bits
        return (
            session.ID_SPACE_32
            if self.mode >= SecurityMode.SESSION32
            else session.ID_SPACE_16
        )

    def _next_seq(self, msg_type: MessageType) -> int:
        if msg_type not in self._counters:
            if self.mode >= SecurityMode.SESSION16:
                self._counters[msg_type] = session.init_counter(
                    self.rng, self._id_space()
                )
            else:
                self._counters[msg_type] = 0
        value = self._counters[msg_type]
        self._counters[msg_type] = (value + 1) % self._id_space()
        return value

    def _header(self, msg_type: MessageType, seq_id: int) -> PtpHeader:
        flags = wire.SECURITY_FLAG if self._wire_mode() is Mode.EXTENDED else 0
        return PtpHeader(
            messageType=msg_type,
            sourceClockIdentity=self.clock_id,
            sequenceId=seq_id,
            flagField=flags,
        )

    def _tagged(self, msg: PtpMessage, dest_addr: NetworkAddress | None = None) -> Send:
        tag = None
        if self.mode is SecurityMode.SYMMETRIC and self.config.group_key is not None:
            tag = security.hmac_tag(
                wire.encode(msg, self._wire_mode()), self.config.group_key
            )
        return Send(msg=msg, mode=self._wire_mode(), dest_addr=dest_addr, tag=tag)

    def announce_body(self) -> AnnounceBody:
        if self.mode >= SecurityMode.PUBLIC_KEY and self.config.certificate is not None:
            return self.config.certificate
        extended = self._wire_mode() is Mode.EXTENDED
        return AnnounceBody(
            priority1=self.priority1,
            priority2=self.priority2,
            clockClass=self.clock_class,
            clockAccuracy=self.clock_accuracy,
            offsetScaledLogVariance=self.config.offset_scaled_log_variance,
            grandmasterIdentity=self.clock_id,
            timeSource=self.config.time_source,
            publicKey=bytes(wire.PUBLIC_KEY_SIZE) if extended else None,
            managementSignature=bytes(wire.SIGNATURE_SIZE) if extended else None,
        )

    # -- timers -------------------------------------------------------

    def _timer_announce(self) -> None:
        if self.role is not bmc.Role.MASTER:
            return
        msg = PtpMessage(
            self._header(MessageType.ANNOUNCE, self._next_seq(MessageType.ANNOUNCE)),
            self.announce_body(),
        )
        self._send([self._tagged(msg)])

    def _timer_sync(self) -> None:
        if self.role is not bmc.Role.MASTER:
            return
        now = self.sim.now
        seq = self._next_seq(MessageType.SYNC)
        sync = PtpMessage(self._header(MessageType.SYNC, seq), SyncBody())
        # Simulated hardware timestamping: t1 read right after the SYNC
        # leaves, then embedded in the FOLLOW_UP.
        t1 = Timestamp.from_ns(max(0, self.local_time(now)))
        fu_body = FollowUpBody(
            t1,
            signature=bytes(wire.SIGNATURE_SIZE)
            if self._wire_mode() is Mode.EXTENDED
            else None,
        )
        follow_up = PtpMessage(self._header(MessageType.FOLLOW_UP, seq), fu_body)
        if self.mode >= SecurityMode.PUBLIC_KEY and self.config.keys is not None:
            signature = security.sign_followup(follow_up, self.config.keys)
            follow_up = PtpMessage(follow_up.header, replace(fu_body, signature=signature))
        self._send([self._tagged(sync), self._tagged(follow_up)])

    def _timer_delay_req(self) -> None:
        if self.role is not bmc.Role.SLAVE or self.parent is None:
            return
        now = self.sim.now
        if self.mode >= SecurityMode.SESSION16:
            seq = self._challenges.issue(MessageType.DELAY_REQ, self.rng)
        else:
            seq = self._next_seq(MessageType.DELAY_REQ)
        t3 = self.local_time(now)
        self._delay_req_t3 = {seq: t3}
        msg = PtpMessage(
            self._header(MessageType.DELAY_REQ, seq),
            DelayReqBody(Timestamp.from_ns(max(0, t3))),
        )
        self._send([self._tagged(msg, dest_addr=self.parent.masterAddr)])

    def _timer_housekeeping(self) -> None:
        now = self.sim.now
        timeout = 3 * self.config.announce_interval_ns
        stale = [k for k, r in self.records.items() if now - r.lastSeen > timeout]
        for key in stale:
            del self.records[key]
        if stale:
            self._run_election()

    # -- elections ----------------------------------------------------

    def _run_election(self) -> None:
        result = bmc.run_election(
            list(self.records.values()),
            self.announce_body(),
            self.clock_id,
            require_certs=self.mode >= SecurityMode.PUBLIC_KEY,
        )
        if not self.config.master_capable and result.role is bmc.Role.MASTER:
            # Slave-only node with no eligible master: free-run.
            if self.parent is not None:
                self.parent = None
                self.sim.log_election(self.name, "none")
            self.role = bmc.Role.SLAVE
            return
        previous = self.parent.masterClockId if self.parent else None
        self.role = result.role
        if result.role is bmc.Role.MASTER:
            if self.parent is not None:
                self.parent = None
                self.sim.log_election(self.name, "self")
            return
        if previous == result.chosenMaster:
            return
        record = self.records[result.chosenMaster.octets]
        if self.mode >= SecurityMode.BINDING:
            addr = network_from_clock_id(result.chosenMaster, self.address.kind)
        else:
            addr = record.sourceAddr
        self.parent = ParentDataset(
            masterClockId=result.chosenMaster,
            masterAddr=addr,
            masterPublicKey=record.announce.publicKey
            if record.certState is bmc.CertState.VERIFIED
            else None,
        )
        self._pending_sync = None
        self._sync_pair = None
        self._mean_path_delay = None
        self._last_servo_now = None
        self.sim.log_election(self.name, str(result.chosenMaster))

    # -- receive path -------------------------------------------------

    def on_message(self, env: Envelope, now: int) -> tuple[list[Send], list[Verdict]]:
        t_ingress = self.local_time(now)
        msg_type = env.msg.header.messageType
        handler = {
            MessageType.ANNOUNCE: self._handle_announce,
            MessageType.SYNC: self._handle_sync,
            MessageType.FOLLOW_UP: self._handle_follow_up,
            MessageType.DELAY_REQ: self._handle_delay_req,
            MessageType.DELAY_RESP: self._handle_delay_resp,
            MessageType.MGMT_SET: self._handle_mgmt,
        }[msg_type]
        sends, accepted, reason = handler(env, now, t_ingress)
        verdict = Verdict(
            time_ns=now,
            node=self.name,
            msg_type=msg_type.name,
            seq_id=env.msg.header.sequenceId,
            accepted=accepted,
            reason=reason,
            from_adversary=env.from_adversary,
        )
        return sends, [verdict]

    def _check_binding(self, env: Envelope) -> bool:
        if self.mode < SecurityMode.BINDING:
            return True
        return verify_binding(env.msg.header.sourceClockIdentity, env.claimed_addr)

    def _check_icv(self, env: Envelope) -> bool:
        if self.mode is not SecurityMode.SYMMETRIC:
            return True
        if self.config.group_key is None or env.tag is None:
            return False
        return security.hmac_check(
            wire.encode(env.msg, env.mode), env.tag, self.config.group_key
        )

    def _window_check(self, source: ClockIdentity, msg_type: MessageType, seq: int) -> bool:
        """Window gate for master-originated streams; bootstraps on first contact."""
        if self.mode < SecurityMode.SESSION16:
            return True
        if self.parent is None or source != self.parent.masterClockId:
            return True
        windows = self.parent.windows
        win = windows.get(msg_type)
        if win is None:
            windows[msg_type] = SequenceWindow(
                expected=(seq + 1) % self._id_space(),
                size=self.config.window_size,
                id_space=self._id_space(),
            )
            return True
        ok, new_win = session.window_accept(win, seq)
        if ok:
            windows[msg_type] = new_win
        return ok

    def _check_extended_consistency(self, env: Envelope) -> bool:
        if self.parent is None:
            return True
        extended = env.mode is Mode.EXTENDED
        if self.parent.extendedSeqCapable is None:
            self.parent.extendedSeqCapable = extended
            return True
        return self.parent.extendedSeqCapable == extended

    def _handle_announce(self, env: Envelope, now: int, t_ingress: int):
        hdr = env.msg.header
        body: AnnounceBody = env.msg.body
        source = hdr.sourceClockIdentity
        if source == self.clock_id:
            # Replayed copies of our own announcements must not create a
            # foreign record, or we would demote ourselves to our own slave.
            return [], False, "self_loop"
        if not self._check_binding(env):
            return [], False, "binding_mismatch"
        if not self._window_check(source, MessageType.ANNOUNCE, hdr.sequenceId):
            return [], False, "window_reject"
        if not self._check_icv(env):
            return [], False, "bad_icv"

        cert_state = bmc.CertState.UNVERIFIED
        if self.mode >= SecurityMode.PUBLIC_KEY:
            if self.cert_verifier is None:
                return [], False, "bad_certificate"
            ok = self.cert_verifier.verify(source, body)
            cert_state = bmc.CertState.VERIFIED if ok else bmc.CertState.REJECTED

        self.records[source.octets] = bmc.ForeignMasterRecord(
            announce=body,
            sourceAddr=env.claimed_addr,
            sourceClockId=source,
            lastSeen=now,
            certState=cert_state,
        )
        if (
            self.parent is not None
            and source == self.parent.masterClockId
            and self.mode < SecurityMode.BINDING
        ):
            # PTPd behavior the delay-spoofing attack exploits: the latest
            # accepted ANNOUNCE re-registers the master's network address.
            self.parent.masterAddr = env.claimed_addr
        self._run_election()
        if self.mode >= SecurityMode.PUBLIC_KEY and cert_state is bmc.CertState.REJECTED:
            return [], False, "bad_certificate"
        return [], True, "accept"

    def _expect_from_parent(self, env: Envelope) -> str | None:
        if self.role is not bmc.Role.SLAVE or self.parent is None:
            return "no_master"
        if env.msg.header.sourceClockIdentity != self.parent.masterClockId:
            return "ignored"
        return None

    def _handle_sync(self, env: Envelope, now: int, t_ingress: int):
        skip = self._expect_from_parent(env)
        if skip:
            return [], False, skip
        hdr = env.msg.header
        if not self._check_binding(env):
            return [], False, "binding_mismatch"
        if not self._check_extended_consistency(env):
            return [], False, "mode_mismatch"
        if not self._check_icv(env):
            return [], False, "bad_icv"
        if self._pending_sync is not None and hdr.sequenceId == self._pending_sync.seq_id:
            # Duplicate of the in-progress exchange: keep the latest ingress
            # stamp so a prematurely injected copy cannot pin an early t2.
            self._pending_sync = _PendingSync(hdr.sequenceId, t_ingress)
            return [], True, "accept"
        if not self._window_check(
            hdr.sourceClockIdentity, MessageType.SYNC, hdr.sequenceId
        ):
            return [], False, "window_reject"
        self._pending_sync = _PendingSync(hdr.sequenceId, t_ingress)
        return [], True, "accept"

    def _handle_follow_up(self, env: Envelope, now: int, t_ingress: int):
        skip = self._expect_from_parent(env)
        if skip:
            return [], False, skip
        if not self._check_binding(env):
            return [], False, "binding_mismatch"
        pending = self._pending_sync
        if pending is None or pending.seq_id != env.msg.header.sequenceId:
            return [], False, "no_pending_sync"
        if not self._check_icv(env):
            return [], False, "bad_icv"
        if self.mode >= SecurityMode.PUBLIC_KEY:
            if self.parent.masterPublicKey is None or not security.verify_followup(
                env.msg, self.parent.masterPublicKey
            ):
                return [], False, "bad_signature"
        self._pending_sync = None
        body: FollowUpBody = env.msg.body
        t1 = body.preciseOriginTimestamp.to_ns()
        self._sync_pair = (t1, pending.t2_local)
        return [], True, self._servo_step(now)

    def _handle_delay_req(self, env: Envelope, now: int, t_ingress: int):
        if self.role is not bmc.Role.MASTER:
            return [], False, "ignored"
        hdr = env.msg.header
        resp = PtpMessage(
            self._header(MessageType.DELAY_RESP, hdr.sequenceId),
            DelayRespBody(
                receiveTimestamp=Timestamp.from_ns(max(0, t_ingress)),
                requestingClockIdentity=hdr.sourceClockIdentity,
                requestingPortNumber=hdr.sourcePortNumber,
            ),
        )
        return [self._tagged(resp, dest_addr=env.claimed_addr)], True, "accept"

    def _handle_delay_resp(self, env: Envelope, now: int, t_ingress: int):
        skip = self._expect_from_parent(env)
        if skip:
            return [], False, skip
        hdr = env.msg.header
        body: DelayRespBody = env.msg.body
        if not self._check_binding(env):
            return [], False, "binding_mismatch"
        if body.requestingClockIdentity != self.clock_id:
            return [], False, "ignored"
        if self.mode >= SecurityMode.SESSION16:
            if not self._challenges.check(MessageType.DELAY_REQ, hdr.sequenceId):
                return [], False, "challenge_mismatch"
        t3 = self._delay_req_t3.pop(hdr.sequenceId, None)
        if t3 is None:
            return [], False, "challenge_mismatch"
        if not self._check_icv(env):
            return [], False, "bad_icv"
        t4 = body.receiveTimestamp.to_ns()
        if self._sync_pair is None:
            return [], True, "accept"
        # Full four-timestamp delay sample per the delay equation; the
        # servo itself runs on SYNC/FOLLOW_UP pairs only.
        from .timemath import ExchangeSample, compute_delay

        t1, t2 = self._sync_pair
        delay = compute_delay(
            ExchangeSample(
                Timestamp.from_ns(max(0, t1)),
                Timestamp.from_ns(max(0, t2)),
                Timestamp.from_ns(max(0, t3)),
                Timestamp.from_ns(max(0, t4)),
            )
        )
        if self.servo.maxDelayLimit is not None and delay > self.servo.maxDelayLimit:
            return [], False, "reject_delay"
        self._mean_path_delay = delay
        return [], True, "accept"

    def _servo_step(self, now: int) -> str:
        if self._sync_pair is None:
            return "accept"
        t1, t2 = self._sync_pair
        offset = (t2 - t1) - (self._mean_path_delay or 0)
        elapsed = (
            now - self._last_servo_now
            if self._last_servo_now is not None
            else self.config.sync_interval_ns
        )
        result = servo_update(
            self.servo, offset, self._mean_path_delay or 0, max(1, elapsed)
        )
        if result.action is ServoAction.REJECT_DELAY:
            return "reject_delay"
        self.servo = result.state
        self._last_servo_now = now
        self._adjust_clock(-result.adjustment)
        if result.action is ServoAction.STEP:
            # A step invalidates every timestamp taken under the old clock;
            # a stale t2 here would poison the next delay measurement.
            self._sync_pair = None
            self._delay_req_t3.clear()
        return "accept"

    # -- management ---------------------------------------------------

    def _handle_mgmt(self, env: Envelope, now: int, t_ingress: int):
        body: MgmtSetBody = env.msg.body
        whitelist = self.config.mgmt_whitelist
        if whitelist is not None:
            key = (env.claimed_addr.kind, env.claimed_addr.octets)
            if key not in whitelist:
                return [], False, "not_whitelisted"
        if body.action is MgmtAction.SET_CLOCK_ACCURACY:
            self.clock_accuracy = body.value & 0xFF
        elif body.action is MgmtAction.SET_PRIORITY1:
            self.priority1 = body.value & 0xFF
        elif body.action is MgmtAction.SET_PRIORITY2:
            self.priority2 = body.value & 0xFF
        elif body.action is MgmtAction.SET_TIME:
            self._adjust_clock(body.value)
        return [], True, "accept"
