"""Bit-exact encoding/decoding of baseline and extended PTP messages.

All multi-byte fields are big-endian (network order).  The extended mode
sets the SECURITY flag, carries the two most significant bytes of the
32-bit sequence id in the first two reserved header bytes, and appends
certificate/signature fields to ANNOUNCE and FOLLOW_UP bodies.  Header
size is 34 bytes in both modes, so a legacy decoder still parses an
extended message and sees the low 16 bits of the sequence id.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

HEADER_SIZE = 34
TIMESTAMP_SIZE = 10
SIGNATURE_SIZE = 64
PUBLIC_KEY_SIZE = 32

# Bit in the 16-bit flagField marking extended mode (enlarged sequence id
# plus signed messages).  Reuses the legacy SECURITY bit.
SECURITY_FLAG = 0x8000

# Offsets 16-17 of the header (first two reserved bytes) hold the two
# MSBs of the 32-bit sequence id in extended mode.
_RESERVED_SEQ_OFFSET = 16


class WireError(Exception):
    """Base class for codec failures."""


class FieldRange(WireError):
    """A field value breaks a type invariant."""


class SequenceOverflow(FieldRange):
    """Baseline encoding asked for a sequence id >= 2^16."""


class Truncated(WireError):
    """Byte image shorter than its declared or minimal length."""


class UnknownMessageType(WireError):
    """messageType nibble not in the supported set."""


class BadLengthField(WireError):
    """messageLength disagrees with the actual layout."""


class MessageType(enum.IntEnum):
    # Values follow the IEEE 1588 messageType nibble.
    SYNC = 0x0
    DELAY_REQ = 0x1
    FOLLOW_UP = 0x8
    DELAY_RESP = 0x9
    ANNOUNCE = 0xB
    MGMT_SET = 0xD


class Mode(enum.Enum):
    BASELINE = "baseline"
    EXTENDED = "extended"


class MgmtAction(enum.IntEnum):
    SET_CLOCK_ACCURACY = 0
    SET_PRIORITY1 = 1
    SET_PRIORITY2 = 2
    SET_TIME = 3


@dataclass(frozen=True, order=True)
class Timestamp:
    """48-bit seconds + 32-bit nanoseconds; 10 bytes on the wire."""

    seconds: int
    nanoseconds: int

    def __post_init__(self):
        if not 0 <= self.seconds < 1 << 48:
            raise FieldRange(f"seconds out of 48-bit range: {self.seconds}")
        if not 0 <= self.nanoseconds < 1_000_000_000:
            raise FieldRange(f"nanoseconds out of range: {self.nanoseconds}")

    @classmethod
    def from_ns(cls, total_ns: int) -> "Timestamp":
        if total_ns < 0:
            raise FieldRange(f"negative time: {total_ns}")
        return cls(total_ns // 1_000_000_000, total_ns % 1_000_000_000)

    def to_ns(self) -> int:
        return self.seconds * 1_000_000_000 + self.nanoseconds

    def pack(self) -> bytes:
        return self.seconds.to_bytes(6, "big") + self.nanoseconds.to_bytes(4, "big")

    @classmethod
    def unpack(cls, data: bytes) -> "Timestamp":
        if len(data) < TIMESTAMP_SIZE:
            raise Truncated("timestamp needs 10 bytes")
        return cls(int.from_bytes(data[:6], "big"), int.from_bytes(data[6:10], "big"))


@dataclass(frozen=True)
class ClockIdentity:
    octets: bytes

    def __post_init__(self):
        if len(self.octets) != 8:
            raise FieldRange("clock identity must be 8 bytes")

    def __str__(self) -> str:
        return self.octets.hex()


@dataclass(frozen=True)
class PtpHeader:
    messageType: MessageType
    sourceClockIdentity: ClockIdentity
    sequenceId: int
    version: int = 2
    domainNumber: int = 0
    flagField: int = 0  # SECURITY bit managed by encode()
    correctionField: int = 0
    sourcePortNumber: int = 1
    logMessageInterval: int = 0

    def __post_init__(self):
        if not 0 <= self.sequenceId < 1 << 32:
            raise FieldRange(f"sequenceId out of 32-bit range: {self.sequenceId}")
        if not 0 <= self.flagField < 1 << 16:
            raise FieldRange("flagField out of 16-bit range")
        if not -128 <= self.logMessageInterval < 128:
            raise FieldRange("logMessageInterval out of 8-bit range")
        if not 0 <= self.version < 16:
            raise FieldRange("version out of nibble range")
        if not 0 <= self.domainNumber < 256:
            raise FieldRange("domainNumber out of range")
        if not 0 <= self.sourcePortNumber < 1 << 16:
            raise FieldRange("sourcePortNumber out of range")
        if not -(1 << 63) <= self.correctionField < 1 << 63:
            raise FieldRange("correctionField out of 64-bit range")


@dataclass(frozen=True)
class SyncBody:
    originTimestamp: Timestamp = Timestamp(0, 0)


@dataclass(frozen=True)
class DelayReqBody:
    originTimestamp: Timestamp = Timestamp(0, 0)


@dataclass(frozen=True)
class FollowUpBody:
    preciseOriginTimestamp: Timestamp
    signature: bytes | None = None  # extended mode only, 64 bytes

    def __post_init__(self):
        if self.signature is not None and len(self.signature) != SIGNATURE_SIZE:
            raise FieldRange("follow-up signature must be 64 bytes")


@dataclass(frozen=True)
class DelayRespBody:
    receiveTimestamp: Timestamp
    requestingClockIdentity: ClockIdentity
    requestingPortNumber: int = 1

    def __post_init__(self):
        if not 0 <= self.requestingPortNumber < 1 << 16:
            raise FieldRange("requestingPortNumber out of range")


@dataclass(frozen=True)
class AnnounceBody:
    originTimestamp: Timestamp = Timestamp(0, 0)
    currentUtcOffset: int = 37
    priority1: int = 128
    clockClass: int = 248
    clockAccuracy: int = 0xFE
    offsetScaledLogVariance: int = 0xFFFF
    priority2: int = 128
    grandmasterIdentity: ClockIdentity = field(
        default_factory=lambda: ClockIdentity(bytes(8))
    )
    stepsRemoved: int = 0
    timeSource: int = 0xA0
    publicKey: bytes | None = None  # extended mode only, 32 bytes
    managementSignature: bytes | None = None  # extended mode only, 64 bytes

    def __post_init__(self):
        for name, value, hi in (
            ("currentUtcOffset", self.currentUtcOffset, 1 << 16),
            ("priority1", self.priority1, 256),
            ("clockClass", self.clockClass, 256),
            ("clockAccuracy", self.clockAccuracy, 256),
            ("offsetScaledLogVariance", self.offsetScaledLogVariance, 1 << 16),
            ("priority2", self.priority2, 256),
            ("stepsRemoved", self.stepsRemoved, 1 << 16),
            ("timeSource", self.timeSource, 256),
        ):
            if not 0 <= value < hi:
                raise FieldRange(f"{name} out of range: {value}")
        if self.publicKey is not None and len(self.publicKey) != PUBLIC_KEY_SIZE:
            raise FieldRange("publicKey must be 32 bytes")
        if (
            self.managementSignature is not None
            and len(self.managementSignature) != SIGNATURE_SIZE
        ):
            raise FieldRange("managementSignature must be 64 bytes")


@dataclass(frozen=True)
class MgmtSetBody:
    action: MgmtAction
    value: int  # 64-bit payload; SET_TIME interprets it as signed ns

    def __post_init__(self):
        if not -(1 << 63) <= self.value < 1 << 64:
            raise FieldRange("mgmt value out of 64-bit range")


Body = (
    SyncBody
    | DelayReqBody
    | FollowUpBody
    | DelayRespBody
    | AnnounceBody
    | MgmtSetBody
)

_BODY_CLASS = {
    MessageType.SYNC: SyncBody,
    MessageType.DELAY_REQ: DelayReqBody,
    MessageType.FOLLOW_UP: FollowUpBody,
    MessageType.DELAY_RESP: DelayRespBody,
    MessageType.ANNOUNCE: AnnounceBody,
    MessageType.MGMT_SET: MgmtSetBody,
}

# Legacy controlField byte, derived from the message type.
_CONTROL = {
    MessageType.SYNC: 0,
    MessageType.DELAY_REQ: 1,
    MessageType.FOLLOW_UP: 2,
    MessageType.DELAY_RESP: 3,
    MessageType.MGMT_SET: 4,
    MessageType.ANNOUNCE: 5,
}


@dataclass(frozen=True)
class PtpMessage:
    header: PtpHeader
    body: Body

    def __post_init__(self):
        expected = _BODY_CLASS[self.header.messageType]
        if not isinstance(self.body, expected):
            raise FieldRange(
                f"{self.header.messageType.name} cannot carry {type(self.body).__name__}"
            )


@dataclass(frozen=True)
class Decoded:
    message: PtpMessage
    mode: Mode


def _encode_body(msg: PtpMessage, mode: Mode) -> bytes:
    body = msg.body
    extended = mode is Mode.EXTENDED
    if isinstance(body, (SyncBody, DelayReqBody)):
        return body.originTimestamp.pack()
    if isinstance(body, FollowUpBody):
        out = body.preciseOriginTimestamp.pack()
        if extended:
            if body.signature is None:
                raise FieldRange("extended FOLLOW_UP requires a signature")
            out += body.signature
        return out
    if isinstance(body, DelayRespBody):
        return (
            body.receiveTimestamp.pack()
            + body.requestingClockIdentity.octets
            + struct.pack(">H", body.requestingPortNumber)
        )
    if isinstance(body, AnnounceBody):
        out = (
            body.originTimestamp.pack()
            + struct.pack(
                ">HxBBBHB",
                body.currentUtcOffset,
                body.priority1,
                body.clockClass,
                body.clockAccuracy,
                body.offsetScaledLogVariance,
                body.priority2,
            )
            + body.grandmasterIdentity.octets
            + struct.pack(">HB", body.stepsRemoved, body.timeSource)
        )
        if extended:
            if body.publicKey is None or body.managementSignature is None:
                raise FieldRange("extended ANNOUNCE requires publicKey and signature")
            out += body.publicKey + body.managementSignature
        return out
    if isinstance(body, MgmtSetBody):
        return struct.pack(">BxQ", body.action, body.value & ((1 << 64) - 1))
    raise FieldRange(f"unsupported body {type(body).__name__}")


def encode(msg: PtpMessage, mode: Mode) -> bytes:
    """Serialize a message; deterministic byte image."""
    hdr = msg.header
    extended = mode is Mode.EXTENDED
    if not extended and hdr.sequenceId >= 1 << 16:
        raise SequenceOverflow(
            f"baseline mode cannot carry sequenceId {hdr.sequenceId:#x}"
        )
    if bool(hdr.flagField & SECURITY_FLAG) != extended:
        raise FieldRange("flagField SECURITY bit inconsistent with encoding mode")

    body = _encode_body(msg, mode)
    length = HEADER_SIZE + len(body)
    reserved_seq = (hdr.sequenceId >> 16) if extended else 0
    out = struct.pack(
        ">BBHBxH",
        hdr.messageType & 0x0F,
        hdr.version & 0x0F,
        length,
        hdr.domainNumber,
        hdr.flagField,
    )
    out += struct.pack(">q", hdr.correctionField)
    out += struct.pack(">HH", reserved_seq, 0)  # reserved bytes 16-19
    out += hdr.sourceClockIdentity.octets
    out += struct.pack(
        ">HHBb",
        hdr.sourcePortNumber,
        hdr.sequenceId & 0xFFFF,
        _CONTROL[hdr.messageType],
        hdr.logMessageInterval,
    )
    assert len(out) == HEADER_SIZE
    return out + body


def _decode_body(
    msg_type: MessageType, data: bytes, extended: bool
) -> Body:
    if msg_type is MessageType.SYNC:
        return SyncBody(Timestamp.unpack(data))
    if msg_type is MessageType.DELAY_REQ:
        return DelayReqBody(Timestamp.unpack(data))
    if msg_type is MessageType.FOLLOW_UP:
        ts = Timestamp.unpack(data)
        sig = None
        if extended:
            if len(data) < TIMESTAMP_SIZE + SIGNATURE_SIZE:
                raise Truncated("extended FOLLOW_UP missing signature")
            sig = data[TIMESTAMP_SIZE : TIMESTAMP_SIZE + SIGNATURE_SIZE]
        return FollowUpBody(ts, sig)
    if msg_type is MessageType.DELAY_RESP:
        if len(data) < 20:
            raise Truncated("DELAY_RESP body needs 20 bytes")
        return DelayRespBody(
            Timestamp.unpack(data),
            ClockIdentity(data[10:18]),
            struct.unpack(">H", data[18:20])[0],
        )
    if msg_type is MessageType.ANNOUNCE:
        if len(data) < 30:
            raise Truncated("ANNOUNCE body needs 30 bytes")
        utc, p1, cls_, acc, var, p2 = struct.unpack(">HxBBBHB", data[10:19])
        steps, src = struct.unpack(">HB", data[27:30])
        pub = sig = None
        if extended:
            if len(data) < 30 + PUBLIC_KEY_SIZE + SIGNATURE_SIZE:
                raise Truncated("extended ANNOUNCE missing certificate fields")
            pub = data[30 : 30 + PUBLIC_KEY_SIZE]
            sig = data[30 + PUBLIC_KEY_SIZE : 30 + PUBLIC_KEY_SIZE + SIGNATURE_SIZE]
        return AnnounceBody(
            originTimestamp=Timestamp.unpack(data),
            currentUtcOffset=utc,
            priority1=p1,
            clockClass=cls_,
            clockAccuracy=acc,
            offsetScaledLogVariance=var,
            priority2=p2,
            grandmasterIdentity=ClockIdentity(data[19:27]),
            stepsRemoved=steps,
            timeSource=src,
            publicKey=pub,
            managementSignature=sig,
        )
    if msg_type is MessageType.MGMT_SET:
        if len(data) < 10:
            raise Truncated("MGMT body needs 10 bytes")
        action_raw, value = struct.unpack(">BxQ", data[:10])
        try:
            action = MgmtAction(action_raw)
        except ValueError as exc:
            raise FieldRange(f"unknown management action {action_raw}") from exc
        if action is MgmtAction.SET_TIME and value >= 1 << 63:
            value -= 1 << 64
        return MgmtSetBody(action, value)
    raise UnknownMessageType(str(msg_type))


_BASELINE_BODY_SIZE = {
    MessageType.SYNC: 10,
    MessageType.DELAY_REQ: 10,
    MessageType.FOLLOW_UP: 10,
    MessageType.DELAY_RESP: 20,
    MessageType.ANNOUNCE: 30,
    MessageType.MGMT_SET: 10,
}

_EXTENDED_EXTRA = {
    MessageType.FOLLOW_UP: SIGNATURE_SIZE,
    MessageType.ANNOUNCE: PUBLIC_KEY_SIZE + SIGNATURE_SIZE,
}


def decode(data: bytes, legacy_only: bool = False) -> Decoded:
    """Parse a byte image back into a message.

    `legacy_only` emulates a baseline decoder: the SECURITY flag is
    ignored, the sequence id is read as 16 bits and any extension bytes
    past the baseline body are skipped.
    """
    if len(data) < HEADER_SIZE:
        raise Truncated(f"header needs {HEADER_SIZE} bytes, got {len(data)}")
    type_nibble = data[0] & 0x0F
    try:
        msg_type = MessageType(type_nibble)
    except ValueError as exc:
        raise UnknownMessageType(f"messageType nibble {type_nibble:#x}") from exc
    version = data[1] & 0x0F
    (length,) = struct.unpack(">H", data[2:4])
    domain = data[4]
    (flags,) = struct.unpack(">H", data[6:8])
    (correction,) = struct.unpack(">q", data[8:16])
    (reserved_seq,) = struct.unpack(">H", data[16:18])
    clock_id = ClockIdentity(data[20:28])
    port, seq_low = struct.unpack(">HH", data[28:32])
    log_interval = struct.unpack(">b", data[33:34])[0]

    extended = bool(flags & SECURITY_FLAG) and not legacy_only
    expected_len = HEADER_SIZE + _BASELINE_BODY_SIZE[msg_type]
    if extended:
        expected_len += _EXTENDED_EXTRA.get(msg_type, 0)
    if length < expected_len and not legacy_only:
        raise BadLengthField(
            f"declared length {length} below minimum {expected_len} for "
            f"{msg_type.name}"
        )
    if len(data) < length:
        raise Truncated(f"declared length {length}, got {len(data)} bytes")

    seq = ((reserved_seq << 16) | seq_low) if extended else seq_low
    header = PtpHeader(
        messageType=msg_type,
        version=version,
        domainNumber=domain,
        flagField=flags,
        correctionField=correction,
        sourceClockIdentity=clock_id,
        sourcePortNumber=port,
        sequenceId=seq,
        logMessageInterval=log_interval,
    )
    body = _decode_body(msg_type, data[HEADER_SIZE:length], extended)
    mode = Mode.EXTENDED if bool(flags & SECURITY_FLAG) else Mode.BASELINE
    return Decoded(PtpMessage(header, body), mode)


def hex_dump(msg: PtpMessage, mode: Mode) -> str:
    """One message as one hex line; the codec fixture format."""
    return encode(msg, mode).hex()


def hex_load(line: str) -> Decoded:
    return decode(bytes.fromhex(line.strip()))
