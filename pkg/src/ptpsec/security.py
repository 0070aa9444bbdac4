"""Cryptographic layer: Ed25519 master certificates and signed FOLLOW_UPs,
plus the symmetric group-key HMAC baseline whose insider weakness the
public-key scheme fixes.

Signatures are 64 bytes, public keys 32 bytes.  A certificate is the
announce body with its volatile fields zeroed, the master's public key
appended, signed by the management key; verifiers cache the certificate
bytes per source and only redo the cryptographic check when they change.
"""

from __future__ import annotations

import hashlib
import hmac as _hmac
import statistics
import time
from dataclasses import dataclass, replace

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from . import wire
from .wire import (
    AnnounceBody,
    ClockIdentity,
    Mode,
    PtpMessage,
    Timestamp,
)

SIGNATURE_SIZE = wire.SIGNATURE_SIZE
PUBLIC_KEY_SIZE = wire.PUBLIC_KEY_SIZE
HMAC_TAG_SIZE = 32

_ZERO_SIG = bytes(SIGNATURE_SIZE)


@dataclass(frozen=True)
class KeyPair:
    privateKey: Ed25519PrivateKey
    publicKey: bytes  # 32 raw bytes

    @classmethod
    def from_seed(cls, seed: bytes) -> "KeyPair":
        if len(seed) != 32:
            raise ValueError("key seed must be 32 bytes")
        priv = Ed25519PrivateKey.from_private_bytes(seed)
        return cls(priv, priv.public_key().public_bytes_raw())

    def sign(self, data: bytes) -> bytes:
        return self.privateKey.sign(data)


def verify_signature(public_key: bytes, signature: bytes, data: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, data)
        return True
    except (InvalidSignature, ValueError):
        return False


@dataclass(frozen=True)
class GroupKey:
    secret: bytes  # 32-byte shared symmetric key, identical on every node

    def __post_init__(self):
        if len(self.secret) != 32:
            raise ValueError("group key must be 32 bytes")


def canonical_announce(body: AnnounceBody, master_pub: bytes) -> AnnounceBody:
    """Zero the fields the election does not need before signing."""
    return replace(
        body,
        originTimestamp=Timestamp(0, 0),
        stepsRemoved=0,
        publicKey=master_pub,
        managementSignature=_ZERO_SIG,
    )


def _announce_body_bytes(body: AnnounceBody) -> bytes:
    msg = PtpMessage(
        wire.PtpHeader(
            messageType=wire.MessageType.ANNOUNCE,
            sourceClockIdentity=ClockIdentity(bytes(8)),
            sequenceId=0,
            flagField=wire.SECURITY_FLAG,
        ),
        body,
    )
    return wire.encode(msg, Mode.EXTENDED)[wire.HEADER_SIZE :]


def make_certificate(
    body: AnnounceBody, master_pub: bytes, mgmt_key: KeyPair
) -> AnnounceBody:
    """Certified announce body: canonicalized, public key embedded, signed."""
    canon = canonical_announce(body, master_pub)
    signature = mgmt_key.sign(_announce_body_bytes(canon))
    return replace(canon, managementSignature=signature)


def certificate_valid(cert: AnnounceBody, mgmt_pub: bytes) -> bool:
    """Full cryptographic check of one certificate (no caching)."""
    if cert.publicKey is None or cert.managementSignature is None:
        return False
    canon = canonical_announce(cert, cert.publicKey)
    return verify_signature(
        mgmt_pub, cert.managementSignature, _announce_body_bytes(canon)
    )


class CertificateVerifier:
    """Per-source cache: verify cryptographically on first sight or change."""

    def __init__(self, mgmt_pub: bytes):
        self.mgmt_pub = mgmt_pub
        self.crypto_checks = 0
        self._cache: dict[bytes, tuple[bytes, bool]] = {}

    def verify(self, source: ClockIdentity, cert: AnnounceBody) -> bool:
        if cert.publicKey is None or cert.managementSignature is None:
            return False
        canon = canonical_announce(cert, cert.publicKey)
        cert_bytes = _announce_body_bytes(canon) + cert.managementSignature
        cached = self._cache.get(source.octets)
        if cached is not None and cached[0] == cert_bytes:
            return cached[1]
        self.crypto_checks += 1
        result = certificate_valid(cert, self.mgmt_pub)
        self._cache[source.octets] = (cert_bytes, result)
        return result


def _followup_signing_bytes(msg: PtpMessage) -> bytes:
    # Header and payload with the signature field zero-filled.
    body = msg.body
    if not isinstance(body, wire.FollowUpBody):
        raise TypeError("only FOLLOW_UP messages carry this signature")
    blank = PtpMessage(msg.header, replace(body, signature=_ZERO_SIG))
    return wire.encode(blank, Mode.EXTENDED)


def sign_followup(msg: PtpMessage, master_key: KeyPair) -> bytes:
    """64-byte signature over the entire message, signature field zeroed."""
    return master_key.sign(_followup_signing_bytes(msg))


def verify_followup(msg: PtpMessage, master_pub: bytes) -> bool:
    body = msg.body
    if not isinstance(body, wire.FollowUpBody) or body.signature is None:
        return False
    return verify_signature(master_pub, body.signature, _followup_signing_bytes(msg))


def hmac_tag(data: bytes, key: GroupKey) -> bytes:
    """Group-key ICV; any key holder can tag for any claimed identity."""
    return _hmac.new(key.secret, data, hashlib.sha256).digest()


def hmac_check(data: bytes, tag: bytes, key: GroupKey) -> bool:
    return _hmac.compare_digest(hmac_tag(data, key), tag)


def load_key_file(path) -> dict[str, bytes]:
    """Key file format: `<node-name> <64 hex chars>` per line."""
    keys: dict[str, bytes] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            name, hexkey = line.split()
            raw = bytes.fromhex(hexkey)
            if len(raw) != PUBLIC_KEY_SIZE:
                raise ValueError(f"key for {name} is not 32 bytes")
            keys[name] = raw
    return keys


def save_key_file(path, keys: dict[str, bytes]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for name, raw in keys.items():
            handle.write(f"{name} {raw.hex()}\n")


def benchmark_crypto(iterations: int = 200) -> dict[str, float]:
    """Median sign/verify wall-clock ns over a 44-byte FOLLOW_UP image."""
    if iterations < 100:
        raise ValueError("need at least 100 iterations")
    key = KeyPair.from_seed(hashlib.sha256(b"ptpsec-bench").digest())
    payload = wire.encode(
        PtpMessage(
            wire.PtpHeader(
                messageType=wire.MessageType.FOLLOW_UP,
                sourceClockIdentity=ClockIdentity(bytes(8)),
                sequenceId=1,
            ),
            wire.FollowUpBody(Timestamp(1, 0)),
        ),
        Mode.BASELINE,
    )
    sign_times = []
    verify_times = []
    signature = key.sign(payload)
    for _ in range(iterations):
        start = time.perf_counter_ns()
        signature = key.sign(payload)
        sign_times.append(time.perf_counter_ns() - start)
        start = time.perf_counter_ns()
        verify_signature(key.publicKey, signature, payload)
        verify_times.append(time.perf_counter_ns() - start)
    return {
        "sign": statistics.median(sign_times),
        "verify": statistics.median(verify_times),
    }
