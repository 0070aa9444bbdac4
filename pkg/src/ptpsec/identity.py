"""Clock-ID construction from network addresses and the binding check.

Clock IDs are derived deterministically from the underlying network
address (EUI-64 style, 0xFFFE in the middle octets) instead of using
registry-assigned identifiers.  A receiver can then check that a
message's claimed source clock ID matches the address it actually came
from, which defeats applicative spoofing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .wire import ClockIdentity


class AddressKind(enum.Enum):
    MAC6 = "mac6"
    IPV4 = "ipv4"


@dataclass(frozen=True)
class NetworkAddress:
    kind: AddressKind
    octets: bytes
    port: int = 319  # simulated transport port, not part of the binding

    def __post_init__(self):
        expected = 6 if self.kind is AddressKind.MAC6 else 4
        if len(self.octets) != expected:
            raise ValueError(
                f"{self.kind.value} address needs {expected} octets, "
                f"got {len(self.octets)}"
            )

    @classmethod
    def mac(cls, text: str) -> "NetworkAddress":
        return cls(AddressKind.MAC6, bytes(int(p, 16) for p in text.split(":")))

    @classmethod
    def ipv4(cls, text: str) -> "NetworkAddress":
        return cls(AddressKind.IPV4, bytes(int(p) for p in text.split(".")))

    def __str__(self) -> str:
        if self.kind is AddressKind.MAC6:
            return ":".join(f"{b:02x}" for b in self.octets)
        return ".".join(str(b) for b in self.octets)


def clock_id_from_network(addr: NetworkAddress) -> ClockIdentity:
    """Derive the 8-byte clock ID; injective per address kind."""
    o = addr.octets
    if addr.kind is AddressKind.MAC6:
        return ClockIdentity(o[:3] + b"\xff\xfe" + o[3:])
    return ClockIdentity(bytes([0, o[0], o[1], 0xFF, 0xFE, o[2], o[3], 0]))


def verify_binding(msg_source_clock_id: ClockIdentity, observed: NetworkAddress) -> bool:
    """Accept iff the claimed clock ID is the one derived from the observed address."""
    return clock_id_from_network(observed) == msg_source_clock_id
