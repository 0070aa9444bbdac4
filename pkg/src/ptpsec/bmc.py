"""Best-Master-Clock dataset comparison and election.

Simplified to a flat lexicographic comparison over the announced
dataset; with certificate gating enabled, only records whose announce
certificate verified may compete.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .identity import NetworkAddress
from .wire import AnnounceBody, ClockIdentity


class CertState(enum.Enum):
    UNVERIFIED = "unverified"
    VERIFIED = "verified"
    REJECTED = "rejected"


@dataclass
class ForeignMasterRecord:
    announce: AnnounceBody
    sourceAddr: NetworkAddress
    sourceClockId: ClockIdentity
    lastSeen: int  # sim-time ns
    certState: CertState = CertState.UNVERIFIED


def dataset_key(a: AnnounceBody, clock_id: ClockIdentity) -> tuple:
    """Lower compares as better; clock identity is the unique tiebreak."""
    return (
        a.priority1,
        a.clockClass,
        a.clockAccuracy,
        a.offsetScaledLogVariance,
        a.priority2,
        clock_id.octets,
    )


def bmc_compare(a: AnnounceBody, a_id: ClockIdentity, b: AnnounceBody, b_id: ClockIdentity) -> int:
    """-1 if a is the better clock, +1 if b is, never 0 for distinct ids."""
    ka, kb = dataset_key(a, a_id), dataset_key(b, b_id)
    if ka < kb:
        return -1
    if ka > kb:
        return 1
    return 0


class Role(enum.Enum):
    MASTER = "master"
    SLAVE = "slave"


@dataclass(frozen=True)
class ElectionResult:
    role: Role
    chosenMaster: ClockIdentity | None  # None when we are the master


def run_election(
    records: list[ForeignMasterRecord],
    own: AnnounceBody,
    own_id: ClockIdentity,
    require_certs: bool = False,
) -> ElectionResult:
    """Deterministic election over non-stale records; lowest dataset wins."""
    eligible = [
        r
        for r in records
        if not require_certs or r.certState is CertState.VERIFIED
    ]
    best = min(
        eligible,
        key=lambda r: dataset_key(r.announce, r.sourceClockId),
        default=None,
    )
    if best is None or dataset_key(own, own_id) < dataset_key(
        best.announce, best.sourceClockId
    ):
        return ElectionResult(Role.MASTER, None)
    return ElectionResult(Role.SLAVE, best.sourceClockId)
