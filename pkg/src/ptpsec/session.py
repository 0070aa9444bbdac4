"""Sequence-id session semantics.

Randomized per-type counters, the acceptance window with
advance-on-accept (the property the blind snatching attack exploits),
and the random challenge ids carried by slave requests.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .wire import MessageType

DEFAULT_WINDOW_SIZE = 50

ID_SPACE_16 = 1 << 16
ID_SPACE_32 = 1 << 32


@dataclass(frozen=True)
class SequenceWindow:
    """Range [expected, expected + size - 1] mod id_space of acceptable ids."""

    expected: int
    size: int = DEFAULT_WINDOW_SIZE
    id_space: int = ID_SPACE_16

    def __post_init__(self):
        # 16- and 32-bit in deployment; small powers of two for desk-scale
        # complexity experiments.
        if self.id_space < 4 or self.id_space & (self.id_space - 1):
            raise ValueError(f"unsupported id space {self.id_space}")
        if not 1 <= self.size <= self.id_space // 2:
            raise ValueError(f"window size {self.size} out of range")
        if not 0 <= self.expected < self.id_space:
            raise ValueError("expected id outside the id space")


def init_counter(rng: random.Random, id_space: int = ID_SPACE_16) -> int:
    """Fresh pseudo-random counter; one independent draw per (type, master)."""
    return rng.randrange(id_space)


def window_accept(win: SequenceWindow, received: int) -> tuple[bool, SequenceWindow]:
    """Accept iff received lies in the window; advance to received + 1 on accept."""
    if not 0 <= received < win.id_space:
        raise ValueError(f"id {received} outside id space {win.id_space}")
    distance = (received - win.expected) % win.id_space
    if distance >= win.size:
        return False, win
    return True, replace(win, expected=(received + 1) % win.id_space)


class ChallengeState:
    """At most one outstanding random challenge per message type."""

    def __init__(self, id_space: int = ID_SPACE_32):
        self.id_space = id_space
        self.outstanding: dict[MessageType, int] = {}

    def issue(self, msg_type: MessageType, rng: random.Random) -> int:
        challenge = rng.randrange(self.id_space)
        self.outstanding[msg_type] = challenge
        return challenge

    def check(self, msg_type: MessageType, echoed: int) -> bool:
        """Accept iff echoed matches the outstanding challenge; clears on accept."""
        if self.outstanding.get(msg_type) != echoed:
            return False
        del self.outstanding[msg_type]
        return True


def issue_challenge(
    state: ChallengeState, msg_type: MessageType, rng: random.Random
) -> int:
    return state.issue(msg_type, rng)


def check_challenge(state: ChallengeState, msg_type: MessageType, echoed: int) -> bool:
    return state.check(msg_type, echoed)
