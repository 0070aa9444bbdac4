"""Four-timestamp delay/offset arithmetic and the slave clock servo.

All time quantities are integer nanoseconds; odd sums in the halving
divide round toward zero.  The servo is a gain-capped proportional
controller with the two threshold defenses: a panic threshold that steps
the clock instead of slewing, and an optional upper limit on accepted
network-delay measurements.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .wire import Timestamp

_I64_MAX = (1 << 63) - 1

DEFAULT_PANIC_THRESHOLD_NS = 1_000_000_000  # 1 s
DEFAULT_MAX_SLEW_NS_PER_S = 500_000  # 0.5 ms/s
DEFAULT_GAIN = 0.1


class ArithmeticOverflow(ArithmeticError):
    """64-bit overflow in timestamp arithmetic; input is corrupt."""


@dataclass(frozen=True)
class ExchangeSample:
    """t1: master send, t2: slave receive, t3: slave send, t4: master receive."""

    t1: Timestamp
    t2: Timestamp
    t3: Timestamp
    t4: Timestamp


def _halve(value: int) -> int:
    # Round toward zero, unlike // which floors.
    return -((-value) // 2) if value < 0 else value // 2


def _checked(value: int) -> int:
    if not -_I64_MAX - 1 <= value <= _I64_MAX:
        raise ArithmeticOverflow(f"value {value} exceeds 64-bit range")
    return value


def compute_delay(s: ExchangeSample) -> int:
    """((t2-t1) + (t4-t3)) / 2 in integer ns."""
    total = (s.t2.to_ns() - s.t1.to_ns()) + (s.t4.to_ns() - s.t3.to_ns())
    return _halve(_checked(total))


def compute_offset(s: ExchangeSample) -> int:
    """((t2-t1) - (t4-t3)) / 2 in integer ns."""
    total = (s.t2.to_ns() - s.t1.to_ns()) - (s.t4.to_ns() - s.t3.to_ns())
    return _halve(_checked(total))


class ServoAction(enum.Enum):
    STEP = "step"
    SLEW = "slew"
    REJECT_DELAY = "reject_delay"


@dataclass(frozen=True)
class ServoState:
    currentOffset: int = 0  # ns, the clock's error as the servo tracks it
    rateAdjust: float = 0.0  # ppm, held constant
    gain: float = DEFAULT_GAIN
    panicThreshold: int = DEFAULT_PANIC_THRESHOLD_NS
    maxSlewRate: int = DEFAULT_MAX_SLEW_NS_PER_S  # ns of movement per second
    maxDelayLimit: int | None = None

    def __post_init__(self):
        if not 0 < self.gain <= 1:
            raise ValueError(f"gain must be in (0, 1]: {self.gain}")
        if self.maxSlewRate <= 0:
            raise ValueError("maxSlewRate must be positive")


@dataclass(frozen=True)
class ServoResult:
    state: ServoState
    action: ServoAction
    adjustment: int  # ns applied to the clock this update (signed)


def servo_update(
    state: ServoState, measured_offset: int, measured_delay: int, elapsed: int
) -> ServoResult:
    """One servo step for a new (offset, delay) measurement.

    `elapsed` is the ns since the previous accepted update and scales the
    slew cap.  The adjustment is the amount the caller must subtract from
    its clock (a positive measured offset means the clock is ahead).
    """
    if elapsed <= 0:
        raise ValueError("elapsed must be positive")
    if state.maxDelayLimit is not None and measured_delay > state.maxDelayLimit:
        return ServoResult(state, ServoAction.REJECT_DELAY, 0)

    if abs(measured_offset) > state.panicThreshold:
        new_state = replace(state, currentOffset=state.currentOffset - measured_offset)
        return ServoResult(new_state, ServoAction.STEP, measured_offset)

    move = int(state.gain * measured_offset)
    cap = state.maxSlewRate * elapsed // 1_000_000_000
    if move > cap:
        move = cap
    elif move < -cap:
        move = -cap
    new_state = replace(state, currentOffset=state.currentOffset - move)
    return ServoResult(new_state, ServoAction.SLEW, move)
