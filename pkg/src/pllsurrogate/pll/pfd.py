"""Three-state phase/frequency detector.

Behaves like the two-flop PFD: a reference edge raises ``up``, a feedback
edge raises ``dn``. Once both are high the AND gate asserts ``reset`` one
``delay`` later, which clears both flops; ``reset`` itself drops after a
further ``delay``. Edges arriving while ``reset`` is high are swallowed.

Times are opaque comparable numbers (the simulator uses integer ticks).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

RESET_RISE = "rise"
RESET_FALL = "fall"


@dataclass(frozen=True)
class PfdState:
    up: bool = False
    dn: bool = False
    reset: bool = False
    delay: int | float = 0
    pending_at: int | float | None = None
    pending: str | None = None


def pfd_settle(state: PfdState, now) -> PfdState:
    """Apply internal reset transitions scheduled at or before ``now``."""
    while state.pending_at is not None and state.pending_at <= now:
        t = state.pending_at
        if state.pending == RESET_RISE:
            state = replace(state, up=False, dn=False, reset=True,
                            pending_at=t + state.delay, pending=RESET_FALL)
        else:
            state = replace(state, reset=False, pending_at=None, pending=None)
    return state


def pfd_step(state: PfdState, clkin_edge: bool, clkfb_edge: bool, now) -> PfdState:
    """Advance the detector to ``now`` and apply the rising edges that occur there."""
    state = pfd_settle(state, now)
    if state.reset:
        return state
    up = state.up or clkin_edge
    dn = state.dn or clkfb_edge
    state = replace(state, up=up, dn=dn)
    if up and dn and state.pending is None:
        if state.delay == 0:
            # zero-delay reset: both flops clear immediately
            return replace(state, up=False, dn=False)
        state = replace(state, pending_at=now + state.delay, pending=RESET_RISE)
    return state
