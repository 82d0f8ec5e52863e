"""Charge pump and second-order passive loop filter.

The filter is C2 from the control node to ground in parallel with R1 in
series with C1. It is integrated with backward Euler on a fixed step. In
modal coordinates, total charge ``Q = c2*vc + c1*v1`` and ``delta = vc - v1``,
one step with pump current ``u`` reads::

    Q'     = Q + dt*u
    delta' = lam*delta + ku*u

so ``n`` steps at constant current have the closed form
``vc_n = a + b*n + d*lam**n``. The simulator uses that to skip through long
stretches where the pump is idle or saturated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class LoopFilter:
    r1: float
    c1: float
    c2: float

    def __post_init__(self):
        if self.r1 < 0 or self.c1 < 0 or self.c2 < 0:
            raise ValueError("loop filter elements must be non-negative")
        if self.c1 + self.c2 <= 0:
            raise ValueError("loop filter needs non-zero capacitance")
        if self.r1 > 0 and self.c1 == 0:
            raise ValueError("r1 > 0 requires c1 > 0")


def design_loop_filter(f_ref: float, n_div: int, icp: float, kvco_hz: float,
                       bw_ratio: float = 1 / 20, pm_deg: float = 60.0) -> LoopFilter:
    """Place the crossover at ``bw_ratio*f_ref`` with the requested phase margin.

    Standard type-II third-order loop synthesis: the zero and pole sit
    symmetrically (geometrically) around the crossover.
    """
    if not (0 < pm_deg < 90):
        raise ValueError("phase margin must be in (0, 90) degrees")
    if min(f_ref, icp, kvco_hz, bw_ratio) <= 0 or n_div < 1:
        raise ValueError("loop parameters must be positive")
    pm = math.radians(pm_deg)
    x = math.tan(pm) + 1 / math.cos(pm)
    b = x * x - 1
    wc = 2 * math.pi * f_ref * bw_ratio
    kv = 2 * math.pi * kvco_hz
    ctot = icp / (2 * math.pi) * kv * x / (n_div * wc * wc)
    c2 = ctot / (1 + b)
    c1 = b * c2
    r1 = x / (wc * c1)
    return LoopFilter(r1=r1, c1=c1, c2=c2)


class FilterStepper:
    """Backward-Euler propagator for one filter at a fixed step ``dt``."""

    def __init__(self, lf: LoopFilter, dt: float):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.lf = lf
        self.dt = dt
        self.ctot = lf.c1 + lf.c2
        if lf.r1 == 0 or lf.c1 == 0:
            # capacitors merge: no internal mode
            self.lam = 0.0
            self.ku = 0.0
        else:
            g = 1.0 / lf.r1
            den = lf.c2 + dt * g * (1.0 + lf.c2 / lf.c1)
            self.lam = lf.c2 / den
            self.ku = dt / den

    # state is (vc, v1)
    def to_modal(self, vc, v1):
        return self.lf.c2 * vc + self.lf.c1 * v1, vc - v1

    def from_modal(self, q, delta):
        vc = (q + self.lf.c1 * delta) / self.ctot
        return vc, vc - delta

    def step(self, vc, v1, u):
        q, delta = self.to_modal(vc, v1)
        return self.from_modal(q + self.dt * u, self.lam * delta + self.ku * u)

    def closed_form(self, vc, v1, u):
        """Coefficients ``(a, b, d)`` with ``vc_n = a + b*n + d*lam**n`` for n >= 1."""
        q, delta = self.to_modal(vc, v1)
        dinf = self.ku * u / (1.0 - self.lam)
        a = (q + self.lf.c1 * dinf) / self.ctot
        b = self.dt * u / self.ctot
        d = self.lf.c1 * (delta - dinf) / self.ctot
        return a, b, d

    def advance(self, vc, v1, u, n: int):
        q, delta = self.to_modal(vc, v1)
        ln = self.lam ** n
        dinf = self.ku * u / (1.0 - self.lam)
        return self.from_modal(q + n * self.dt * u, dinf + (delta - dinf) * ln)

    def range_over(self, vc0, a, b, d, n: int):
        """Min and max of ``vc_j`` for integer ``j`` in ``[0, n]``."""
        lam = self.lam
        cands = [vc0, a + b * n + d * lam ** n]
        if n >= 1:
            cands.append(a + b + d * lam)
        if 0 < lam < 1 and d != 0 and b != 0:
            ll = math.log(lam)
            arg = -b / (d * ll)
            if arg > 0:
                js = math.log(arg) / ll
                if 1 <= js <= n:
                    for j in (math.floor(js), math.ceil(js)):
                        cands.append(a + b * j + d * lam ** j)
        return min(cands), max(cands)


def cp_target(up: bool, dn: bool, icp: float) -> float:
    if up and not dn:
        return icp
    if dn and not up:
        return -icp
    return 0.0


def cp_guard(u: float, vc: float, vdd: float) -> float:
    """Pump output cannot drive the control node past the rails."""
    if (u > 0 and vc >= vdd) or (u < 0 and vc <= 0.0):
        return 0.0
    return u


@dataclass(frozen=True)
class CpLfState:
    vc: float = 0.0
    v1: float = 0.0
    i: float = 0.0  # pump output current at the start of the step


def cp_lf_step(state: CpLfState, up: bool, dn: bool, dt: float, lf: LoopFilter,
               cp_current: float, vdd: float, cp_transition: float = 0.0) -> CpLfState:
    """One analog step of pump plus filter.

    The pump output slews linearly toward its target at ``cp_current /
    cp_transition`` and the exact average over the step drives a backward
    Euler filter update. The control voltage is clamped to ``[0, vdd]``.
    """
    target = cp_guard(cp_target(up, dn, cp_current), state.vc, vdd)
    i0 = state.i
    if cp_transition > 0 and i0 != target:
        t_ramp = abs(target - i0) / cp_current * cp_transition
        if t_ramp >= dt:
            i1 = i0 + (target - i0) * dt / t_ramp
            avg = 0.5 * (i0 + i1)
        else:
            i1 = target
            avg = (0.5 * (i0 + target) * t_ramp + target * (dt - t_ramp)) / dt
    else:
        i1 = avg = target
    vc, v1 = FilterStepper(lf, dt).step(state.vc, state.v1, avg)
    vc = min(max(vc, 0.0), vdd)
    return CpLfState(vc=vc, v1=v1, i=i1)
