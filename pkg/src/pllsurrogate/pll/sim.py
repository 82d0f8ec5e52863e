"""Hybrid event-driven / fixed-step charge-pump PLL simulator.

Digital activity (reference clock, PFD, VCO toggles, divider) runs on an
integer tick clock of ``time_precision`` seconds. The charge pump and loop
filter advance on a fixed ``analog_dt`` grid. Between events the pump
current is piecewise linear (slewed over ``cp_transition``) and is integrated
exactly over each analog step. Long stretches at constant current are
advanced in closed form.

The VCO samples the control voltage at the grid point at or before each
toggle and schedules its next toggle half a period later.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .loopfilter import FilterStepper, LoopFilter, cp_guard, cp_target, design_loop_filter
from .pfd import PfdState, pfd_settle, pfd_step
from .vco import Counter


# Loop filter of the default scenario: crossover at f_in/20 with 60 degrees of
# phase margin, using the straight-line gain of the baseline VCO (74.8 MHz/V).
DESIGN_KVCO = 74.8e6
DEFAULT_LF = design_loop_filter(550e6, 4, 50e-6, DESIGN_KVCO)


class SimulationError(RuntimeError):
    """The simulation cannot continue (pathological VCO response, bad config)."""


@dataclass(frozen=True)
class PllConfig:
    f_in: float = 550e6
    N: int = 4
    cp_current: float = 50e-6
    cp_transition: float = 2e-12
    pfd_reset_delay: float = 10e-12
    lf: LoopFilter = DEFAULT_LF
    vdd: float = 1.8
    analog_dt: float = 10e-12
    t_end: float = 500e-9
    vco_view: object = None
    wp: float = 20e-6
    wn: float = 10e-6
    power_window_cycles: int = 50
    lock_tol: float = 1e-3
    lock_window: int = 20
    vc_init: float = 0.0
    time_precision: float = 1e-15
    record_edges: bool = True

    def __post_init__(self):
        if isinstance(self.lf, dict):
            object.__setattr__(self, "lf", LoopFilter(**self.lf))
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be an integer >= 1")
        object.__setattr__(self, "N", int(self.N))
        for name in ("f_in", "cp_current", "analog_dt", "t_end", "vdd", "time_precision", "lock_tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        for name in ("cp_transition", "pfd_reset_delay"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")
        if self.power_window_cycles < 1 or self.lock_window < 1:
            raise ValueError("power_window_cycles and lock_window must be >= 1")
        if not 0.0 <= self.vc_init <= self.vdd:
            raise ValueError("vc_init must lie within [0, vdd]")
        if not (self.wp > 0 and self.wn > 0):
            raise ValueError("wp and wn must be positive")
        ratio = self.analog_dt / self.time_precision
        if abs(ratio - round(ratio)) > 1e-6 * ratio:
            raise ValueError("analog_dt must be a whole multiple of time_precision")

    def to_dict(self) -> dict:
        """JSON-ready scenario; the VCO view is described separately."""
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "vco_view"}
        d["lf"] = asdict(self.lf)
        return d

    @classmethod
    def from_dict(cls, data: dict, vco_view=None) -> "PllConfig":
        known = {f.name for f in fields(cls)} - {"vco_view"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown PllConfig fields: {sorted(unknown)}")
        return cls(**data, vco_view=vco_view)

    @classmethod
    def load(cls, path, vco_view=None) -> "PllConfig":
        return cls.from_dict(json.loads(Path(path).read_text()), vco_view)

    def with_view(self, view) -> "PllConfig":
        return replace(self, vco_view=view)


@dataclass
class SimTrace:
    t: np.ndarray            # analog grid (s)
    vc: np.ndarray           # control voltage on the grid (V)
    cycle_t: np.ndarray      # VCO rising edges that start a full cycle (s)
    inst_freq: np.ndarray    # per VCO cycle (Hz)
    cycle_power: np.ndarray  # energy-averaged per VCO cycle (W)
    power_t: np.ndarray      # start of each power window (s)
    power_avg: np.ndarray    # power averaged per window (W)
    fb_t: np.ndarray         # divider rising edges (s)
    edges: list              # (t_s, signal, value)
    grid_freq: np.ndarray    # VCO frequency in force at each grid point (Hz)
    grid_power: np.ndarray
    diagnostics: dict


@dataclass(frozen=True)
class SimMetrics:
    lock_time: float | None
    f_locked: float | None = None
    p_locked: float | None = None
    vc_rmse_vs_ref: float | None = None

    def __post_init__(self):
        if self.lock_time is None and (self.f_locked is not None or self.p_locked is not None):
            raise ValueError("unlocked runs carry no locked frequency or power")

    @property
    def locked(self) -> bool:
        return self.lock_time is not None

    def to_dict(self) -> dict:
        return {
            "lock_time": "never" if self.lock_time is None else self.lock_time,
            "f_locked": self.f_locked,
            "p_locked": self.p_locked,
            "vc_rmse_vs_ref": self.vc_rmse_vs_ref,
        }


# ---------------------------------------------------------------------------
# piecewise-linear pump current


class _Pwl:
    __slots__ = ("ts", "vs")

    def __init__(self, t0: int):
        self.ts = [t0]
        self.vs = [0.0]

    def value(self, t: int) -> float:
        ts, vs = self.ts, self.vs
        if t >= ts[-1]:
            return vs[-1]
        for i in range(len(ts) - 1, 0, -1):
            if ts[i - 1] <= t:
                t0, t1 = ts[i - 1], ts[i]
                if t1 == t0:
                    return vs[i]
                return vs[i - 1] + (vs[i] - vs[i - 1]) * (t - t0) / (t1 - t0)
        return vs[0]

    def retarget(self, t: int, target: float, ramp: int):
        v = self.value(t)
        while len(self.ts) > 1 and self.ts[-1] > t:
            self.ts.pop()
            self.vs.pop()
        self.ts.append(t)
        self.vs.append(v)
        self.ts.append(t + ramp)
        self.vs.append(target)

    def prune(self, t: int):
        ts = self.ts
        i = 0
        while i + 1 < len(ts) and ts[i + 1] <= t:
            i += 1
        if i:
            del self.ts[:i]
            del self.vs[:i]

    def settled(self, t: int) -> bool:
        return self.ts[-1] <= t

    def integral(self, a: int, b: int) -> float:
        """Integral over ``[a, b]`` in amp-ticks."""
        ts, vs = self.ts, self.vs
        total = 0.0
        if a < ts[0]:
            total += vs[0] * (min(b, ts[0]) - a)
        for i in range(len(ts) - 1):
            t0, t1 = ts[i], ts[i + 1]
            lo, hi = max(a, t0), min(b, t1)
            if hi <= lo:
                continue
            slope = (vs[i + 1] - vs[i]) / (t1 - t0)
            v_lo = vs[i] + slope * (lo - t0)
            v_hi = vs[i] + slope * (hi - t0)
            total += 0.5 * (v_lo + v_hi) * (hi - lo)
        if b > ts[-1]:
            total += vs[-1] * (b - max(a, ts[-1]))
        return total


# ---------------------------------------------------------------------------
# lock detection


def measure_lock(fb_t, n_div: int, f_target: float, tol: float, window: int):
    """Index into ``fb_t`` where the loop is locked, or ``None``.

    Per-cycle output frequency is ``N / (fb[k] - fb[k-1])``. Lock starts at
    the divider edge that closes the last out-of-tolerance cycle, provided at
    least ``window`` in-tolerance cycles follow it.
    """
    fb_t = np.asarray(fb_t, dtype=float)
    if len(fb_t) < window + 1:
        return None
    f = n_div / np.diff(fb_t)
    bad = np.flatnonzero(np.abs(f - f_target) > tol * f_target)
    start = 0 if len(bad) == 0 else int(bad[-1]) + 1
    if len(fb_t) - 1 - start < window:
        return None
    return start


# ---------------------------------------------------------------------------
# main loop


def _ticks(x: float, tq: float) -> int:
    return int(round(x / tq))


def run(config: PllConfig, view=None):
    """Simulate ``config`` and return ``(SimTrace, SimMetrics)``."""
    view = view if view is not None else config.vco_view
    if view is None:
        raise ValueError("no VCO view given")
    wall0 = time.perf_counter()
    cfg = config
    tq = cfg.time_precision
    dtk = _ticks(cfg.analog_dt, tq)
    t_end = _ticks(cfg.t_end, tq)
    k_end = t_end // dtk
    ramp = _ticks(cfg.cp_transition, tq)
    t_ref = 1.0 / cfg.f_in / tq
    vdd = cfg.vdd
    icp = cfg.cp_current
    N = cfg.N

    counter = Counter()
    vco = view.bind(cfg.wp, cfg.wn, counter)
    stepper = FilterStepper(cfg.lf, cfg.analog_dt)
    lam = stepper.lam
    dt_s = cfg.analog_dt

    # analog state
    vc = v1 = cfg.vc_init
    k = 0
    wave = _Pwl(0)
    chunks = []          # (k0, n, a, b, d) closed-form runs covering k0+1 .. k0+n
    singles_k = []
    singles_v = []

    def advance(t: int):
        nonlocal vc, v1, k
        target_k = min(t // dtk, k_end)
        while k < target_k:
            t_k = k * dtk
            wave.prune(t_k)
            if wave.settled(t_k):
                u_raw = wave.vs[-1]
                u = cp_guard(u_raw, vc, vdd)
                # a guard-modified current is only valid for one step
                n = target_k - k if u == u_raw else 1
                while n >= 1:
                    a, b, d = stepper.closed_form(vc, v1, u)
                    lo, hi = stepper.range_over(vc, a, b, d, n)
                    if lo >= 0.0 and hi <= vdd and not (u > 0 and hi >= vdd) and not (u < 0 and lo <= 0.0):
                        break
                    n //= 2
                if n >= 1:
                    chunks.append((k, n, a, b, d))
                    vc, v1 = stepper.advance(vc, v1, u, n)
                    k += n
                    continue
                u = u_raw
            else:
                u = wave.integral(t_k, t_k + dtk) / dtk
            u = cp_guard(u, vc, vdd)
            vc, v1 = stepper.step(vc, v1, u)
            if vc > vdd:
                vc = vdd
            elif vc < 0.0:
                vc = 0.0
            k += 1
            singles_k.append(k)
            singles_v.append(vc)

    # digital state
    pfd = PfdState(delay=_ticks(cfg.pfd_reset_delay, tq))
    edges = []
    log = edges.append if cfg.record_edges else (lambda e: None)
    out = 0
    vco_count = 0
    fb_ticks = []
    half_t = []
    half_h = []
    half_f = []
    half_p = []
    half_level = []
    cp_now = 0.0

    def sample_vco(t: int):
        f, p = vco(vc)
        if not (math.isfinite(f) and math.isfinite(p)) or f <= 0:
            raise SimulationError(
                f"{getattr(view, 'name', type(view).__name__)} view returned freq={f!r}, "
                f"power={p!r} at wp={cfg.wp!r}, wn={cfg.wn!r}, vc={vc!r}, t={t * tq:.4e} s"
            )
        h = int(round(0.5 / f / tq))
        if h < 1:
            raise SimulationError(f"VCO half period below time resolution (freq={f!r})")
        half_t.append(t)
        half_h.append(h)
        half_f.append(f)
        half_p.append(p)
        half_level.append(out)
        return t + h

    def pfd_changed(t: int, old: PfdState):
        nonlocal cp_now
        if pfd.up != old.up:
            log((t, "up", int(pfd.up)))
        if pfd.dn != old.dn:
            log((t, "dn", int(pfd.dn)))
        target = cp_target(pfd.up, pfd.dn, icp)
        if target != cp_now:
            wave.retarget(t, target, ramp)
            cp_now = target

    INF = float("inf")
    n_ref = 0
    next_ref = 0
    next_tog = sample_vco(0)

    while True:
        t_pfd = pfd.pending_at if pfd.pending_at is not None else INF
        t = min(t_pfd, next_ref, next_tog)
        if t > t_end:
            break
        advance(t)
        if t_pfd == t:
            old = pfd
            pfd = pfd_settle(pfd, t)
            pfd_changed(t, old)
        elif next_ref == t:
            old = pfd
            pfd = pfd_step(pfd, True, False, t)
            pfd_changed(t, old)
            n_ref += 1
            next_ref = int(round(n_ref * t_ref))
        else:
            out ^= 1
            log((t, "out", out))
            if out:
                if vco_count % N == 0:
                    fb_ticks.append(t)
                    log((t, "fb", 1))
                    old = pfd
                    pfd = pfd_step(pfd, False, True, t)
                    pfd_changed(t, old)
                elif N > 1 and vco_count % N == N // 2:
                    log((t, "fb", 0))
                vco_count += 1
            elif N == 1:
                log((t, "fb", 0))
            next_tog = sample_vco(t)
    advance(t_end)

    # -- reconstruct the control-voltage trace
    vcs = np.empty(k_end + 1)
    vcs[0] = cfg.vc_init
    for k0, n, a, b, d in chunks:
        j = np.arange(1, n + 1, dtype=float)
        vcs[k0 + 1:k0 + n + 1] = a + b * j + d * lam ** j
    if singles_k:
        vcs[np.array(singles_k)] = np.array(singles_v)
    np.clip(vcs, 0.0, vdd, out=vcs)
    grid_ticks = np.arange(k_end + 1, dtype=np.int64) * dtk

    # -- VCO cycle bookkeeping (only halves that complete before t_end)
    ht = np.array(half_t, dtype=np.int64)
    hh = np.array(half_h, dtype=np.int64)
    hf = np.array(half_f)
    hp = np.array(half_p)
    hl = np.array(half_level, dtype=np.int8)
    complete = ht + hh <= t_end
    rise_idx = np.flatnonzero((hl == 1) & complete)
    rise_idx = rise_idx[rise_idx + 1 < len(ht)]
    rise_idx = rise_idx[complete[rise_idx + 1]]
    cyc_len = hh[rise_idx] + hh[rise_idx + 1]
    cyc_energy = hp[rise_idx] * hh[rise_idx] + hp[rise_idx + 1] * hh[rise_idx + 1]
    cycle_t = ht[rise_idx] * tq
    inst_freq = 1.0 / (cyc_len * tq) if len(cyc_len) else np.empty(0)
    cycle_power = cyc_energy / cyc_len if len(cyc_len) else np.empty(0)

    w = cfg.power_window_cycles
    nwin = len(cyc_len) // w
    if nwin:
        e = cyc_energy[: nwin * w].reshape(nwin, w).sum(axis=1)
        L = cyc_len[: nwin * w].reshape(nwin, w).sum(axis=1)
        power_t = cycle_t[: nwin * w : w]
        power_avg = e / L
    else:
        power_t = np.empty(0)
        power_avg = np.empty(0)

    # VCO frequency / power in force at each grid point
    if len(ht):
        idx = np.searchsorted(ht, grid_ticks, side="right") - 1
        grid_freq = hf[idx]
        grid_power = hp[idx]
    else:
        grid_freq = grid_power = np.full(k_end + 1, np.nan)

    fb = np.array(fb_ticks, dtype=np.int64)
    fb_s = fb * tq
    target = N * cfg.f_in
    start = measure_lock(fb_s, N, target, cfg.lock_tol, cfg.lock_window)
    if start is None:
        metrics = SimMetrics(lock_time=None)
    else:
        t_lock = int(fb[start])
        t_last = int(fb[-1])
        f_locked = N * (len(fb) - 1 - start) / ((t_last - t_lock) * tq)
        sel = (ht >= t_lock) & (ht + hh <= t_last)
        p_locked = float(np.sum(hp[sel] * hh[sel]) / np.sum(hh[sel]))
        metrics = SimMetrics(lock_time=t_lock * tq, f_locked=float(f_locked), p_locked=p_locked)

    trace = SimTrace(
        t=grid_ticks * tq,
        vc=vcs,
        cycle_t=cycle_t,
        inst_freq=inst_freq,
        cycle_power=cycle_power,
        power_t=power_t,
        power_avg=power_avg,
        fb_t=fb_s,
        edges=[(et * tq, sig, val) for et, sig, val in edges],
        grid_freq=grid_freq,
        grid_power=grid_power,
        diagnostics={
            "view": getattr(view, "name", type(view).__name__),
            "vco_evals": counter.evals,
            "extrapolated_evals": counter.extrapolated,
            "closed_form_runs": len(chunks),
            "single_steps": len(singles_k),
            "vco_rising_edges": vco_count,
            "wall_time_s": time.perf_counter() - wall0,
        },
    )
    return trace, metrics


# ---------------------------------------------------------------------------
# export


def save_trace_csv(trace: SimTrace, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "vc_v", "freq_hz", "power_w"])
        for row in zip(trace.t, trace.vc, trace.grid_freq, trace.grid_power):
            w.writerow([f"{row[0]:.6e}", f"{row[1]:.9e}", f"{row[2]:.9e}", f"{row[3]:.9e}"])
    return path


def save_edges_csv(trace: SimTrace, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "signal", "value"])
        for t, sig, val in trace.edges:
            w.writerow([f"{t:.15e}", sig, val])
    return path
