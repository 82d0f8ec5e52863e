"""Cross-view comparison of PLL transients."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .sim import PllConfig, SimMetrics, SimTrace, run


def _zoh(t: np.ndarray, y: np.ndarray, grid: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(t, grid, side="right") - 1
    return y[np.clip(idx, 0, len(y) - 1)]


def vc_rmse(a: SimTrace, b: SimTrace, grid_dt: float = 0.1e-9) -> float:
    """RMSE between two control-voltage traces on a shared zero-order-hold grid."""
    lo = max(a.t[0], b.t[0])
    hi = min(a.t[-1], b.t[-1])
    if not hi > lo:
        raise ValueError(f"traces do not overlap: [{a.t[0]}, {a.t[-1]}] vs [{b.t[0]}, {b.t[-1]}]")
    n = int(np.floor((hi - lo) / grid_dt * (1 + 1e-12))) + 1
    grid = lo + grid_dt * np.arange(n)
    diff = _zoh(a.t, a.vc, grid) - _zoh(b.t, b.vc, grid)
    return float(np.sqrt(np.mean(diff * diff)))


def pct_error(value, ref):
    if value is None or ref is None or ref == 0:
        return None
    return abs(value - ref) / abs(ref) * 100.0


@dataclass
class ViewReport:
    name: str
    metrics: SimMetrics
    trace: SimTrace
    wall_time: float
    lock_time_err_pct: float | None
    f_locked_err_pct: float | None
    p_locked_err_pct: float | None

    def row(self) -> dict:
        m = self.metrics
        return {
            "view": self.name,
            "lock_time_s": "never" if m.lock_time is None else m.lock_time,
            "lock_time_err_pct": self.lock_time_err_pct,
            "f_locked_hz": m.f_locked,
            "f_locked_err_pct": self.f_locked_err_pct,
            "p_locked_w": m.p_locked,
            "p_locked_err_pct": self.p_locked_err_pct,
            "vc_rmse_v": m.vc_rmse_vs_ref,
            "wall_time_s": self.wall_time,
        }


def compare_views(config: PllConfig, views: list) -> list:
    """Run every view under the same scenario; the first view is the reference."""
    if len(views) < 2:
        raise ValueError("compare_views needs at least two views")
    runs = []
    for view in views:
        t0 = time.perf_counter()
        trace, metrics = run(config, view)
        runs.append((view, trace, metrics, time.perf_counter() - t0))
    _, ref_trace, ref_m, _ = runs[0]
    reports = []
    for view, trace, m, wall in runs:
        m = SimMetrics(m.lock_time, m.f_locked, m.p_locked, vc_rmse(trace, ref_trace))
        reports.append(ViewReport(
            name=getattr(view, "name", type(view).__name__),
            metrics=m,
            trace=trace,
            wall_time=wall,
            lock_time_err_pct=pct_error(m.lock_time, ref_m.lock_time),
            f_locked_err_pct=pct_error(m.f_locked, ref_m.f_locked),
            p_locked_err_pct=pct_error(m.p_locked, ref_m.p_locked),
        ))
    return reports


def format_report(reports: list) -> str:
    def fmt(x, scale=1.0, spec="{:.4g}"):
        if x is None:
            return "-"
        if isinstance(x, str):
            return x
        return spec.format(x * scale)

    head = f"{'view':<10} {'lock(ns)':>9} {'err%':>7} {'f_lock(MHz)':>12} {'err%':>7} " \
           f"{'P_lock(uW)':>11} {'err%':>7} {'Vc RMSE(mV)':>12} {'wall(s)':>8}"
    lines = [head]
    for r in reports:
        m = r.metrics
        lines.append(
            f"{r.name:<10} {fmt(m.lock_time if m.lock_time is not None else 'never', 1e9):>9} "
            f"{fmt(r.lock_time_err_pct, 1, '{:.2f}'):>7} {fmt(m.f_locked, 1e-6, '{:.3f}'):>12} "
            f"{fmt(r.f_locked_err_pct, 1, '{:.3f}'):>7} {fmt(m.p_locked, 1e6, '{:.2f}'):>11} "
            f"{fmt(r.p_locked_err_pct, 1, '{:.2f}'):>7} {fmt(m.vc_rmse_vs_ref, 1e3, '{:.3f}'):>12} "
            f"{r.wall_time:>8.3f}"
        )
    return "\n".join(lines)
