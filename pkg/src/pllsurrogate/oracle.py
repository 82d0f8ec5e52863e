"""Synthetic layout-extracted LC-VCO used as the expensive ground truth.

The response is a smooth tank-style transfer curve shifted by the effective
load of a width-parameterized parasitic RC mesh. The mesh is assembled and
factored on every call, so evaluating the oracle carries a real cost that
grows with ``mesh_nodes`` and ``work_factor``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve

# Baseline design point of the case-study VCO.
BASELINE_WP = 20e-6
BASELINE_WN = 10e-6


@dataclass(frozen=True)
class OracleConfig:
    # transfer curve at the baseline widths: f(vc_lo) = f_floor, f(vc_hi) = f_floor + tune_span
    f_floor: float = 2.170e9
    tune_span: float = 134e6
    vc_lo: float = 0.0
    vc_hi: float = 1.8
    # varactor sigmoid: centre and softness of the saturation knee (V)
    vc_knee: float = 1.89
    vc_soft: float = 1.5
    # width dependence of the curve floor (Hz/m, Hz/m^2) and relative span (1/m)
    f_wp: float = 0.9e12
    f_wn: float = 2.5e12
    f_wp2: float = 2.0e16
    f_wpwn: float = 1.0e16
    f_wn2: float = 1.0e16
    span_wp: float = 4.0e3
    span_wn: float = 2.0e3
    # frequency pulled per farad of extracted load (Hz/F)
    gamma: float = 3.0e21
    # parasitic mesh
    mesh_nodes: int = 64
    mesh_seed: int = 2013
    contact_pitch: float = 0.8163e-6
    c_diff: float = 2.0e-9
    c_wire: float = 20e-15
    g_wire: float = 1.0 / 40.0
    g_contact: float = 1.0 / 1500.0
    # power: static bias, width and control-voltage terms, parasitic switching
    p_static: float = 1.0e-4
    p_wp: float = 10.0
    p_wn: float = 30.0
    p_vc: float = -0.6e-4
    p_vc2: float = 0.4e-4
    supply: float = 1.8
    activity: float = 0.08
    work_factor: int = 1

    def __post_init__(self):
        if self.mesh_nodes < 2:
            raise ValueError("mesh_nodes must be >= 2")
        if self.work_factor < 1:
            raise ValueError("work_factor must be >= 1")
        if not self.vc_hi > self.vc_lo:
            raise ValueError("vc_hi must exceed vc_lo")
        if self.vc_soft <= 0 or self.tune_span <= 0:
            raise ValueError("vc_soft and tune_span must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "OracleConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown OracleConfig fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "OracleConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_work_factor(self, work_factor: int) -> "OracleConfig":
        return replace(self, work_factor=work_factor)


@dataclass(frozen=True)
class LinearVcoModel:
    """Straight-line VCO: ``f = f0 + kvco * vc`` with constant power."""

    f0: float
    kvco: float
    power_const: float

    def __post_init__(self):
        if not math.isfinite(self.kvco):
            raise ValueError("kvco must be finite")
        if not self.f0 > 0:
            raise ValueError("f0 must be positive")

    def frequency(self, vc: float) -> float:
        return self.f0 + self.kvco * vc


# ---------------------------------------------------------------------------
# parasitic mesh


@lru_cache(maxsize=64)
def _mesh_topology(n: int, seed: int):
    """Width-independent part of the mesh: links and per-element jitter."""
    rng = np.random.default_rng(seed)
    chain = [(i, i + 1) for i in range(n - 1)]
    extra = []
    for _ in range(n // 4):
        a, b = rng.choice(n, size=2, replace=False)
        extra.append((int(min(a, b)), int(max(a, b))))
    links = np.array(chain + extra, dtype=np.intp).reshape(-1, 2)
    link_scale = np.concatenate([
        rng.uniform(0.5, 1.5, size=len(chain)),
        0.3 * rng.uniform(0.5, 1.5, size=len(extra)),
    ])
    cap_jitter = rng.uniform(0.8, 1.2, size=n)
    leak_jitter = rng.uniform(0.8, 1.2, size=n)
    # first half of the nodes sit on PMOS diffusion, second half on NMOS
    is_pmos = np.arange(n) < (n + 1) // 2
    for arr in (links, link_scale, cap_jitter, leak_jitter, is_pmos):
        arr.setflags(write=False)
    return links, link_scale, cap_jitter, leak_jitter, is_pmos


def contact_count(width: float, pitch: float) -> int:
    return max(1, int(math.floor(width / pitch + 1e-9)))


def assemble_mesh(cfg: OracleConfig, wp: float, wn: float):
    """Return ``(G, c)``: SPD nodal conductance matrix and node capacitances."""
    n = cfg.mesh_nodes
    links, link_scale, cap_jitter, leak_jitter, is_pmos = _mesh_topology(n, cfg.mesh_seed)
    ncont = np.where(
        is_pmos,
        contact_count(wp, cfg.contact_pitch),
        contact_count(wn, cfg.contact_pitch),
    )
    # diffusion area, and so its capacitance, snaps to the contact grid
    c = (cfg.c_wire + cfg.c_diff * ncont * cfg.contact_pitch) / n * cap_jitter
    g_link = cfg.g_wire * (n - 1) * link_scale
    g_leak = cfg.g_contact * ncont / n * leak_jitter

    G = np.zeros((n, n))
    i, j = links[:, 0], links[:, 1]
    np.add.at(G, (i, i), g_link)
    np.add.at(G, (j, j), g_link)
    np.add.at(G, (i, j), -g_link)
    np.add.at(G, (j, i), -g_link)
    G[np.diag_indices(n)] += g_leak
    return G, c


def effective_load(G: np.ndarray, c: np.ndarray, port: int = 0):
    """Reduce a grounded RC mesh to ``(ceff, reff)`` seen from ``port``.

    ``reff`` is the driving-point resistance; ``ceff`` weights each node
    capacitance by its DC voltage transfer from the port.
    """
    e = np.zeros(len(c))
    e[port] = 1.0
    v = cho_solve(cho_factor(G, lower=True), e)
    reff = float(v[port])
    ceff = float(c @ v) / reff
    return ceff, reff


def mesh_effective_load(cfg: OracleConfig, wp: float, wn: float):
    if not (wp > 0 and wn > 0):
        raise ValueError(f"widths must be positive, got wp={wp!r}, wn={wn!r}")
    G, c = assemble_mesh(cfg, wp, wn)
    return effective_load(G, c)


@lru_cache(maxsize=64)
def _baseline_load(cfg: OracleConfig) -> float:
    return mesh_effective_load(cfg, BASELINE_WP, BASELINE_WN)[0]


# ---------------------------------------------------------------------------
# transfer curve


def _shape(cfg: OracleConfig, vc: float) -> float:
    """Sigmoid varactor characteristic normalized to 0 at vc_lo and 1 at vc_hi."""
    s = math.tanh
    lo = s((cfg.vc_lo - cfg.vc_knee) / cfg.vc_soft)
    hi = s((cfg.vc_hi - cfg.vc_knee) / cfg.vc_soft)
    return (s((vc - cfg.vc_knee) / cfg.vc_soft) - lo) / (hi - lo)


def oracle_eval(cfg: OracleConfig, wp: float, wn: float, vc: float):
    """Frequency (Hz) and power (W) of the extracted VCO at one operating point."""
    if not (wp > 0 and wn > 0):
        raise ValueError(f"widths must be positive, got wp={wp!r}, wn={wn!r}")
    if not math.isfinite(vc):
        raise ValueError(f"control voltage must be finite, got {vc!r}")
    for _ in range(cfg.work_factor):
        ceff, reff = mesh_effective_load(cfg, wp, wn)
    dp = wp - BASELINE_WP
    dn = wn - BASELINE_WN
    floor = (
        cfg.f_floor
        + cfg.f_wp * dp
        + cfg.f_wn * dn
        + cfg.f_wp2 * dp * dp
        + cfg.f_wpwn * dp * dn
        + cfg.f_wn2 * dn * dn
        - cfg.gamma * (ceff - _baseline_load(cfg))
    )
    span = cfg.tune_span * (1.0 + cfg.span_wp * dp + cfg.span_wn * dn)
    freq = floor + span * _shape(cfg, vc)
    power = (
        cfg.p_static
        + cfg.p_wp * wp
        + cfg.p_wn * wn
        + cfg.p_vc * vc
        + cfg.p_vc2 * vc * vc
        + cfg.activity * ceff * cfg.supply**2 * freq
    )
    return freq, power


def fit_linear_model(cfg: OracleConfig, wp: float, wn: float, vc_range=None, n_points: int = 37):
    """Least-squares line through the oracle transfer curve at fixed widths."""
    lo, hi = vc_range if vc_range is not None else (cfg.vc_lo, cfg.vc_hi)
    if not hi > lo:
        raise ValueError(f"invalid control-voltage range [{lo}, {hi}]")
    vcs = np.linspace(lo, hi, n_points)
    resp = np.array([oracle_eval(cfg, wp, wn, v) for v in vcs])
    return linear_model_from_samples(vcs, resp[:, 0], resp[:, 1])


def linear_model_from_samples(vcs, freqs, powers) -> LinearVcoModel:
    A = np.column_stack([np.ones_like(vcs), vcs])
    (f0, kvco), *_ = np.linalg.lstsq(A, np.asarray(freqs, dtype=float), rcond=None)
    return LinearVcoModel(f0=float(f0), kvco=float(kvco), power_const=float(np.mean(powers)))
