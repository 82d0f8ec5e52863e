"""Run-time economics of extraction-per-iteration vs metamodel-based optimization."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CostParams:
    N_i: int           # optimizer iterations (candidate evaluations)
    N_s: int           # metamodel training samples
    t_ext: float       # seconds per layout extraction
    t_sim: float = 0.0  # seconds per transient simulation
    t_gen: float = 0.0  # seconds to generate the metamodel
    t_ini: float = 0.0  # seconds of per-run initialization

    def __post_init__(self):
        for name in ("N_i", "N_s"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ValueError(f"{name} must be an integer")
            object.__setattr__(self, name, int(v))
        for name in ("N_i", "N_s", "t_ext", "t_sim", "t_gen", "t_ini"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")


def t_macromodel(p: CostParams) -> float:
    """Extraction plus simulation on every iteration."""
    return p.N_i * p.t_ext + p.N_i * p.t_sim


def t_metamodel_flow(p: CostParams, full: bool = True) -> float:
    if full:
        return p.N_s * p.t_ext + p.t_gen + p.N_i * (p.t_ini + p.t_sim)
    return p.N_s * p.t_ext + p.N_i * p.t_sim


def t_difference(p: CostParams) -> float:
    """Time saved by the metamodel flow when generation and init are negligible."""
    return (p.N_i - p.N_s) * p.t_ext


def reduction_pct(baseline: float, improved: float) -> float:
    """Fractional reduction ``(baseline - improved) / baseline``."""
    if not baseline > 0:
        raise ValueError("baseline must be positive")
    return (baseline - improved) / baseline


def cost_table(p: CostParams) -> list:
    """Rows of (label, seconds) for reporting."""
    return [
        ("extraction per iteration", t_macromodel(p)),
        ("metamodel flow (full)", t_metamodel_flow(p, full=True)),
        ("metamodel flow (reduced)", t_metamodel_flow(p, full=False)),
        ("difference", t_difference(p)),
    ]
