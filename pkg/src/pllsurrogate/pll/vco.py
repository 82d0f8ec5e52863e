"""Interchangeable VCO abstractions used inside the loop.

Every view exposes ``bind(wp, wn)`` which returns a callable ``vc -> (freq,
power)`` for a fixed transistor sizing. Binding lets the metamodel fold its
width-dependent parts once per simulation, so each VCO half period costs a
short polynomial in ``vc``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..metamodel import PolyMetamodel
from ..oracle import LinearVcoModel, OracleConfig, oracle_eval


@dataclass
class Counter:
    evals: int = 0
    extrapolated: int = 0


@dataclass(frozen=True)
class LinearView:
    model: LinearVcoModel
    name: str = "linear"

    def bind(self, wp: float, wn: float, counter: Counter | None = None):
        f0, k, p = self.model.f0, self.model.kvco, self.model.power_const
        ctr = counter if counter is not None else Counter()

        def fn(vc):
            ctr.evals += 1
            return f0 + k * vc, p

        return fn


@dataclass(frozen=True)
class MetamodelView:
    model: PolyMetamodel
    name: str = "metamodel"

    def bind(self, wp: float, wn: float, counter: Counter | None = None):
        m = self.model
        ctr = counter if counter is not None else Counter()
        # collapse width monomials: coefficients of vc**k for frequency and power
        order = max((t[2] for t in m.terms), default=0)
        cf = [0.0] * (order + 1)
        cp = [0.0] * (order + 1)
        for (p1, p2, p3), bf, bp in zip(m.terms, m.beta_f, m.beta_p):
            pv = wp**p1 * wn**p2
            cf[p3] += bf * pv
            cp[p3] += bp * pv
        cf.reverse()
        cp.reverse()
        if m.var_ranges is not None:
            (wlo, whi), (nlo, nhi), (vlo, vhi) = m.var_ranges
            widths_out = not (wlo <= wp <= whi and nlo <= wn <= nhi)
        else:
            widths_out, vlo, vhi = False, float("-inf"), float("inf")

        def fn(vc):
            ctr.evals += 1
            if widths_out or not (vlo <= vc <= vhi):
                ctr.extrapolated += 1
            f = 0.0
            p = 0.0
            for a, b in zip(cf, cp):
                f = f * vc + a
                p = p * vc + b
            return f, p

        return fn


@dataclass(frozen=True)
class OracleView:
    config: OracleConfig = field(default_factory=OracleConfig)
    name: str = "oracle"

    def bind(self, wp: float, wn: float, counter: Counter | None = None):
        cfg = self.config
        ctr = counter if counter is not None else Counter()

        def fn(vc):
            ctr.evals += 1
            return oracle_eval(cfg, wp, wn, vc)

        return fn


def vco_step(view, wp: float, wn: float, vc: float):
    """Single evaluation of a view: ``(freq, power)`` at one operating point."""
    return view.bind(wp, wn)(vc)
