"""Default case-study scenario: design space, reference models and views."""

from __future__ import annotations

from . import metamodel as mm
from .oracle import BASELINE_WN, BASELINE_WP, OracleConfig, fit_linear_model, oracle_eval
from .pll.vco import LinearView, MetamodelView, OracleView

VCO_RANGES = ((5e-6, 25e-6), (5e-6, 25e-6), (0.0, 1.8))
SAMPLE_COUNT = 100
SAMPLE_SEED = 7
DEGREE = 2


def oracle_fn(cfg: OracleConfig):
    return lambda wp, wn, vc: oracle_eval(cfg, wp, wn, vc)


def default_metamodel(cfg: OracleConfig | None = None, n: int = SAMPLE_COUNT,
                      seed: int = SAMPLE_SEED, degree: int = DEGREE) -> mm.FitResult:
    cfg = cfg if cfg is not None else OracleConfig()
    plan = mm.evaluate_plan(mm.lhs_sample(n, VCO_RANGES, seed), oracle_fn(cfg))
    return mm.fit(plan, degree)


def default_linear(cfg: OracleConfig | None = None):
    cfg = cfg if cfg is not None else OracleConfig()
    return fit_linear_model(cfg, BASELINE_WP, BASELINE_WN, (VCO_RANGES[2]))


def default_views(cfg: OracleConfig | None = None, metamodel=None) -> dict:
    """Oracle, linear and metamodel views built from the same oracle."""
    cfg = cfg if cfg is not None else OracleConfig()
    model = metamodel if metamodel is not None else default_metamodel(cfg).model
    return {
        "oracle": OracleView(cfg),
        "linear": LinearView(default_linear(cfg)),
        "metamodel": MetamodelView(model),
    }
