"""Behavioral charge-pump PLL with swappable VCO views."""

from .compare import ViewReport, compare_views, vc_rmse
from .loopfilter import CpLfState, FilterStepper, LoopFilter, cp_lf_step, design_loop_filter
from .pfd import PfdState, pfd_settle, pfd_step
from .sim import (PllConfig, SimMetrics, SimTrace, SimulationError, measure_lock, run,
                  save_edges_csv, save_trace_csv)
from .vco import LinearView, MetamodelView, OracleView, vco_step

__all__ = [
    "CpLfState", "FilterStepper", "LinearView", "LoopFilter", "MetamodelView", "OracleView", "PfdState",
    "PllConfig", "SimMetrics", "SimTrace", "SimulationError", "ViewReport", "compare_views",
    "cp_lf_step", "design_loop_filter", "measure_lock", "pfd_settle", "pfd_step", "run",
    "save_edges_csv", "save_trace_csv", "vc_rmse", "vco_step",
]
