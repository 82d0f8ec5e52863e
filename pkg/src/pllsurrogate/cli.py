"""Command-line entry point: sample, fit, simulate, compare, optimize, cost.

Exit codes: 0 success, 2 usage or input error, 3 fit failure,
4 simulation failure. Every command writes one JSON manifest.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from . import metamodel as mm
from .costmodel import CostParams, cost_table
from .optimize import DeConfig, OptProblem, de_run, load_problem_json, save_history_csv
from .oracle import OracleConfig
from .pll.compare import compare_views, format_report
from .pll.sim import PllConfig, SimulationError, run, save_edges_csv, save_trace_csv
from .pll.vco import LinearView, MetamodelView, OracleView
from .scenario import SAMPLE_SEED, VCO_RANGES, default_linear, default_metamodel, oracle_fn

EXIT_OK, EXIT_USAGE, EXIT_FIT, EXIT_SIM = 0, 2, 3, 4
VIEWS = ("linear", "metamodel", "oracle")


class UsageError(Exception):
    pass


class _Run:
    """Collects inputs, artifacts and timing for the manifest."""

    def __init__(self, args):
        self.args = args
        self.t0 = time.perf_counter()
        self.out_dir = Path(args.out_dir)
        self.artifacts = []
        h = hashlib.sha256()
        opts = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
        h.update(json.dumps(opts, sort_keys=True, default=str).encode())
        for name in ("config", "oracle_config", "model", "samples", "problem", "de"):
            p = getattr(args, name, None)
            if p:
                path = Path(p)
                if not path.is_file():
                    raise UsageError(f"file not found: {p}")
                h.update(path.read_bytes())
        self.digest = h.hexdigest()

    def path(self, explicit, default_name: str) -> Path:
        p = Path(explicit) if explicit else self.out_dir / default_name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.artifacts.append(str(p))
        return p

    def finish(self, seed):
        manifest = {
            "command": self.args.command,
            "config_digest": self.digest,
            "seed": seed,
            "tool_version": __version__,
            "wall_clock_s": time.perf_counter() - self.t0,
            "artifacts": self.artifacts,
        }
        self.out_dir.mkdir(parents=True, exist_ok=True)
        (self.out_dir / f"{self.args.command}_manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n")


def _oracle_cfg(args) -> OracleConfig:
    cfg = OracleConfig.load(args.oracle_config) if args.oracle_config else OracleConfig()
    if args.work_factor is not None:
        cfg = cfg.with_work_factor(args.work_factor)
    return cfg


def _pll_cfg(args) -> PllConfig:
    return PllConfig.load(args.config) if args.config else PllConfig()


def _seed(args, default: int) -> int:
    return default if args.seed is None else args.seed


def _view(name: str, args):
    cfg = _oracle_cfg(args)
    if name == "oracle":
        return OracleView(cfg)
    if name == "linear":
        return LinearView(default_linear(cfg))
    if name == "metamodel":
        if args.model:
            return MetamodelView(mm.load_csv(args.model))
        return MetamodelView(default_metamodel(cfg, seed=_seed(args, SAMPLE_SEED)).model)
    raise UsageError(f"unknown view {name!r}; choose from {', '.join(VIEWS)}")


# ---------------------------------------------------------------------------
# commands


def cmd_sample(args, ctx: _Run):
    if args.n < 1:
        raise UsageError("-n must be at least 1")
    ranges = tuple(tuple(r) for r in args.ranges) if args.ranges else VCO_RANGES
    seed = _seed(args, SAMPLE_SEED)
    try:
        plan = mm.lhs_sample(args.n, ranges, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    plan = mm.evaluate_plan(plan, oracle_fn(_oracle_cfg(args)))
    out = mm.save_plan_csv(plan, ctx.path(args.out, "samples.csv"))
    print(f"wrote {len(plan)} samples to {out}")
    return seed


def cmd_fit(args, ctx: _Run):
    plan = mm.load_plan_csv(args.samples)
    if plan.responses is None:
        raise UsageError("sample file has no response columns")
    res = mm.fit(plan, args.degree)
    out = mm.save_csv(res.model, ctx.path(args.out, "metamodel.csv"))
    print(f"degree {args.degree}, K={res.model.K}, samples={len(plan)}")
    print(f"R2_f={res.r2_f:.6f}  R2_p={res.r2_p:.6f}  RMSE_f={res.rmse_f:.6e} Hz  RMSE_p={res.rmse_p:.6e} W")
    if args.holdout:
        ho = mm.load_plan_csv(args.holdout)
        s = mm.score(res.model, ho)
        print(f"held-out R2_f={s['r2_f']:.6f}  R2_p={s['r2_p']:.6f}  "
              f"RMSE_f={s['rmse_f']:.6e} Hz  RMSE_p={s['rmse_p']:.6e} W")
    print(f"wrote {out}")
    if args.vams:
        vp = ctx.path(args.vams, "vco_metamodel.vams")
        vp.write_text(mm.emit_vams(res.model, csv_name=out.name))
        print(f"wrote {vp}")
    return None


def _metrics_line(m) -> str:
    lt = "never" if m.lock_time is None else f"{m.lock_time * 1e9:.3f} ns"
    fl = "-" if m.f_locked is None else f"{m.f_locked / 1e6:.4f} MHz"
    pl = "-" if m.p_locked is None else f"{m.p_locked * 1e6:.2f} uW"
    return f"lock_time={lt}  f_locked={fl}  p_locked={pl}"


def cmd_simulate(args, ctx: _Run):
    config = _pll_cfg(args)
    view = _view(args.view, args)
    trace, metrics = run(config, view)
    save_trace_csv(trace, ctx.path(args.trace_out, f"trace_{args.view}.csv"))
    save_edges_csv(trace, ctx.path(args.edges_out, f"edges_{args.view}.csv"))
    print(f"view={args.view}  {_metrics_line(metrics)}")
    if trace.diagnostics["extrapolated_evals"]:
        print(f"note: {trace.diagnostics['extrapolated_evals']} VCO evaluations outside the fitted ranges")
    return _seed(args, SAMPLE_SEED) if args.view == "metamodel" and not args.model else None


def cmd_compare(args, ctx: _Run):
    names = [v.strip() for v in args.views.split(",") if v.strip()]
    if len(names) < 2:
        raise UsageError("--views needs at least two views")
    config = _pll_cfg(args)
    reports = compare_views(config, [_view(n, args) for n in names])
    print(format_report(reports))
    out = ctx.path(args.out, "compare.csv")
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = ["view", "lock_time_s", "lock_time_err_pct", "f_locked_hz", "f_locked_err_pct",
                "p_locked_w", "p_locked_err_pct", "vc_rmse_v"]
        w.writerow(cols)
        for r in reports:
            row = r.row()
            w.writerow(["" if row[c] is None else row[c] for c in cols])
    return _seed(args, SAMPLE_SEED)


def cmd_optimize(args, ctx: _Run):
    view = _view(args.view, args)
    pll = _pll_cfg(args)
    if args.problem:
        problem = load_problem_json(args.problem, view, pll)
    else:
        problem = OptProblem(view=view, pll=pll)
    de = DeConfig.from_dict(json.loads(Path(args.de).read_text())) if args.de else DeConfig()
    if args.seed is not None:
        de = replace(de, seed=args.seed)
    if args.generations is not None:
        de = replace(de, max_generations=args.generations)
    res = de_run(problem, de)
    save_history_csv(res.history, ctx.path(args.history_out, "history.csv"))
    b = res.best
    status = "feasible" if b.feasible else "INFEASIBLE (best by constraint violation)"
    print(f"best wp={b.x[0] * 1e6:.4f} um  wn={b.x[1] * 1e6:.4f} um  power={b.objective * 1e6:.3f} uW  {status}")
    if b.constraints:
        t_lock, f_lo, f_hi = b.constraints
        lt = "never" if t_lock == float("inf") else f"{t_lock * 1e9:.2f} ns"
        print(f"lock_time={lt}  tuning range=[{f_lo / 1e6:.2f}, {f_hi / 1e6:.2f}] MHz")
    print(f"generations={res.history[-1].generation}  evaluations={res.evaluations}")
    return de.seed


def cmd_cost(args, ctx: _Run):
    p = CostParams(N_i=args.ni, N_s=args.ns, t_ext=args.text, t_sim=args.tsim,
                   t_gen=args.tgen, t_ini=args.tini)
    print(f"{'flow':<28} {'seconds':>14} {'hours':>10}")
    for label, secs in cost_table(p):
        print(f"{label:<28} {secs:>14.2f} {secs / 3600:>10.2f}")
    d = cost_table(p)[-1][1]
    print(f"time saved: {d:.0f} s = {d / 3600:.1f} h")
    return None


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--config", help="scenario JSON (PLL configuration)")
    common.add_argument("--oracle-config", help="oracle JSON")
    common.add_argument("--out-dir", default=".", help="directory for artifacts and manifest")
    common.add_argument("--work-factor", type=int, default=None, help="oracle mesh solves per call")

    p = argparse.ArgumentParser(prog="pllsurrogate", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", parents=[common], help="LHS plan evaluated on the oracle")
    s.add_argument("-n", type=int, required=True)
    s.add_argument("--ranges", type=float, nargs=2, action="append", metavar=("LO", "HI"),
                   help="one per variable (wp, wn, vc); defaults to the case-study box")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("fit", parents=[common], help="fit a polynomial metamodel")
    s.add_argument("--samples", required=True)
    s.add_argument("--degree", type=int, default=2)
    s.add_argument("--holdout", help="sample CSV for held-out scoring")
    s.add_argument("--out")
    s.add_argument("--vams", help="also write a Verilog-AMS module here")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", parents=[common], help="one PLL transient")
    s.add_argument("--view", choices=VIEWS, default="metamodel")
    s.add_argument("--model", help="metamodel CSV for the metamodel view")
    s.add_argument("--trace-out")
    s.add_argument("--edges-out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("compare", parents=[common], help="compare VCO views")
    s.add_argument("--views", default="oracle,linear,metamodel")
    s.add_argument("--model")
    s.add_argument("--out")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("optimize", parents=[common], help="DE sizing run")
    s.add_argument("--view", choices=("metamodel", "oracle", "linear"), default="metamodel")
    s.add_argument("--model")
    s.add_argument("--problem", help="problem JSON")
    s.add_argument("--de", help="DE settings JSON")
    s.add_argument("--generations", type=int, default=None)
    s.add_argument("--history-out")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("cost", parents=[common], help="run-time cost model")
    s.add_argument("--ni", type=int, required=True)
    s.add_argument("--ns", type=int, required=True)
    s.add_argument("--text", type=float, required=True)
    s.add_argument("--tsim", type=float, default=0.0)
    s.add_argument("--tgen", type=float, default=0.0)
    s.add_argument("--tini", type=float, default=0.0)
    s.set_defaults(func=cmd_cost)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        ctx = _Run(args)
        seed = args.func(args, ctx)
        ctx.finish(seed)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except mm.FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except SimulationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return EXIT_SIM
    except (mm.MetamodelError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
