"""Acceptance checks, one per criterion, each printing a single PASS/FAIL line."""

import time

import numpy as np
import pytest

from pllsurrogate import metamodel as mm
from pllsurrogate.costmodel import CostParams, reduction_pct, t_difference
from pllsurrogate.optimize import DeConfig, FunctionProblem, de_run
from pllsurrogate.oracle import OracleConfig
from pllsurrogate.pll import OracleView, PfdState, PllConfig, pfd_step, run
from pllsurrogate.scenario import VCO_RANGES, default_metamodel, oracle_fn

from .conftest import DATA, REF_FREQ
from .test_metamodel import REFERENCE_ORDER, _random_quadratic
from .test_optimize import RingProblem, sphere
from .test_pll import _intervals, _overlaps


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return emit


def test_criterion_1_basis_and_table_layout(report, tmp_path):
    t0 = time.perf_counter()
    order_ok = mm.enumerate_basis(2, 3) == REFERENCE_ORDER
    golden = DATA / "reference_coeffs.csv"
    out = mm.save_csv(mm.load_csv(golden), tmp_path / "t2.csv")
    bytes_ok = out.read_bytes() == golden.read_bytes()
    dt = time.perf_counter() - t0
    report(1, order_ok and bytes_ok and dt < 1.0,
           f"basis_order={order_ok} byte_identical={bytes_ok} runtime={dt:.3f}s")


def test_criterion_2_reference_evaluation(report, ref_model):
    f, _ = mm.evaluate(ref_model, 20e-6, 10e-6, 0.5)
    rel = abs(f - REF_FREQ) / REF_FREQ
    report(2, rel <= 1e-9, f"f={f:.6f} Hz expected={REF_FREQ:.6f} rel_err={rel:.2e}")


def test_criterion_3_exact_recovery(report):
    worst = 0.0
    for trial in range(50):
        rng = np.random.default_rng(1000 + trial)
        truth = _random_quadratic(rng)
        plan = mm.evaluate_plan(mm.lhs_sample(40, VCO_RANGES, trial),
                                lambda *x, m=truth: mm.evaluate(m, *x))
        got = mm.fit(plan, 2).model
        a = np.array(got.beta_f + got.beta_p)
        b = np.array(truth.beta_f + truth.beta_p)
        worst = max(worst, float(np.max(np.abs(a - b) / np.abs(b))))
    report(3, worst <= 1e-8, f"trials=50 max_coef_rel_err={worst:.2e}")


def test_criterion_4_oracle_fit_quality(report, oracle_cfg):
    t0 = time.perf_counter()
    held = mm.evaluate_plan(mm.lhs_sample(1000, VCO_RANGES, 12345), oracle_fn(oracle_cfg))
    s2 = mm.score(default_metamodel(oracle_cfg).model, held)
    s5 = mm.score(default_metamodel(oracle_cfg, n=500, seed=8, degree=5).model, held)
    gain = 1.0 - s5["rmse_f"] / s2["rmse_f"]
    dt = time.perf_counter() - t0
    ok = s2["r2_f"] >= 0.99 and s2["r2_p"] >= 0.99 and gain < 0.20 and dt < 30
    report(4, ok, f"heldout_R2_f={s2['r2_f']:.5f} R2_p={s2['r2_p']:.5f} "
                  f"deg5_rmse_gain={gain:+.1%} runtime={dt:.1f}s")


def test_criterion_5_metamodel_lock(report, views):
    cfg = PllConfig(t_end=2e-6)
    _, m = run(cfg, views["metamodel"])
    target = cfg.N * cfg.f_in
    ok = m.locked and abs(m.f_locked - target) <= 1e-3 * target
    lt = f"{m.lock_time * 1e9:.3f}ns" if m.locked else "never"
    report(5, ok, f"lock_time={lt} f_locked={m.f_locked / 1e6:.4f}MHz")


def test_criterion_6_view_accuracy_ordering(report, default_comparison):
    ref, lin, meta = default_comparison
    t_ref = ref.metrics.lock_time
    d_meta = abs(meta.metrics.lock_time - t_ref)
    d_lin = abs(lin.metrics.lock_time - t_ref)
    r_meta, r_lin = meta.metrics.vc_rmse_vs_ref, lin.metrics.vc_rmse_vs_ref
    ok = 2 * d_meta < d_lin and 2 * r_meta < r_lin
    report(6, ok, f"dlock meta={d_meta * 1e9:.2f}ns linear={d_lin * 1e9:.2f}ns; "
                  f"vc_rmse meta={r_meta * 1e3:.1f}mV linear={r_lin * 1e3:.1f}mV")


def test_criterion_7_speedup(report, views):
    t0 = time.perf_counter()
    heavy = OracleView(OracleConfig(work_factor=4, mesh_nodes=64))
    cfg = PllConfig()

    def wall(view, reps):
        best = float("inf")
        for _ in range(reps):
            s = time.perf_counter()
            run(cfg, view)
            best = min(best, time.perf_counter() - s)
        return best

    t_meta = wall(views["metamodel"], 3)
    t_orc = wall(heavy, 2)
    dt = time.perf_counter() - t0
    ok = t_meta <= t_orc / 5 and dt < 300
    report(7, ok, f"oracle(wf=4)={t_orc:.3f}s metamodel={t_meta:.3f}s speedup={t_orc / t_meta:.1f}x")


def test_criterion_8_differential_evolution(report, pll_problem, de_metamodel, grid_metamodel):
    sph = de_run(FunctionProblem(((-5.0, 5.0),) * 3, sphere),
                 DeConfig(F=0.8, CR=0.9, K=20, max_generations=100, stall_window=None))
    sphere_ok = sph.best.objective <= 1e-3
    _, cell, _ = grid_metamodel
    grid_best = grid_metamodel[0]
    gap = np.abs(np.array(de_metamodel.best.x) - np.array(grid_best.x)) / np.asarray(cell)
    base = pll_problem.evaluate((20e-6, 10e-6)).objective
    saving = 1.0 - de_metamodel.best.objective / base
    feas = [h.best.objective for h in de_metamodel.history if h.feasible]
    mono = all(b <= a for a, b in zip(feas, feas[1:]))
    ok = sphere_ok and bool(np.all(gap <= 1.0)) and saving >= 0.25 and mono and de_metamodel.best.feasible
    wp, wn = de_metamodel.best.x
    report(8, ok, f"sphere={sph.best.objective:.1e} argmin=({wp * 1e6:.3f},{wn * 1e6:.3f})um "
                  f"grid_gap_cells={gap.max():.2f} power_saving={saving:.1%} monotone={mono}")


def test_criterion_9_cost_model(report):
    d = t_difference(CostParams(N_i=1200, N_s=200, t_ext=60))
    r = reduction_pct(45.55, 5.06)
    ok = d == 60000 and round(d / 3600, 2) == 16.67 and abs(r - 0.889) <= 1e-3
    report(9, ok, f"t_difference={d:.0f}s={d / 3600:.2f}h reduction={r:.1%}")


def _sim_invariants(view, seed):
    rng = np.random.default_rng(seed)
    cfg = PllConfig(wp=rng.uniform(5e-6, 25e-6), wn=rng.uniform(5e-6, 25e-6),
                    vc_init=rng.uniform(0, 1.8), f_in=rng.uniform(515e6, 600e6),
                    t_end=rng.uniform(40e-9, 100e-9), lock_window=5)
    tr, m = run(cfg, view)
    clamp = bool(np.all(tr.vc >= 0) and np.all(tr.vc <= cfg.vdd))
    n_out = n_fb = 0
    ratio = True
    for _, sig, val in tr.edges:
        if val == 1:
            n_out += sig == "out"
            n_fb += sig == "fb"
            ratio &= abs(cfg.N * n_fb - n_out) <= cfg.N
    both = _overlaps(_intervals(tr.edges, "up"), _intervals(tr.edges, "dn"))
    excl = all(d <= cfg.pfd_reset_delay + cfg.cp_transition + 1e-18 for d in both)
    tr2, m2 = run(cfg, view)
    return clamp, ratio, excl, m2 == m and np.array_equal(tr2.vc, tr.vc)


def _pfd_exclusion(seed):
    # random edge streams straight into the detector: never both up and dn once settled
    rng = np.random.default_rng(seed)
    s = PfdState(delay=10)
    now = 0
    for _ in range(200):
        now += int(rng.integers(1, 30))
        a, b = rng.random(2) < 0.3
        s = pfd_step(s, bool(a), bool(b), now)
        if s.up and s.dn and not s.pending:
            return False
    return True


def test_criterion_10_invariant_suites(report, views):
    seeds = range(100)
    lhs_ok = sum(
        bool(np.all(mm.stratum_occupancy(mm.lhs_sample(int(n), VCO_RANGES, s).points, VCO_RANGES) == 1))
        for s, n in zip(seeds, np.random.default_rng(0).integers(1, 200, 100))
    )
    pfd_ok = sum(_pfd_exclusion(s) for s in seeds)
    sims = [_sim_invariants(views["metamodel"], s) for s in seeds]
    clamp_ok, fd_ok, excl_ok, det_ok = (sum(col) for col in zip(*sims))
    de_mono = de_det = 0
    for s in seeds:
        cfg = DeConfig(K=8, max_generations=12, seed=s, stall_window=None)
        a, b = de_run(RingProblem(), cfg), de_run(RingProblem(), cfg)
        feas = [h.best.objective for h in a.history if h.feasible]
        de_mono += all(y <= x for x, y in zip(feas, feas[1:]))
        de_det += [h.best for h in a.history] == [h.best for h in b.history]
    counts = dict(lhs=lhs_ok, pfd=pfd_ok, pfd_sim=excl_ok, fd_ratio=fd_ok, vc_clamp=clamp_ok,
                  de_monotone=de_mono, det_sim=det_ok, det_de=de_det)
    report(10, all(v == 100 for v in counts.values()),
           " ".join(f"{k}={v}/100" for k, v in counts.items()))
