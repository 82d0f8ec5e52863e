"""Constrained differential evolution (DE/rand/1/bin) for PLL sizing.

Selection is feasibility-first: a feasible target is only replaced by a
feasible trial that does not raise the objective. While a target is still
infeasible, a trial replaces it when it is feasible or violates the
constraints no more than the target does, so the search can reach the
feasible region from an all-infeasible start.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .pll.sim import PllConfig, SimulationError, run

UNLOCKED_PENALTY = 10.0


@dataclass(frozen=True)
class DeConfig:
    F: float = 0.8
    CR: float = 0.9
    K: int = 20
    max_generations: int = 100
    seed: int = 0
    strategy: str = "rand/1/bin"
    stall_window: int | None = 20
    stall_rtol: float = 1e-12

    def __post_init__(self):
        if not 0 < self.F <= 2:
            raise ValueError("F must lie in (0, 2]")
        if not 0 <= self.CR <= 1:
            raise ValueError("CR must lie in [0, 1]")
        if self.K < 4:
            raise ValueError("K must be >= 4")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")
        if self.strategy != "rand/1/bin":
            raise ValueError(f"unsupported strategy {self.strategy!r}")
        if self.stall_window is not None and self.stall_window < 1:
            raise ValueError("stall_window must be >= 1 or None")

    @classmethod
    def from_dict(cls, data: dict) -> "DeConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown DeConfig fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class Candidate:
    x: tuple
    objective: float
    constraints: tuple = ()
    feasible: bool = True
    violation: float = 0.0


def _check_bounds(bounds):
    b = np.asarray(bounds, dtype=float)
    if b.ndim != 2 or b.shape[1] != 2 or len(b) < 1:
        raise ValueError("bounds must be a sequence of (lo, hi) pairs")
    if not np.all(b[:, 1] > b[:, 0]):
        raise ValueError("every bound needs lo < hi")
    return b


@dataclass(frozen=True)
class FunctionProblem:
    """Unconstrained box problem around a plain objective ``fn(x) -> float``."""

    bounds: tuple
    fn: Callable

    def __post_init__(self):
        _check_bounds(self.bounds)

    def evaluate(self, x) -> Candidate:
        return Candidate(tuple(float(v) for v in x), float(self.fn(np.asarray(x))))


@dataclass
class OptProblem:
    """Minimize locked VCO power subject to lock-time and tuning-range limits."""

    view: object
    pll: PllConfig = field(default_factory=PllConfig)
    bounds: tuple = ((5e-6, 25e-6), (5e-6, 25e-6))
    lock_time_limit: float = 400e-9
    f_min_req: float = 2180e6
    f_max_req: float = 2300e6
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        b = _check_bounds(self.bounds)
        if len(b) != 2:
            raise ValueError("the PLL problem has two design variables (wp, wn)")
        if not self.f_min_req < self.f_max_req:
            raise ValueError("f_min_req must be below f_max_req")
        if not self.lock_time_limit > 0:
            raise ValueError("lock_time_limit must be positive")

    def tuning_range(self, wp: float, wn: float):
        fn = self.view.bind(wp, wn)
        return fn(0.0)[0], fn(self.pll.vdd)[0]

    def evaluate(self, x) -> Candidate:
        key = tuple(float(v) for v in x)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        wp, wn = key
        f_lo, f_hi = self.tuning_range(wp, wn)
        try:
            trace, m = run(replace(self.pll, wp=wp, wn=wn, record_edges=False), self.view)
        except SimulationError:
            trace, m = None, None
        if m is not None and m.locked:
            t_lock, power = m.lock_time, m.p_locked
        else:
            t_lock = math.inf
            if trace is not None and len(trace.cycle_power):
                period = 1.0 / trace.inst_freq
                power = float(np.sum(trace.cycle_power * period) / np.sum(period))
            else:
                power = math.inf
        viol = (
            (UNLOCKED_PENALTY if math.isinf(t_lock) else max(0.0, t_lock - self.lock_time_limit) / self.lock_time_limit)
            + max(0.0, f_lo - self.f_min_req) / self.f_min_req
            + max(0.0, self.f_max_req - f_hi) / self.f_max_req
        )
        cand = Candidate(key, power, (t_lock, f_lo, f_hi), viol == 0.0, viol)
        self.cache[key] = cand
        return cand

    def to_dict(self) -> dict:
        return {
            "bounds": [list(b) for b in self.bounds],
            "lock_time_limit": self.lock_time_limit,
            "f_min_req": self.f_min_req,
            "f_max_req": self.f_max_req,
        }


# ---------------------------------------------------------------------------
# operators


def mutate(pop: np.ndarray, i: int, F: float, rng: np.random.Generator, bounds=None) -> np.ndarray:
    """DE/rand/1 mutant from three distinct members other than ``i``, clipped to bounds."""
    K = len(pop)
    if K < 4:
        raise ValueError("mutation needs a population of at least 4")
    others = [j for j in range(K) if j != i]
    r1, r2, r3 = rng.choice(others, size=3, replace=False)
    v = pop[r1] + F * (pop[r2] - pop[r3])
    if bounds is not None:
        b = np.asarray(bounds, dtype=float)
        v = np.clip(v, b[:, 0], b[:, 1])
    return v


def crossover(x: np.ndarray, v: np.ndarray, CR: float, rng: np.random.Generator) -> np.ndarray:
    """Binomial crossover with one forced component from the mutant."""
    x = np.asarray(x, dtype=float)
    D = len(x)
    if D < 1:
        raise ValueError("dimension must be >= 1")
    take = rng.random(D) <= CR
    take[rng.integers(D)] = True
    return np.where(take, v, x)


def select(target: Candidate, trial: Candidate) -> Candidate:
    if target.feasible:
        if trial.feasible and trial.objective <= target.objective:
            return trial
        return target
    if trial.feasible or trial.violation <= target.violation:
        return trial
    return target


def _rank_key(c: Candidate):
    return (not c.feasible, c.violation if not c.feasible else 0.0, c.objective)


def best_of(pop: Sequence[Candidate]) -> Candidate:
    return min(pop, key=_rank_key)


@dataclass(frozen=True)
class HistoryEntry:
    generation: int
    best: Candidate

    @property
    def feasible(self) -> bool:
        return self.best.feasible


@dataclass
class DeResult:
    best: Candidate
    history: list
    population: list
    evaluations: int

    @property
    def infeasible(self) -> bool:
        return not self.best.feasible


def de_run(problem, cfg: DeConfig = DeConfig()) -> DeResult:
    """Evolve ``cfg.K`` candidates; returns the best and per-generation history."""
    bounds = _check_bounds(problem.bounds)
    D = len(bounds)
    lhs = qmc.LatinHypercube(d=D, rng=np.random.default_rng([cfg.seed, 0x5EED]))
    X = qmc.scale(lhs.random(cfg.K), bounds[:, 0], bounds[:, 1])
    pop = [problem.evaluate(x) for x in X]
    evals = len(pop)
    history = [HistoryEntry(0, best_of(pop))]
    stall = 0
    for g in range(1, cfg.max_generations + 1):
        X = np.array([c.x for c in pop])
        trials = []
        for i in range(cfg.K):
            rng = np.random.default_rng([cfg.seed, g, i])
            v = mutate(X, i, cfg.F, rng, bounds)
            u = crossover(X[i], v, cfg.CR, rng)
            trials.append(u)
        # synchronous: evaluate the whole generation, then select
        evaluated = [problem.evaluate(u) for u in trials]
        evals += len(evaluated)
        pop = [select(t, u) for t, u in zip(pop, evaluated)]
        best = best_of(pop)
        prev = history[-1].best
        history.append(HistoryEntry(g, best))
        if cfg.stall_window is not None:
            same = (best.feasible == prev.feasible) and (
                abs(best.objective - prev.objective) <= cfg.stall_rtol * abs(prev.objective)
                if best.feasible else best.violation >= prev.violation
            )
            stall = stall + 1 if same else 0
            if stall >= cfg.stall_window:
                break
    return DeResult(best=history[-1].best, history=history, population=pop, evaluations=evals)


def grid_search(problem, n: int = 30):
    """Exhaustive ``n``-per-axis grid; returns ``(best, cell_size, candidates)``."""
    bounds = _check_bounds(problem.bounds)
    axes = [np.linspace(lo, hi, n) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    cands = [problem.evaluate(p) for p in pts]
    cell = (bounds[:, 1] - bounds[:, 0]) / (n - 1)
    return best_of(cands), cell, cands


def save_history_csv(history: Sequence[HistoryEntry], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["generation", "best_power_w", "best_wp_m", "best_wn_m", "feasible"])
        for h in history:
            x = h.best.x
            w.writerow([h.generation, f"{h.best.objective:.9e}", f"{x[0]:.9e}",
                        f"{x[1]:.9e}" if len(x) > 1 else "", int(h.feasible)])
    return path


def load_problem_json(path, view, pll: PllConfig) -> OptProblem:
    data = json.loads(Path(path).read_text())
    allowed = {"bounds", "lock_time_limit", "f_min_req", "f_max_req"}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown problem fields: {sorted(unknown)}")
    if "bounds" in data:
        data["bounds"] = tuple(tuple(b) for b in data["bounds"])
    return OptProblem(view=view, pll=pll, **data)
