"""Polynomial response-surface metamodels of the VCO.

A metamodel holds a set of monomial basis terms shared by two coefficient
vectors, one for oscillation frequency and one for power. Coefficients are
stored for raw SI inputs (widths in metres, control voltage in volts), which
is also the layout of the coefficient text file read by the emitted
Verilog-AMS module.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

VAR_NAMES = ("wp", "wn", "vc")

BasisTerm = tuple  # exponent tuple, one entry per input variable


class MetamodelError(ValueError):
    pass


class FitError(MetamodelError):
    pass


class MetamodelFileError(MetamodelError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ---------------------------------------------------------------------------
# basis


def enumerate_basis(degree: int, nvars: int) -> list:
    """All exponent tuples with total degree <= ``degree``.

    The last variable varies slowest, then the one before it, so for three
    variables the constant and pure width terms come first and the control
    voltage terms last:

    >>> enumerate_basis(1, 3)
    [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    """
    if degree < 0 or nvars < 1:
        raise ValueError("need degree >= 0 and nvars >= 1")
    if nvars == 1:
        return [(p,) for p in range(degree + 1)]
    out = []
    for last in range(degree + 1):
        for head in enumerate_basis(degree - last, nvars - 1):
            out.append(head + (last,))
    return out


def design_matrix(X: np.ndarray, terms: Sequence[BasisTerm]) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Phi = np.ones((X.shape[0], len(terms)))
    for k, term in enumerate(terms):
        for v, p in enumerate(term):
            if p:
                Phi[:, k] *= X[:, v] ** p
    return Phi


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class PolyMetamodel:
    terms: tuple
    beta_f: tuple
    beta_p: tuple
    var_ranges: tuple | None = None
    sample_count: int | None = None

    def __post_init__(self):
        terms = tuple(tuple(int(p) for p in t) for t in self.terms)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "beta_f", tuple(float(b) for b in self.beta_f))
        object.__setattr__(self, "beta_p", tuple(float(b) for b in self.beta_p))
        if self.var_ranges is not None:
            object.__setattr__(
                self, "var_ranges", tuple((float(lo), float(hi)) for lo, hi in self.var_ranges)
            )
        if not (len(terms) == len(self.beta_f) == len(self.beta_p)):
            raise MetamodelError("terms, beta_f and beta_p must have equal length")
        if len(set(terms)) != len(terms):
            raise MetamodelError("duplicate exponent tuple in metamodel terms")
        if any(len(t) != len(VAR_NAMES) for t in terms):
            raise MetamodelError(f"every term needs {len(VAR_NAMES)} exponents")
        if any(p < 0 for t in terms for p in t):
            raise MetamodelError("exponents must be non-negative")

    @property
    def K(self) -> int:
        return len(self.terms)

    @property
    def degree(self) -> int:
        return max((sum(t) for t in self.terms), default=0)

    def is_extrapolation(self, wp: float, wn: float, vc: float) -> bool:
        if self.var_ranges is None:
            return False
        return any(not (lo <= x <= hi) for x, (lo, hi) in zip((wp, wn, vc), self.var_ranges))

    def scaled(self, a: float, b: float, other: "PolyMetamodel") -> "PolyMetamodel":
        """Coefficient-wise ``a * self + b * other`` over the same terms."""
        if other.terms != self.terms:
            raise MetamodelError("models must share the same terms")
        return PolyMetamodel(
            self.terms,
            [a * x + b * y for x, y in zip(self.beta_f, other.beta_f)],
            [a * x + b * y for x, y in zip(self.beta_p, other.beta_p)],
            self.var_ranges,
            self.sample_count,
        )


def evaluate(model: PolyMetamodel, wp: float, wn: float, vc: float):
    """Return ``(freq, power)`` predicted by ``model``."""
    if not (math.isfinite(wp) and math.isfinite(wn) and math.isfinite(vc)):
        raise ValueError(f"non-finite metamodel input ({wp!r}, {wn!r}, {vc!r})")
    freq = 0.0
    power = 0.0
    for (p1, p2, p3), bf, bp in zip(model.terms, model.beta_f, model.beta_p):
        m = wp**p1 * wn**p2 * vc**p3
        freq += bf * m
        power += bp * m
    return freq, power


def evaluate_many(model: PolyMetamodel, X) -> np.ndarray:
    """Vectorized evaluation; returns an ``(n, 2)`` array of (freq, power)."""
    Phi = design_matrix(X, model.terms)
    return np.column_stack([Phi @ np.array(model.beta_f), Phi @ np.array(model.beta_p)])


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SamplePlan:
    points: np.ndarray
    responses: np.ndarray | None = None
    seed: int | None = None
    method: str = "lhs"
    ranges: tuple | None = field(default=None)

    def __len__(self):
        return len(self.points)

    def with_responses(self, responses) -> "SamplePlan":
        responses = np.asarray(responses, dtype=float).reshape(len(self.points), 2)
        return SamplePlan(self.points, responses, self.seed, self.method, self.ranges)


def _check_ranges(ranges):
    ranges = tuple((float(lo), float(hi)) for lo, hi in ranges)
    for lo, hi in ranges:
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
            raise ValueError(f"invalid range [{lo}, {hi}]: need lo < hi")
    return ranges


def lhs_sample(n: int, ranges, seed: int) -> SamplePlan:
    """Latin hypercube plan of ``n`` points over the box ``ranges``."""
    if n < 1:
        raise ValueError("LHS needs at least one point")
    ranges = _check_ranges(ranges)
    unit = qmc.LatinHypercube(d=len(ranges), rng=np.random.default_rng(seed)).random(n)
    lo = np.array([r[0] for r in ranges])
    hi = np.array([r[1] for r in ranges])
    pts = lo + unit * (hi - lo)
    # guard the closed upper edge against round-off
    pts = np.clip(pts, lo, hi)
    return SamplePlan(pts, None, seed, "lhs", ranges)


def grid_sample(points_per_dim: int, ranges) -> SamplePlan:
    """Full-factorial uniform grid including the box corners."""
    if points_per_dim < 1:
        raise ValueError("grid needs at least one point per dimension")
    ranges = _check_ranges(ranges)
    axes = [np.linspace(lo, hi, points_per_dim) for lo, hi in ranges]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    return SamplePlan(pts, None, None, "uniform-grid", ranges)


def evaluate_plan(plan: SamplePlan, fn: Callable) -> SamplePlan:
    """Attach responses ``fn(wp, wn, vc) -> (freq, power)`` to every point."""
    return plan.with_responses([fn(*pt) for pt in plan.points])


def stratum_occupancy(points: np.ndarray, ranges) -> np.ndarray:
    """Count of points per (dimension, stratum); all ones for a valid LHS."""
    points = np.atleast_2d(points)
    n = len(points)
    counts = np.zeros((points.shape[1], n), dtype=int)
    for d, (lo, hi) in enumerate(ranges):
        idx = np.floor((points[:, d] - lo) / (hi - lo) * n).astype(int)
        np.add.at(counts[d], np.clip(idx, 0, n - 1), 1)
    return counts


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FitResult:
    model: PolyMetamodel
    rmse_f: float
    rmse_p: float
    r2_f: float
    r2_p: float


def _r2(y, yhat):
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)


def score(model: PolyMetamodel, plan: SamplePlan) -> dict:
    """RMSE and R^2 of ``model`` on a plan with responses."""
    if plan.responses is None:
        raise MetamodelError("plan has no responses to score against")
    pred = evaluate_many(model, plan.points)
    y = plan.responses
    return {
        "rmse_f": float(np.sqrt(np.mean((pred[:, 0] - y[:, 0]) ** 2))),
        "rmse_p": float(np.sqrt(np.mean((pred[:, 1] - y[:, 1]) ** 2))),
        "r2_f": _r2(y[:, 0], pred[:, 0]),
        "r2_p": _r2(y[:, 1], pred[:, 1]),
    }


def _fold_to_raw(coef_scaled: np.ndarray, terms, centers, halfwidths) -> np.ndarray:
    """Re-express coefficients of prod(((x - c) / h)^q) on raw monomials prod(x^k)."""
    index = {t: i for i, t in enumerate(terms)}
    raw = np.zeros_like(coef_scaled)
    for t, a in zip(terms, coef_scaled):
        # per-variable binomial expansions of ((x - c) / h)^q
        expansions = []
        for q, c, h in zip(t, centers, halfwidths):
            expansions.append(
                [(k, math.comb(q, k) * (-c) ** (q - k) / h**q) for k in range(q + 1)]
            )
        stack = [((), a)]
        for exp in expansions:
            stack = [(ks + (k,), w * wk) for ks, w in stack for k, wk in exp]
        for ks, w in stack:
            raw[index[ks]] += w
    return raw


def fit(plan: SamplePlan, degree: int, ranges=None) -> FitResult:
    """Least-squares fit of shared-basis frequency and power polynomials.

    Inputs are mapped affinely onto [-1, 1] per variable before solving with
    an SVD-based least-squares routine, and the solution is folded back onto
    raw-unit monomials.
    """
    if plan.responses is None:
        raise FitError("sample plan has no responses")
    X = np.asarray(plan.points, dtype=float)
    Y = np.asarray(plan.responses, dtype=float)
    terms = enumerate_basis(degree, X.shape[1])
    if len(X) < len(terms):
        raise FitError(
            f"underdetermined fit: {len(X)} samples for {len(terms)} basis terms "
            f"(degree {degree}, {X.shape[1]} variables)"
        )
    ranges = ranges if ranges is not None else plan.ranges
    if ranges is None:
        ranges = tuple(zip(X.min(axis=0), X.max(axis=0)))
    ranges = tuple((float(lo), float(hi)) for lo, hi in ranges)
    centers = np.array([(lo + hi) / 2 for lo, hi in ranges])
    halfwidths = np.array([(hi - lo) / 2 if hi > lo else 1.0 for lo, hi in ranges])

    Phi = design_matrix((X - centers) / halfwidths, terms)
    coef, _, rank, sv = np.linalg.lstsq(Phi, Y, rcond=None)
    if rank < len(terms):
        raise FitError(
            f"rank-deficient design matrix: rank {rank} < {len(terms)} terms "
            f"(smallest singular value {sv[-1]:.3g}); samples do not determine the basis"
        )
    beta_f = _fold_to_raw(coef[:, 0], terms, centers, halfwidths)
    beta_p = _fold_to_raw(coef[:, 1], terms, centers, halfwidths)
    model = PolyMetamodel(terms, beta_f, beta_p, ranges, len(X))

    pred = Phi @ coef
    return FitResult(
        model=model,
        rmse_f=float(np.sqrt(np.mean((pred[:, 0] - Y[:, 0]) ** 2))),
        rmse_p=float(np.sqrt(np.mean((pred[:, 1] - Y[:, 1]) ** 2))),
        r2_f=_r2(Y[:, 0], pred[:, 0]),
        r2_p=_r2(Y[:, 1], pred[:, 1]),
    )


# ---------------------------------------------------------------------------
# coefficient file


def format_csv(model: PolyMetamodel) -> str:
    buf = io.StringIO()
    for (p1, p2, p3), bf, bp in zip(model.terms, model.beta_f, model.beta_p):
        buf.write(f"{p1},{p2},{p3},{bf:.16e},{bp:.16e}\n")
    return buf.getvalue()


def save_csv(model: PolyMetamodel, path) -> Path:
    path = Path(path)
    path.write_text(format_csv(model))
    return path


def parse_csv(text: str) -> PolyMetamodel:
    terms, bfs, bps = [], [], []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        cols = [c.strip() for c in line.split(",")]
        if len(cols) != 5:
            raise MetamodelFileError(f"expected 5 columns (p1,p2,p3,beta_f,beta_p), got {len(cols)}", lineno)
        try:
            term = tuple(int(c) for c in cols[:3])
            bf, bp = float(cols[3]), float(cols[4])
        except ValueError as exc:
            raise MetamodelFileError(f"non-numeric field ({exc})", lineno) from None
        if any(p < 0 for p in term):
            raise MetamodelFileError("negative exponent", lineno)
        if not (math.isfinite(bf) and math.isfinite(bp)):
            raise MetamodelFileError("non-finite coefficient", lineno)
        if term in seen:
            raise MetamodelFileError(
                f"duplicate exponent tuple {term} (first seen on line {seen[term]})", lineno
            )
        seen[term] = lineno
        terms.append(term)
        bfs.append(bf)
        bps.append(bp)
    if not terms:
        raise MetamodelFileError("no terms found")
    return PolyMetamodel(terms, bfs, bps)


def load_csv(path) -> PolyMetamodel:
    return parse_csv(Path(path).read_text())


# ---------------------------------------------------------------------------
# sample-plan file

PLAN_HEADER = ["wp_m", "wn_m", "vc_v"]
RESPONSE_HEADER = ["freq_hz", "power_w"]


def save_plan_csv(plan: SamplePlan, path) -> Path:
    path = Path(path)
    header = PLAN_HEADER + (RESPONSE_HEADER if plan.responses is not None else [])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, pt in enumerate(plan.points):
            row = list(pt) + (list(plan.responses[i]) if plan.responses is not None else [])
            w.writerow([f"{v:.16e}" for v in row])
    return path


def load_plan_csv(path) -> SamplePlan:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise MetamodelFileError("empty sample-plan file")
    header = [h.strip() for h in rows[0]]
    if header not in (PLAN_HEADER, PLAN_HEADER + RESPONSE_HEADER):
        raise MetamodelFileError(f"unexpected header {header}", 1)
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise MetamodelFileError(f"expected {len(header)} columns, got {len(row)}", lineno)
        try:
            data.append([float(v) for v in row])
        except ValueError as exc:
            raise MetamodelFileError(f"non-numeric field ({exc})", lineno) from None
    arr = np.array(data, dtype=float).reshape(-1, len(header))
    responses = arr[:, 3:5] if len(header) == 5 else None
    return SamplePlan(arr[:, :3], responses, None, "file")


# ---------------------------------------------------------------------------
# Verilog-AMS emission

_VAMS_TEMPLATE = """\
`timescale 10ps / 1ps
`include "disciplines.vams"
// Parasitic-aware polynomial VCO: {K} basis terms of degree <= {degree}.
// Coefficients are read from {csv_name} (columns p1, p2, p3, beta_f, beta_p).
module {module_name} (out, in);
    output out;
    input in;
    electrical in;
    reg out;
    parameter real wp = {wp:.6e};
    parameter real wn = {wn:.6e};
    parameter integer K = {K};
    integer metaf, readfile, i, p1, p2, p3;
    integer pv[0:K-1];
    real betaf, betap, vc, freq, power;
    real bf[0:K-1], bp[0:K-1];

    initial
    begin
        out = 0;
        i = 0;
        metaf = $fopen("{csv_name}", "r");
        while (!$feof(metaf) && i < K)
        begin
            readfile = $fscanf(metaf, "%d, %d, %d, %e, %e\\n",
                               p1, p2, p3, betaf, betap);
            bf[i] = pow(wp, p1) * pow(wn, p2) * betaf;
            bp[i] = pow(wp, p1) * pow(wn, p2) * betap;
            pv[i] = p3;
            i = i + 1;
        end
        $fclose(metaf);
    end

    always
    begin
        vc = V(in);
        freq = 0;
        power = 0;
        for (i = 0; i < K; i = i + 1)
        begin
            freq = freq + bf[i] * pow(vc, pv[i]);
            power = power + bp[i] * pow(vc, pv[i]);
        end
        #(0.5 / freq / 10p)
        out = ~out;
    end
endmodule
"""


def emit_vams(
    model: PolyMetamodel,
    module_name: str = "vco_metamodel",
    csv_name: str = "metamodel.csv",
    wp: float = 20e-6,
    wn: float = 10e-6,
) -> str:
    """Verilog-AMS module text that reads ``csv_name`` and evaluates the model."""
    if model.K == 0:
        raise MetamodelError("cannot emit an empty metamodel")
    if not module_name.isidentifier():
        raise MetamodelError(f"invalid module name {module_name!r}")
    return _VAMS_TEMPLATE.format(
        K=model.K,
        degree=model.degree,
        csv_name=csv_name,
        module_name=module_name,
        wp=wp,
        wn=wn,
    )
