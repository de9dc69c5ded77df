"""Monte Carlo experiments, the cross-validated baseline and CSV reports.

Every replicate ``r`` draws its data, test points and evaluation points from
the streams keyed by ``(master_seed, r)``, so an experiment is a pure
function of its configuration and reruns write byte-identical files.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .algorithm import RodeoConfig, RodeoResult, rodeo_hard, rodeo_soft
from .dataset import (
    Dataset,
    Purpose,
    RngSeed,
    SyntheticSpec,
    draw_covariates,
    format_float,
    gen_synthetic,
    load_csv,
    true_function,
)
from .kernels import Kernel, kernel_weight
from .loclin import (
    NumericalError,
    Smoother,
    count_support,
    fit_local_linear,
    guard_system,
    local_design,
)
from .variants import global_rodeo, greedy_rodeo, linear_prefit, sample_eval_points

__all__ = [
    "Algorithm",
    "LoocvResult",
    "ExperimentConfig",
    "ExperimentReport",
    "SummaryReport",
    "default_grid",
    "loocv_bandwidth",
    "run_experiment",
    "report_summary",
    "quartiles",
    "write_rows",
    "emit_rows",
]

TRACE_COLUMNS = ["run", "point", "step", "variable", "h_before", "z", "lambda", "scale", "action"]


class Algorithm(str, enum.Enum):
    HARD = "hard"
    SOFT = "soft"
    GLOBAL = "global"
    GREEDY = "greedy"
    BASELINE = "baseline"


LOOCV_TIE_RTOL = 1e-12


def default_grid() -> np.ndarray:
    return np.geomspace(0.05, 1.5, 20)


# --------------------------------------------------------------------------
# leave-one-out baseline


@dataclass(frozen=True)
class LoocvResult:
    """Risk per grid bandwidth; disqualified bandwidths carry ``inf`` and a reason."""

    best_h: float
    grid: np.ndarray
    risks: np.ndarray
    reasons: list[str]


def _loo_at_data_points(data: Dataset, h: float, kernel: Kernel, smoother: Smoother, chunk: int = 64):
    """Fitted values and self-weights ``G_ii`` of the fit at every ``X_i``."""
    n, d = data.n, data.d
    fitted = np.empty(n)
    self_weight = np.empty(n)
    w_self = float(kernel_weight(kernel, 0.0)) ** d
    for start in range(0, n, chunk):
        idx = np.arange(start, min(n, start + chunk))
        diff = data.X[None, :, :] - data.X[idx, None, :]
        if Kernel(kernel) is Kernel.GAUSSIAN:
            w = np.exp(-0.5 * np.sum((diff / h) ** 2, axis=-1))
        else:
            w = np.prod(kernel_weight(kernel, diff / h), axis=-1)
        p = 1 if Smoother(smoother) is Smoother.KERNEL_REGRESSION else d + 1
        for row in w:
            if count_support(row, kernel) < p:
                raise NumericalError("insufficient support")
        D = np.stack([local_design(block, smoother) for block in diff])
        Dw = D * w[..., None]
        A = np.einsum("bsp,bsq->bpq", Dw, D)
        As, s, _ = guard_system(A)
        rhs = np.zeros((len(idx), p, 2))
        rhs[:, :, 0] = np.einsum("bsp,s->bp", Dw, data.Y)
        rhs[:, 0, 1] = 1.0
        sol = s[..., None] * np.linalg.solve(As, s[..., None] * rhs)
        fitted[idx] = sol[:, 0, 0]
        # the design row of point i at its own location is e1
        self_weight[idx] = w_self * sol[:, 0, 1]
    return fitted, self_weight


def loocv_bandwidth(
    data: Dataset,
    x=None,
    grid: Sequence[float] | None = None,
    kernel: Kernel = Kernel.GAUSSIAN,
    smoother: Smoother = Smoother.LOCAL_LINEAR,
) -> LoocvResult:
    """Pick one common bandwidth by leave-one-out cross validation.

    Uses the deletion identity ``Y_i - m_{-i}(X_i) = (Y_i - m(X_i)) / (1 - G_ii)``.
    ``x`` is accepted for interface symmetry; the risk is averaged over the
    data points and does not depend on it. Risks within
    ``LOOCV_TIE_RTOL * mean(Y^2)`` of the minimum are ties, and ties go to
    the largest bandwidth.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    if grid.size == 0 or np.any(~(grid > 0)):
        raise ValueError("grid must be nonempty with positive bandwidths")
    if data.n < data.d + 2:
        raise ValueError("LOOCV needs n >= d + 2")
    risks = np.full(grid.size, np.inf)
    reasons = [""] * grid.size
    for g, h in enumerate(grid):
        try:
            fitted, gii = _loo_at_data_points(data, float(h), kernel, smoother)
        except (NumericalError, np.linalg.LinAlgError) as exc:
            reasons[g] = f"fit failed: {exc}"
            continue
        if np.any(np.abs(1.0 - gii) < 1e-12):
            reasons[g] = "self-weight equals 1"
            continue
        resid = (data.Y - fitted) / (1.0 - gii)
        risks[g] = float(np.mean(resid * resid))
    if not np.any(np.isfinite(risks)):
        raise NumericalError("every grid bandwidth was disqualified")
    # risks of exact fits are rounding noise, so near-equal risks count as ties
    tol = LOOCV_TIE_RTOL * float(np.mean(data.Y * data.Y))
    best = np.flatnonzero(risks <= np.min(risks) + tol)
    best_g = max(best, key=lambda g: grid[g])
    return LoocvResult(float(grid[best_g]), grid, risks, reasons)


# --------------------------------------------------------------------------
# summaries


def quartiles(values) -> tuple[float, float, float, float, float]:
    """min, Q1, median, Q3, max as lower order statistics ``x[floor(q (m - 1))]``."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no values to summarize")
    q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0], method="lower")
    return tuple(float(a) for a in q)


@dataclass(frozen=True)
class SummaryReport:
    rows: list[dict]
    counts: dict[str, int]


def report_summary(rows: list[dict]) -> SummaryReport:
    """Quartiles per bandwidth column and for the squared error, plus counts.

    Rows whose ``status`` is not ``ok`` are counted and then ignored.
    """
    ok = [r for r in rows if r.get("status", "ok") == "ok"]
    if not ok:
        raise ValueError("no successful rows to summarize")
    h_cols = sorted(
        (c for c in ok[0] if c.startswith("h_")), key=lambda c: int(c.split("_")[1])
    )
    out = []
    for col in [*h_cols, "estimate", "sq_error", "stopping_time"]:
        vals = [r[col] for r in ok if r.get(col) is not None]
        if not vals:
            continue
        lo, q1, med, q3, hi = quartiles(vals)
        out.append(dict(quantity=col, count=len(vals), min=lo, q1=q1, median=med, q3=q3, max=hi))
    counts = {
        "rows_ok": len(ok),
        "rows_failed": len(rows) - len(ok),
        "removed": sum(r.get("removed", 0) or 0 for r in ok),
        "frozen": sum(r.get("frozen", 0) or 0 for r in ok),
        "exhausted": sum(r.get("exhausted", 0) or 0 for r in ok),
    }
    return SummaryReport(out, counts)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    return str(value)


def emit_rows(fh, columns: Sequence[str], rows: Sequence[dict]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])


def write_rows(path, columns: Sequence[str], rows: Sequence[dict]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        emit_rows(fh, columns, rows)


# --------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo study.

    Exactly one of ``spec`` (synthetic data, regenerated per replicate) or
    ``data_path`` (a fixed CSV file) must be given. ``test_points`` is a
    fixed list of points; when ``None`` each replicate draws
    ``random_points`` test points of its own. ``k`` is the number of
    evaluation points for the global and greedy algorithms (default
    ``min(n, 30)``), and ``prefit_penalty`` switches on the linear prefit.
    """

    algorithm: Algorithm
    spec: SyntheticSpec | None = None
    n: int = 500
    data_path: str | None = None
    target: str = "y"
    replicates: int = 1
    test_points: tuple[tuple[float, ...], ...] | None = None
    random_points: int = 1
    rodeo: RodeoConfig = field(default_factory=RodeoConfig)
    k: int | None = None
    prefit_penalty: float | None = None
    grid: tuple[float, ...] | None = None
    output_dir: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if (self.spec is None) == (self.data_path is None):
            raise ValueError("give exactly one of spec and data_path")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.random_points < 1:
            raise ValueError("random_points must be at least 1")
        if self.test_points is not None:
            pts = tuple(tuple(float(v) for v in p) for p in self.test_points)
            if not pts:
                raise ValueError("test_points must not be empty")
            object.__setattr__(self, "test_points", pts)


@dataclass(frozen=True)
class ExperimentReport:
    rows: list[dict]
    summary: SummaryReport | None
    trace_rows: list[dict]
    order_rows: list[dict]
    files: list[str]


def _replicate_data(config: ExperimentConfig, r: int, seed: RngSeed, cache: dict) -> Dataset:
    if config.spec is not None:
        return gen_synthetic(config.spec, config.n, seed)
    if "data" not in cache:
        cache["data"] = load_csv(config.data_path, config.target)
    return cache["data"]


def _replicate_points(config: ExperimentConfig, data: Dataset, seed: RngSeed) -> np.ndarray:
    if config.test_points is not None:
        pts = np.asarray(config.test_points, dtype=np.float64)
    elif config.spec is not None:
        pts = draw_covariates(config.spec, config.random_points, seed, Purpose.TEST_POINT)
    else:
        pts = sample_eval_points(data, config.random_points, seed, Purpose.TEST_POINT)
    if pts.ndim != 2 or pts.shape[1] != data.d:
        raise ValueError(f"test points must have dimension {data.d}")
    return pts


def _trace_row(run: int, point, rec) -> dict:
    return {
        "run": run,
        "point": point,
        "step": rec.step,
        "variable": rec.variable + 1,
        "h_before": rec.h_before,
        "z": rec.z,
        "lambda": rec.lambda_,
        "scale": rec.scale,
        "action": rec.action,
        "correction": rec.correction,
    }


def _run_replicate(config: ExperimentConfig, r: int, cache: dict):
    """Rows, trace rows and order rows for replicate ``r``."""
    seed = RngSeed(config.rodeo.seed.master_seed, r)
    rcfg = config.rodeo
    data = _replicate_data(config, r, seed, cache)
    points = _replicate_points(config, data, seed)
    algo = config.algorithm
    rows, trace, order = [], [], []

    prefit = None
    fit_data = data
    if config.prefit_penalty is not None:
        prefit = linear_prefit(data, config.prefit_penalty)
        fit_data = prefit.residual_data

    shared = None
    if algo in (Algorithm.GLOBAL, Algorithm.GREEDY):
        k = config.k if config.k is not None else min(data.n, 30)
        evals = sample_eval_points(fit_data, k, seed)
        if algo is Algorithm.GLOBAL:
            shared = global_rodeo(fit_data, evals, rcfg)
            trace.extend(_trace_row(r, "", rec) for rec in shared.trace)
        else:
            shared = greedy_rodeo(fit_data, evals, rcfg)
            trace.extend(
                {"run": r, "step": e.step, "variable": e.variable + 1, "score": e.score,
                 "h_after": e.h_after, "action": e.action}
                for e in shared.events
            )
            order.extend(
                {"run": r, "variable": j + 1, "rank": rank}
                for j, rank in enumerate(shared.selection_order)
            )
    elif algo is Algorithm.BASELINE:
        cv = loocv_bandwidth(fit_data, None, config.grid, rcfg.kernel, rcfg.smoother)
        shared = cv

    for p, x in enumerate(points):
        row = {"run": r, "point": p, "status": "ok"}
        row.update({f"x_{j + 1}": float(v) for j, v in enumerate(x)})
        stopping, terms = None, None
        if algo in (Algorithm.HARD, Algorithm.SOFT):
            fn = rodeo_hard if algo is Algorithm.HARD else rodeo_soft
            res: RodeoResult = fn(fit_data, x, rcfg)
            h_star, estimate = res.h_star, res.estimate
            stopping, terms = res.stopping_time, res.terminations
            trace.extend(_trace_row(r, p, rec) for rec in res.trace)
        elif algo is Algorithm.BASELINE:
            h_star = np.full(data.d, shared.best_h)
            estimate = fit_local_linear(fit_data, x, h_star, rcfg.kernel, rcfg.smoother).estimate
        else:
            h_star = shared.h_star
            stopping = shared.stopping_time
            terms = getattr(shared, "terminations", None)
            estimate = fit_local_linear(fit_data, x, h_star, rcfg.kernel, rcfg.smoother).estimate
        if prefit is not None:
            estimate += prefit.predict(x)
        row["estimate"] = float(estimate)
        if config.spec is not None:
            truth = true_function(config.spec, x)
            row["truth"] = truth
            row["sq_error"] = (float(estimate) - truth) ** 2
        row["stopping_time"] = stopping
        row.update({f"h_{j + 1}": float(v) for j, v in enumerate(h_star)})
        if terms is not None:
            for kind in ("removed", "frozen", "exhausted"):
                row[kind] = terms.count(kind)
        rows.append(row)
    return rows, trace, order, data.d, len(points)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run every replicate, then write CSVs to ``config.output_dir`` if set.

    A replicate that fails numerically is kept as rows with status
    ``error:<reason>`` and left out of the summary.
    """
    rows, trace, order = [], [], []
    cache: dict = {}
    d = None
    for r in range(config.replicates):
        try:
            rrows, rtrace, rorder, d, _ = _run_replicate(config, r, cache)
        except (NumericalError, np.linalg.LinAlgError) as exc:
            rows.append({"run": r, "point": None, "status": f"error:{type(exc).__name__}"})
            continue
        rows.extend(rrows)
        trace.extend(rtrace)
        order.extend(rorder)
    try:
        summary = report_summary(rows)
    except ValueError:
        summary = None

    files = []
    if config.output_dir is not None:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if d is None:
            d = config.spec.d if config.spec is not None else load_csv(config.data_path, config.target).d
        cols = ["run", "point", "status"] + [f"x_{j + 1}" for j in range(d)]
        cols += ["estimate", "truth", "sq_error", "stopping_time"]
        cols += [f"h_{j + 1}" for j in range(d)] + ["removed", "frozen", "exhausted"]
        files.append(_write(out / "replicates.csv", cols, rows))
        if summary is not None:
            files.append(_write(
                out / "summary.csv",
                ["quantity", "count", "min", "q1", "median", "q3", "max"],
                summary.rows,
            ))
            files.append(_write(
                out / "counts.csv",
                ["name", "value"],
                [{"name": k, "value": v} for k, v in summary.counts.items()],
            ))
        algo = config.algorithm
        if algo is Algorithm.GREEDY:
            files.append(_write(
                out / "greedy_trace.csv",
                ["run", "step", "variable", "score", "h_after", "action"],
                trace,
            ))
            files.append(_write(out / "ordering.csv", ["run", "variable", "rank"], order))
        elif algo is not Algorithm.BASELINE:
            cols = TRACE_COLUMNS + (["correction"] if algo is Algorithm.SOFT else [])
            files.append(_write(out / "trace.csv", cols, trace))
    return ExperimentReport(rows, summary, trace, order, files)


def _write(path: Path, columns, rows) -> str:
    write_rows(path, columns, rows)
    return str(path)
