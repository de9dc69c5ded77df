"""Global and greedy rodeo over several evaluation points, and the linear prefit."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algorithm import (
    Action,
    RodeoConfig,
    StepRecord,
    initial_bandwidth,
    resolve_sigma,
    threshold,
)
from .dataset import Dataset, Purpose, RngSeed, uniform_stream
from .kernels import Kernel
from .loclin import Smoother, _LocalSystem, derivative_stats

__all__ = [
    "LinearPrefit",
    "GlobalStats",
    "GlobalRodeoResult",
    "GreedyEvent",
    "GreedyTrace",
    "linear_prefit",
    "sample_eval_points",
    "global_statistic",
    "global_rodeo",
    "greedy_rodeo",
]

PREFIT_TOL = 1e-10
PREFIT_MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class LinearPrefit:
    intercept: float
    coefficients: np.ndarray
    penalty: float
    residual_data: Dataset

    def predict(self, x) -> float:
        return float(self.intercept + np.asarray(x, dtype=np.float64) @ self.coefficients)


def linear_prefit(data: Dataset, penalty: float = 0.0) -> LinearPrefit:
    """L1-penalized least squares by cyclic coordinate descent.

    Minimizes ``0.5 * sum (Y - a - X b)^2 + penalty * sum |b_j|`` with an
    unpenalized intercept. ``penalty = 0`` gives ordinary least squares and
    requires a full-rank centered design.
    """
    if not (penalty >= 0 and math.isfinite(penalty)):
        raise ValueError("penalty must be finite and nonnegative")
    X, Y = data.X, data.Y
    xbar, ybar = X.mean(axis=0), Y.mean()
    Xc, Yc = X - xbar, Y - ybar
    gram = Xc.T @ Xc
    corr = Xc.T @ Yc
    if penalty == 0 and (data.n <= data.d or np.linalg.matrix_rank(Xc) < data.d):
        raise np.linalg.LinAlgError("singular design for an unpenalized linear fit")
    diag = np.diag(gram)
    b = np.zeros(data.d)
    for _ in range(PREFIT_MAX_SWEEPS):
        biggest = 0.0
        for j in range(data.d):
            if diag[j] == 0:
                continue
            # partial residual correlation with b_j removed
            rho = corr[j] - gram[j] @ b + diag[j] * b[j]
            new = math.copysign(max(abs(rho) - penalty, 0.0), rho) / diag[j]
            biggest = max(biggest, abs(new - b[j]))
            b[j] = new
        if biggest < PREFIT_TOL:
            break
    intercept = float(ybar - xbar @ b)
    residuals = Y - intercept - X @ b
    return LinearPrefit(intercept, b, float(penalty), data.with_response(residuals))


def sample_eval_points(
    data: Dataset, k: int, seed: RngSeed, purpose: Purpose = Purpose.EVAL_POINTS
) -> np.ndarray:
    """``k`` distinct data rows, chosen without replacement from one stream."""
    if not 1 <= k <= data.n:
        raise ValueError(f"k must lie in [1, {data.n}]")
    keys = uniform_stream(seed, purpose, data.n)
    rows = np.argsort(keys, kind="stable")[:k]
    return data.X[rows]


@dataclass(frozen=True)
class GlobalStats:
    """Per-variable averaged squared derivatives and their null calibration.

    ``null_mean`` is the average conditional variance of ``Z_j`` over the
    evaluation points, i.e. the expected ``T_j`` for an irrelevant variable.
    """

    variables: list[int]
    T: np.ndarray
    trace_P: np.ndarray
    trace_PP: np.ndarray
    lambda_: np.ndarray
    null_mean: np.ndarray
    eval_points: np.ndarray
    h: np.ndarray


def _gj_by_point(data, eval_points, h, kernel, smoother, variables):
    """Stack G_j(X_s, x_i) into shape (len(variables), n, k), plus Z of shape (len(variables), k).

    ``Z`` is formed per point exactly as in :func:`derivative_stats`, so a
    single evaluation point reproduces the local statistic bit for bit.
    """
    G = np.zeros((len(variables), data.n, len(eval_points)))
    Z = np.zeros((len(variables), len(eval_points)))
    for i, x in enumerate(eval_points):
        system = _LocalSystem(data, x, h, kernel, smoother)
        local = system.gj_matrix(variables)
        G[:, system.rows, i] = local.T
        Z[:, i] = local.T @ system.y
    return G, Z


def global_statistic(
    data: Dataset,
    eval_points,
    h,
    kernel: Kernel = Kernel.GAUSSIAN,
    sigma: float = 0.0,
    smoother: Smoother = Smoother.LOCAL_LINEAR,
    variables=None,
) -> GlobalStats:
    eval_points = np.atleast_2d(np.asarray(eval_points, dtype=np.float64))
    k = eval_points.shape[0]
    variables = list(range(data.d)) if variables is None else list(variables)
    h = np.asarray(h, dtype=np.float64)
    G, Z = _gj_by_point(data, eval_points, h, kernel, smoother, variables)
    T = np.mean(Z * Z, axis=1)
    trace_P = np.einsum("jsi,jsi->j", G, G)
    gram = np.einsum("jsi,jsl->jil", G, G)
    trace_PP = np.einsum("jil,jil->j", gram, gram)
    s2 = sigma * sigma
    lam = s2 / k * trace_P + 2.0 * s2 / k * np.sqrt(trace_PP * math.log(data.n))
    return GlobalStats(variables, T, trace_P, trace_PP, lam, s2 / k * trace_P, eval_points, h)


@dataclass(frozen=True)
class GlobalRodeoResult:
    h_star: np.ndarray
    trace: list[StepRecord]
    stopping_time: int
    sigma_used: float
    h0: float
    terminations: list[str]


def global_rodeo(data: Dataset, eval_points, config: RodeoConfig = RodeoConfig()) -> GlobalRodeoResult:
    """Hard-threshold rodeo driven by ``T_j`` and its global threshold.

    Trace records store ``T_j`` in ``z``, the global threshold in ``lambda_``
    and the null mean of ``T_j`` in ``scale``.
    """
    eval_points = np.atleast_2d(np.asarray(eval_points, dtype=np.float64))
    n, d = data.n, data.d
    h0 = initial_bandwidth(config.c0, n)
    sigma = resolve_sigma(data, config.sigma_policy)
    h = np.full(d, h0)
    active = list(range(d))
    terminations = ["exhausted"] * d
    trace: list[StepRecord] = []
    t = 0
    while active and t < config.max_steps:
        t += 1
        stats = global_statistic(
            data, eval_points, h, config.kernel, sigma, config.smoother, active
        )
        new_h = h.copy()
        still_active = []
        for c, j in enumerate(active):
            T, lam = float(stats.T[c]), float(stats.lambda_[c])
            if T > lam:
                if h[j] * config.beta >= config.h_floor:
                    action = Action.SHRUNK
                    new_h[j] = config.beta * h[j]
                    still_active.append(j)
                else:
                    action = Action.FROZEN
                    terminations[j] = "frozen"
            else:
                action = Action.REMOVED
                terminations[j] = "removed"
            trace.append(StepRecord(t, j, float(h[j]), T, lam, float(stats.null_mean[c]), action))
        h = new_h
        active = still_active
    return GlobalRodeoResult(h, trace, t, sigma, h0, terminations)


@dataclass(frozen=True)
class GreedyEvent:
    step: int
    variable: int
    score: float
    h_after: float
    action: Action


@dataclass(frozen=True)
class GreedyTrace:
    """Events of a greedy run.

    ``selection_order[j]`` is the 1-based rank of variable j's first shrink,
    or ``None`` if it was never shrunk.
    """

    events: list[GreedyEvent]
    selection_order: list[int | None]
    h_star: np.ndarray
    stopping_time: int
    sigma_used: float
    h0: float


def _normalized_scores(data, eval_points, h, config, sigma, variables) -> np.ndarray:
    """Mean over evaluation points of ``|Z_j| / lambda_j`` for each variable."""
    ratios = np.zeros((len(variables), len(eval_points)))
    for i, x in enumerate(eval_points):
        _, stats = derivative_stats(data, x, h, config.kernel, sigma, config.smoother, variables)
        for c, st in enumerate(stats):
            lam = threshold(st.scale, data.n)
            if lam > 0:
                ratios[c, i] = abs(st.z) / lam
            else:
                ratios[c, i] = math.inf if st.z != 0 else 0.0
    return ratios.mean(axis=1)


def greedy_rodeo(
    data: Dataset,
    eval_points,
    config: RodeoConfig = RodeoConfig(),
    n_select: int | None = None,
) -> GreedyTrace:
    """Shrink one bandwidth per step: the variable with the largest mean ``|Z_j|/lambda_j``.

    Every variable stays a candidate, so the run produces a full selection
    order; ties go to the lowest index. A candidate whose next bandwidth
    would fall below ``h_floor`` is frozen and the next-best one is shrunk.
    The run ends when no candidate is left, after ``config.max_steps``
    shrinks, or once ``n_select`` variables have been selected.
    """
    eval_points = np.atleast_2d(np.asarray(eval_points, dtype=np.float64))
    d = data.d
    n_select = d if n_select is None else min(n_select, d)
    h0 = initial_bandwidth(config.c0, data.n)
    sigma = resolve_sigma(data, config.sigma_policy)
    h = np.full(d, h0)
    candidates = list(range(d))
    order: list[int | None] = [None] * d
    rank = 0
    events: list[GreedyEvent] = []
    t = 0
    while candidates and t < config.max_steps and rank < n_select:
        scores = _normalized_scores(data, eval_points, h, config, sigma, candidates)
        step = t + 1
        chosen = None
        frozen = set()
        # stable sort keeps lower indices first among equal scores
        for c in np.argsort(-scores, kind="stable"):
            j = candidates[c]
            if h[j] * config.beta >= config.h_floor:
                chosen = (j, float(scores[c]))
                break
            events.append(GreedyEvent(step, j, float(scores[c]), float(h[j]), Action.FROZEN))
            frozen.add(j)
        candidates = [j for j in candidates if j not in frozen]
        if chosen is None:
            break
        t = step
        j, score = chosen
        h[j] *= config.beta
        if order[j] is None:
            rank += 1
            order[j] = rank
        events.append(GreedyEvent(step, j, score, float(h[j]), Action.SHRUNK))
    return GreedyTrace(events, order, h, t, sigma, h0)
