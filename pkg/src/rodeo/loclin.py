"""Local linear fits, effective kernels and bandwidth derivatives.

The local design at ``x`` is ``D = [1, X - x]`` (or just the intercept column
for kernel regression), and the fit solves ``(D'WD) a = D'WY``. Writing
``v = (D'WD)^{-1} e1``, the effective kernel is ``G = W D v`` and the
derivative of the estimate with respect to ``h_j`` has weights

    G_j = a_j - W D (D'WD)^{-1} D' a_j,   a_j = (D v) * (W L_j)

so every ``Z_j`` costs one extra back-substitution against the factorization
already used for the fit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .dataset import Dataset
from .kernels import Kernel, check_bandwidth, weight_and_logderiv

__all__ = [
    "NumericalError",
    "InsufficientSupportError",
    "SingularSystemError",
    "Smoother",
    "LocalFit",
    "DerivativeStat",
    "fit_local_linear",
    "derivative_stat",
    "derivative_stats",
    "COND_LIMIT",
    "RIDGE_FACTOR",
    "GAUSSIAN_SUPPORT_RATIO",
]

COND_LIMIT = 1e12
RIDGE_FACTOR = 1e-10
GAUSSIAN_SUPPORT_RATIO = 1e-12


class NumericalError(ArithmeticError):
    """A local fit could not be computed."""


class InsufficientSupportError(NumericalError):
    pass


class SingularSystemError(NumericalError):
    pass


class Smoother(str, enum.Enum):
    LOCAL_LINEAR = "local-linear"
    KERNEL_REGRESSION = "kernel-regression"


@dataclass(frozen=True)
class LocalFit:
    """One local solve at a point.

    ``coefficients`` is the intercept followed by the d slopes; for kernel
    regression it holds the intercept only.
    """

    estimate: float
    coefficients: np.ndarray
    effective_weights: np.ndarray
    condition_flag: bool


@dataclass(frozen=True)
class DerivativeStat:
    z: float
    scale: float
    gj_weights: np.ndarray


def guard_system(A: np.ndarray):
    """Equilibrate symmetric ``A`` (batched over leading axes) and ridge it if needed.

    Returns ``(A_scaled, s, flagged)`` where ``A = diag(1/s) A_scaled diag(1/s)``
    up to the ridge term. The ridge ``RIDGE_FACTOR * trace / p`` is applied in
    the equilibrated coordinates whenever the condition number exceeds
    ``COND_LIMIT``.
    """
    p = A.shape[-1]
    diag = np.diagonal(A, axis1=-2, axis2=-1)
    if not np.all(np.isfinite(A)):
        raise SingularSystemError("non-finite local normal matrix")
    # an all-zero column (no spread in some coordinate) is left unscaled; the ridge catches it
    s = 1.0 / np.sqrt(np.where(diag > 0, diag, 1.0))
    As = A * s[..., :, None] * s[..., None, :]
    eig = np.linalg.eigvalsh(As)
    lo, hi = eig[..., 0], eig[..., -1]
    with np.errstate(divide="ignore"):
        cond = np.where(lo > 0, hi / np.where(lo > 0, lo, 1.0), np.inf)
    flagged = cond > COND_LIMIT
    if np.any(flagged):
        ridge = RIDGE_FACTOR * np.trace(As, axis1=-2, axis2=-1) / p
        As = As + np.where(flagged, ridge, 0.0)[..., None, None] * np.eye(p)
    return As, s, flagged


class _Factor:
    """LU factorization of the equilibrated normal matrix, reused across solves."""

    def __init__(self, A: np.ndarray):
        As, self.s, flagged = guard_system(A)
        self.flagged = bool(flagged)
        try:
            self.lu = scipy.linalg.lu_factor(As, check_finite=True)
        except (ValueError, scipy.linalg.LinAlgError) as exc:
            raise SingularSystemError(str(exc)) from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        s = self.s if rhs.ndim == 1 else self.s[:, None]
        out = s * scipy.linalg.lu_solve(self.lu, s * rhs)
        if not np.all(np.isfinite(out)):
            raise SingularSystemError("non-finite solution of the local system")
        return out


def local_design(diff: np.ndarray, smoother: Smoother) -> np.ndarray:
    ones = np.ones((diff.shape[0], 1))
    if Smoother(smoother) is Smoother.KERNEL_REGRESSION:
        return ones
    return np.hstack([ones, diff])


def count_support(w: np.ndarray, kernel: Kernel) -> int:
    if Kernel(kernel) is Kernel.GAUSSIAN:
        top = w.max(initial=0.0)
        return int(np.count_nonzero(w > GAUSSIAN_SUPPORT_RATIO * top)) if top > 0 else 0
    return int(np.count_nonzero(w > 0))


class _LocalSystem:
    def __init__(self, data: Dataset, x, h, kernel: Kernel, smoother: Smoother):
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != data.d:
            raise ValueError(f"point has dimension {x.shape[0]}, expected {data.d}")
        h = check_bandwidth(h, data.d)
        diag = weight_and_logderiv(data.X, x, h, kernel)
        p = 1 if Smoother(smoother) is Smoother.KERNEL_REGRESSION else data.d + 1
        if count_support(diag.w, kernel) < p:
            raise InsufficientSupportError(
                f"fewer than {p} points carry weight at this bandwidth"
            )
        # rows with zero weight contribute nothing
        self.rows = np.flatnonzero(diag.w > 0)
        self.n = data.n
        self.w = diag.w[self.rows]
        self.wl = diag.wl[self.rows]
        self.y = data.Y[self.rows]
        self.D = local_design(data.X[self.rows] - x, smoother)
        Dw = self.D * self.w[:, None]
        self.factor = _Factor(self.D.T @ Dw)
        e1 = np.zeros(p)
        e1[0] = 1.0
        sol = self.factor.solve(np.column_stack([Dw.T @ self.y, e1]))
        self.coef = sol[:, 0]
        self.Dv = self.D @ sol[:, 1]

    def _scatter(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n,) + values.shape[1:])
        out[self.rows] = values
        return out

    def fit(self) -> LocalFit:
        return LocalFit(
            estimate=float(self.coef[0]),
            coefficients=self.coef.copy(),
            effective_weights=self._scatter(self.w * self.Dv),
            condition_flag=self.factor.flagged,
        )

    def gj_matrix(self, variables: Sequence[int]) -> np.ndarray:
        """Restricted-to-support G_j weights, one column per requested variable."""
        a = self.Dv[:, None] * self.wl[:, list(variables)]
        back = self.factor.solve(self.D.T @ a)
        return a - self.w[:, None] * (self.D @ back)


def fit_local_linear(
    data: Dataset,
    x,
    h,
    kernel: Kernel = Kernel.GAUSSIAN,
    smoother: Smoother = Smoother.LOCAL_LINEAR,
) -> LocalFit:
    """Local linear (or kernel regression) estimate of ``m(x)`` at bandwidths ``h``.

    Raises
    ------
    InsufficientSupportError
        Fewer than ``d + 1`` points (one for kernel regression) carry weight.
    SingularSystemError
        The local system cannot be solved even after the ridge guard.
    """
    return _LocalSystem(data, x, h, kernel, smoother).fit()


def derivative_stats(
    data: Dataset,
    x,
    h,
    kernel: Kernel = Kernel.GAUSSIAN,
    sigma: float = 0.0,
    smoother: Smoother = Smoother.LOCAL_LINEAR,
    variables: Sequence[int] | None = None,
) -> tuple[LocalFit, list[DerivativeStat]]:
    """The fit at ``h`` together with ``Z_j`` and its scale for each requested j.

    ``Z_j`` is the exact derivative of the estimate with respect to ``h_j``;
    its conditional standard deviation is ``sigma * ||G_j||``.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    system = _LocalSystem(data, x, h, kernel, smoother)
    variables = list(range(data.d)) if variables is None else list(variables)
    if any(not 0 <= j < data.d for j in variables):
        raise IndexError("variable index out of range")
    stats = []
    if variables:
        G = system.gj_matrix(variables)
        z = G.T @ system.y
        norms = np.sqrt(np.einsum("ij,ij->j", G, G))
        for c in range(len(variables)):
            stats.append(
                DerivativeStat(
                    z=float(z[c]),
                    scale=float(sigma * norms[c]),
                    gj_weights=system._scatter(G[:, c]),
                )
            )
    return system.fit(), stats


def derivative_stat(
    data: Dataset,
    x,
    h,
    j: int,
    kernel: Kernel = Kernel.GAUSSIAN,
    sigma: float = 0.0,
    smoother: Smoother = Smoother.LOCAL_LINEAR,
) -> DerivativeStat:
    return derivative_stats(data, x, h, kernel, sigma, smoother, [j])[1][0]
