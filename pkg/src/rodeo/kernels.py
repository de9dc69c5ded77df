"""Product kernels and their bandwidth log-derivatives.

Kernels are unnormalized: the ``1/h`` factors cancel in every local linear
quantity, so ``W`` carries only the product of ``K((X_ij - x_j) / h_j)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Kernel", "WeightDiagonals", "kernel_weight", "weight_and_logderiv", "SQRT5"]

SQRT5 = math.sqrt(5.0)


class Kernel(str, enum.Enum):
    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"


def kernel_weight(kernel: Kernel, u):
    """``exp(-u^2/2)`` or ``(5 - u^2) 1(|u| <= sqrt 5)``; scalar or array."""
    u = np.asarray(u, dtype=np.float64)
    if Kernel(kernel) is Kernel.GAUSSIAN:
        out = np.exp(-0.5 * u * u)
    else:
        out = np.where(np.abs(u) <= SQRT5, 5.0 - u * u, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class WeightDiagonals:
    """Diagonals of ``W`` and of ``L_j``, plus the joint products ``W L_j``.

    ``l`` and ``wl`` are n x d; column j belongs to variable j. Use ``wl``
    for any computation: for the Epanechnikov kernel ``l`` blows up at the
    support edge where ``w`` vanishes, while ``wl`` stays finite.
    """

    w: np.ndarray
    l: np.ndarray
    wl: np.ndarray
    h: np.ndarray


def check_bandwidth(h, d: int) -> np.ndarray:
    h = np.array(h, dtype=np.float64).reshape(-1)
    if h.shape[0] == 1 and d > 1:
        h = np.full(d, h[0])
    if h.shape[0] != d:
        raise ValueError(f"bandwidth has length {h.shape[0]}, expected {d}")
    if not np.all(np.isfinite(h)) or np.any(h <= 0):
        raise ValueError("bandwidths must be positive and finite")
    return h


def _exclusive_products(K: np.ndarray) -> np.ndarray:
    """Column j holds the row product of K over every column except j."""
    n, d = K.shape
    ones = np.ones((n, 1))
    prefix = np.cumprod(np.hstack([ones, K[:, :-1]]), axis=1)
    suffix = np.cumprod(np.hstack([ones, K[:, :0:-1]]), axis=1)[:, ::-1]
    return prefix * suffix


def weight_and_logderiv(X, x, h, kernel: Kernel = Kernel.GAUSSIAN) -> WeightDiagonals:
    X = np.asarray(X, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    h = check_bandwidth(h, X.shape[1])
    diff = X - x
    sq = diff * diff
    u2 = sq / (h * h)
    if Kernel(kernel) is Kernel.GAUSSIAN:
        w = np.exp(-0.5 * u2.sum(axis=1))
        l = sq / h**3
        wl = w[:, None] * l
    else:
        inside = u2 <= 5.0
        K = np.where(inside, 5.0 - u2, 0.0)
        w = np.prod(K, axis=1)
        # dK/dh_j = 2 u_j^2 / h_j on the support; multiply by the other factors
        dK = np.where(inside, 2.0 * u2 / h, 0.0)
        wl = dK * _exclusive_products(K)
        with np.errstate(divide="ignore", invalid="ignore"):
            l = np.where(u2 < 5.0, dK / (5.0 - u2), np.where(inside, np.inf, 0.0))
    return WeightDiagonals(w=w, l=l, wl=wl, h=h)
