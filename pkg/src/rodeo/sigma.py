"""Noise-level estimates from the responses of the closest covariate pairs."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist
from scipy.special import ndtri

from .dataset import Dataset

__all__ = [
    "SigmaMethod",
    "SigmaEstimate",
    "nearest_pairs",
    "sigma_rice",
    "sigma_median",
    "lower_median",
    "MEDIAN_CONSTANT",
    "HALF_SQRT_PI",
    "DEFAULT_J",
]

DEFAULT_J = 20
# |Y_i - Y_l| ~ sqrt(2) sigma |N(0,1)| and median |N(0,1)| = Phi^{-1}(3/4)
MEDIAN_CONSTANT = 1.0 / (math.sqrt(2.0) * float(ndtri(0.75)))
# sqrt(pi)/2 rescales the *mean* absolute difference; kept as an option
HALF_SQRT_PI = math.sqrt(math.pi) / 2.0


class SigmaMethod(str, enum.Enum):
    RICE = "rice"
    MEDIAN = "median"


@dataclass(frozen=True)
class SigmaEstimate:
    sigma: float
    sigma2: float
    J: int
    D: float
    method: SigmaMethod


def lower_median(values) -> float:
    """Median as the lower-middle order statistic (no averaging)."""
    return float(np.quantile(np.asarray(values, dtype=np.float64), 0.5, method="lower"))


def nearest_pairs(data: Dataset, J: int) -> list[tuple[int, int, float]]:
    """The ``J`` closest pairs ``(i, l)``, ``i < l``, by Euclidean distance.

    Sorted by ``(distance, i, l)``; indices are 0-based.
    """
    n = data.n
    total = n * (n - 1) // 2
    if not 1 <= J <= total:
        raise ValueError(f"J must lie in [1, {total}], got {J}")
    dist = pdist(data.X)
    # pdist's condensed order is lexicographic in (i, l), so a stable sort breaks ties
    order = np.argsort(dist, kind="stable")[:J]
    ii, ll = np.triu_indices(n, k=1)
    return [(int(ii[k]), int(ll[k]), float(dist[k])) for k in order]


def _pair_differences(data: Dataset, J: int):
    pairs = nearest_pairs(data, J)
    i = np.array([p[0] for p in pairs])
    l = np.array([p[1] for p in pairs])
    D = max(p[2] for p in pairs)
    return data.Y[i] - data.Y[l], D


def sigma_rice(data: Dataset, J: int = DEFAULT_J) -> SigmaEstimate:
    diffs, D = _pair_differences(data, J)
    sigma2 = float(np.sum(diffs * diffs) / (2.0 * J))
    return SigmaEstimate(math.sqrt(sigma2), sigma2, J, D, SigmaMethod.RICE)


def sigma_median(
    data: Dataset, J: int = DEFAULT_J, constant: float = MEDIAN_CONSTANT
) -> SigmaEstimate:
    """``constant * median |Y_i - Y_l|`` over the ``J`` nearest pairs.

    The default constant makes the estimate consistent for the median of a
    ``|N(0, 2 sigma^2)|`` variable. Pass ``constant=HALF_SQRT_PI`` for the
    mean-based scaling.
    """
    diffs, D = _pair_differences(data, J)
    sigma = constant * lower_median(np.abs(diffs))
    return SigmaEstimate(sigma, sigma * sigma, J, D, SigmaMethod.MEDIAN)
