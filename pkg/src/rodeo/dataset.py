"""Datasets, CSV I/O, synthetic generators and the replicate RNG contract.

Random streams come from the Philox4x64 counter-based generator. The 128-bit
key is ``(master_seed, stream_index)`` and the top word of the counter selects
a *purpose* (data, test point, evaluation points), so every replicate owns a
family of independent, non-overlapping streams. Raw 64-bit words are turned
into doubles explicitly (top 53 bits) and normals use the inverse normal CDF,
which keeps the generated bytes independent of numpy's sampling routines.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

__all__ = [
    "Dataset",
    "DataError",
    "Variant",
    "SyntheticSpec",
    "RngSeed",
    "Purpose",
    "load_csv",
    "write_csv",
    "format_float",
    "true_function",
    "mean_function",
    "gen_synthetic",
    "draw_covariates",
    "uniform_stream",
    "normal_stream",
]

_TWO_POW_53 = 2.0**-53
_UINT64_MAX = 2**64 - 1


class DataError(ValueError):
    """Invalid input data (bad file, bad shape, non-finite values)."""


def format_float(value: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return "%.17g" % value


@dataclass(frozen=True)
class Dataset:
    """Covariates ``X`` (n x d), responses ``Y`` (n,) and column labels."""

    X: np.ndarray
    Y: np.ndarray
    column_names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=np.float64)
        Y = np.array(self.Y, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or Y.ndim != 1:
            raise DataError("X must be n x d and Y a vector")
        if X.shape[0] != Y.shape[0]:
            raise DataError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]} entries")
        if X.shape[0] < 2:
            raise DataError("a dataset needs at least 2 rows")
        if X.shape[1] < 1:
            raise DataError("a dataset needs at least 1 covariate")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise DataError("dataset contains NaN or Inf")
        names = tuple(self.column_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError("column_names length must equal the number of covariates")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def with_response(self, Y: np.ndarray) -> "Dataset":
        return Dataset(self.X, Y, self.column_names)

    def subset(self, rows) -> "Dataset":
        return Dataset(self.X[rows], self.Y[rows], self.column_names)


def load_csv(path, target: str = "y") -> Dataset:
    """Read a headered CSV file; ``target`` names the response column.

    All other columns become covariates, in header order.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [name.strip() for name in rows[0]]
    if target not in header:
        raise DataError(f"{path}: target column {target!r} not in header {header}")
    t = header.index(target)
    body = [r for r in rows[1:] if r]
    if len(body) < 2:
        raise DataError(f"{path}: need at least 2 data rows, found {len(body)}")
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + 1} has {len(row)} cells, expected {len(header)}")
        for c, cell in enumerate(row):
            try:
                values[i, c] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: cannot parse {cell!r} at row {i + 1}, column {header[c]!r}"
                ) from None
    keep = [c for c in range(len(header)) if c != t]
    if not keep:
        raise DataError(f"{path}: no covariate columns besides {target!r}")
    return Dataset(values[:, keep], values[:, t], tuple(header[c] for c in keep))


def write_csv(data: Dataset, path, target: str = "y") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*data.column_names, target])
        for xi, yi in zip(data.X, data.Y):
            writer.writerow([format_float(v) for v in xi] + [format_float(yi)])


# --------------------------------------------------------------------------
# random streams


class RngSeed(NamedTuple):
    master_seed: int
    stream_index: int = 0


class Purpose(enum.IntEnum):
    DATA = 0
    NOISE = 1
    TEST_POINT = 2
    EVAL_POINTS = 3


def _bitgen(seed: RngSeed, purpose: Purpose) -> Philox:
    master, stream = int(seed.master_seed), int(seed.stream_index)
    if not (0 <= master <= _UINT64_MAX and 0 <= stream <= _UINT64_MAX):
        raise ValueError("seed components must be unsigned 64-bit integers")
    key = np.array([master, stream], dtype=np.uint64)
    counter = np.array([0, 0, 0, int(purpose)], dtype=np.uint64)
    return Philox(key=key, counter=counter)


def uniform_stream(seed: RngSeed, purpose: Purpose, size: int) -> np.ndarray:
    """``size`` doubles in [0, 1) from the top 53 bits of each raw word."""
    raw = _bitgen(seed, purpose).random_raw(size)
    return (raw >> np.uint64(11)).astype(np.float64) * _TWO_POW_53


def normal_stream(seed: RngSeed, purpose: Purpose, size: int) -> np.ndarray:
    raw = _bitgen(seed, purpose).random_raw(size)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_POW_53
    return ndtri(u)


# --------------------------------------------------------------------------
# synthetic examples


class Variant(str, enum.Enum):
    TWO_RELEVANT = "two-relevant"
    CUBIC_SINE = "cubic-sine"
    ONE_DIM_SINE = "one-dim-sine"
    TURLACH = "turlach"
    LINEAR = "linear"
    PURE_NOISE = "pure-noise"


@dataclass(frozen=True)
class SyntheticSpec:
    """A regression function, its dimension and the noise level.

    ``coefficients`` is only used by the linear variant (default all ones).
    """

    variant: Variant
    d: int
    sigma: float = 0.0
    coefficients: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        variant = Variant(self.variant)
        object.__setattr__(self, "variant", variant)
        if self.d < 1:
            raise ValueError("d must be at least 1")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be finite and nonnegative")
        if variant in (Variant.TWO_RELEVANT, Variant.CUBIC_SINE) and self.d < 2:
            raise ValueError(f"{variant.value} requires d >= 2")
        if variant is Variant.ONE_DIM_SINE and self.d != 1:
            raise ValueError("one-dim-sine requires d = 1")
        if variant is Variant.TURLACH and self.d < 5:
            raise ValueError("turlach requires d >= 5")
        if variant is Variant.LINEAR:
            coef = self.coefficients if self.coefficients is not None else (1.0,) * self.d
            coef = tuple(float(c) for c in coef)
            if len(coef) != self.d:
                raise ValueError("linear coefficients must have length d")
            object.__setattr__(self, "coefficients", coef)

    @property
    def covariate_shift(self) -> float:
        return 0.5 if self.variant is Variant.ONE_DIM_SINE else 0.0


def mean_function(spec: SyntheticSpec, X: np.ndarray) -> np.ndarray:
    """Noiseless regression function evaluated row-wise on ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.d:
        raise ValueError(f"expected points of dimension {spec.d}")
    v = spec.variant
    if v is Variant.TWO_RELEVANT:
        return 5.0 * X[:, 0] ** 2 * X[:, 1] ** 2
    if v is Variant.CUBIC_SINE:
        return 2.0 * (X[:, 0] + 1.0) ** 3 + 2.0 * np.sin(10.0 * X[:, 1])
    if v is Variant.ONE_DIM_SINE:
        return np.sin(15.0 / X[:, 0]) / X[:, 0]
    if v is Variant.TURLACH:
        return (X[:, 0] - 0.5) ** 2 + X[:, 1] + X[:, 2] + X[:, 3] + X[:, 4]
    if v is Variant.LINEAR:
        # explicit accumulation: a BLAS product may round differently per call shape
        out = np.zeros(X.shape[0])
        for j, c in enumerate(spec.coefficients):
            out = out + c * X[:, j]
        return out
    return np.zeros(X.shape[0])


def true_function(spec: SyntheticSpec, x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != spec.d:
        raise ValueError(f"point has dimension {x.size}, expected {spec.d}")
    return float(mean_function(spec, x[None, :])[0])


def draw_covariates(spec: SyntheticSpec, k: int, seed: RngSeed, purpose: Purpose) -> np.ndarray:
    """``k`` points from the variant's covariate law, row-major from one stream."""
    u = uniform_stream(seed, purpose, k * spec.d).reshape(k, spec.d)
    return u + spec.covariate_shift


def gen_synthetic(spec: SyntheticSpec, n: int, seed: RngSeed) -> Dataset:
    if n < 2:
        raise ValueError("n must be at least 2")
    X = draw_covariates(spec, n, seed, Purpose.DATA)
    Y = mean_function(spec, X) + spec.sigma * normal_stream(seed, Purpose.NOISE, n)
    return Dataset(X, Y)
