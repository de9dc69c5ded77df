"""Rodeo: greedy local bandwidth and variable selection for kernel smoothers."""

from .algorithm import (
    Action,
    RodeoConfig,
    RodeoResult,
    SigmaPolicy,
    StepRecord,
    initial_bandwidth,
    rodeo_hard,
    rodeo_soft,
    soft_threshold,
    threshold,
)
from .dataset import (
    DataError,
    Dataset,
    RngSeed,
    SyntheticSpec,
    Variant,
    gen_synthetic,
    load_csv,
    true_function,
    write_csv,
)
from .harness import (
    Algorithm,
    ExperimentConfig,
    ExperimentReport,
    loocv_bandwidth,
    report_summary,
    run_experiment,
)
from .kernels import Kernel, kernel_weight, weight_and_logderiv
from .loclin import (
    DerivativeStat,
    InsufficientSupportError,
    LocalFit,
    NumericalError,
    SingularSystemError,
    Smoother,
    derivative_stat,
    derivative_stats,
    fit_local_linear,
)
from .sigma import SigmaEstimate, nearest_pairs, sigma_median, sigma_rice
from .variants import (
    GlobalStats,
    GreedyTrace,
    LinearPrefit,
    global_rodeo,
    global_statistic,
    greedy_rodeo,
    linear_prefit,
    sample_eval_points,
)

__all__ = [
    "Action",
    "RodeoConfig",
    "RodeoResult",
    "SigmaPolicy",
    "StepRecord",
    "initial_bandwidth",
    "rodeo_hard",
    "rodeo_soft",
    "soft_threshold",
    "threshold",
    "DataError",
    "Dataset",
    "RngSeed",
    "SyntheticSpec",
    "Variant",
    "gen_synthetic",
    "load_csv",
    "true_function",
    "write_csv",
    "Algorithm",
    "ExperimentConfig",
    "ExperimentReport",
    "loocv_bandwidth",
    "report_summary",
    "run_experiment",
    "Kernel",
    "kernel_weight",
    "weight_and_logderiv",
    "DerivativeStat",
    "InsufficientSupportError",
    "LocalFit",
    "NumericalError",
    "SingularSystemError",
    "Smoother",
    "derivative_stat",
    "derivative_stats",
    "fit_local_linear",
    "SigmaEstimate",
    "nearest_pairs",
    "sigma_median",
    "sigma_rice",
    "GlobalStats",
    "GreedyTrace",
    "LinearPrefit",
    "global_rodeo",
    "global_statistic",
    "greedy_rodeo",
    "linear_prefit",
    "sample_eval_points",
]

__version__ = "0.1.0"
