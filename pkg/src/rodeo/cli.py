"""Command line interface.

Exit status: 0 on success, 1 for usage or input errors, 2 when a numerical
computation fails. Results go to stdout as CSV; traces go to ``--out``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .algorithm import RodeoConfig, SigmaPolicy, rodeo_hard, rodeo_soft
from .dataset import (
    DataError,
    Purpose,
    RngSeed,
    SyntheticSpec,
    Variant,
    draw_covariates,
    gen_synthetic,
    load_csv,
)
from .harness import (
    TRACE_COLUMNS,
    Algorithm,
    ExperimentConfig,
    emit_rows,
    loocv_bandwidth,
    run_experiment,
    write_rows,
)
from .kernels import Kernel
from .loclin import NumericalError, Smoother, fit_local_linear
from .sigma import DEFAULT_J, sigma_median, sigma_rice
from .variants import global_rodeo, greedy_rodeo, linear_prefit, sample_eval_points


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_data_args(p: argparse.ArgumentParser, point: bool = True) -> None:
    g = p.add_argument_group("data")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", metavar="PATH", help="CSV file with a header row")
    src.add_argument("--synthetic", choices=[v.value for v in Variant])
    g.add_argument("--target", default="y", help="response column of --data (default: y)")
    g.add_argument("--n", type=int, default=500)
    g.add_argument("--d", type=int, default=10)
    g.add_argument("--sigma", type=float, default=0.5, help="noise level of synthetic data")
    g.add_argument("--coef", type=_floats, help="coefficients of the linear variant")
    g.add_argument("--seed", type=int, default=0, help="master seed (unsigned 64-bit)")
    g.add_argument("--stream", type=int, default=0, help="replicate stream index")
    if point:
        pt = g.add_mutually_exclusive_group()
        pt.add_argument("--x", type=_floats, help="target point, comma-separated")
        pt.add_argument("--x-random", action="store_true", help="draw a random target point")


def _add_rodeo_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("rodeo")
    g.add_argument("--beta", type=float, default=None, help="shrink factor (default 0.8, 0.9 for soft)")
    g.add_argument("--c0", type=float, default=1.0)
    g.add_argument("--kernel", choices=[k.value for k in Kernel], default="gaussian")
    g.add_argument("--smoother", choices=[s.value for s in Smoother], default="local-linear")
    g.add_argument("--sigma-policy", default=f"median:{DEFAULT_J}", help="known:V, rice:J or median:J")
    g.add_argument("--max-steps", type=int, default=100)
    g.add_argument("--h-floor", type=float, default=1e-3)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rodeo", description="Greedy bandwidth and variable selection.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="one local linear fit")
    _add_data_args(p)
    p.add_argument("--h", type=_floats, required=True, help="bandwidth, scalar or per coordinate")
    p.add_argument("--kernel", choices=[k.value for k in Kernel], default="gaussian")
    p.add_argument("--smoother", choices=[s.value for s in Smoother], default="local-linear")

    p = sub.add_parser("rodeo", help="local rodeo at one point")
    _add_data_args(p)
    _add_rodeo_args(p)
    p.add_argument("--variant", choices=["hard", "soft"], default="hard")
    p.add_argument("--out", help="directory for trace.csv")

    for name, helptext in (("global", "global rodeo"), ("greedy", "greedy rodeo")):
        p = sub.add_parser(name, help=helptext)
        _add_data_args(p, point=False)
        _add_rodeo_args(p)
        p.add_argument("--k", type=int, default=None, help="evaluation points (default min(n, 30))")
        p.add_argument("--prefit-penalty", type=float, default=None,
                       help="subtract an L1-penalized linear fit first (0 = least squares)")
        p.add_argument("--out", help="directory for the trace files")

    p = sub.add_parser("sigma", help="noise level estimate")
    _add_data_args(p, point=False)
    p.add_argument("--method", choices=["rice", "median"], default="median")
    p.add_argument("--J", type=int, default=DEFAULT_J)

    p = sub.add_parser("loocv", help="single-bandwidth leave-one-out CV")
    _add_data_args(p, point=False)
    p.add_argument("--grid", type=_floats, default=None)
    p.add_argument("--kernel", choices=[k.value for k in Kernel], default="gaussian")

    p = sub.add_parser("experiment", help="Monte Carlo study")
    _add_data_args(p)
    _add_rodeo_args(p)
    p.add_argument("--algorithm", choices=[a.value for a in Algorithm], default="hard")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--points", type=int, default=1, help="random test points per replicate")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--prefit-penalty", type=float, default=None)
    p.add_argument("--grid", type=_floats, default=None)
    p.add_argument("--out", required=True)
    return parser


def _spec(args) -> SyntheticSpec:
    return SyntheticSpec(Variant(args.synthetic), args.d, args.sigma,
                         tuple(args.coef) if args.coef else None)


def _load(args):
    """Dataset plus the synthetic spec (None for files)."""
    if args.data:
        return load_csv(args.data, args.target), None
    spec = _spec(args)
    return gen_synthetic(spec, args.n, RngSeed(args.seed, args.stream)), spec


def _point(args, data, spec) -> np.ndarray:
    seed = RngSeed(args.seed, args.stream)
    if args.x is not None:
        x = np.asarray(args.x)
        if x.shape != (data.d,):
            raise UsageError(f"--x has {x.size} values, expected {data.d}")
        return x
    if args.x_random:
        if spec is not None:
            return draw_covariates(spec, 1, seed, Purpose.TEST_POINT)[0]
        return sample_eval_points(data, 1, seed, Purpose.TEST_POINT)[0]
    raise UsageError("give --x or --x-random")


def _config(args, soft: bool = False) -> RodeoConfig:
    beta = args.beta if args.beta is not None else (0.9 if soft else 0.8)
    return RodeoConfig(
        beta=beta,
        c0=args.c0,
        kernel=Kernel(args.kernel),
        sigma_policy=SigmaPolicy.parse(args.sigma_policy),
        max_steps=args.max_steps,
        h_floor=args.h_floor,
        seed=RngSeed(args.seed, args.stream),
        smoother=Smoother(args.smoother),
    )


def _emit(columns, rows) -> None:
    emit_rows(sys.stdout, columns, rows)


def _h_columns(h) -> dict:
    return {f"h_{j + 1}": float(v) for j, v in enumerate(h)}


def cmd_fit(args) -> None:
    data, spec = _load(args)
    x = _point(args, data, spec)
    fit = fit_local_linear(data, x, args.h, Kernel(args.kernel), Smoother(args.smoother))
    row = {"estimate": fit.estimate, "condition_flag": int(fit.condition_flag)}
    row.update({f"b_{j}": float(c) for j, c in enumerate(fit.coefficients)})
    _emit(list(row), [row])


def cmd_rodeo(args) -> None:
    data, spec = _load(args)
    x = _point(args, data, spec)
    soft = args.variant == "soft"
    res = (rodeo_soft if soft else rodeo_hard)(data, x, _config(args, soft))
    row = {"estimate": res.estimate, "stopping_time": res.stopping_time,
           "sigma": res.sigma_used, "h0": res.h0, **_h_columns(res.h_star)}
    _emit(list(row), [row])
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        cols = TRACE_COLUMNS + (["correction"] if soft else [])
        rows = [
            {"run": 0, "point": 0, "step": r.step, "variable": r.variable + 1,
             "h_before": r.h_before, "z": r.z, "lambda": r.lambda_, "scale": r.scale,
             "action": r.action, "correction": r.correction}
            for r in res.trace
        ]
        write_rows(out / "trace.csv", cols, rows)


def _multi_point_setup(args):
    data, _ = _load(args)
    cfg = _config(args)
    if args.prefit_penalty is not None:
        data = linear_prefit(data, args.prefit_penalty).residual_data
    k = args.k if args.k is not None else min(data.n, 30)
    evals = sample_eval_points(data, k, RngSeed(args.seed, args.stream))
    return data, cfg, evals


def cmd_global(args) -> None:
    data, cfg, evals = _multi_point_setup(args)
    res = global_rodeo(data, evals, cfg)
    row = {"stopping_time": res.stopping_time, "sigma": res.sigma_used, "h0": res.h0,
           **_h_columns(res.h_star)}
    _emit(list(row), [row])
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rows = [
            {"run": 0, "point": "", "step": r.step, "variable": r.variable + 1,
             "h_before": r.h_before, "z": r.z, "lambda": r.lambda_, "scale": r.scale,
             "action": r.action}
            for r in res.trace
        ]
        write_rows(out / "trace.csv", TRACE_COLUMNS, rows)


def cmd_greedy(args) -> None:
    data, cfg, evals = _multi_point_setup(args)
    res = greedy_rodeo(data, evals, cfg)
    rows = [{"variable": j + 1, "rank": r} for j, r in enumerate(res.selection_order)]
    _emit(["variable", "rank"], rows)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        events = [
            {"step": e.step, "variable": e.variable + 1, "score": e.score,
             "h_after": e.h_after, "action": e.action}
            for e in res.events
        ]
        write_rows(out / "greedy_trace.csv", ["step", "variable", "score", "h_after", "action"], events)
        write_rows(out / "ordering.csv", ["variable", "rank"], rows)


def cmd_sigma(args) -> None:
    data, _ = _load(args)
    est = (sigma_rice if args.method == "rice" else sigma_median)(data, args.J)
    row = {"method": est.method, "J": est.J, "sigma": est.sigma, "sigma2": est.sigma2, "D": est.D}
    _emit(list(row), [row])


def cmd_loocv(args) -> None:
    data, _ = _load(args)
    res = loocv_bandwidth(data, None, args.grid, Kernel(args.kernel))
    rows = [
        {"h": float(h), "risk": float(r) if np.isfinite(r) else None,
         "best": int(h == res.best_h), "note": note}
        for h, r, note in zip(res.grid, res.risks, res.reasons)
    ]
    _emit(["h", "risk", "best", "note"], rows)


def cmd_experiment(args) -> None:
    algo = Algorithm(args.algorithm)
    spec = _spec(args) if args.synthetic else None
    points = None
    if args.x is not None:
        points = (tuple(args.x),)
    config = ExperimentConfig(
        algorithm=algo,
        spec=spec,
        n=args.n,
        data_path=args.data,
        target=args.target,
        replicates=args.replicates,
        test_points=points,
        random_points=args.points,
        rodeo=_config(args, soft=algo is Algorithm.SOFT),
        k=args.k,
        prefit_penalty=args.prefit_penalty,
        grid=tuple(args.grid) if args.grid else None,
        output_dir=args.out,
    )
    report = run_experiment(config)
    _emit(["file"], [{"file": f} for f in report.files])


COMMANDS = {
    "fit": cmd_fit,
    "rodeo": cmd_rodeo,
    "global": cmd_global,
    "greedy": cmd_greedy,
    "sigma": cmd_sigma,
    "loocv": cmd_loocv,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"rodeo: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (UsageError, DataError, ValueError, IndexError) as exc:
        print(f"rodeo: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
