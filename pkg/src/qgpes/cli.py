"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
``QGP_THREADS`` caps the BLAS thread pool when set.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .bayesopt import read_trace_csv, write_trace_csv
from .core import (HARTREE_CM, KERNEL_KINDS, DataError, DimensionMismatch, EnergyWindow,
                   NumericalFailure, QGPError, RunConfig, format_float, read_dataset,
                   write_dataset)
from .experiments import (predict_mean, rmse, run_experiment, synth_dataset,
                          write_predictions_csv, write_report_json)
from .gp import gp_predict, load_model, save_model
from .qkernel import QuantumKernelParams, kernel_exact, sample_outcomes

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> np.ndarray:
    try:
        v = np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None
    if not np.all(np.isfinite(v)):
        raise UsageError(f"non-finite value in {text!r}")
    return v


def _echo(command: str, config: dict) -> None:
    print(json.dumps({"command": command, **config}, sort_keys=True))


def cmd_synth(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    _echo("synth", {"out": args.out, "n": args.n, "seed": args.seed})
    data = synth_dataset(args.n, args.seed)
    try:
        write_dataset(data, args.out)
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc}") from exc
    print(f"wrote {len(data)} points to {args.out}")
    return EXIT_OK


def _run_config(args) -> RunConfig:
    try:
        return RunConfig(
            seed=args.seed, train_n=args.train_n,
            window=EnergyWindow(args.energy_min, args.energy_max),
            kernel_kind=args.kernel, bo_init=args.bo_init, bo_iters=args.bo_iters,
            kappa=args.kappa, objective_offset_a=args.a, noise_var=args.sigma2,
            theta_bounds=(args.theta_min, args.theta_max), abs_pair_diff=args.abs_pair_diff,
            target_scale=args.target_scale,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_optimize(args) -> int:
    cfg = _run_config(args)
    config = {"data": args.data, **cfg.to_dict()}
    _echo("optimize", config)
    data = read_dataset(args.data)
    report = run_experiment(data, cfg)
    meta = {"config": config, "rmse": report.rmse, "lml": report.lml,
            "n_train": report.n_train, "n_test": report.n_test}
    try:
        save_model(report.model, args.model_out, extra=meta)
        write_trace_csv(report.trace, args.trace_out, config)
        if args.report_out:
            write_report_json(report, args.report_out)
        if args.predictions_out:
            write_predictions_csv(report.test, report.predictions, args.predictions_out, config)
    except OSError as exc:
        raise DataError(f"cannot write output: {exc}") from exc
    print(f"best_theta {' '.join(format_float(t) for t in report.best_theta)}")
    print(f"lml {format_float(report.lml)}")
    print(f"rmse {format_float(report.rmse)}")
    print(f"n_train {report.n_train} n_test {report.n_test} "
          f"wall_time {report.wall_time:.2f}s", file=sys.stderr)
    return EXIT_OK


def _load(path):
    try:
        return load_model(path)
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"cannot load model {path}: {exc}") from exc


def cmd_evaluate(args) -> int:
    _echo("evaluate", {"model": args.model, "data": args.data,
                       "include_train": args.include_train})
    model = _load(args.model)
    data = read_dataset(args.data)
    if data.dimension != model.X_train.shape[1]:
        raise DataError(f"data is {data.dimension}-D, model is {model.X_train.shape[1]}-D")
    keep = np.ones(len(data), dtype=bool)
    if not args.include_train:
        train_rows = {tuple(r) for r in model.X_train.tolist()}
        keep = np.array([tuple(r) not in train_rows for r in data.X.tolist()])
    if not keep.any():
        raise DataError("no points left to evaluate")
    test = data.subset(np.flatnonzero(keep))
    pred = predict_mean(model, test.X)
    if args.predictions_out:
        write_predictions_csv(test, pred, args.predictions_out,
                              {"model": args.model, "data": args.data})
    print(f"n {len(test)}")
    print(f"rmse {format_float(rmse(pred, test.y))}")
    return EXIT_OK


def cmd_predict(args) -> int:
    x = _floats(args.x)
    _echo("predict", {"model": args.model, "x": x.tolist()})
    model = _load(args.model)
    try:
        mean, var = gp_predict(model, x)
    except DimensionMismatch as exc:
        raise UsageError(str(exc)) from None
    print(f"mean {format_float(mean)}")
    print(f"std {format_float(math.sqrt(var))}")
    return EXIT_OK


def cmd_kernel(args) -> int:
    x, xp, theta = _floats(args.x), _floats(args.xp), _floats(args.theta)
    entangled = args.kind == "entangled"
    m = x.size
    if xp.size != m:
        raise UsageError("x and xp differ in length")
    if theta.size != m + entangled:
        raise UsageError(f"{args.kind} kernel on {m} qubits needs {m + entangled} theta values")
    try:
        params = QuantumKernelParams.from_vector(theta, entangled, args.abs_pair_diff)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _echo("kernel", {"x": x.tolist(), "xp": xp.tolist(), "theta": theta.tolist(),
                     "kind": args.kind, "shots": args.shots, "seed": args.seed,
                     "abs_pair_diff": args.abs_pair_diff})
    print(f"exact {format_float(kernel_exact(x, xp, params))}")
    if args.shots:
        outcomes = sample_outcomes(x, xp, params, args.shots, np.random.default_rng(args.seed))
        print(f"shots {args.shots} estimate "
              f"{format_float(np.count_nonzero(outcomes == 0) / args.shots)}")
        if args.bitstrings:
            for o in outcomes:
                print(format(int(o), f"0{m}b")[::-1])
    return EXIT_OK


def cmd_trace(args) -> int:
    try:
        meta, cols = read_trace_csv(args.trace)
    except (OSError, ValueError, IndexError) as exc:
        raise DataError(f"cannot read trace {args.trace}: {exc}") from exc
    thetas = sorted((k for k in cols if k.startswith("theta_")), key=lambda k: int(k[6:]))
    obj = cols["objective"]
    best = int(np.argmax(obj))
    names = meta.get("names", thetas)
    print(f"evaluations {obj.size} (init {meta.get('init_count', '?')})")
    print(f"best_iter {int(cols['iter'][best])}")
    print(f"best_objective {format_float(obj[best])}")
    print(f"best_lml {format_float(cols['lml'][best])}")
    for name, col in zip(names, thetas):
        print(f"{name} {format_float(cols[col][best])}")
    if args.curve:
        for it, b in zip(cols["iter"], cols["best_so_far"]):
            print(f"{int(it)} {format_float(b)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qgpes", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="write a synthetic 6-D data set")
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    o = sub.add_parser("optimize", help="tune kernel parameters and fit a GP")
    o.add_argument("--data", required=True)
    o.add_argument("--kernel", choices=KERNEL_KINDS, default="entangled")
    o.add_argument("--train-n", type=int, required=True)
    o.add_argument("--energy-min", type=float, default=-math.inf)
    o.add_argument("--energy-max", type=float, default=math.inf)
    o.add_argument("--bo-iters", type=int, default=30)
    o.add_argument("--bo-init", type=int, default=20)
    o.add_argument("--kappa", type=float, default=1.0)
    o.add_argument("--a", type=float, default=1.0, help="objective offset in log(L + a)")
    o.add_argument("--sigma2", type=float, default=0.0, help="GP noise variance")
    o.add_argument("--theta-min", type=float, default=0.05)
    o.add_argument("--theta-max", type=float, default=20.0)
    o.add_argument("--target-scale", type=float, default=HARTREE_CM,
                   help="divisor applied to centered energies before fitting (cm^-1)")
    o.add_argument("--abs-pair-diff", action="store_true",
                   help="encode pairs with |x_i - x_j| instead of x_i - x_j")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--model-out", required=True)
    o.add_argument("--trace-out", required=True)
    o.add_argument("--report-out")
    o.add_argument("--predictions-out")
    o.set_defaults(func=cmd_optimize)

    e = sub.add_parser("evaluate", help="RMSE of a saved model on a data set")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--include-train", action="store_true",
                   help="also score rows that are training inputs of the model")
    e.add_argument("--predictions-out")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("predict", help="posterior mean and std at one point")
    r.add_argument("--model", required=True)
    r.add_argument("--x", required=True, help="comma-separated coordinates")
    r.set_defaults(func=cmd_predict)

    k = sub.add_parser("kernel", help="evaluate one quantum kernel value")
    k.add_argument("--x", required=True)
    k.add_argument("--xp", required=True)
    k.add_argument("--theta", required=True, help="theta_1..theta_m[,theta_12]")
    k.add_argument("--kind", choices=("entangled", "unentangled"), default="entangled")
    k.add_argument("--abs-pair-diff", action="store_true")
    k.add_argument("--shots", type=int, default=0)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--bitstrings", action="store_true",
                   help="print each measured bitstring, qubit 1 first")
    k.set_defaults(func=cmd_kernel)

    t = sub.add_parser("trace", help="summarize a BO trace CSV")
    t.add_argument("--trace", required=True)
    t.add_argument("--curve", action="store_true", help="print the best-so-far curve")
    t.set_defaults(func=cmd_trace)
    return p


def _run(args) -> int:
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qgpes: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"qgpes: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, QGPError) as exc:
        print(f"qgpes: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "kernel" and args.shots < 0:
        print("qgpes: usage error: --shots must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    threads = os.environ.get("QGP_THREADS")
    if threads:
        try:
            limit = int(threads)
        except ValueError:
            print(f"qgpes: usage error: QGP_THREADS={threads!r} is not an integer",
                  file=sys.stderr)
            return EXIT_USAGE
        with threadpool_limits(limits=limit):
            return _run(args)
    return _run(args)


if __name__ == "__main__":
    sys.exit(main())
