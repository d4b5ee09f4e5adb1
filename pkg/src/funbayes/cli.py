"""Command-line front end: scenario simulation, training, classification,
and benchmark execution.

Curve files are CSV with the grid coordinates in the header row (plus a
final ``label`` column when labels are present) and one curve per data
row.  Floats are written with their shortest round-trip representation so
files reload exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .benchmark import ExperimentPlan, repeated_cv_evaluate, run
from .classifiers import (
    COPULA_METHODS,
    ClassifierSpec,
    CVRange,
    Method,
    predict,
    select_J_cv,
    train,
)
from .errors import (
    DataError,
    DimensionError,
    DomainError,
    FunBayesError,
    NumericalError,
    ParameterError,
)
from .fdata import FunctionalDataset, Grid, presmooth, smooth_curves
from .model_io import load_model, save_model
from .simgen import ScenarioConfig, generate
from .classifiers import TrainedBayesModel, log_posteriors
from .streams import stream

__all__ = ["main", "read_curves", "write_curves"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

DEFAULT_J_MAX = 30
DEFAULT_PRESMOOTH_FACTOR = 5.0  # bandwidth = factor * grid spacing


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt_float(x: float) -> str:
    return repr(float(x))


def write_curves(path, grid: Grid, curves: np.ndarray, labels=None) -> None:
    """Write curves in the CSV curve format (grid in the header row)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = [_fmt_float(t) for t in grid.points]
        if labels is not None:
            header.append("label")
        writer.writerow(header)
        for i, row in enumerate(np.atleast_2d(curves)):
            out = [_fmt_float(v) for v in row]
            if labels is not None:
                out.append(str(int(labels[i])))
            writer.writerow(out)


def read_curves(path):
    """Read the CSV curve format; returns (grid, curves, labels-or-None)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty curve file") from None
        has_labels = bool(header) and header[-1].strip().lower() == "label"
        grid_tokens = header[:-1] if has_labels else header
        try:
            points = np.array([float(t) for t in grid_tokens])
        except ValueError as exc:
            raise DataError(f"{path}: header must hold the numeric grid coordinates: {exc}") from None
        grid = Grid(points)
        curves, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            expected = grid.n_points + (1 if has_labels else 0)
            if len(row) != expected:
                raise DataError(f"{path}:{lineno}: expected {expected} fields, got {len(row)}")
            try:
                curves.append([float(v) for v in row[: grid.n_points]])
                if has_labels:
                    labels.append(int(row[-1]))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    curve_arr = np.array(curves, dtype=float).reshape(len(curves), grid.n_points)
    label_arr = np.array(labels, dtype=np.int64) if has_labels else None
    if label_arr is not None and label_arr.size and label_arr.min() < 0:
        raise DataError(f"{path}: labels must be nonnegative integers")
    return grid, curve_arr, label_arr


def _load_table(path: Path) -> dict:
    text = Path(path).read_bytes()
    if str(path).endswith(".json"):
        return json.loads(text)
    try:
        import tomllib  # py >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        return tomllib.loads(text.decode("utf-8"))
    except Exception as exc:
        raise DataError(f"{path}: cannot parse config: {exc}") from None


def _scenario_from_arg(arg: str, args) -> ScenarioConfig:
    overrides = {
        "n_train": args.n_train,
        "n_test": args.n_test,
        "grid_points": args.grid_points,
        "j_gen": args.j_gen,
        "noise_sd": args.noise_sd,
        "seed": args.seed,
    }
    if arg.endswith((".toml", ".json")):
        table = _load_table(Path(arg))
        label = table.pop("label", None)
        merged = {**table, **{k: v for k, v in overrides.items() if v is not None}}
        if label is not None:
            return ScenarioConfig.from_label(label, **merged)
        return ScenarioConfig(**merged)
    return ScenarioConfig.from_label(arg, **{k: v for k, v in overrides.items() if v is not None})


def _cmd_simulate(args) -> int:
    config = _scenario_from_arg(args.scenario, args)
    train_ds, test_ds = generate(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_curves(out / "train.csv", train_ds.grid, train_ds.curves, train_ds.labels)
    write_curves(out / "test.csv", test_ds.grid, test_ds.curves, test_ds.labels)
    manifest = {
        "label": config.label,
        "eigenfunction_factor": config.eigenfunction_factor,
        "mean_factor": config.mean_factor,
        "eigenvalue_factor": config.eigenvalue_factor,
        "score_factor": config.score_factor,
        "n_classes": config.n_classes,
        "n_train": config.n_train,
        "n_test": config.n_test,
        "grid_points": config.grid_points,
        "j_gen": config.j_gen,
        "noise_sd": config.noise_sd,
        "seed": config.seed,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out / 'train.csv'}, {out / 'test.csv'}, {out / 'manifest.json'}")
    return EXIT_OK


def _parse_j_range(text: str) -> CVRange:
    try:
        lo, hi = text.split(":")
        return CVRange(int(lo), int(hi))
    except (ValueError, ParameterError) as exc:
        raise _UsageError(f"bad --J-range {text!r}: {exc}") from None


def _dataset_from_file(path, presmooth_bw=None) -> FunctionalDataset:
    grid, curves, labels = read_curves(path)
    if labels is None:
        raise DataError(f"{path}: training data needs a label column")
    ds = FunctionalDataset.from_arrays(grid, curves, labels)
    if presmooth_bw is not None:
        bw = presmooth_bw if presmooth_bw > 0 else DEFAULT_PRESMOOTH_FACTOR * ds.grid.spacing
        ds = presmooth(ds, bw)
    return ds


def _cmd_train(args) -> int:
    method = Method(args.method)
    dataset = _dataset_from_file(args.data, args.presmooth)
    if method is Method.CEN and dataset.n_groups > 2:
        raise _UsageError("the centroid classifier does not support more than 2 classes")
    if args.J is not None:
        spec = ClassifierSpec(method, args.J, rank_method=args.rank_corr, folds=args.folds)
        model = train(spec, dataset)
        print(f"trained {method.value} at J={args.J}")
    else:
        if args.J_range is not None:
            jrange = _parse_j_range(args.J_range)
        else:
            hi = min(DEFAULT_J_MAX, 10 if dataset.n_groups > 2 else DEFAULT_J_MAX)
            jrange = CVRange(1, hi)
        if method in COPULA_METHODS and jrange.lo < 2:
            jrange = CVRange(2, max(2, jrange.hi))
        spec = ClassifierSpec(method, jrange, rank_method=args.rank_corr, folds=args.folds)
        result = select_J_cv(spec, dataset, rng=stream(args.seed, 0))
        print(f"selected J* = {result.j_star}")
        print("J,cv_error")
        for j, err in zip(result.candidates, result.errors):
            print(f"{j},{'' if np.isnan(err) else _fmt_float(err)}")
        model = train(replace(spec, J=result.j_star), dataset)
    save_model(model, args.model)
    print(f"model written to {args.model}")
    return EXIT_OK


def _cmd_classify(args) -> int:
    model = load_model(args.model)
    grid, curves, _ = read_curves(args.data)
    model_grid = model.grid if hasattr(model, "grid") else model.basis.grid
    if not model_grid.matches(grid):
        raise DataError("grid mismatch between model and data")
    if args.presmooth is not None and curves.shape[0]:
        bw = args.presmooth if args.presmooth > 0 else DEFAULT_PRESMOOTH_FACTOR * grid.spacing
        curves, _ = smooth_curves(grid, curves, bw)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        want_scores = args.scores and isinstance(model, TrainedBayesModel)
        if want_scores:
            k = model.n_groups
            writer.writerow(["label"] + [f"log_posterior_{i}" for i in range(k)])
            if curves.shape[0]:
                lp = log_posteriors(model, curves)
                labels = np.argmax(lp, axis=1)
                for lab, row in zip(labels, lp):
                    writer.writerow([int(lab)] + [_fmt_float(v) for v in row])
        else:
            writer.writerow(["label"])
            if curves.shape[0]:
                for lab in predict(model, curves):
                    writer.writerow([int(lab)])
    print(f"predictions written to {args.out}")
    return EXIT_OK


_METHOD_ALIASES = {m.value: m for m in Method}


def _specs_from_names(names, rank_corr: str, folds: int, j_lo=None, j_hi=None) -> list[ClassifierSpec]:
    specs = []
    for name in names:
        key = str(name).strip().lower()
        if key not in _METHOD_ALIASES:
            raise _UsageError(
                f"unknown method {name!r}; valid: {', '.join(_METHOD_ALIASES)}"
            )
        method = _METHOD_ALIASES[key]
        lo = j_lo if j_lo is not None else (2 if method in COPULA_METHODS else 1)
        if method in COPULA_METHODS:
            lo = max(2, lo)
        hi = j_hi if j_hi is not None else DEFAULT_J_MAX
        specs.append(ClassifierSpec(method, CVRange(lo, hi), rank_method=rank_corr, folds=folds))
    return specs


def _plan_from_file(path: Path, args) -> ExperimentPlan:
    table = _load_table(path)
    try:
        scenario_entries = table["scenarios"]
        method_names = table["methods"]
    except KeyError as exc:
        raise DataError(f"{path}: missing required plan field {exc}") from None
    scenarios = []
    for entry in scenario_entries:
        if isinstance(entry, str):
            scenarios.append(ScenarioConfig.from_label(entry))
        else:
            entry = dict(entry)
            label = entry.pop("label")
            scenarios.append(ScenarioConfig.from_label(label, **entry))
    folds = int(table.get("folds", 10))
    rank_corr = str(table.get("rank_corr", "tau"))
    specs = _specs_from_names(
        method_names, rank_corr, folds, table.get("j_min"), table.get("j_max")
    )
    presmooth_bw = table.get("presmooth")
    if presmooth_bw is True:
        presmooth_bw = DEFAULT_PRESMOOTH_FACTOR * (1.0 / (scenarios[0].grid_points - 1))
    if presmooth_bw is False:
        presmooth_bw = None
    return ExperimentPlan(
        scenarios=tuple(scenarios),
        methods=tuple(specs),
        repetitions=args.reps if args.reps is not None else int(table.get("repetitions", 100)),
        seed=args.seed if args.seed is not None else int(table.get("seed", 0)),
        cv_select=bool(table.get("cv_select", True)),
        parallelism=args.workers if args.workers is not None else int(table.get("parallelism", 1)),
        presmooth_bandwidth=presmooth_bw,
        folds=folds,
    )


def _default_workers() -> int | None:
    value = os.environ.get("FUNBAYES_WORKERS")
    return int(value) if value else None


def _cmd_benchmark(args) -> int:
    if args.workers is None:
        args.workers = _default_workers()
    plan = _plan_from_file(Path(args.plan), args)
    report = run(plan)
    report.to_csv(args.out)
    if args.long_out:
        report.to_long_csv(args.long_out)
    print(report.format_table())
    print(f"report written to {args.out}")
    if report.n_failed:
        print(f"{report.n_failed} cells failed", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="funbayes", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic scenario as CSV")
    p_sim.add_argument("--scenario", required=True, help="four-letter label (e.g. RSDN, MDSN) or config file")
    p_sim.add_argument("--n-train", type=int, default=None)
    p_sim.add_argument("--n-test", type=int, default=None)
    p_sim.add_argument("--grid-points", type=int, default=None)
    p_sim.add_argument("--j-gen", type=int, default=None)
    p_sim.add_argument("--noise-sd", type=float, default=None)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=_cmd_simulate)

    p_train = sub.add_parser("train", help="fit a classifier and serialize it to JSON")
    p_train.add_argument("--method", required=True, choices=[m.value for m in Method])
    p_train.add_argument("--data", required=True)
    p_train.add_argument("--J", type=int, default=None, help="fixed truncation level")
    p_train.add_argument("--J-range", default=None, help="CV candidate range a:b")
    p_train.add_argument("--folds", type=int, default=10)
    p_train.add_argument("--rank-corr", choices=["tau", "spearman"], default="tau")
    p_train.add_argument(
        "--presmooth",
        nargs="?",
        type=float,
        const=-1.0,
        default=None,
        help="local-linear pre-smoothing; optional bandwidth (default 5 x spacing)",
    )
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--model", required=True, help="output model JSON path")
    p_train.set_defaults(func=_cmd_train)

    p_cls = sub.add_parser("classify", help="classify curves with a serialized model")
    p_cls.add_argument("--model", required=True)
    p_cls.add_argument("--data", required=True)
    p_cls.add_argument("--out", required=True)
    p_cls.add_argument("--scores", action="store_true", help="also write per-group log posteriors")
    p_cls.add_argument("--presmooth", nargs="?", type=float, const=-1.0, default=None)
    p_cls.set_defaults(func=_cmd_classify)

    p_bench = sub.add_parser("benchmark", help="run a Monte-Carlo experiment plan")
    p_bench.add_argument("--plan", required=True, help="plan file (TOML or JSON)")
    p_bench.add_argument("--reps", type=int, default=None, help="override plan repetitions")
    p_bench.add_argument("--workers", type=int, default=None, help="override plan parallelism")
    p_bench.add_argument("--seed", type=int, default=None, help="override plan seed")
    p_bench.add_argument("--out", required=True, help="summary CSV path")
    p_bench.add_argument("--long-out", default=None, help="optional long-format CSV path")
    p_bench.set_defaults(func=_cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DimensionError, DomainError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FunBayesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
