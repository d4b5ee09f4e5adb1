"""Monte-Carlo experiment driver: repeated generation, training, evaluation,
and aggregation into a misclassification-rate report.

Every repetition is an independent task seeded from (plan seed, scenario
index, repetition index), so reports are bit-identical regardless of the
worker count.  Failures are recorded per cell and excluded from the
aggregates instead of aborting the run.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .classifiers import (
    ClassifierSpec,
    CVRange,
    Method,
    predict,
    select_J_cv,
    stratified_folds,
    train,
)
from .errors import FunBayesError, ParameterError
from .fdata import FunctionalDataset, presmooth
from .simgen import ScenarioConfig, generate
from .streams import derive_seed, stream

__all__ = ["ExperimentPlan", "BenchmarkReport", "Cell", "run", "repeated_cv_evaluate"]

CV_METHOD = "cv"
MULTICLASS_J_CAP = 10
_FOLD_TAG = 1


@dataclass(frozen=True)
class ExperimentPlan:
    """Scenarios x methods x repetitions, plus seeding and execution knobs."""

    scenarios: tuple
    methods: tuple
    repetitions: int
    seed: int = 0
    cv_select: bool = True
    parallelism: int = 1
    presmooth_bandwidth: float | None = None
    folds: int = 10

    def __post_init__(self):
        if self.repetitions < 1:
            raise ParameterError("repetitions must be at least 1")
        if not self.methods:
            raise ParameterError("the method list must be nonempty")
        if self.parallelism < 1:
            raise ParameterError("parallelism must be at least 1")
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        object.__setattr__(self, "methods", tuple(self.methods))


@dataclass(frozen=True)
class Cell:
    """One (scenario, method, repetition) outcome."""

    scenario: str
    method: str
    rep: int
    error: float = np.nan
    j_star: int = 0
    failed: str | None = None
    selected_method: str | None = None  # set on CV-selection cells


def _adapt_spec(spec: ClassifierSpec, n_classes: int) -> ClassifierSpec | None:
    """Scenario-specific spec adjustments: CEN is binary-only and multiclass
    candidate ranges are capped at 10 components."""
    if n_classes > 2 and spec.method is Method.CEN:
        return None
    if n_classes > 2 and isinstance(spec.J, CVRange) and spec.J.hi > MULTICLASS_J_CAP:
        return replace(spec, J=CVRange(min(spec.J.lo, MULTICLASS_J_CAP), MULTICLASS_J_CAP))
    return spec


def _evaluate_methods(cv_select, scenario_label, rep, train_ds, test_ds, methods, folds_idx):
    """Fit every method (sharing one fold split), score the test set, and
    optionally add the CV-selected classifier cell."""
    cells = []
    cv_candidates = []
    for spec in methods:
        try:
            jrange = spec.J if isinstance(spec.J, CVRange) else CVRange(spec.J, spec.J)
            res = select_J_cv(replace(spec, J=jrange), train_ds, folds_idx=folds_idx)
            model = train(replace(spec, J=res.j_star), train_ds)
            pred = predict(model, test_ds.curves)
            err = float(np.mean(pred != test_ds.labels))
            cell = Cell(scenario_label, spec.method.value, rep, err, res.j_star)
            cv_candidates.append((res.best_error, cell))
        except (FunBayesError, np.linalg.LinAlgError) as exc:
            cell = Cell(scenario_label, spec.method.value, rep, failed=f"{type(exc).__name__}: {exc}")
        cells.append(cell)
    if cv_select and cv_candidates:
        best_err = min(e for e, _ in cv_candidates)
        chosen = next(c for e, c in cv_candidates if e == best_err)
        cells.append(
            Cell(
                scenario_label,
                CV_METHOD,
                rep,
                chosen.error,
                chosen.j_star,
                selected_method=chosen.method,
            )
        )
    return cells


def _run_rep(plan: ExperimentPlan, scen_idx: int, rep: int) -> list[Cell]:
    config = plan.scenarios[scen_idx]
    config = replace(config, seed=derive_seed(plan.seed, scen_idx, rep))
    train_ds, test_ds = generate(config)
    if plan.presmooth_bandwidth is not None:
        train_ds = presmooth(train_ds, plan.presmooth_bandwidth)
        test_ds = presmooth(test_ds, plan.presmooth_bandwidth)
    methods = [
        adapted
        for spec in plan.methods
        if (adapted := _adapt_spec(spec, config.n_classes)) is not None
    ]
    folds_idx = stratified_folds(
        train_ds.labels, plan.folds, stream(plan.seed, scen_idx, rep, _FOLD_TAG)
    )
    return _evaluate_methods(plan.cv_select, config.label, rep, train_ds, test_ds, methods, folds_idx)


def _run_rep_star(args) -> list[Cell]:
    return _run_rep(*args)


def run(plan: ExperimentPlan) -> "BenchmarkReport":
    """Execute the full plan and aggregate per-cell errors into a report."""
    tasks = [(plan, s, r) for s in range(len(plan.scenarios)) for r in range(plan.repetitions)]
    if plan.parallelism > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=plan.parallelism) as pool:
            chunks = list(pool.map(_run_rep_star, tasks, chunksize=1))
    else:
        chunks = [_run_rep_star(t) for t in tasks]
    cells = [cell for chunk in chunks for cell in chunk]
    return BenchmarkReport(tuple(cells))


def repeated_cv_evaluate(
    dataset: FunctionalDataset,
    methods,
    repetitions: int,
    folds: int = 10,
    seed: int = 0,
    parallelism: int = 1,
    label: str = "dataset",
) -> "BenchmarkReport":
    """Repeated stratified k-fold CV on one fixed dataset.

    Each repetition re-randomizes the fold split, selects J* per method by
    that split, and reports the method's CV misclassification rate at J*.
    """
    tasks = [(dataset, tuple(methods), folds, seed, rep, label) for rep in range(repetitions)]
    if parallelism > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            chunks = list(pool.map(_cv_rep_star, tasks, chunksize=1))
    else:
        chunks = [_cv_rep_star(t) for t in tasks]
    return BenchmarkReport(tuple(cell for chunk in chunks for cell in chunk))


def _cv_rep(dataset, methods, folds, seed, rep, label) -> list[Cell]:
    folds_idx = stratified_folds(dataset.labels, folds, stream(seed, rep, _FOLD_TAG))
    cells = []
    cv_candidates = []
    for spec in methods:
        adapted = _adapt_spec(spec, dataset.n_groups)
        if adapted is None:
            continue
        try:
            jrange = adapted.J if isinstance(adapted.J, CVRange) else CVRange(adapted.J, adapted.J)
            res = select_J_cv(replace(adapted, J=jrange), dataset, folds_idx=folds_idx)
            cell = Cell(label, adapted.method.value, rep, res.best_error, res.j_star)
            cv_candidates.append((res.best_error, cell))
        except (FunBayesError, np.linalg.LinAlgError) as exc:
            cell = Cell(label, adapted.method.value, rep, failed=f"{type(exc).__name__}: {exc}")
        cells.append(cell)
    if cv_candidates:
        best_err = min(e for e, _ in cv_candidates)
        chosen = next(c for e, c in cv_candidates if e == best_err)
        cells.append(Cell(label, CV_METHOD, rep, chosen.error, chosen.j_star, selected_method=chosen.method))
    return cells


def _cv_rep_star(args) -> list[Cell]:
    return _cv_rep(*args)


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class BenchmarkReport:
    """Aggregated per-(scenario, method) misclassification statistics."""

    cells: tuple

    @property
    def n_failed(self) -> int:
        return sum(1 for c in self.cells if c.failed is not None)

    def scenarios(self) -> list[str]:
        seen = dict.fromkeys(c.scenario for c in self.cells)
        return list(seen)

    def methods(self, scenario: str) -> list[str]:
        seen = dict.fromkeys(c.method for c in self.cells if c.scenario == scenario and c.method != CV_METHOD)
        return list(seen)

    def _ok_errors(self, scenario: str, method: str) -> np.ndarray:
        return np.array(
            [c.error for c in self.cells if c.scenario == scenario and c.method == method and c.failed is None]
        )

    def _ok_jstars(self, scenario: str, method: str) -> np.ndarray:
        return np.array(
            [c.j_star for c in self.cells if c.scenario == scenario and c.method == method and c.failed is None]
        )

    def mean_error(self, scenario: str, method: str) -> float:
        errs = self._ok_errors(scenario, method)
        return float(errs.mean()) if errs.size else np.nan

    def moe(self, scenario: str, method: str) -> float:
        """Margin of error 1.96 * sd / sqrt(repetitions)."""
        errs = self._ok_errors(scenario, method)
        if errs.size < 2:
            return np.nan
        return float(1.96 * errs.std(ddof=1) / np.sqrt(errs.size))

    def best_method(self, scenario: str) -> str:
        methods = self.methods(scenario)
        means = [self.mean_error(scenario, m) for m in methods]
        return methods[int(np.nanargmin(means))]

    def within_moe_set(self, scenario: str) -> list[str]:
        """Methods whose mean error falls inside the best method's margin of error."""
        best = self.best_method(scenario)
        cutoff = self.mean_error(scenario, best) + self.moe(scenario, best)
        return [m for m in self.methods(scenario) if self.mean_error(scenario, m) <= cutoff]

    def ratio_cv(self, scenario: str) -> float:
        """(err(CV) - err(opt)) / err(opt); NaN when no CV cells exist."""
        cv_errs = self._ok_errors(scenario, CV_METHOD)
        if cv_errs.size == 0:
            return np.nan
        opt = self.mean_error(scenario, self.best_method(scenario))
        return float((cv_errs.mean() - opt) / opt)

    def summary_rows(self) -> list[dict]:
        rows = []
        for scenario in self.scenarios():
            best = self.best_method(scenario)
            moe_set = set(self.within_moe_set(scenario))
            all_methods = dict.fromkeys(
                c.method for c in self.cells if c.scenario == scenario
            )
            for method in all_methods:
                errs = self._ok_errors(scenario, method)
                jstars = self._ok_jstars(scenario, method)
                failed = sum(
                    1
                    for c in self.cells
                    if c.scenario == scenario and c.method == method and c.failed is not None
                )
                q25, med, q75 = (
                    np.percentile(jstars, [25, 50, 75]) if jstars.size else (np.nan,) * 3
                )
                rows.append(
                    {
                        "scenario": scenario,
                        "method": method,
                        "mean_error": float(errs.mean()) if errs.size else np.nan,
                        "sd_error": float(errs.std(ddof=1)) if errs.size > 1 else np.nan,
                        "moe": self.moe(scenario, method),
                        "reps_ok": int(errs.size),
                        "reps_failed": failed,
                        "best": method == best,
                        "within_moe": method in moe_set,
                        "ratio_cv": self.ratio_cv(scenario) if method == CV_METHOD else np.nan,
                        "j_star_q25": float(q25),
                        "j_star_median": float(med),
                        "j_star_q75": float(q75),
                    }
                )
        return rows

    def to_csv(self, path) -> None:
        rows = self.summary_rows()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(rows[0].keys())
            for row in rows:
                writer.writerow([_fmt(v) for v in row.values()])

    def to_long_csv(self, path) -> None:
        """Plot-ready long format: one row per (scenario, method, repetition)."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario", "method", "rep", "error", "j_star", "failed", "selected_method"])
            for c in self.cells:
                writer.writerow(
                    [c.scenario, c.method, c.rep, _fmt(c.error), c.j_star, c.failed or "", c.selected_method or ""]
                )

    def format_table(self) -> str:
        rows = self.summary_rows()
        headers = ["scenario", "method", "mean", "sd", "moe", "ok", "fail", "J*med", "flags"]
        lines = ["  ".join(f"{h:>9}" for h in headers)]
        for r in rows:
            flags = ("best " if r["best"] else "") + ("~moe" if r["within_moe"] and not r["best"] else "")
            lines.append(
                "  ".join(
                    [
                        f"{r['scenario']:>9}",
                        f"{r['method']:>9}",
                        f"{r['mean_error']:>9.4f}",
                        f"{r['sd_error']:>9.4f}",
                        f"{r['moe']:>9.4f}",
                        f"{r['reps_ok']:>9d}",
                        f"{r['reps_failed']:>9d}",
                        f"{r['j_star_median']:>9.1f}",
                        f"{flags:>9}",
                    ]
                )
            )
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v
