"""Benchmark orchestration: enumerate cells, run them, persist every artifact.

A cell is one (dataset, variant, sensitive attribute, algorithm, parameter,
split). Each cell writes its predictions, fitted model and record under the
output directory before returning, so an interrupted run resumes by skipping
cells whose record already exists. Result CSVs are assembled afterwards in
enumeration order, which makes them independent of scheduling.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import learners
from ._io import atomic_write_text, fmt_value, parse_float, read_csv, write_csv
from .interventions import (
    GRIDS,
    InterventionSpec,
    fit_intervention,
    predict_intervention,
    repair_matrix,
)
from .interventions.repair import repairable_columns
from .metrics import REGISTRY, PredictionSet, full_metric_vector
from .preprocess import (
    ProcessedTable,
    SplitPlan,
    load_processed,
    load_splits,
    processed_path,
    split_indices,
    splits_path,
)

OBJECTIVES = ("report_all", "best_accuracy", "best_di")
BASELINES = learners.KINDS
INTERVENTIONS = ("di_remover", "two_nb", "prejudice_remover", "zafar")
ALGORITHMS = BASELINES + INTERVENTIONS
VALIDATION_FRACTION = 2 / 3
RESULT_COLUMNS = ("run_id", "split_id", "param") + REGISTRY


class RunnerError(ValueError):
    pass


class MissingArtifact(RunnerError):
    pass


def algorithm_family(algorithm: str) -> tuple[str, str | None]:
    """'di_remover-tree' -> ('di_remover', 'tree'); plain di_remover uses logreg."""
    if algorithm in BASELINES:
        return algorithm, None
    if algorithm == "di_remover":
        return "di_remover", "logreg"
    if algorithm.startswith("di_remover-"):
        base = algorithm.split("-", 1)[1]
        if base not in BASELINES:
            raise RunnerError(f"unknown base learner {base!r} in {algorithm!r}")
        return "di_remover", base
    if algorithm in INTERVENTIONS:
        return algorithm, None
    raise RunnerError(f"unknown algorithm {algorithm!r}")


def incompatibility(algorithm: str, variant: str) -> str | None:
    """Reason an (algorithm, variant) pair cannot run, or None."""
    family, _ = algorithm_family(algorithm)
    if family in ("two_nb", "prejudice_remover", "zafar") and variant != "numerical_binary":
        return "requires numerical_binary"
    if family == "di_remover" and variant not in ("numerical", "numerical_binary"):
        return "requires a numerical variant"
    return None


@dataclass(frozen=True)
class RunSpec:
    dataset: str
    variant: str
    sensitive: str
    algorithm: str
    param_grid: tuple = ()
    n_splits: int = 10
    master_seed: int = 42
    objective: str = "report_all"
    # baselines only; interventions never see the sensitive columns as features
    sensitive_as_feature: bool = True
    # keep the sensitive codes as features after a di_remover repair
    repair_keeps_sensitive: bool = False

    def __post_init__(self):
        family, _ = algorithm_family(self.algorithm)
        reason = incompatibility(self.algorithm, self.variant)
        if reason:
            raise RunnerError(f"{self.algorithm} on {self.variant}: {reason}")
        if self.objective not in OBJECTIVES:
            raise RunnerError(f"unknown objective {self.objective!r}")
        if self.n_splits < 1:
            raise RunnerError("n_splits must be >= 1")
        if family in BASELINES:
            if self.param_grid not in ((), (None,)):
                raise RunnerError("baselines take no parameter grid")
            object.__setattr__(self, "param_grid", (None,))
        else:
            grid = tuple(float(p) for p in (self.param_grid or GRIDS[family]))
            object.__setattr__(self, "param_grid", grid)

    @property
    def family(self) -> str:
        return algorithm_family(self.algorithm)[0]

    @property
    def base_learner(self) -> str | None:
        return algorithm_family(self.algorithm)[1]


@dataclass
class RunRecord:
    run_id: str
    dataset: str
    variant: str
    sensitive: str
    algorithm: str
    param: float | None
    split_id: int
    split_seed: int
    status: str = "ok"
    error: str = ""
    n_train: int = 0
    n_test: int = 0
    metrics: dict = field(default_factory=dict)
    wall_time: float | None = None

    def to_json(self) -> str:
        body = {
            "run_id": self.run_id,
            "dataset": self.dataset,
            "variant": self.variant,
            "sensitive": self.sensitive,
            "algorithm": self.algorithm,
            "param": self.param,
            "split_id": self.split_id,
            "split_seed": self.split_seed,
            "status": self.status,
            "error": self.error,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "metrics": {name: self.metrics.get(name) for name in REGISTRY},
        }
        return json.dumps(body, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls(**json.loads(text))


def run_id(dataset: str, variant: str, sensitive: str, algorithm: str, param, split_seed: int, extra=None) -> str:
    """Content hash of the cell identity; ``extra`` holds non-default feature flags."""
    key = {
        "dataset": dataset,
        "variant": variant,
        "sensitive": sensitive,
        "algorithm": algorithm,
        "param": fmt_value(param),
        "split_seed": int(split_seed),
    }
    key.update(extra or {})
    blob = json.dumps(key, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:20]


def cell_id(spec: RunSpec, param, split_seed: int) -> str:
    extra = {}
    if spec.family in BASELINES and not spec.sensitive_as_feature:
        extra["sensitive_as_feature"] = False
    if spec.family == "di_remover" and spec.repair_keeps_sensitive:
        extra["repair_keeps_sensitive"] = True
    return run_id(spec.dataset, spec.variant, spec.sensitive, spec.algorithm, param, split_seed, extra)


def enumerate_cells(spec: RunSpec) -> list[tuple[int, float | None]]:
    """(split_id, param) pairs, split-major."""
    if not spec.param_grid:
        raise RunnerError("empty parameter grid")
    return [(i, p) for i in range(spec.n_splits) for p in spec.param_grid]


# ---------------------------------------------------------------- paths


def record_path(outdir, rid: str) -> Path:
    return Path(outdir) / "records" / f"{rid}.json"


def timing_path(outdir, rid: str) -> Path:
    return Path(outdir) / "records" / f"{rid}.time"


def prediction_path(outdir, rid: str) -> Path:
    return Path(outdir) / "predictions" / f"{rid}.csv"


def model_path(outdir, rid: str) -> Path:
    return Path(outdir) / "models" / f"{rid}.model"


def validation_path(outdir, rid: str) -> Path:
    return Path(outdir) / "validation" / f"{rid}.json"


def results_path(outdir, spec: RunSpec) -> Path:
    name = f"{spec.dataset}_{spec.variant}_{spec.sensitive}_{spec.algorithm}.csv"
    return Path(outdir) / "results" / name


# ---------------------------------------------------------------- one cell


@lru_cache(maxsize=16)
def _load_stage(outdir: str, dataset: str, variant: str, master_seed: int):
    if not processed_path(outdir, dataset, variant).exists():
        raise MissingArtifact(f"missing processed table for {dataset}/{variant}; run `fairbench preprocess` first")
    if not splits_path(outdir, dataset, master_seed).exists():
        raise MissingArtifact(f"missing splits for {dataset} (seed {master_seed}); run `fairbench preprocess` first")
    return load_processed(outdir, dataset, variant), load_splits(outdir, dataset, master_seed)


def _design(pt: ProcessedTable, spec: RunSpec):
    """Feature matrix, its column names, and the sensitive values as strings."""
    if spec.sensitive not in pt.sensitive_names:
        raise RunnerError(f"{spec.sensitive!r} is not a sensitive attribute of {spec.dataset}")
    if spec.family in BASELINES:
        with_sensitive = spec.sensitive_as_feature
    else:
        with_sensitive = spec.family == "di_remover" and spec.repair_keeps_sensitive
    X, names = pt.feature_matrix(with_sensitive)
    s_str = np.array([str(v) for v in pt.frame[spec.sensitive]], dtype=object)
    return X, names, s_str


def train_and_predict(pt: ProcessedTable, spec: RunSpec, param, train: np.ndarray, test: np.ndarray):
    """Fit on ``train`` rows and predict ``test`` rows. Returns (y_pred, model)."""
    X, names, s_str = _design(pt, spec)
    y = pt.labels
    family = spec.family
    if family in BASELINES:
        model = learners.fit(family, X[train], y[train])
        return learners.predict(model, X[test]), model
    if family == "di_remover":
        cols = [names.index(c) for c in repairable_columns(pt)]
        # train and test partitions are repaired separately with the same lambda
        X_tr = repair_matrix(X[train], s_str[train], param, cols)
        X_te = repair_matrix(X[test], s_str[test], param, cols)
        model = learners.fit(spec.base_learner, X_tr, y[train])
        return learners.predict(model, X_te), model
    s_bin = pt.sensitive_binary(spec.sensitive)
    model = fit_intervention(InterventionSpec(family, param), X[train], s_bin[train], y[train])
    return predict_intervention(model, X[test], s_bin[test]), model


def _metrics_for(pt: ProcessedTable, spec: RunSpec, rows: np.ndarray, y_pred: np.ndarray) -> dict:
    s = pt.frame[spec.sensitive].to_numpy()[rows]
    p = PredictionSet(pt.labels[rows], y_pred, s, pt.schema.privileged(spec.sensitive))
    return full_metric_vector(p)


def execute_cell(outdir, spec: RunSpec, split: SplitPlan, param, pt: ProcessedTable | None = None) -> RunRecord:
    """Train on the split's train rows, evaluate on its test rows, persist."""
    if pt is None:
        pt, _ = _load_stage(str(outdir), spec.dataset, spec.variant, spec.master_seed)
    rid = cell_id(spec, param, split.seed)
    record = RunRecord(
        rid, spec.dataset, spec.variant, spec.sensitive, spec.algorithm,
        None if param is None else float(param), split.split_id, split.seed,
        n_train=len(split.train_indices), n_test=len(split.test_indices),
    )
    start = time.perf_counter()
    try:
        y_pred, model = train_and_predict(pt, spec, param, split.train_indices, split.test_indices)
        record.metrics = _metrics_for(pt, spec, split.test_indices, y_pred)
        s = pt.frame[spec.sensitive].to_numpy()[split.test_indices]
        rows = zip(split.test_indices, pt.labels[split.test_indices], y_pred, s)
        write_csv(prediction_path(outdir, rid), ["row_index", "y_true", "y_pred", "s"], rows)
        atomic_write_text(model_path(outdir, rid), learners.model_to_text(model))
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        record.status = "failed"
        record.error = f"{type(exc).__name__}: {exc}"
        record.metrics = {name: None for name in REGISTRY}
    record.wall_time = time.perf_counter() - start
    atomic_write_text(record_path(outdir, rid), record.to_json())
    atomic_write_text(timing_path(outdir, rid), repr(record.wall_time) + "\n")
    return record


def validation_split(split: SplitPlan, spec: RunSpec) -> tuple[np.ndarray, np.ndarray]:
    """Nested 2/3 : 1/3 subsplit of the training partition.

    Seeded from the run id with the parameter blanked, so every grid value
    is validated on the same subsplit.
    """
    key = cell_id(spec, None, split.seed)
    seed = int(key[:12], 16)
    inner_tr, inner_va = split_indices(len(split.train_indices), VALIDATION_FRACTION, seed)
    return split.train_indices[inner_tr], split.train_indices[inner_va]


def validate_cell(outdir, spec: RunSpec, split: SplitPlan, param, pt: ProcessedTable | None = None) -> dict | None:
    """Validation metrics for one (split, param); None when training fails."""
    if pt is None:
        pt, _ = _load_stage(str(outdir), spec.dataset, spec.variant, spec.master_seed)
    rid = cell_id(spec, param, split.seed)
    try:
        tr, va = validation_split(split, spec)
        y_pred, _ = train_and_predict(pt, spec, param, tr, va)
        metrics = _metrics_for(pt, spec, va, y_pred)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError):
        metrics = None
    atomic_write_text(validation_path(outdir, rid), json.dumps({"param": param, "metrics": metrics}) + "\n")
    return metrics


def select_param(candidates, objective: str):
    """Pick a parameter from ``[(param, validation_metrics or None), ...]``.

    best_accuracy maximizes acc, best_di minimizes |di_bin - 1|; ties and
    undefined scores resolve toward the smaller parameter. report_all
    returns every parameter.
    """
    if objective == "report_all":
        return [p for p, _ in candidates]
    if objective not in OBJECTIVES:
        raise RunnerError(f"unknown objective {objective!r}")
    scored = []
    for param, metrics in candidates:
        if metrics is None:
            continue
        if objective == "best_accuracy":
            value = metrics.get("acc")
            score = None if value is None else -value
        else:
            value = metrics.get("di_bin")
            score = None if value is None else abs(value - 1.0)
        scored.append((score is None, np.inf if score is None else score, _param_key(param), param))
    if not scored:
        raise RunnerError("every cell failed for this split; nothing to select")
    return min(scored)[3]


def _param_key(param) -> float:
    return -np.inf if param is None else float(param)


# ---------------------------------------------------------------- whole specs


def _cell_task(args):
    kind, outdir, spec, split_id, param = args
    _, plans = _load_stage(outdir, spec.dataset, spec.variant, spec.master_seed)
    split = plans[split_id]
    if kind == "test":
        return execute_cell(outdir, spec, split, param).status
    validate_cell(outdir, spec, split, param)
    return "ok"


def _needs(outdir, spec, kind, split_seed, param) -> bool:
    rid = cell_id(spec, param, split_seed)
    path = record_path(outdir, rid) if kind == "test" else validation_path(outdir, rid)
    return not path.exists()


def run_specs(specs: list[RunSpec], outdir, workers: int = 1, log=None) -> dict:
    """Run every cell of every spec (skipping finished ones), then write result CSVs.

    Returns counts {"cells", "skipped", "failed", "selection_failed"}.
    """
    outdir = str(outdir)
    _load_stage.cache_clear()
    tasks = []
    skipped = 0
    for spec in specs:
        _, plans = _load_stage(outdir, spec.dataset, spec.variant, spec.master_seed)
        if len(plans) < spec.n_splits:
            raise MissingArtifact(
                f"{spec.dataset}: splits file has {len(plans)} splits, {spec.n_splits} requested; rerun `fairbench preprocess`"
            )
        kinds = ("test",) if spec.objective == "report_all" else ("test", "validation")
        for split_id, param in enumerate_cells(spec):
            for kind in kinds:
                if _needs(outdir, spec, kind, plans[split_id].seed, param):
                    tasks.append((kind, outdir, spec, split_id, param))
                else:
                    skipped += 1
    if log:
        log(f"{len(tasks)} cells to run, {skipped} already done")
    if workers <= 1 or len(tasks) <= 1:
        for t in tasks:
            _cell_task(t)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for _ in pool.map(_cell_task, tasks, chunksize=max(1, len(tasks) // (workers * 8))):
                pass
    failed = 0
    selection_failed = 0
    for spec in specs:
        records, n_bad_splits = collect_records(outdir, spec)
        failed += sum(r.status != "ok" for r in records)
        selection_failed += n_bad_splits
        write_results(outdir, spec, records)
    return {"cells": len(tasks), "skipped": skipped, "failed": failed, "selection_failed": selection_failed}


def collect_records(outdir, spec: RunSpec) -> tuple[list[RunRecord], int]:
    """Records to report for a spec, in enumeration order, after selection."""
    _, plans = _load_stage(str(outdir), spec.dataset, spec.variant, spec.master_seed)
    out = []
    bad = 0
    for split_id in range(spec.n_splits):
        seed = plans[split_id].seed
        params = list(spec.param_grid)
        if spec.objective != "report_all":
            candidates = []
            for p in params:
                rid = cell_id(spec, p, seed)
                payload = json.loads(validation_path(outdir, rid).read_text(encoding="utf-8"))
                candidates.append((p, payload["metrics"]))
            try:
                params = [select_param(candidates, spec.objective)]
            except RunnerError:
                bad += 1
                continue
        for p in params:
            rid = cell_id(spec, p, seed)
            out.append(load_record(outdir, rid))
    return out, bad


def load_record(outdir, rid: str) -> RunRecord:
    record = RunRecord.from_json(record_path(outdir, rid).read_text(encoding="utf-8"))
    tp = timing_path(outdir, rid)
    if tp.exists():
        record.wall_time = float(tp.read_text(encoding="utf-8"))
    return record


def write_results(outdir, spec: RunSpec, records: list[RunRecord]) -> Path:
    path = results_path(outdir, spec)
    rows = [[r.run_id, r.split_id, r.param] + [r.metrics.get(m) for m in REGISTRY] for r in records]
    write_csv(path, RESULT_COLUMNS, rows)
    return path


def read_results(path) -> list[RunRecord]:
    """Records (metrics only) from a results CSV; identity fields come from the file name."""
    path = Path(path)
    header, rows = read_csv(path)
    if tuple(header) != RESULT_COLUMNS:
        raise RunnerError(f"{path} does not have the results column layout")
    dataset, variant, sensitive, algorithm = parse_results_name(path.name)
    out = []
    for row in rows:
        metrics = {m: parse_float(v) for m, v in zip(REGISTRY, row[3:])}
        out.append(
            RunRecord(
                row[0], dataset, variant, sensitive, algorithm,
                parse_float(row[2]), int(row[1]), -1, metrics=metrics,
            )
        )
    return out


def parse_results_name(name: str) -> tuple[str, str, str, str]:
    """Invert ``<dataset>_<variant>_<sensitive>_<algorithm>.csv``.

    The variant is located by name, so datasets may contain underscores;
    sensitive names may not.
    """
    stem = name[: -len(".csv")] if name.endswith(".csv") else name
    for variant in ("numerical_binary", "numerical", "original"):
        marker = f"_{variant}_"
        idx = stem.find(marker)
        if idx > 0:
            dataset = stem[:idx]
            sensitive, algorithm = stem[idx + len(marker):].split("_", 1)
            return dataset, variant, sensitive, algorithm
    raise RunnerError(f"cannot parse results file name {name!r}")


def prediction_metrics(outdir, rid: str, privileged: str) -> dict:
    """Recompute the metric vector from a persisted prediction file."""
    _, rows = read_csv(prediction_path(outdir, rid))
    y_true = np.array([int(r[1]) for r in rows])
    y_pred = np.array([int(r[2]) for r in rows])
    s = np.array([r[3] for r in rows], dtype=object)
    return full_metric_vector(PredictionSet(y_true, y_pred, s, privileged))


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


__all__ = [
    "ALGORITHMS", "BASELINES", "INTERVENTIONS", "OBJECTIVES", "RESULT_COLUMNS",
    "RunnerError", "MissingArtifact", "RunSpec", "RunRecord",
    "algorithm_family", "incompatibility", "run_id", "cell_id", "enumerate_cells", "execute_cell",
    "validate_cell", "validation_split", "select_param", "run_specs", "collect_records",
    "write_results", "read_results", "parse_results_name", "load_record", "prediction_metrics",
    "results_path", "record_path", "prediction_path", "model_path", "default_workers",
]
