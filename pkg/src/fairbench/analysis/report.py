"""The analyze stage: turn result CSVs into stability, correlation, tradeoff
and variant-comparison files under ``<outdir>/analysis``."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .._io import write_csv
from ..interventions import DEFAULT_PARAM
from ..preprocess import VARIANTS
from ..runner import algorithm_family, read_results
from .plots import Series, emit_scatter_svg
from .stability import (
    AnalysisError,
    correlation_matrix,
    mean_std,
    stability,
    tradeoff_points,
    variant_compare,
)

TRADEOFF = ("calib_neg_mean", "tpr_mean_avg")
STABILITY_AXES = ("di_bin", "acc")
COMPARED_METRICS = ("acc", "di_bin")


def analysis_dir(outdir) -> Path:
    return Path(outdir) / "analysis"


def load_all_results(outdir, datasets=None) -> dict:
    """{dataset: {(variant, sensitive, algorithm): records}} from results/*.csv."""
    root = Path(outdir) / "results"
    out: dict = {}
    for path in sorted(root.glob("*.csv")) if root.exists() else []:
        records = read_results(path)
        if not records:
            continue
        r0 = records[0]
        if datasets and r0.dataset not in datasets:
            continue
        out.setdefault(r0.dataset, {})[(r0.variant, r0.sensitive, r0.algorithm)] = records
    return out


def one_per_split(records) -> list:
    """The records summarizing an algorithm: all of them when there is one
    per split, otherwise those at the family's default parameter (or the
    grid value closest to it)."""
    splits = {r.split_id for r in records}
    if len(records) == len(splits):
        return list(records)
    family, _ = algorithm_family(records[0].algorithm)
    target = DEFAULT_PARAM[family]
    params = sorted({r.param for r in records if r.param is not None})
    chosen = min(params, key=lambda p: (abs(p - target), p))
    return [r for r in records if r.param == chosen]


def _slices(groups: dict) -> list[tuple[str, str]]:
    seen = []
    for variant, sensitive, _ in groups:
        if (variant, sensitive) not in seen:
            seen.append((variant, sensitive))
    order = {v: i for i, v in enumerate(VARIANTS)}
    return sorted(seen, key=lambda vs: (order[vs[0]], vs[1]))


def _corr_task(args):
    records, seed = args
    return correlation_matrix(records, seed)


def analyze(outdir, datasets=None, seed: int = 42, workers: int = 1, log=None) -> list[Path]:
    results = load_all_results(outdir, datasets)
    if not results:
        raise AnalysisError("no benchmark records found; run `fairbench benchmark` first")
    adir = analysis_dir(outdir)
    written: list[Path] = []
    for dataset, groups in sorted(results.items()):
        written += _stability_outputs(adir, dataset, groups)
        written += _correlation_outputs(adir, dataset, groups, seed, workers)
        written += _tradeoff_outputs(adir, dataset, groups)
        written += _variant_outputs(adir, dataset, groups)
        if log:
            log(f"{dataset}: {len(groups)} result sets analyzed")
    return written


def _stability_outputs(adir: Path, dataset: str, groups: dict) -> list[Path]:
    rows = []
    written = []
    for variant, sensitive in _slices(groups):
        series = []
        for (v, s, alg), records in groups.items():
            if (v, s) != (variant, sensitive):
                continue
            chosen = one_per_split(records)
            for summary in stability(chosen):
                rows.append([variant, sensitive, alg, summary.metric, summary.mean, summary.std, summary.n])
            xs = [r.metrics.get(STABILITY_AXES[0]) for r in chosen]
            ys = [r.metrics.get(STABILITY_AXES[1]) for r in chosen]
            mx, sx, _ = mean_std(xs)
            my, sy, _ = mean_std(ys)
            rect = None if None in (mx, my, sx, sy) else (mx, my, sx, sy)
            series.append(Series(alg, tuple(zip(xs, ys)), rect))
        if any(s.points or s.rect for s in series):
            path = adir / f"stability_{dataset}_{variant}_{sensitive}.svg"
            emit_scatter_svg(series, STABILITY_AXES[0], STABILITY_AXES[1], path, f"{dataset} {variant} {sensitive}")
            written.append(path)
    path = adir / f"stability_{dataset}.csv"
    write_csv(path, ["variant", "sensitive", "algorithm", "metric", "mean", "std", "n"], rows)
    return [path] + written


def _correlation_outputs(adir: Path, dataset: str, groups: dict, seed: int, workers: int) -> list[Path]:
    keys = [k for k, recs in groups.items() if len(recs) >= 3]
    tasks = [(groups[k], seed) for k in keys]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            matrices = list(pool.map(_corr_task, tasks))
    else:
        matrices = [_corr_task(t) for t in tasks]
    written = []
    for (variant, sensitive, alg), cm in zip(keys, matrices):
        path = adir / f"correlation_{dataset}_{variant}_{sensitive}_{alg}.csv"
        write_csv(path, list(cm.names), [list(row) for row in cm.values])
        written.append(path)
    return written


def _tradeoff_outputs(adir: Path, dataset: str, groups: dict) -> list[Path]:
    x, y = TRADEOFF
    rows = []
    written = []
    for variant, sensitive in _slices(groups):
        series = []
        for (v, s, alg), records in groups.items():
            if (v, s) != (variant, sensitive):
                continue
            by_id = {r.run_id: r for r in records}
            pts = tradeoff_points(records, x, y)
            for p in pts:
                r = by_id[p.run_id]
                rows.append([variant, sensitive, alg, p.run_id, r.split_id, r.param, p.x_value, p.y_value])
            series.append(Series(alg, tuple((p.x_value, p.y_value) for p in pts)))
        if any(s.points for s in series):
            path = adir / f"tradeoff_{dataset}_{variant}_{sensitive}_{x}_{y}.svg"
            emit_scatter_svg(series, x, y, path, f"{dataset} {variant} {sensitive}")
            written.append(path)
    path = adir / f"tradeoff_{dataset}_{x}_{y}.csv"
    write_csv(path, ["variant", "sensitive", "algorithm", "run_id", "split_id", "param", x, y], rows)
    return [path] + written


def _variant_outputs(adir: Path, dataset: str, groups: dict) -> list[Path]:
    rows = []
    plots: dict = {}
    sensitives = sorted({s for _, s, _ in groups})
    algorithms = list(dict.fromkeys(a for _, _, a in groups))
    for sensitive in sensitives:
        for alg in algorithms:
            present = [v for v in VARIANTS if (v, sensitive, alg) in groups]
            for i, va in enumerate(present):
                for vb in present[i + 1:]:
                    ra = one_per_split(groups[(va, sensitive, alg)])
                    rb = one_per_split(groups[(vb, sensitive, alg)])
                    for metric in COMPARED_METRICS:
                        pairs = variant_compare(ra, rb, metric)
                        for sid, a, b in pairs:
                            rows.append([sensitive, alg, metric, va, vb, sid, a, b])
                        key = (sensitive, metric)
                        plots.setdefault(key, []).append(
                            Series(f"{alg} {va}/{vb}", tuple((a, b) for _, a, b in pairs))
                        )
    written = []
    for (sensitive, metric), series in sorted(plots.items()):
        if any(s.points for s in series):
            path = adir / f"variants_{dataset}_{sensitive}_{metric}.svg"
            emit_scatter_svg(series, f"{metric} (first variant)", f"{metric} (second variant)", path, f"{dataset} {sensitive}")
            written.append(path)
    path = adir / f"variants_{dataset}.csv"
    write_csv(path, ["sensitive", "algorithm", "metric", "variant_a", "variant_b", "split_id", "value_a", "value_b"], rows)
    return [path] + written
