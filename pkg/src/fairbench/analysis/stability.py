"""Per-metric spread over repeated splits, robust correlation matrices,
variant comparisons and tradeoff point sets."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..metrics import REGISTRY
from .robust import DEFAULT_CONFIG, SDConfig, sd_correlation


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class StabilitySummary:
    dataset: str
    algorithm: str
    metric: str
    mean: float | None
    std: float | None
    n: int


def mean_std(values) -> tuple[float | None, float | None, int]:
    """Mean and sample (n-1) standard deviation of the defined values."""
    xs = [float(v) for v in values if v is not None and math.isfinite(float(v))]
    n = len(xs)
    if n == 0:
        return None, None, 0
    if all(x == xs[0] for x in xs):
        return xs[0], (0.0 if n > 1 else None), n
    mean = math.fsum(xs) / n
    if n == 1:
        return mean, None, 1
    var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1)
    return mean, math.sqrt(var), n


def stability(records, metrics=REGISTRY) -> list[StabilitySummary]:
    """Mean/std per (algorithm, metric) over the given records (one per split)."""
    by_alg: dict[str, list] = {}
    for r in records:
        by_alg.setdefault(r.algorithm, []).append(r)
    out = []
    for alg, recs in by_alg.items():
        dataset = recs[0].dataset
        for m in metrics:
            mean, std, n = mean_std(r.metrics.get(m) for r in recs)
            out.append(StabilitySummary(dataset, alg, m, mean, std, n))
    return out


@dataclass(frozen=True)
class CorrelationMatrix:
    names: tuple[str, ...]
    values: tuple[tuple[float | None, ...], ...]
    # jointly defined record count behind each entry
    counts: tuple[tuple[int, ...], ...] = ()

    def get(self, a: str, b: str) -> float | None:
        return self.values[self.names.index(a)][self.names.index(b)]


def _column(records, metric: str) -> list:
    return [r.metrics.get(metric) for r in records]


def correlation_matrix(records, seed: int = 0, metrics=REGISTRY, config: SDConfig = DEFAULT_CONFIG) -> CorrelationMatrix:
    """Robust pairwise correlation of every metric pair over the records.

    Entries are empty (None) when fewer than 3 jointly defined values remain
    or one side has zero weighted variance.
    """
    if len(records) < 3:
        raise AnalysisError("correlation_matrix needs at least 3 records")
    cols = {m: _column(records, m) for m in metrics}
    k = len(metrics)
    grid: list[list[float | None]] = [[None] * k for _ in range(k)]
    counts = [[0] * k for _ in range(k)]
    for i, a in enumerate(metrics):
        defined = [v for v in cols[a] if v is not None]
        counts[i][i] = len(defined)
        grid[i][i] = 1.0 if len(defined) >= 3 and len(set(defined)) > 1 else None
        for j in range(i + 1, k):
            pairs = list(zip(cols[a], cols[metrics[j]]))
            counts[i][j] = counts[j][i] = sum(1 for x, y in pairs if x is not None and y is not None)
            grid[i][j] = grid[j][i] = sd_correlation(pairs, seed, config)
    return CorrelationMatrix(
        tuple(metrics), tuple(tuple(row) for row in grid), tuple(tuple(row) for row in counts)
    )


def variant_compare(records_a, records_b, metric: str) -> list[tuple[int, float | None, float | None]]:
    """(split_id, value_a, value_b) per split, matched by split id."""
    a = _by_split(records_a)
    b = _by_split(records_b)
    if set(a) != set(b):
        raise AnalysisError(f"split ids differ between record sets: {sorted(a)} vs {sorted(b)}")
    return [(sid, a[sid].metrics.get(metric), b[sid].metrics.get(metric)) for sid in sorted(a)]


def _by_split(records) -> dict:
    out = {}
    for r in records:
        if r.split_id in out:
            raise AnalysisError(f"more than one record for split {r.split_id}")
        out[r.split_id] = r
    return out


@dataclass(frozen=True)
class TradeoffPoint:
    run_id: str
    x_metric: str
    x_value: float
    y_metric: str
    y_value: float


def tradeoff_points(records, x_metric: str, y_metric: str) -> list[TradeoffPoint]:
    out = []
    for r in records:
        x, y = r.metrics.get(x_metric), r.metrics.get(y_metric)
        if x is None or y is None:
            continue
        out.append(TradeoffPoint(r.run_id, x_metric, x, y_metric, y))
    return out
