"""Accuracy and fairness measures over (y_true, y_pred, s) triples.

Undefined values (a zero denominator somewhere) are ``None``; they are never
replaced by 0 or 1. Group labels are compared as strings.

Canonical names, in registry order::

    acc tpr tnr bcr di_bin di_avg cv_bin cv_avg
    <base>_<agg>_<grouping>   base in acc/tpr/tnr/bcr, agg in mean/ratio/diff,
                              grouping bin (unprivileged pooled) / avg (per value)
    calib_pos_<agg> calib_neg_<agg>
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNDEFINED = None
BASES = ("acc", "tpr", "tnr", "bcr")
AGGREGATIONS = ("mean", "ratio", "diff")
GROUPINGS = ("bin", "avg")

REGISTRY: tuple[str, ...] = (
    ("acc", "tpr", "tnr", "bcr", "di_bin", "di_avg", "cv_bin", "cv_avg")
    + tuple(f"{b}_{a}_{g}" for b in BASES for a in AGGREGATIONS for g in GROUPINGS)
    + tuple(f"calib_{br}_{a}" for br in ("pos", "neg") for a in AGGREGATIONS)
)


class MetricError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PredictionSet:
    y_true: np.ndarray
    y_pred: np.ndarray
    s: np.ndarray
    privileged: str

    def __post_init__(self):
        y_true = np.asarray(self.y_true).astype(np.int64)
        y_pred = np.asarray(self.y_pred).astype(np.int64)
        s = np.array([str(v) for v in np.asarray(self.s).tolist()], dtype=object)
        if not (len(y_true) == len(y_pred) == len(s)) or len(s) == 0:
            raise MetricError("y_true, y_pred and s must have equal, non-zero length")
        for name, v in (("y_true", y_true), ("y_pred", y_pred)):
            if not np.all((v == 0) | (v == 1)):
                raise MetricError(f"{name} must be binary")
        if str(self.privileged) not in set(s):
            raise MetricError(f"privileged value {self.privileged!r} does not occur in s")
        object.__setattr__(self, "y_true", y_true)
        object.__setattr__(self, "y_pred", y_pred)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "privileged", str(self.privileged))


@dataclass(frozen=True)
class Counts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def predicted_positive(self) -> int:
        return self.tp + self.fp

    @property
    def actual_positive(self) -> int:
        return self.tp + self.fn

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)


@dataclass(frozen=True)
class GroupStats:
    groups: dict[str, Counts]
    privileged: str

    @property
    def unprivileged(self) -> list[str]:
        return [g for g in self.groups if g != self.privileged]

    @property
    def priv(self) -> Counts:
        return self.groups[self.privileged]

    def pooled_unprivileged(self) -> Counts | None:
        others = [self.groups[g] for g in self.unprivileged]
        if not others:
            return None
        total = Counts()
        for c in others:
            total = total + c
        return total

    @property
    def total(self) -> Counts:
        out = Counts()
        for c in self.groups.values():
            out = out + c
        return out


def confusion_by_group(p: PredictionSet) -> GroupStats:
    groups: dict[str, Counts] = {}
    for g in sorted(set(p.s)):
        m = p.s == g
        t, q = p.y_true[m], p.y_pred[m]
        groups[g] = Counts(
            tp=int(np.sum((t == 1) & (q == 1))),
            fp=int(np.sum((t == 0) & (q == 1))),
            tn=int(np.sum((t == 0) & (q == 0))),
            fn=int(np.sum((t == 1) & (q == 0))),
        )
    return GroupStats(groups, p.privileged)


def _div(a, b):
    return UNDEFINED if b == 0 else a / b


def accuracy_measures(c: Counts):
    """(accuracy, tpr, tnr, bcr) of one set of counts."""
    acc = _div(c.tp + c.tn, c.n)
    tpr = _div(c.tp, c.tp + c.fn)
    tnr = _div(c.tn, c.tn + c.fp)
    bcr = UNDEFINED if tpr is None or tnr is None else (tpr + tnr) / 2
    return acc, tpr, tnr, bcr


def _base(c: Counts, base: str):
    return accuracy_measures(c)[BASES.index(base)]


def _positive_rate(c: Counts):
    return _div(c.predicted_positive, c.n)


def _comparison_groups(stats: GroupStats, grouping: str) -> list[Counts]:
    """Unprivileged side of a comparison: one pooled group or each value."""
    if grouping in ("bin", "binary"):
        pooled = stats.pooled_unprivileged()
        return [] if pooled is None else [pooled]
    return [stats.groups[g] for g in stats.unprivileged]


def _aggregate(f, stats: GroupStats, aggregation: str, grouping: str):
    others = [f(c) for c in _comparison_groups(stats, grouping)]
    priv = f(stats.priv)
    if aggregation == "mean":
        values = [priv] + others
        if any(v is None for v in values):
            return UNDEFINED
        return sum(values) / len(values)
    if not others or priv is None or any(v is None for v in others):
        return UNDEFINED
    if aggregation == "ratio":
        if priv == 0:
            return UNDEFINED
        return sum(v / priv for v in others) / len(others)
    if aggregation == "diff":
        return sum(1 - (priv - v) for v in others) / len(others)
    raise MetricError(f"unknown aggregation {aggregation!r}")


def _mode(mode: str) -> str:
    if mode in ("binary", "bin"):
        return "bin"
    if mode in ("average", "avg", "per_value"):
        return "avg"
    raise MetricError(f"unknown mode {mode!r}")


def disparate_impact(p: PredictionSet | GroupStats, mode: str = "binary"):
    """Unprivileged positive rate over privileged positive rate."""
    stats = p if isinstance(p, GroupStats) else confusion_by_group(p)
    return _aggregate(_positive_rate, stats, "ratio", _mode(mode))


def cv_score(p: PredictionSet | GroupStats, mode: str = "binary"):
    """1 - (privileged positive rate - unprivileged positive rate); not clamped."""
    stats = p if isinstance(p, GroupStats) else confusion_by_group(p)
    return _aggregate(_positive_rate, stats, "diff", _mode(mode))


def group_conditioned(p: PredictionSet | GroupStats, base: str, aggregation: str, grouping: str):
    if base not in BASES:
        raise MetricError(f"unknown base measure {base!r}")
    stats = p if isinstance(p, GroupStats) else confusion_by_group(p)
    return _aggregate(lambda c: _base(c, base), stats, aggregation, _mode(grouping))


def _calib(branch: str):
    if branch == "pos":
        return lambda c: _div(c.tp, c.tp + c.fp)
    if branch == "neg":
        return lambda c: _div(c.fn, c.fn + c.tn)
    raise MetricError(f"unknown calibration branch {branch!r}")


def calibration(p: PredictionSet | GroupStats, branch: str, aggregation: str):
    """P[Y=1 | Y_hat=1, S=s] (pos) or P[Y=1 | Y_hat=0, S=s] (neg), per sensitive value."""
    stats = p if isinstance(p, GroupStats) else confusion_by_group(p)
    return _aggregate(_calib(branch), stats, aggregation, "avg")


def full_metric_vector(p: PredictionSet) -> dict[str, float | None]:
    stats = confusion_by_group(p)
    out: dict[str, float | None] = {}
    out["acc"], out["tpr"], out["tnr"], out["bcr"] = accuracy_measures(stats.total)
    out["di_bin"] = disparate_impact(stats, "binary")
    out["di_avg"] = disparate_impact(stats, "average")
    out["cv_bin"] = cv_score(stats, "binary")
    out["cv_avg"] = cv_score(stats, "average")
    for b in BASES:
        for a in AGGREGATIONS:
            for g in GROUPINGS:
                out[f"{b}_{a}_{g}"] = group_conditioned(stats, b, a, g)
    for br in ("pos", "neg"):
        for a in AGGREGATIONS:
            out[f"calib_{br}_{a}"] = calibration(stats, br, a)
    return {name: (None if out[name] is None else float(out[name])) for name in REGISTRY}
