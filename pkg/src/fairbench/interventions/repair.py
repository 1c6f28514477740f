"""Disparate impact repair by quantile interpolation (geometric repair)."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import rankdata

from ..data import RawTable
from ..preprocess import CODE_SUFFIX, ProcessedTable


class RepairError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RepairedTable:
    table: ProcessedTable
    lam: float
    repaired_columns: list[str]


def within_group_ranks(values: np.ndarray) -> np.ndarray:
    """Quantile rank in [0, 1].

    Ties are broken by row order (earlier row, lower rank), so every group
    sits on the full grid ``i / (n - 1)``. Averaging tied ranks instead would
    pile tied values onto one quantile and leave the groups' repaired
    marginals unequal.
    """
    n = len(values)
    if n == 1:
        return np.zeros(1)
    return (rankdata(values, method="ordinal") - 1.0) / (n - 1)


def repair_column(values, groups, lam: float) -> np.ndarray:
    """Move each value toward the median (over groups) of the group quantile
    functions, evaluated at the value's within-group rank.

    ``lam = 0`` returns the input unchanged, ``lam = 1`` gives every group the
    same marginal distribution.
    """
    if not 0.0 <= lam <= 1.0:
        raise RepairError(f"repair level must lie in [0, 1], got {lam}")
    values = np.asarray(values, dtype=float)
    groups = np.asarray(groups)
    labels = list(dict.fromkeys(groups.tolist()))
    members = [np.nonzero(groups == g)[0] for g in labels]
    if any(len(m) == 0 for m in members):
        raise RepairError("empty sensitive group")
    ranks = np.empty(len(values))
    for idx in members:
        ranks[idx] = within_group_ranks(values[idx])
    quantiles = np.vstack([np.quantile(values[idx], ranks, method="linear") for idx in members])
    target = np.median(quantiles, axis=0)
    if lam == 0.0:
        return values.copy()
    return (1.0 - lam) * values + lam * target


def repairable_columns(pt: ProcessedTable, include_indicators: bool = False) -> list[str]:
    indicator = {c for cols in pt.indicator_columns.values() for c in cols}
    out = []
    for c in pt.schema.columns:
        if c.role != "feature" or c.name.endswith(CODE_SUFFIX):
            continue
        if c.kind != "numeric":
            raise RepairError(f"column {c.name!r} is not numeric; repair needs a numerical variant")
        if c.name in indicator and not include_indicators:
            continue
        out.append(c.name)
    return out


def repair_disparate_impact(
    pt: ProcessedTable, sensitive: str, lam: float, include_indicators: bool = False
) -> RepairedTable:
    """Repair every numeric, non-indicator feature column conditioned on ``sensitive``.

    Labels and sensitive columns are left untouched.
    """
    if pt.variant not in ("numerical", "numerical_binary"):
        raise RepairError(f"repair needs a numerical variant, got {pt.variant!r}")
    if sensitive not in pt.sensitive_names:
        raise RepairError(f"{sensitive!r} is not a sensitive column")
    groups = pt.frame[sensitive].astype(str).to_numpy()
    columns = repairable_columns(pt, include_indicators)
    frame = pt.frame.copy()
    for name in columns:
        frame[name] = repair_column(frame[name].to_numpy(dtype=float), groups, lam)
    table = RawTable(pt.schema, frame, dict(pt.table.report))
    return RepairedTable(replace(pt, table=table), float(lam), columns)


def repair_matrix(X: np.ndarray, groups, lam: float, columns) -> np.ndarray:
    """Repair the given column indices of a feature matrix."""
    X = np.array(X, dtype=float)
    for j in columns:
        X[:, j] = repair_column(X[:, j], groups, lam)
    return X
