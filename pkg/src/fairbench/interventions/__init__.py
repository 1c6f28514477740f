"""Fairness-enhancing interventions and their tradeoff-parameter grids."""

from __future__ import annotations

from dataclasses import dataclass

from ._common import InterventionError
from .prejudice_remover import (
    ETA_GRID,
    fit_prejudice_remover,
    predict_prejudice_remover,
    predict_proba_prejudice_remover,
)
from .repair import RepairedTable, repair_column, repair_disparate_impact, repair_matrix
from .two_nb import fit_two_naive_bayes, predict_proba_two_nb, predict_two_nb
from .zafar import C_GRID, fit_zafar, predict_zafar, project_slab

KINDS = ("di_remover", "two_nb", "prejudice_remover", "zafar")

LAMBDA_GRID = tuple(round(0.05 * i, 2) for i in range(21))
BETA_GRID = tuple(round(0.1 * i, 1) for i in range(11))

GRIDS = {
    "di_remover": LAMBDA_GRID,
    "two_nb": BETA_GRID,
    "prejudice_remover": ETA_GRID,
    "zafar": C_GRID,
}

# value used when a single run per split is wanted (stability summaries)
DEFAULT_PARAM = {"di_remover": 1.0, "two_nb": 1.0, "prejudice_remover": 1.0, "zafar": 0.001}

# the end of each grid that favours fairness most
MAX_FAIRNESS_PARAM = {"di_remover": 1.0, "two_nb": 1.0, "prejudice_remover": 300.0, "zafar": 0.001}

# interventions that take the sensitive attribute as a binary code
NEEDS_BINARY = ("two_nb", "prejudice_remover", "zafar")


@dataclass(frozen=True)
class InterventionSpec:
    kind: str
    param: float
    base_learner: str | None = None
    l2: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InterventionError(f"unknown intervention {self.kind!r}")
        p = self.param
        if self.kind in ("di_remover", "two_nb") and not 0.0 <= p <= 1.0:
            raise InterventionError(f"{self.kind} parameter must lie in [0, 1], got {p}")
        if self.kind == "prejudice_remover" and p < 0:
            raise InterventionError(f"eta must be >= 0, got {p}")
        if self.kind == "zafar" and not p > 0:
            raise InterventionError(f"c multiplier must be > 0, got {p}")
        if self.l2 < 0:
            raise InterventionError("l2 must be >= 0")
        if self.kind == "di_remover" and self.base_learner is None:
            raise InterventionError("di_remover needs a base learner")


def fit_intervention(spec: InterventionSpec, X, sensitive, y):
    """Fit two_nb, prejudice_remover or zafar (di_remover is a data repair,
    see :func:`repair_disparate_impact`)."""
    if spec.kind == "two_nb":
        return fit_two_naive_bayes(X, sensitive, y, spec.param)
    if spec.kind == "prejudice_remover":
        return fit_prejudice_remover(X, sensitive, y, spec.param, l2=spec.l2)
    if spec.kind == "zafar":
        return fit_zafar(X, sensitive, y, spec.param, l2=spec.l2)
    raise InterventionError(f"{spec.kind} is not fitted through fit_intervention")


def predict_intervention(model, X, sensitive):
    if model.kind == "two_nb":
        return predict_two_nb(model, X, sensitive)
    if model.kind == "prejudice_remover":
        return predict_prejudice_remover(model, X, sensitive)
    if model.kind == "zafar":
        return predict_zafar(model, X)
    raise InterventionError(f"not an intervention model: {model.kind!r}")


__all__ = [
    "KINDS", "GRIDS", "LAMBDA_GRID", "BETA_GRID", "ETA_GRID", "C_GRID", "DEFAULT_PARAM",
    "MAX_FAIRNESS_PARAM", "NEEDS_BINARY", "InterventionSpec", "InterventionError",
    "RepairedTable", "repair_column", "repair_disparate_impact", "repair_matrix",
    "fit_two_naive_bayes", "predict_two_nb", "predict_proba_two_nb",
    "fit_prejudice_remover", "predict_prejudice_remover", "predict_proba_prejudice_remover",
    "fit_zafar", "predict_zafar", "project_slab", "fit_intervention", "predict_intervention",
]
