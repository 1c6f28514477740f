"""Two naive Bayes: one Gaussian naive Bayes per sensitive group, with the
group-conditional class priors nudged until positive rates match."""

from __future__ import annotations

import numpy as np

from ..learners import TrainedModel, check_training_data, fit_gaussian_nb, gnb_posteriors
from ._common import check_binary_sensitive

DELTA = 0.01
TOLERANCE = 0.01
MAX_ITER = 200


def fit_two_naive_bayes(
    X,
    sensitive,
    y,
    beta: float,
    delta: float = DELTA,
    tolerance: float = TOLERANCE,
    max_iter: int = MAX_ITER,
    var_floor: float = 1e-9,
) -> TrainedModel:
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    X, y = check_training_data(X, y)
    s = check_binary_sensitive(sensitive, len(y))
    # a class absent from one group borrows the pooled class statistics
    pooled = fit_gaussian_nb(X, y, var_floor=var_floor)
    params = {}
    borrowed = []
    for g in (0, 1):
        Xg, yg = X[s == g], y[s == g]
        means, variances = pooled["mean"].copy(), pooled["var"].copy()
        for c in (0, 1):
            rows = Xg[yg == c]
            if len(rows):
                means[c] = rows.mean(axis=0)
                variances[c] = np.maximum(rows.var(axis=0), var_floor)
            else:
                borrowed.append(f"s={g},y={c}")
        counts = np.array([np.sum(yg == 0), np.sum(yg == 1)], dtype=float)
        denom = counts.sum() + 2 * beta
        prior = (counts + beta) / denom
        params[f"mean{g}"], params[f"var{g}"], params[f"prior{g}"] = means, variances, prior

    def rates():
        pred = _predict(params, X, s)
        return pred[s == 1].mean() - pred[s == 0].mean()

    initial = diff = float(rates())
    iterations = 0
    while diff > tolerance and iterations < max_iter:
        params["prior1"] = _shift(params["prior1"], -delta)
        params["prior0"] = _shift(params["prior0"], +delta)
        diff = float(rates())
        iterations += 1
    meta = {
        "beta": beta,
        "iterations": iterations,
        "initial_difference": initial,
        "final_difference": diff,
        "borrowed_class_stats": borrowed,
    }
    return TrainedModel("two_nb", params, X.shape[1], meta)


def _shift(prior: np.ndarray, amount: float) -> np.ndarray:
    """Move ``amount`` of mass onto the positive class, then renormalize."""
    p = np.array([prior[0] - amount, prior[1] + amount])
    p = np.clip(p, 0.0, 1.0)
    return p / p.sum()


def _predict(params, X, s) -> np.ndarray:
    return (_proba(params, X, s) >= 0.5).astype(np.int64)


def _proba(params, X, s) -> np.ndarray:
    out = np.empty(len(X))
    for g in (0, 1):
        rows = s == g
        if rows.any():
            gp = {"mean": params[f"mean{g}"], "var": params[f"var{g}"], "prior": params[f"prior{g}"]}
            out[rows] = gnb_posteriors(gp, X[rows])[:, 1]
    return out


def predict_two_nb(model: TrainedModel, X, sensitive) -> np.ndarray:
    X = model.check(X)
    s = check_binary_sensitive(sensitive, len(X), allow_single=True)
    return _predict(model.params, X, s)


def predict_proba_two_nb(model: TrainedModel, X, sensitive) -> np.ndarray:
    X = model.check(X)
    s = check_binary_sensitive(sensitive, len(X), allow_single=True)
    return _proba(model.params, X, s)
