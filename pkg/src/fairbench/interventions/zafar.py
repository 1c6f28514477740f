"""Covariance-constrained logistic regression (accuracy subject to fairness).

Minimizes the L2-regularized logistic loss subject to ``|v . theta| <= c``
where ``v = mean_i (s_i - mean(s)) x_i`` is the covariance direction between
the sensitive attribute and the (standardized, intercept-augmented) features,
and ``c = c_multiplier * |v . theta_unconstrained|``.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from ..learners import (
    TrainedModel,
    check_training_data,
    fit_logreg_weights,
    logreg_gradient,
    logreg_objective,
    sigmoid,
    standardizer,
    with_intercept,
)
from ._common import check_binary_sensitive

C_GRID = tuple(float(c) for c in np.geomspace(0.001, 1.0, 10))


def project_slab(theta, v, c: float) -> np.ndarray:
    """Euclidean projection onto {theta : |v . theta| <= c}."""
    theta = np.asarray(theta, dtype=float)
    v = np.asarray(v, dtype=float)
    a = float(v @ theta)
    if abs(a) <= c:
        return theta.copy()
    return theta - ((a - math.copysign(c, a)) / float(v @ v)) * v


def covariance_direction(A: np.ndarray, s: np.ndarray) -> np.ndarray:
    v = ((s - s.mean())[:, None] * A).mean(axis=0)
    v[-1] = 0.0  # the intercept column has zero covariance with s
    return v


def projected_gradient_descent(objective, gradient, project, theta0, tol, max_iter, step0):
    """Projected gradient with Barzilai-Borwein trial steps and backtracking
    on the projected step.

    Stops when the gradient-mapping norm |theta+ - theta| / step <= tol.
    """
    theta = project(np.asarray(theta0, dtype=float))
    f = objective(theta)
    g = gradient(theta)
    step = step0
    for it in range(max_iter):
        while True:
            cand = project(theta - step * g)
            d = cand - theta
            f_cand = objective(cand)
            if f_cand <= f + g @ d + (d @ d) / (2 * step):
                break
            step *= 0.5
            if step < 1e-20:
                return theta, it
        if np.sqrt(d @ d) / step <= tol:
            return cand, it + 1
        g_new = gradient(cand)
        sy = float(d @ (g_new - g))
        step = float(d @ d) / sy if sy > 0 else min(step * 2.0, 1e6)
        theta, f, g = cand, f_cand, g_new
    return theta, max_iter


def fit_zafar(
    X, sensitive, y, c_multiplier: float, l2: float = 1.0, tol: float = 1e-6, max_iter: int = 5000
) -> TrainedModel:
    if not c_multiplier > 0:
        raise ValueError(f"c_multiplier must be > 0, got {c_multiplier}")
    X, y = check_training_data(X, y)
    s = check_binary_sensitive(sensitive, len(y)).astype(float)
    mean, scale = standardizer(X)
    Z = (X - mean) / scale
    A = with_intercept(Z)
    theta_unc, _ = fit_logreg_weights(Z, y, l2, tol, max_iter)
    v = covariance_direction(A, s)
    cov_unc = abs(float(v @ theta_unc))
    c = c_multiplier * cov_unc
    meta = {
        "c_multiplier": float(c_multiplier),
        "c": c,
        "covariance_unconstrained": cov_unc,
        "l2": float(l2),
        "iterations": 0,
        "notice": "",
    }
    if float(v @ v) < 1e-24:
        msg = "sensitive attribute uncorrelated with every feature; constraint is vacuous"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        meta["notice"] = msg
        theta = theta_unc
    elif cov_unc <= c:
        # unconstrained optimum is feasible, hence optimal
        theta = theta_unc
    else:
        step0 = 4.0 / max(np.sum(A * A), 1e-12)
        theta, iters = projected_gradient_descent(
            lambda t: logreg_objective(t, A, y, l2),
            lambda t: logreg_gradient(t, A, y, l2),
            lambda t: project_slab(t, v, c),
            theta_unc,
            tol,
            max_iter,
            step0,
        )
        meta["iterations"] = iters
    meta["covariance"] = float(v @ theta)
    params = {"w": theta, "mean": mean, "scale": scale, "v": v}
    return TrainedModel("zafar", params, X.shape[1], meta)


def predict_proba_zafar(model: TrainedModel, X) -> np.ndarray:
    X = model.check(X)
    p = model.params
    return sigmoid(with_intercept((X - p["mean"]) / p["scale"]) @ p["w"])


def predict_zafar(model: TrainedModel, X) -> np.ndarray:
    return (predict_proba_zafar(model, X) >= 0.5).astype(np.int64)
