"""Prejudice remover: per-group logistic regression with a mutual-information
style penalty on the dependence between prediction and sensitive group.

Objective over the stacked weights ``theta = [w0, w1]``::

    -sum_i ln M(y_i | x_i, s_i) + eta * R + (l2/2)(|w0|^2 + |w1|^2)
    R = sum_i sum_y M(y | x_i, s_i) ln(P(y | s_i) / P(y))

where P(y|s) and P(y) are means of the model probabilities over the group
and over all rows. Intercepts are not penalized.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from ..learners import (
    TrainedModel,
    check_training_data,
    fit_logreg_weights,
    sigmoid,
    standardizer,
    with_intercept,
)
from ._common import check_binary_sensitive

ETA_GRID = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 30.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0)
_CLIP = 1e-12


class _Problem:
    """Design matrices per group, standardized per group, intercept last."""

    def __init__(self, X, s, y, eta, l2):
        self.eta = float(eta)
        self.l2 = float(l2)
        self.groups = []
        for g in (0, 1):
            rows = s == g
            mean, scale = standardizer(X[rows])
            self.groups.append(
                {
                    "A": with_intercept((X[rows] - mean) / scale),
                    "y": y[rows].astype(float),
                    "mean": mean,
                    "scale": scale,
                }
            )
        self.dim = X.shape[1] + 1
        self.n = len(y)

    def split(self, theta):
        return theta[: self.dim], theta[self.dim :]

    def _probs(self, theta):
        return [sigmoid(G["A"] @ w) for G, w in zip(self.groups, self.split(theta))]

    def _qs(self, probs):
        q_g = [np.clip(p.mean(), _CLIP, 1 - _CLIP) for p in probs]
        q = np.clip(sum(p.sum() for p in probs) / self.n, _CLIP, 1 - _CLIP)
        return q_g, q

    def regularizer(self, theta) -> float:
        probs = self._probs(theta)
        q_g, q = self._qs(probs)
        total = 0.0
        for p, qg in zip(probs, q_g):
            total += np.sum(p * np.log(qg / q) + (1 - p) * np.log((1 - qg) / (1 - q)))
        return float(total)

    def objective(self, theta) -> float:
        nll = 0.0
        penalty = 0.0
        for G, w in zip(self.groups, self.split(theta)):
            z = G["A"] @ w
            nll += np.sum(np.logaddexp(0.0, z) - G["y"] * z)
            penalty += np.dot(w[:-1], w[:-1])
        return float(nll + self.eta * self.regularizer(theta) + 0.5 * self.l2 * penalty)

    def gradient(self, theta) -> np.ndarray:
        probs = self._probs(theta)
        q_g, q = self._qs(probs)
        sums = [p.sum() for p in probs]
        sizes = [len(p) for p in probs]
        # dR/dq: sum over all groups of -S_g/q + (n_g - S_g)/(1 - q)
        dR_dq = sum(-S / q + (m - S) / (1 - q) for S, m in zip(sums, sizes))
        grads = []
        for G, w, p, qg, S, m in zip(self.groups, self.split(theta), probs, q_g, sums, sizes):
            direct = np.log(qg / q) - np.log((1 - qg) / (1 - q))
            dR_dqg = S / qg - (m - S) / (1 - qg)
            dR_dp = direct + dR_dqg / m + dR_dq / self.n
            resid = (p - G["y"]) + self.eta * dR_dp * p * (1 - p)
            g = G["A"].T @ resid
            g[:-1] += self.l2 * w[:-1]
            grads.append(g)
        return np.concatenate(grads)


def _minimize(prob: _Problem, theta0, tol, max_iter):
    """L-BFGS on the analytic gradient; every accepted iterate lowers the objective."""
    history = [prob.objective(theta0)]
    if np.linalg.norm(prob.gradient(theta0)) <= tol:
        return theta0, 0, history

    def fun(theta):
        return prob.objective(theta), prob.gradient(theta)

    res = minimize(
        fun,
        theta0,
        jac=True,
        method="L-BFGS-B",
        callback=lambda xk: history.append(prob.objective(xk)),
        # sup-norm bound that implies |grad|_2 <= tol
        options={"maxiter": max_iter, "gtol": tol / np.sqrt(len(theta0)), "ftol": 0.0, "maxcor": 20},
    )
    return res.x, int(res.nit), history


def fit_prejudice_remover(
    X, sensitive, y, eta: float, l2: float = 1.0, tol: float = 1e-5, max_iter: int = 10000
) -> TrainedModel:
    """Quasi-Newton fit warm-started from the independent per-group L2
    logistic regressions (the eta = 0 solution)."""
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    X, y = check_training_data(X, y)
    s = check_binary_sensitive(sensitive, len(y))
    prob = _Problem(X, s, y, eta, l2)
    starts = []
    for G in prob.groups:
        Z = G["A"][:, :-1]
        if len(np.unique(G["y"])) < 2:
            starts.append(np.zeros(prob.dim))
            continue
        w, _ = fit_logreg_weights(Z, G["y"], l2, min(tol, 1e-6), max_iter)
        starts.append(w)
    theta0 = np.concatenate(starts)
    theta, iters, history = _minimize(prob, theta0, tol, max_iter)
    w0, w1 = prob.split(theta)
    params = {
        "w0": w0,
        "w1": w1,
        "mean0": prob.groups[0]["mean"],
        "scale0": prob.groups[0]["scale"],
        "mean1": prob.groups[1]["mean"],
        "scale1": prob.groups[1]["scale"],
    }
    meta = {"eta": float(eta), "l2": float(l2), "iterations": iters, "objective": history[-1]}
    return TrainedModel("prejudice_remover", params, X.shape[1], meta)


def predict_proba_prejudice_remover(model: TrainedModel, X, sensitive) -> np.ndarray:
    X = model.check(X)
    s = check_binary_sensitive(sensitive, len(X), allow_single=True)
    p = model.params
    out = np.empty(len(X))
    for g in (0, 1):
        rows = s == g
        if rows.any():
            A = with_intercept((X[rows] - p[f"mean{g}"]) / p[f"scale{g}"])
            out[rows] = sigmoid(A @ p[f"w{g}"])
    return out


def predict_prejudice_remover(model: TrainedModel, X, sensitive) -> np.ndarray:
    return (predict_proba_prejudice_remover(model, X, sensitive) >= 0.5).astype(np.int64)
