"""Baseline classifiers with a uniform fit / predict contract.

Every learner works on a dense float matrix. Ties at probability 0.5 go to
the positive class. Logistic regression and the linear SVM standardize
features internally and carry an unpenalized intercept.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

KINDS = ("gnb", "logreg", "tree", "linear_svm")
FORMAT_TAG = "fairbench-model/1"

DEFAULT_HYPER = {
    "gnb": {"var_floor": 1e-9},
    "logreg": {"l2": 1.0, "tol": 1e-6, "max_iter": 5000},
    "tree": {"max_depth": 8, "min_leaf": 5},
    "linear_svm": {"l2": 1e-3, "epochs": 300},
}


class LearnerError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TrainedModel:
    kind: str
    params: dict[str, np.ndarray]
    feature_count: int
    meta: dict = field(default_factory=dict)

    def check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise LearnerError("expected a 2-d feature matrix")
        if X.shape[1] != self.feature_count:
            raise LearnerError(f"model expects {self.feature_count} columns, got {X.shape[1]}")
        return X


def check_training_data(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[1] < 1:
        raise LearnerError("X must be a 2-d matrix with at least one column")
    if len(y) != X.shape[0]:
        raise LearnerError("X and y lengths differ")
    if not np.all(np.isfinite(X)):
        raise LearnerError("X contains non-finite values")
    if not set(np.unique(y)).issubset({0, 1}):
        raise LearnerError("y must be binary 0/1")
    if len(np.unique(y)) < 2:
        raise LearnerError("training labels contain a single class")
    return X, y.astype(np.int64)


def fit(kind: str, X, y, hyper: dict | None = None) -> TrainedModel:
    if kind not in KINDS:
        raise LearnerError(f"unknown learner kind {kind!r}")
    settings = dict(DEFAULT_HYPER[kind])
    settings.update(hyper or {})
    X, y = check_training_data(X, y)
    return _FITTERS[kind](X, y, settings)


def predict(model: TrainedModel, X) -> np.ndarray:
    X = model.check(X)
    if X.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    if model.kind in ("gnb", "logreg"):
        return (predict_proba(model, X) >= 0.5).astype(np.int64)
    if model.kind == "tree":
        return (_tree_leaf_values(model, X) >= 0.5).astype(np.int64)
    if model.kind == "linear_svm":
        return (_svm_margin(model, X) >= 0).astype(np.int64)
    raise LearnerError(f"predict does not handle kind {model.kind!r}")


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    """P[y=1 | x]; only for gnb and logreg."""
    X = model.check(X)
    if model.kind == "gnb":
        return gnb_posteriors(model, X)[:, 1]
    if model.kind == "logreg":
        return sigmoid(logreg_decision(model.params, X))
    raise LearnerError(f"predict_proba is not available for {model.kind!r}")


# ---------------------------------------------------------------- shared helpers


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def with_intercept(Z: np.ndarray) -> np.ndarray:
    return np.column_stack([Z, np.ones(len(Z))])


# ---------------------------------------------------------------- gaussian naive bayes


def fit_gaussian_nb(X, y, var_floor=1e-9, priors=None):
    means = np.vstack([X[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.vstack([X[y == c].var(axis=0) for c in (0, 1)])
    variances = np.maximum(variances, var_floor)
    if priors is None:
        priors = np.array([np.mean(y == 0), np.mean(y == 1)])
    return {"mean": means, "var": variances, "prior": np.asarray(priors, dtype=float)}


def _fit_gnb(X, y, hyper) -> TrainedModel:
    params = fit_gaussian_nb(X, y, var_floor=float(hyper["var_floor"]))
    return TrainedModel("gnb", params, X.shape[1], {"hyper": hyper})


def gnb_log_joint(params, X) -> np.ndarray:
    mean, var, prior = params["mean"], params["var"], params["prior"]
    out = np.empty((len(X), 2))
    for c in (0, 1):
        ll = -0.5 * np.sum(np.log(2 * np.pi * var[c]) + (X - mean[c]) ** 2 / var[c], axis=1)
        with np.errstate(divide="ignore"):
            out[:, c] = ll + np.log(prior[c])
    return out


def gnb_posteriors(model_or_params, X) -> np.ndarray:
    params = model_or_params.params if isinstance(model_or_params, TrainedModel) else model_or_params
    joint = gnb_log_joint(params, X)
    joint -= joint.max(axis=1, keepdims=True)
    p = np.exp(joint)
    return p / p.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------- logistic regression


def logreg_objective(w, A, y, l2) -> float:
    """Sum of negative log-likelihoods plus (l2/2)||w||^2, intercept (last) unpenalized."""
    z = A @ w
    return float(np.sum(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(w[:-1], w[:-1]))


def logreg_gradient(w, A, y, l2) -> np.ndarray:
    g = A.T @ (sigmoid(A @ w) - y)
    g[:-1] += l2 * w[:-1]
    return g


def gradient_descent(objective, gradient, w0, tol, max_iter, step0=1.0):
    """Full-batch gradient descent with Armijo backtracking.

    The trial step is the Barzilai-Borwein step s.s / s.y from the previous
    move (``step0`` on the first iteration); backtracking halves it until
    the Armijo condition holds, so the objective never increases.
    Returns (w, iterations, history of objective values).
    """
    w = np.array(w0, dtype=float)
    f = objective(w)
    g = gradient(w)
    history = [f]
    step = step0
    for it in range(max_iter):
        gnorm2 = float(np.dot(g, g))
        if np.sqrt(gnorm2) <= tol:
            return w, it, history
        while True:
            w_new = w - step * g
            f_new = objective(w_new)
            if f_new <= f - 0.5 * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-20:
                # no decrease representable in floating point
                return w, it, history
        g_new = gradient(w_new)
        s, dg = w_new - w, g_new - g
        sy = float(np.dot(s, dg))
        step = float(np.dot(s, s)) / sy if sy > 0 else min(step * 2.0, 1e6)
        w, f, g = w_new, f_new, g_new
        history.append(f)
    return w, max_iter, history


def fit_logreg_weights(Z, y, l2, tol, max_iter, w0=None):
    """Weights on an already standardized matrix ``Z`` (intercept appended inside)."""
    A = with_intercept(Z)
    if w0 is None:
        w0 = np.zeros(A.shape[1])
    # curvature of the logistic loss is at most n * ||A||^2 / 4
    step0 = 4.0 / max(np.sum(A * A), 1e-12)
    w, iters, _ = gradient_descent(
        lambda w: logreg_objective(w, A, y, l2),
        lambda w: logreg_gradient(w, A, y, l2),
        w0,
        tol,
        max_iter,
        step0=step0,
    )
    return w, iters


def _fit_logreg(X, y, hyper) -> TrainedModel:
    mean, scale = standardizer(X)
    w, iters = fit_logreg_weights((X - mean) / scale, y, float(hyper["l2"]), float(hyper["tol"]), int(hyper["max_iter"]))
    params = {"w": w, "mean": mean, "scale": scale}
    return TrainedModel("logreg", params, X.shape[1], {"hyper": hyper, "iterations": iters})


def logreg_decision(params, X) -> np.ndarray:
    Z = (X - params["mean"]) / params["scale"]
    return with_intercept(Z) @ params["w"]


# ---------------------------------------------------------------- CART tree


def _best_split(X, y, min_leaf):
    """Lowest weighted Gini split; ties resolved by feature index then threshold."""
    n, d = X.shape
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    ys = y[order]
    pos_left = np.cumsum(ys, axis=0)[:-1]
    n_left = np.arange(1, n)[:, None].astype(float)
    n_right = n - n_left
    pos_total = ys.sum(axis=0)[None, :]
    pos_right = pos_total - pos_left
    p_l = pos_left / n_left
    p_r = pos_right / n_right
    # weighted impurity (times n): n_l * 2 p_l (1 - p_l) + n_r * 2 p_r (1 - p_r)
    score = n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    score = np.where(valid, score, np.inf)
    best_per_feature = score.min(axis=0)
    j = int(np.argmin(best_per_feature))
    k = int(np.argmin(score[:, j]))
    threshold = 0.5 * (xs[k, j] + xs[k + 1, j])
    return j, threshold, float(score[k, j])


def _fit_tree(X, y, hyper) -> TrainedModel:
    max_depth = int(hyper["max_depth"])
    min_leaf = int(hyper["min_leaf"])
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(idx, depth):
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        yi = y[idx]
        value.append(float(yi.mean()))
        n = len(idx)
        parent = n * 2 * value[node] * (1 - value[node])
        if depth >= max_depth or n < 2 * min_leaf or parent == 0.0:
            return node
        found = _best_split(X[idx], yi, min_leaf)
        if found is None or found[2] >= parent - 1e-12:
            return node
        j, thr, _ = found
        go_left = X[idx, j] <= thr
        feature[node] = j
        threshold[node] = thr
        left[node] = grow(idx[go_left], depth + 1)
        right[node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.arange(len(y)), 0)
    params = {
        "feature": np.array(feature, dtype=float),
        "threshold": np.array(threshold, dtype=float),
        "left": np.array(left, dtype=float),
        "right": np.array(right, dtype=float),
        "value": np.array(value, dtype=float),
    }
    return TrainedModel("tree", params, X.shape[1], {"hyper": hyper})


def _tree_leaf_values(model, X) -> np.ndarray:
    p = model.params
    feature = p["feature"].astype(int)
    left = p["left"].astype(int)
    right = p["right"].astype(int)
    node = np.zeros(len(X), dtype=int)
    active = feature[node] >= 0
    while active.any():
        rows = np.nonzero(active)[0]
        nd = node[rows]
        go_left = X[rows, feature[nd]] <= p["threshold"][nd]
        node[rows] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return p["value"][node]


# ---------------------------------------------------------------- linear SVM


def svm_objective(w, A, ys, l2) -> float:
    hinge = np.maximum(0.0, 1.0 - ys * (A @ w))
    return float(0.5 * l2 * np.dot(w[:-1], w[:-1]) + hinge.mean())


def _fit_svm(X, y, hyper) -> TrainedModel:
    l2 = float(hyper["l2"])
    epochs = int(hyper["epochs"])
    mean, scale = standardizer(X)
    A = with_intercept((X - mean) / scale)
    ys = 2.0 * y - 1.0
    n = len(y)
    w = np.zeros(A.shape[1])
    best_w, best_f = w.copy(), svm_objective(w, A, ys, l2)
    for t in range(1, epochs + 1):
        active = ys * (A @ w) < 1.0
        g = -(A[active].T @ ys[active]) / n
        g[:-1] += l2 * w[:-1]
        w = w - g / (l2 * (t + 1))
        f = svm_objective(w, A, ys, l2)
        if f < best_f:
            best_w, best_f = w.copy(), f
    params = {"w": best_w, "mean": mean, "scale": scale}
    return TrainedModel("linear_svm", params, X.shape[1], {"hyper": hyper, "objective": best_f})


def _svm_margin(model, X) -> np.ndarray:
    p = model.params
    return with_intercept((X - p["mean"]) / p["scale"]) @ p["w"]


_FITTERS = {"gnb": _fit_gnb, "logreg": _fit_logreg, "tree": _fit_tree, "linear_svm": _fit_svm}


# ---------------------------------------------------------------- serialization


def model_to_text(model: TrainedModel) -> str:
    lines = [
        FORMAT_TAG,
        f"kind {model.kind}",
        f"feature_count {model.feature_count}",
        "meta " + json.dumps(model.meta, sort_keys=True, default=_jsonable),
    ]
    for name in sorted(model.params):
        arr = np.asarray(model.params[name], dtype=float)
        shape = ",".join(str(s) for s in arr.shape) or "scalar"
        values = " ".join(repr(float(v)) for v in arr.ravel())
        lines.append(f"param {name} {shape} {values}".rstrip())
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> TrainedModel:
    lines = text.splitlines()
    if not lines or lines[0] != FORMAT_TAG:
        raise LearnerError(f"not a {FORMAT_TAG} file")
    kind = lines[1].split(" ", 1)[1]
    feature_count = int(lines[2].split(" ", 1)[1])
    meta = json.loads(lines[3].split(" ", 1)[1])
    params = {}
    for line in lines[4:]:
        parts = line.split(" ")
        name, shape = parts[1], parts[2]
        values = np.array([float(v) for v in parts[3:]], dtype=float)
        dims = () if shape == "scalar" else tuple(int(s) for s in shape.split(","))
        params[name] = values.reshape(dims)
    return TrainedModel(kind, params, feature_count, meta)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj))
