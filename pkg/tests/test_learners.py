import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairbench import learners
from fairbench.learners import LearnerError, fit, predict, predict_proba


def separable(seed=0, n=20):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, 2))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(int)
    # push points away from the boundary so a margin exists
    X += 0.3 * np.where(y[:, None] == 1, 1.0, -1.0) * np.array([1.0, 0.5])
    return X, y


def blobs(seed=0, n=400, sep=3.0):
    rng = np.random.default_rng(seed)
    y = (np.arange(n) % 2).astype(int)
    X = rng.normal(size=(n, 2)) + np.where(y[:, None] == 1, sep, -sep)
    return X, y


def test_logreg_separates_linear_data():
    X, y = separable()
    m = fit("logreg", X, y)
    assert np.mean(predict(m, X) == y) == 1.0


def test_gnb_on_far_apart_gaussians():
    X, y = blobs()
    m = fit("gnb", X, y)
    assert np.mean(predict(m, X) == y) >= 0.99


def test_depth_zero_tree_predicts_majority():
    X, y = blobs(n=41)
    m = fit("tree", X, y, {"max_depth": 0})
    assert set(predict(m, X)) == {int(y.mean() >= 0.5)}


@pytest.mark.parametrize("kind", learners.KINDS)
def test_empty_input_and_determinism(kind):
    X, y = blobs(n=60, sep=1.0)
    m = fit(kind, X, y)
    assert predict(m, np.zeros((0, 2))).shape == (0,)
    assert np.array_equal(predict(m, X), predict(m, X))


@pytest.mark.parametrize("kind", learners.KINDS)
def test_shape_mismatch_rejected(kind):
    X, y = blobs(n=60)
    m = fit(kind, X, y)
    with pytest.raises(LearnerError):
        predict(m, np.zeros((3, 3)))


def test_training_errors():
    X = np.ones((4, 2))
    with pytest.raises(LearnerError, match="single class"):
        fit("logreg", X, [1, 1, 1, 1])
    with pytest.raises(LearnerError, match="non-finite"):
        fit("gnb", np.array([[np.nan], [1.0]]), [0, 1])
    with pytest.raises(LearnerError):
        fit("forest", X, [0, 1, 0, 1])


def test_gnb_posteriors_sum_to_one():
    X, y = blobs(sep=0.5)
    m = fit("gnb", X, y)
    post = learners.gnb_posteriors(m, X)
    assert np.allclose(post.sum(axis=1), 1.0)


def test_zero_weight_logreg_is_one_half():
    X, y = blobs(n=30)
    m = fit("logreg", X, y)
    zero = learners.TrainedModel("logreg", {**m.params, "w": np.zeros(3)}, 2)
    assert np.all(predict_proba(zero, X) == 0.5)
    # ties go to the positive class
    assert np.all(predict(zero, X) == 1)


@pytest.mark.parametrize("kind", ["gnb", "logreg"])
def test_proba_range_and_threshold_consistency(kind):
    X, y = blobs(sep=0.7)
    m = fit(kind, X, y)
    rng = np.random.default_rng(4)
    Xr = rng.normal(scale=3, size=(1000, 2))
    p = predict_proba(m, Xr)
    assert np.all((p >= 0) & (p <= 1))
    assert np.array_equal(predict(m, Xr), (p >= 0.5).astype(int))


@pytest.mark.parametrize("kind", ["tree", "linear_svm"])
def test_proba_unsupported(kind):
    X, y = blobs(n=40)
    with pytest.raises(LearnerError):
        predict_proba(fit(kind, X, y), X)


def test_logreg_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    A = learners.with_intercept(rng.normal(size=(50, 4)))
    y = rng.integers(0, 2, 50)
    for _ in range(10):
        w = rng.normal(size=5)
        g = learners.logreg_gradient(w, A, y, 1.0)
        h = 1e-6
        fd = np.array([
            (learners.logreg_objective(w + h * e, A, y, 1.0) - learners.logreg_objective(w - h * e, A, y, 1.0)) / (2 * h)
            for e in np.eye(5)
        ])
        assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-5


def test_logreg_converges_to_tolerance():
    X, y = blobs(n=300, sep=0.5)
    m = fit("logreg", X, y)
    assert m.meta["iterations"] < 5000
    A = learners.with_intercept((X - m.params["mean"]) / m.params["scale"])
    assert np.linalg.norm(learners.logreg_gradient(m.params["w"], A, y, 1.0)) <= 1e-6


def test_gradient_descent_is_monotone():
    rng = np.random.default_rng(2)
    A = learners.with_intercept(rng.normal(size=(80, 3)) * [1, 10, 100])
    y = rng.integers(0, 2, 80)
    _, _, hist = learners.gradient_descent(
        lambda w: learners.logreg_objective(w, A, y, 1.0),
        lambda w: learners.logreg_gradient(w, A, y, 1.0),
        np.zeros(4), 1e-6, 5000, 1e-4,
    )
    assert all(b <= a for a, b in zip(hist, hist[1:]))


def test_gnb_variance_floor():
    X = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]])
    m = fit("gnb", X, [0, 0, 1, 1])
    assert m.params["var"][0, 0] == 1e-9


def test_gnb_ignores_constant_zero_column():
    X, y = blobs(sep=0.4)
    a = predict(fit("gnb", X, y), X)
    X0 = np.column_stack([X, np.zeros(len(X))])
    b = predict(fit("gnb", X0, y), X0)
    assert np.array_equal(a, b)


def _leaf_ids(model, X):
    p = model.params
    feature, left, right = (p[k].astype(int) for k in ("feature", "left", "right"))
    ids = []
    for row in X:
        node = 0
        while feature[node] >= 0:
            node = left[node] if row[feature[node]] <= p["threshold"][node] else right[node]
        ids.append(node)
    return np.array(ids)


def test_tree_respects_min_leaf_and_depth():
    X, y = blobs(n=200, sep=0.3)
    m = fit("tree", X, y, {"max_depth": 3, "min_leaf": 20})
    _, sizes = np.unique(_leaf_ids(m, X), return_counts=True)
    assert sizes.min() >= 20
    # a depth-3 binary tree has at most 15 nodes
    assert len(m.params["feature"]) <= 15


def test_tree_fits_axis_aligned_rule():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(200, 3))
    y = ((X[:, 1] > 0.4) & (X[:, 2] < 0.7)).astype(int)
    m = fit("tree", X, y)
    assert np.mean(predict(m, X) == y) == 1.0


def test_linear_svm_separates():
    X, y = separable(seed=3, n=60)
    m = fit("linear_svm", X, y)
    assert np.mean(predict(m, X) == y) >= 0.95


@pytest.mark.parametrize("kind", learners.KINDS)
def test_serialization_round_trip(kind):
    X, y = blobs(n=80, sep=0.5)
    m = fit(kind, X, y)
    text = learners.model_to_text(m)
    back = learners.model_from_text(text)
    assert learners.model_to_text(back) == text
    assert np.array_equal(predict(back, X), predict(m, X))


def test_model_text_rejects_unknown_format():
    with pytest.raises(LearnerError):
        learners.model_from_text("something-else\n")


@pytest.mark.parametrize("kind", learners.KINDS)
def test_row_permutation_invariance(kind):
    X, y = blobs(n=120, sep=0.6, seed=5)
    perm = np.random.default_rng(9).permutation(len(y))
    Xt = np.random.default_rng(1).normal(size=(300, 2))
    a = fit(kind, X, y)
    b = fit(kind, X[perm], y[perm])
    if kind in ("gnb", "logreg"):
        assert np.allclose(predict_proba(a, Xt), predict_proba(b, Xt), atol=1e-6)
    assert np.mean(predict(a, Xt) == predict(b, Xt)) >= 0.99


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), kind=st.sampled_from(learners.KINDS))
def test_predictions_are_binary(seed, kind):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 3))
    y = np.r_[0, 1, rng.integers(0, 2, 28)]
    p = predict(fit(kind, X, y), X)
    assert set(np.unique(p)) <= {0, 1}
