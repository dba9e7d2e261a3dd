import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression

from attrition_lab.errors import ConfigError, DatasetIntegrityError, NumericalError
from attrition_lab.features import FeatureMatrix, FeatureRegistry
from attrition_lab.learners import (
    ClassifierArtifact,
    auroc,
    evaluate,
    evaluate_scores,
    expand_grid,
    fit_ada_logreg,
    fit_gbt,
    fit_logreg,
    fit_random_forest,
    loss_grad,
    make_split,
    roc_curve,
    single_feature_scan,
    train,
    trapezoid_area,
    tune,
)
from attrition_lab.learners.tuning import capacity_key


def concordance(scores, labels):
    """O(n^2) probability that a random positive outscores a random negative (ties count half)."""
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return total / (len(pos) * len(neg))


def synthetic_matrix(n=400, d=6, seed=0, signal=(2.0, -1.0)):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    logit = X[:, : len(signal)] @ np.array(signal)
    y = (rng.uniform(size=n) < 1 / (1 + np.exp(-logit))).astype(int)
    reg = FeatureRegistry([(f"x{i}", "custom") for i in range(d)])
    return FeatureMatrix([f"S{i:04d}" for i in range(n)], reg, X, y)


def test_gradient_matches_finite_differences(rng):
    X = rng.normal(size=(50, 10))
    y = (rng.uniform(size=50) < 0.4).astype(float)
    w = rng.uniform(0.5, 2.0, size=50)
    for _ in range(5):
        theta = rng.normal(size=11)
        _, g = loss_grad(theta, X, y, 0.3, w)
        h = 1e-6
        fd = np.array([(loss_grad(theta + h * e, X, y, 0.3, w)[0] - loss_grad(theta - h * e, X, y, 0.3, w)[0])
                       / (2 * h) for e in np.eye(11)])
        assert np.max(np.abs(fd - g)) / max(np.max(np.abs(g)), 1e-12) < 1e-6


def test_logreg_matches_sklearn_objective():
    m = synthetic_matrix()
    X, y = m.X(), m.y()
    l2 = 0.05
    ours = fit_logreg(X, y, l2, tol=1e-10)
    Xs = (X - ours.mean) / ours.scale
    # sklearn minimizes 0.5|w|^2 + C * sum(loss); ours is the mean loss + (l2/2)|w|^2
    sk = LogisticRegression(C=1.0 / (l2 * len(y)), tol=1e-12, max_iter=10000).fit(Xs, y)
    np.testing.assert_allclose(ours.coef, sk.coef_[0], atol=1e-5)
    assert ours.intercept == pytest.approx(sk.intercept_[0], abs=1e-5)


def test_gd_and_lbfgs_agree():
    m = synthetic_matrix(seed=1)
    a = fit_logreg(m.X(), m.y(), 0.1, solver="lbfgs", tol=1e-9)
    b = fit_logreg(m.X(), m.y(), 0.1, solver="gd", tol=1e-9, max_iter=20000)
    assert a.converged and b.converged
    np.testing.assert_allclose(a.coef, b.coef, atol=1e-6)


def test_logreg_rejects_bad_settings():
    m = synthetic_matrix(n=60)
    with pytest.raises(ConfigError):
        fit_logreg(m.X(), m.y(), -1.0)
    with pytest.raises(ConfigError):
        fit_logreg(m.X(), m.y(), 1.0, solver="newton")


def test_huge_l2_gives_base_rate():
    m = synthetic_matrix(n=200)
    model = fit_logreg(m.X(), m.y(), 1e6)
    np.testing.assert_allclose(model.predict_proba(m.X()), m.y().mean(), atol=1e-4)


def test_auroc_matches_concordance_with_ties(rng):
    for _ in range(10):
        n = int(rng.integers(2, 200))
        scores = np.round(rng.uniform(size=n), 1)  # coarse scores force ties
        labels = rng.uniform(size=n) < 0.4
        labels[0], labels[1] = True, False
        assert abs(auroc(scores, labels) - concordance(scores, labels)) < 1e-12
        assert abs(trapezoid_area(roc_curve(scores, labels)) - auroc(scores, labels)) < 1e-12


def test_auroc_single_class():
    with pytest.raises(NumericalError):
        auroc([0.1, 0.2], [1, 1])


def test_threshold_metrics():
    rep = evaluate_scores([0.9, 0.6, 0.4, 0.1, 0.5], [1, 0, 1, 0, 0])
    assert rep.confusion == {"tp": 1, "fp": 2, "tn": 1, "fn": 1}
    assert rep.accuracy == pytest.approx(2 / 5)
    assert rep.f1 == pytest.approx(2 / 5)
    assert rep.roc_points[0] == (0.0, 0.0) and rep.roc_points[-1] == (1.0, 1.0)


def test_split_is_deterministic_and_stratified():
    ids = [f"S{i:03d}" for i in range(500)]
    labels = {sid: int(i % 4 == 0) for i, sid in enumerate(ids)}
    a = make_split(ids, 5, labels)
    b = make_split(list(reversed(ids)), 5, labels)
    assert a.to_json() == b.to_json()
    assert len(a.test_ids) == 100
    assert sum(labels[i] for i in a.test_ids) == 25
    sizes = [sum(1 for k in a.folds.values() if k == f) for f in range(1, 11)]
    assert sizes == [40] * 10
    fit, val = a.fold_ids(3)
    assert not set(fit) & set(val) and not set(val) & set(a.test_ids)
    assert make_split(ids, 6, labels).test_ids != a.test_ids


def test_split_rejects_tiny_or_single_class():
    with pytest.raises(ConfigError):
        make_split([f"S{i}" for i in range(10)], 0)
    with pytest.raises(ConfigError):
        make_split([f"S{i}" for i in range(60)], 0, [1] * 60)


def test_gbt_separates_xor():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    model = fit_gbt(X, y, n_trees=50, max_depth=2, learning_rate=0.5, n_iter_no_change=None)
    p = model.predict_proba(X)
    assert np.all((p > 0.5) == (y == 1))
    # a linear model cannot separate the same four points
    lin = fit_logreg(X, y, 1e-6)
    assert np.allclose(lin.predict_proba(X), 0.5, atol=1e-3)


def test_tree_export_matches_sklearn():
    m = synthetic_matrix(n=300)
    ours = fit_random_forest(m.X(), m.y(), seed=4, n_trees=20, max_depth=5)
    sk = RandomForestClassifier(n_estimators=20, max_depth=5, max_features="sqrt", random_state=4,
                                n_jobs=1).fit(m.X(), m.y())
    np.testing.assert_allclose(ours.predict_proba(m.X()), sk.predict_proba(m.X())[:, 1], atol=1e-12)


def test_forest_averaging_reduces_variance():
    m = synthetic_matrix(n=300)
    probe = m.X()[:50]
    single = np.array([fit_random_forest(m.X(), m.y(), seed=s, n_trees=1).predict_proba(probe)
                       for s in range(20)])
    many = np.array([fit_random_forest(m.X(), m.y(), seed=s, n_trees=200).predict_proba(probe)
                     for s in range(20)])
    assert many.var(axis=0).mean() < 0.1 * single.var(axis=0).mean()


def test_depth_zero_trees_predict_base_rate():
    m = synthetic_matrix(n=100)
    rate = m.y().mean()
    rf = fit_random_forest(m.X(), m.y(), n_trees=3, max_depth=0)
    gb = fit_gbt(m.X(), m.y(), n_trees=3, max_depth=0)
    np.testing.assert_allclose(rf.predict_proba(m.X()), rate)
    np.testing.assert_allclose(gb.predict_proba(m.X()), rate)
    with pytest.raises(ConfigError):
        fit_gbt(m.X(), m.y(), n_trees=0)


def test_single_stage_ada_ranks_like_logreg():
    m = synthetic_matrix(seed=2)
    ada = fit_ada_logreg(m.X(), m.y(), stages=1, l2=0.1)
    plain = fit_logreg(m.X(), m.y(), 0.1)
    np.testing.assert_allclose(ada.predict_proba(m.X()), plain.predict_proba(m.X()), atol=1e-12)


def test_ada_stage_weights():
    m = synthetic_matrix(seed=3)
    ada = fit_ada_logreg(m.X(), m.y(), stages=5, l2=0.1)
    for a, e in zip(ada.alphas, ada.errors):
        assert a == pytest.approx(0.5 * np.log((1 - e) / e))
    assert 1 <= len(ada.stages) <= 5


def test_ada_perfect_stage_dominates():
    X = np.array([[-2.0], [-1.0], [1.0], [2.0]] * 10)
    y = (X[:, 0] > 0).astype(int)
    ada = fit_ada_logreg(X, y, stages=4, l2=1e-3)
    assert ada.dominant == 0 and ada.errors == [0.0]
    assert np.all((ada.predict_proba(X) >= 0.5) == (y == 1))


def test_artifact_round_trip_and_fingerprint():
    m = synthetic_matrix()
    ids = m.student_ids[:300]
    for kind, hp in [("logreg", {"l2": 0.1}), ("random_forest", {"n_trees": 5, "max_depth": 3}),
                     ("gbt", {"n_trees": 20, "max_depth": 2, "learning_rate": 0.1}),
                     ("ada_logreg", {"stages": 3, "l2": 0.1})]:
        art = train(m, ids, kind, hp, seed=1)
        back = ClassifierArtifact.from_json(art.to_json())
        np.testing.assert_array_equal(back.predict_proba(m), art.predict_proba(m))
        assert back.parameter_fingerprint() == art.parameter_fingerprint()
    other = FeatureMatrix(m.student_ids, FeatureRegistry([(f"z{i}", "custom") for i in range(6)]),
                          m.values, m.label)
    with pytest.raises(DatasetIntegrityError):
        art.predict_proba(other)
    with pytest.raises(ConfigError):
        train(m, ids, "ada_logreg", {"stages": 2})
    with pytest.raises(ConfigError):
        train(m, ids, "svm", {})


def test_expand_grid_and_capacity():
    pts = expand_grid({"max_depth": [2, 3], "learning_rate": [0.1]})
    assert pts == [{"learning_rate": 0.1, "max_depth": 2}, {"learning_rate": 0.1, "max_depth": 3}]
    assert capacity_key("logreg", {"l2": 10.0}) < capacity_key("logreg", {"l2": 0.1})
    assert capacity_key("random_forest", {"max_depth": 4}) < capacity_key("random_forest", {"max_depth": None})


def test_tuning_prefers_reasonable_l2():
    m = synthetic_matrix(n=500)
    split = make_split(m.student_ids, 0, dict(zip(m.student_ids, m.y())))
    res = tune(m, split, "logreg", {"l2": [1e6, 0.1]})
    assert res.best == {"l2": 0.1}
    assert len(res.fold_auroc[0]) == 10
    assert res.mean_auroc[1] >= res.mean_auroc[0]


def test_tuning_ties_break_toward_simpler():
    m = synthetic_matrix(n=300)
    split = make_split(m.student_ids, 0, dict(zip(m.student_ids, m.y())))
    res = tune(m, split, "random_forest", {"max_depth": [0, 1], "n_trees": [2]})
    # depth 0 scores 0.5 everywhere; depth 1 must do better, so it wins on merit not tie-break
    assert res.best["max_depth"] == 1
    res = tune(m, split, "logreg", {"l2": [1.0, 1.0 + 1e-15]})
    assert res.best == {"l2": 1.0 + 1e-15}


def test_tuning_workers_do_not_change_result():
    m = synthetic_matrix(n=300)
    split = make_split(m.student_ids, 0, dict(zip(m.student_ids, m.y())))
    a = tune(m, split, "logreg", {"l2": [0.01, 1.0]}, workers=1)
    b = tune(m, split, "logreg", {"l2": [0.01, 1.0]}, workers=3)
    assert a.to_json() == b.to_json()


def test_evaluate_uses_test_rows_only():
    m = synthetic_matrix()
    split = make_split(m.student_ids, 0, dict(zip(m.student_ids, m.y())))
    art = train(m, split.train_ids, "logreg", {"l2": 0.1})
    rep = evaluate(art, m, split.test_ids)
    assert rep.n == len(split.test_ids)
    assert rep.auroc == pytest.approx(concordance(art.predict_proba(m, split.test_ids), m.y(split.test_ids)))


def test_scan_ranks_planted_feature_first():
    m = synthetic_matrix(n=600, d=8, signal=(3.0,))
    m.values[:, 5] = 1.0  # constant column
    split = make_split(m.student_ids, 0, dict(zip(m.student_ids, m.y())))
    rows = single_feature_scan(m, split)
    assert rows[0].feature == "x0" and rows[0].rank == 1
    const = next(r for r in rows if r.feature == "x5")
    assert const.constant and const.auroc == 0.5
    assert [r.rank for r in rows] == list(range(1, 9))


def test_scan_slope_matches_full_logreg():
    m = synthetic_matrix(n=400, d=3, signal=(1.5,))
    split = make_split(m.student_ids, 0, dict(zip(m.student_ids, m.y())))
    rows = {r.feature: r for r in single_feature_scan(m, split)}
    X = m.X(split.train_ids)[:, :1]
    ref = fit_logreg(X, m.y(split.train_ids), 0.0, tol=1e-10)
    assert rows["x0"].slope == pytest.approx(ref.coef[0] / ref.scale[0], rel=1e-5)
    assert rows["x0"].intercept == pytest.approx(ref.intercept - ref.coef[0] * ref.mean[0] / ref.scale[0], rel=1e-5)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.booleans()), min_size=2, max_size=60))
def test_auroc_property(pairs):
    scores = np.array([p[0] for p in pairs], dtype=float)
    labels = np.array([p[1] for p in pairs])
    if labels.all() or not labels.any():
        return
    a = auroc(scores, labels)
    assert abs(a - concordance(scores, labels)) < 1e-12
    assert abs(auroc(-scores, labels) - (1 - a)) < 1e-12


@pytest.mark.parametrize("kind", ["logreg", "gbt"])
def test_small_cohort_signal(small_matrix, kind):
    split = make_split(small_matrix.student_ids, 0, dict(zip(small_matrix.student_ids, small_matrix.y())))
    hp = {"l2": 1.0} if kind == "logreg" else {"n_trees": 100, "max_depth": 2, "learning_rate": 0.1}
    art = train(small_matrix, split.train_ids, kind, hp)
    assert evaluate(art, small_matrix, split.test_ids).auroc > 0.7


def test_permutation_invariance_of_auroc(rng):
    s = rng.uniform(size=100)
    y = rng.uniform(size=100) < 0.5
    perm = rng.permutation(100)
    assert auroc(s, y) == auroc(s[perm], y[perm])
    assert list(itertools.islice(roc_curve(s, y), 1)) == [(0.0, 0.0)]
