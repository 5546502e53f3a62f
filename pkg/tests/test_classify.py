import math

import numpy as np
import pytest
from sklearn.naive_bayes import GaussianNB
from sklearn.svm import SVC

from radiofs.classify import (ClassifierSpec, CvConfig, GaussianNBModel, Kernel, cross_validate,
                              fold_assignment, kkt_violations, model_from_json, model_to_json,
                              nb_predict, nb_train, posterior_from_log_joint, svm_predict,
                              svm_train)
from radiofs.dataset import BENIGN, CLASS_TAGS, MALIGNANT, FeatureMatrix, zscore_normalize
from radiofs.errors import DatasetError, SvmConvergenceError
from radiofs.synthetic import feature_names, planted_matrix

from oracles import svm_dual_active_set

M, B = MALIGNANT, BENIGN


def _m(x, labels):
    x = np.asarray(x, float)
    if x.ndim == 1:
        x = x[:, None]
    return FeatureMatrix(x, feature_names(x.shape[1]), tuple(labels))


def _full_alphas(model, m):
    """Alpha per training sample (0 for non-support vectors)."""
    out = np.zeros(m.n_samples)
    for sv, a in zip(model.support_vectors, model.alphas):
        out[np.flatnonzero((m.values == sv).all(axis=1))[0]] = a
    return out


def _check_trained(model, m):
    y = m.signs().astype(float)
    alphas = _full_alphas(model, m)
    K = model.kernel(m.values, m.values)
    assert kkt_violations(alphas, y, K, model.bias, model.C).max() <= 1e-3
    assert abs(float(alphas @ y)) <= 1e-8
    assert np.all((alphas >= 0) & (alphas <= model.C))


class TestNaiveBayes:
    def test_mle_parameters(self):
        model = nb_train(_m([-1, 1, 3, 5], [M, M, B, B]))
        i_m, i_b = model.classes.index(M), model.classes.index(B)
        np.testing.assert_allclose(model.means[[i_m, i_b], 0], [0, 4])
        np.testing.assert_allclose(model.variances[:, 0], [1, 1], rtol=1e-8)
        np.testing.assert_allclose(model.priors, [0.5, 0.5])

    def test_zero_variance_is_floored(self):
        m = _m([[1, 0], [1, 1], [2, 5], [3, 6]], [M, M, B, B])
        model = nb_train(m)
        floor = 1e-9 * m.values.var(axis=0).max()
        assert model.variances[model.classes.index(M), 0] == pytest.approx(floor)
        _, post = nb_predict(model, np.array([1.0, 0.5]))
        assert all(np.isfinite(v) for v in post.values())

    def _textbook(self):
        return GaussianNBModel(CLASS_TAGS, np.array([0.5, 0.5]), np.array([[0.0], [4.0]]),
                               np.array([[1.0], [1.0]]))

    def test_midpoint_is_even(self):
        label, post = nb_predict(self._textbook(), np.array([2.0]))
        assert post[M] == pytest.approx(0.5, abs=1e-12)
        assert label == M

    def test_closed_form_posterior(self):
        label, post = nb_predict(self._textbook(), np.array([1.0]))
        # log odds (x - 4)^2 / 2 - x^2 / 2 = 8 - 4x
        assert post[M] == pytest.approx(1 / (1 + math.exp(-4.0)), rel=1e-12)
        assert label == M and post[M] > 0.9

    def test_matches_sklearn(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            m = planted_matrix(40, 4, {0: 1.0, 2: -0.5}, seed=int(rng.integers(1e6)))
            model = nb_train(m)
            ref = GaussianNB().fit(m.values, m.labels)
            x = rng.normal(size=(10, 4))
            ours = model.predict_proba(x)[:, [model.classes.index(c) for c in ref.classes_]]
            np.testing.assert_allclose(ours, ref.predict_proba(x), atol=1e-10)

    def test_posteriors_normalized_and_shift_invariant(self):
        rng = np.random.default_rng(1)
        lj = rng.normal(scale=50, size=(100, 2))
        post = posterior_from_log_joint(lj)
        np.testing.assert_allclose(post.sum(axis=1), 1.0, atol=1e-12)
        shifted = posterior_from_log_joint(lj + rng.normal(scale=1e3, size=(100, 1)))
        np.testing.assert_allclose(shifted, post, atol=1e-12)


class TestSvm:
    def test_two_point_problem(self):
        model = svm_train(_m([-1, 1], [B, M]), C=100.0)
        np.testing.assert_allclose(model.alphas, [0.5, 0.5], atol=1e-9)
        assert model.bias == pytest.approx(0.0, abs=1e-9)
        assert model.decision_function([[-0.5]])[0] < 0
        assert svm_predict(model, np.array([0.7])) == M

    def test_xor(self):
        x = [[0, 0], [1, 1], [0, 1], [1, 0]]
        m = _m(x, [M, M, B, B])
        linear = svm_train(m, C=1.0)
        assert np.mean(np.array(linear.predict(m.values)) == np.array(m.labels)) < 1.0
        rbf = svm_train(m, Kernel("rbf", 1.0), C=10.0)
        assert rbf.predict(m.values) == list(m.labels)

    @pytest.mark.parametrize("C", [0.5, 10.0])
    def test_dual_matches_active_set_oracle(self, C):
        rng = np.random.default_rng(2)
        for _ in range(50):
            x = rng.normal(size=(4, 2))
            labels = [M, B, M, B]
            m = _m(x, labels)
            y = m.signs().astype(float)
            want_alpha, want_bias = svm_dual_active_set(x, y, C)
            # dual accuracy follows the stopping tolerance
            model = svm_train(m, C=C, tol=1e-6)
            np.testing.assert_allclose(_full_alphas(model, m), want_alpha, atol=1e-4)
            _check_trained(model, m)

    def test_margin_support_vectors(self):
        rng = np.random.default_rng(3)
        for seed in range(5):
            m, _ = zscore_normalize(planted_matrix(80, 3, {0: 1.5}, seed=seed))
            model = svm_train(m, C=1.0)
            free = (model.alphas > 1e-8) & (model.alphas < model.C - 1e-8)
            yf = model.sv_labels[free] * model.decision_function(model.support_vectors[free])
            np.testing.assert_allclose(yf, 1.0, atol=1e-2)
            _check_trained(model, m)

    def test_hard_margin_separable(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(60, 2))
        x[:30, 0] += 3.0
        x[30:, 0] -= 3.0
        m = _m(x, [M] * 30 + [B] * 30)
        model = svm_train(m, C=1e6)
        assert model.predict(m.values) == list(m.labels)
        _check_trained(model, m)

    def test_order_invariance(self):
        rng = np.random.default_rng(5)
        m, _ = zscore_normalize(planted_matrix(100, 4, {0: 1.0, 1: 0.5}, seed=6))
        perm = rng.permutation(m.n_samples)
        a = svm_train(m, seed=1)
        b = svm_train(m.take_samples(perm), seed=2)
        x = rng.normal(size=(200, 4))
        fa, fb = a.decision_function(x), b.decision_function(x)
        np.testing.assert_allclose(fa, fb, atol=5e-3)
        clear = np.abs(fa) > 1e-2
        assert np.array_equal(fa[clear] >= 0, fb[clear] >= 0)

    @pytest.mark.parametrize("kernel", [Kernel(), Kernel("rbf")], ids=["linear", "rbf"])
    def test_agrees_with_libsvm(self, kernel):
        rng = np.random.default_rng(7)
        for seed in range(5):
            m, _ = zscore_normalize(planted_matrix(120, 5, {0: 1.0, 3: 0.7}, seed=seed))
            model = svm_train(m, kernel, C=1.0)
            gamma = kernel.resolved(5).gamma or "scale"
            ref = SVC(kernel=kernel.name, C=1.0, gamma=gamma, tol=1e-6).fit(m.values, m.signs())
            x = rng.normal(size=(50, 5))
            np.testing.assert_allclose(model.decision_function(x), ref.decision_function(x),
                                       atol=2e-2)

    def test_iteration_budget(self):
        m, _ = zscore_normalize(planted_matrix(60, 3, {0: 0.5}, seed=8))
        with pytest.raises(SvmConvergenceError) as err:
            svm_train(m, C=10.0, max_passes=0)
        assert err.value.max_violation > 1e-3

    def test_rbf_gamma_default(self):
        assert Kernel("rbf").resolved(4).gamma == 0.25
        with pytest.raises(ValueError):
            Kernel("poly")


class TestModelJson:
    def test_svm_round_trip(self):
        m, rec = zscore_normalize(planted_matrix(50, 3, {0: 1.0}, seed=9))
        model = svm_train(m, Kernel("rbf", 0.5), C=2.0)
        back, norm = model_from_json(model_to_json(model, rec))
        x = np.random.default_rng(0).normal(size=(20, 3))
        np.testing.assert_array_equal(back.decision_function(x), model.decision_function(x))
        np.testing.assert_array_equal(norm.mean, rec.mean)

    def test_nb_round_trip(self):
        model = nb_train(planted_matrix(50, 3, {0: 1.0}, seed=10))
        back, norm = model_from_json(model_to_json(model))
        x = np.random.default_rng(1).normal(size=(20, 3))
        np.testing.assert_array_equal(back.predict_proba(x), model.predict_proba(x))
        assert norm is None

    def test_rejects_foreign_documents(self):
        with pytest.raises(ValueError):
            model_from_json('{"format": "other"}')


class TestCrossValidation:
    def test_equal_fold_sizes(self):
        labels = [M] * 100 + [B] * 100
        folds = fold_assignment(labels, CvConfig(10, seed=0))
        assert np.bincount(folds).tolist() == [20] * 10

    def test_imbalanced_cohort_strata(self):
        labels = [M] * 165 + [B] * 35
        folds = fold_assignment(labels, CvConfig(10, seed=3))
        assert np.bincount(folds).tolist() == [20] * 10
        benign = np.bincount(folds[165:], minlength=10)
        assert set(benign.tolist()) <= {3, 4}

    def test_deterministic(self):
        labels = [M] * 30 + [B] * 20
        a = fold_assignment(labels, CvConfig(5, seed=11))
        b = fold_assignment(labels, CvConfig(5, seed=11))
        np.testing.assert_array_equal(a, b)

    def test_folds_partition_samples(self):
        m = planted_matrix(57, 2, {0: 1.0}, seed=12)
        res = cross_validate(m, ClassifierSpec("nb"), CvConfig(5, seed=1))
        members = [set(np.flatnonzero(np.array(res.fold_of) == f)) for f in range(5)]
        assert set().union(*members) == set(range(57))
        assert sum(len(s) for s in members) == 57
        assert res.pooled.total == 57
        assert sum(c.total for c in res.fold_confusions) == 57

    def test_too_many_folds(self):
        with pytest.raises(DatasetError):
            fold_assignment([M] * 20 + [B] * 3, CvConfig(5))

    def test_unstratified(self):
        folds = fold_assignment([M] * 13 + [B] * 2, CvConfig(5, stratified=False))
        assert np.bincount(folds).tolist() == [3] * 5

    def test_svm_cv_metrics_in_range(self):
        m, _ = zscore_normalize(planted_matrix(100, 3, {0: 2.0}, seed=13))
        res = cross_validate(m, ClassifierSpec("svm"), CvConfig(10, seed=2))
        assert res.pooled_metrics.accuracy > 0.8
        for v in res.mean_metrics.as_tuple():
            assert v is None or 0 <= v <= 1
