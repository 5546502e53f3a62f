"""The nine acceptance criteria, each with its tolerance and runtime budget.

A summary line per criterion is printed at the end of the pytest run.
"""
import json
import time

import numpy as np
import pytest
from scipy import special

from radiofs.anova import f_pvalue, f_statistic
from radiofs.classify import Kernel, kkt_violations, svm_train
from radiofs.dataset import BENIGN, MALIGNANT, FeatureMatrix, zscore_normalize
from radiofs.experiment import ExperimentConfig, family_scores, run_sweep
from radiofs.fusion import SUPERVISED, UNSUPERVISED, average_ranks, fuse, scores_to_ranks
from radiofs.metrics import ConfusionMatrix, evaluate
from radiofs.radiomics import (LabeledVolume, discretize, gldm, glszm, sdhgle, sdlge,
                               surface_volume_ratio, zone_variance)
from radiofs.rank_supervised import relieff_weights
from radiofs.rank_unsupervised import knn_graph, laplacian_scores
from radiofs.synthetic import demo_cohorts, feature_names, planted_ranking_dataset

from oracles import (glszm_bruteforce, gldm_bruteforce, laplacian_score_pairwise,
                     matrix_to_counts, pooled_t, relieff_bruteforce, svm_dual_active_set)

M, B = MALIGNANT, BENIGN


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, \
                f"took {self.elapsed:.2f} s, budget {self.seconds} s"


def _labelled(x, labels):
    x = np.asarray(x, float)
    return FeatureMatrix(x, feature_names(x.shape[1]), tuple(labels))


def _two_class_labels(rng, n):
    """Random labels with at least two samples in each class."""
    labels = [M, M, B, B] + [M if rng.random() < 0.5 else B for _ in range(n - 4)]
    rng.shuffle(labels)
    return labels


@pytest.mark.acceptance(1, title="rank-fusion fixtures reproduce printed averages")
def test_rank_fusion_fixtures():
    rows = [((18, 4, 2), 8.0, SUPERVISED), ((40, 3, 3), 15.33333, UNSUPERVISED),
            ((3, 2, 43), 16.0, UNSUPERVISED), ((29, 1, 19), 16.33333, UNSUPERVISED),
            ((21, 21, 21), 21.0, UNSUPERVISED)]
    with Budget(1.0):
        for ranks, printed, family in rows:
            rl = average_ranks(["feature"], [[r] for r in ranks], family)
            assert abs(rl.entries[0].average - printed) <= 1e-4


@pytest.mark.acceptance(2, title="metric fixtures reproduce reported percentages")
def test_metric_fixtures():
    cases = [(ConfusionMatrix(tp=50, fn=0, tn=27, fp=2), (97.468, 100.0, 93.1)),
             (ConfusionMatrix(tp=23, fn=27, tn=29, fp=0), (65.82, 46.0, 100.0))]
    with Budget(1.0):
        for cm, reported in cases:
            got = [100 * v for v in evaluate(cm).as_tuple()]
            np.testing.assert_allclose(got, reported, rtol=0, atol=0.05)


@pytest.mark.acceptance(3, title="ANOVA F equals pooled t^2, p-values match incomplete beta")
def test_anova_against_t_test():
    rng = np.random.default_rng(2024)
    with Budget(5.0):
        for _ in range(500):
            a = rng.normal(0, rng.uniform(0.5, 2), rng.integers(2, 40))
            b = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2), rng.integers(2, 40))
            f = f_statistic([a, b])
            t = pooled_t(a, b)
            assert abs(f - t * t) <= 1e-9 * max(t * t, 1e-300)
            df2 = len(a) + len(b) - 2
            # two-sided t tail written as an incomplete beta function
            want = special.betainc(df2 / 2, 0.5, df2 / (df2 + t * t))
            assert abs(f_pvalue(f, 1, df2) - want) <= 1e-6


@pytest.mark.acceptance(4, title="ReliefF equals brute-force oracle")
def test_relieff_oracle():
    rng = np.random.default_rng(7)
    with Budget(5.0):
        for _ in range(200):
            n = int(rng.integers(4, 11))
            labels = _two_class_labels(rng, n)
            smallest = min(labels.count(M), labels.count(B))
            k = int(rng.integers(1, min(3, smallest - 1) + 1))
            m = _labelled(rng.normal(size=(n, int(rng.integers(1, 5)))), labels)
            got = relieff_weights(m, k=k).scores
            want = relieff_bruteforce(m.values, m.labels, k)
            np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


@pytest.mark.acceptance(5, title="Laplacian scores match dense-formula oracle")
def test_laplacian_oracle():
    rng = np.random.default_rng(11)
    with Budget(5.0):
        for _ in range(200):
            n = int(rng.integers(3, 13))
            x = rng.normal(size=(n, int(rng.integers(1, 5))))
            m = FeatureMatrix(x, feature_names(x.shape[1]), None)
            g = knn_graph(m, int(rng.integers(1, n)))
            got = laplacian_scores(m, g).scores
            want = [laplacian_score_pairwise(x[:, j], g.weights) for j in range(x.shape[1])]
            np.testing.assert_allclose(got, want, rtol=1e-9, atol=0)


@pytest.mark.acceptance(6, title="planted informative features are recovered")
def test_planted_recovery():
    informative = {"feature_00", "feature_01"}
    top4 = {"fisher": 0, "relieff": 0, "nca": 0}
    fused_hits = 0
    with Budget(60.0):
        for seed in range(100):
            m, _ = zscore_normalize(planted_ranking_dataset(seed))
            scores = family_scores(m, SUPERVISED)
            for s in scores:
                ranks = scores_to_ranks(s)
                top4[s.algorithm] += int(ranks[0] <= 4 and ranks[1] <= 4)
            fused_hits += int(set(fuse(scores, SUPERVISED).top_k(2)) == informative)
    assert all(v >= 95 for v in top4.values()), top4
    assert fused_hits >= 95


def _check_svm(model, m):
    y = m.signs().astype(float)
    alphas = np.zeros(m.n_samples)
    for sv, a in zip(model.support_vectors, model.alphas):
        alphas[np.flatnonzero((m.values == sv).all(axis=1))[0]] = a
    K = model.kernel(m.values, m.values)
    assert kkt_violations(alphas, y, K, model.bias, model.C).max() <= 1e-3
    assert abs(float(alphas @ y)) <= 1e-8
    return alphas


@pytest.mark.acceptance(7, title="SVM separable accuracy, KKT and QP-oracle duals")
def test_svm():
    rng = np.random.default_rng(3)
    with Budget(10.0):
        for _ in range(20):
            n = int(rng.integers(10, 80))
            w = rng.normal(size=3)
            x = rng.normal(size=(n, 3))
            margin = x @ w
            keep = np.abs(margin) > 0.2
            x, margin = x[keep], margin[keep]
            labels = [M if v > 0 else B for v in margin]
            if len(set(labels)) < 2:
                continue
            m = _labelled(x, labels)
            model = svm_train(m, C=1e6)
            assert model.predict(m.values) == list(m.labels)
            _check_svm(model, m)
        for C in (0.5, 10.0):
            for _ in range(50):
                x = rng.normal(size=(4, 2))
                m = _labelled(x, [M, B, M, B])
                want, _ = svm_dual_active_set(x, m.signs().astype(float), C)
                model = svm_train(m, C=C, tol=1e-6)
                np.testing.assert_allclose(_check_svm(model, m), want, rtol=0, atol=1e-4)
        for seed in range(5):
            x = rng.normal(size=(60, 4))
            m = _labelled(x, [M if v > 0 else B for v in x[:, 0] + 0.5 * rng.normal(size=60)])
            for kernel in (Kernel(), Kernel("rbf")):
                _check_svm(svm_train(m, kernel, C=1.0, seed=seed), m)


@pytest.mark.acceptance(8, title="GLDM/GLSZM equal enumeration; worked examples hold")
def test_radiomics():
    rng = np.random.default_rng(5)
    with Budget(5.0):
        for _ in range(200):
            dims = tuple(int(d) for d in rng.integers(1, 5, size=3))
            mask = rng.random(dims) < rng.uniform(0.3, 1.0)
            mask.flat[int(rng.integers(mask.size))] = True
            v = LabeledVolume(rng.normal(size=dims), mask)
            levels = discretize(v, int(rng.integers(1, 5)))
            assert matrix_to_counts(gldm(levels, mask).P) == gldm_bruteforce(levels, mask)
            assert matrix_to_counts(glszm(levels, mask).P) == glszm_bruteforce(levels, mask)
        plane = np.array([[1, 1], [1, 2]])[:, :, None]
        ones = np.ones(plane.shape, bool)
        assert abs(sdhgle(gldm(plane, ones)) - 1.08333) <= 1e-5
        assert abs(sdlge(gldm(plane, ones)) - 0.14583) <= 1e-5
        assert abs(zone_variance(glszm(plane, ones)) - 1.0) <= 1e-5
        block = LabeledVolume(np.zeros((2, 2, 2)), np.ones((2, 2, 2), bool))
        assert abs(surface_volume_ratio(block) - 3.0) <= 1e-5


@pytest.mark.acceptance(9, title="end-to-end sweep on the planted cohort")
def test_end_to_end_sweep():
    with Budget(120.0):
        train, test = demo_cohorts(0)
        first = run_sweep(ExperimentConfig(), train, test)
        second = run_sweep(ExperimentConfig(), train, test)
    assert len(first.entries) == 24
    for e in first.entries:
        assert e.status == "ok"
        for metrics in (e.test_metrics, e.cv_metrics, e.cv_mean_metrics):
            for v in metrics.as_tuple():
                assert v is None or 0.0 <= v <= 1.0
    assert first.entry(SUPERVISED, "svm", 2).test_metrics.accuracy >= 0.95
    assert first.to_json() == second.to_json()
    json.loads(first.to_json())
