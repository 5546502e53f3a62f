"""Label-aware feature scorers: Fisher score, ReliefF and NCA feature weights."""
from __future__ import annotations

import numpy as np

from .dataset import FeatureMatrix
from .errors import DatasetError
from .scores import HIGHER_IS_BETTER, FeatureScores

FISHER_EPS = 1e-12


def _class_masks(m: FeatureMatrix):
    y = m.signs()
    return [y == 1, y == -1]


def fisher_scores(m: FeatureMatrix) -> FeatureScores:
    """Between-class scatter over pooled within-class scatter, per feature.

    Uses population variances and a 1e-12 guard in the denominator, so a
    feature with zero within-class spread still gets a finite (huge) score.
    """
    masks = _class_masks(m)
    for mask in masks:
        if mask.sum() < 2:
            raise DatasetError("Fisher score needs at least 2 samples per class")
    x = m.values
    mu = x.mean(axis=0)
    num = np.zeros(m.n_features)
    den = np.zeros(m.n_features)
    for mask in masks:
        xc = x[mask]
        n_c = xc.shape[0]
        mu_c = xc.mean(axis=0)
        num += n_c * (mu_c - mu) ** 2
        den += n_c * ((xc - mu_c) ** 2).mean(axis=0)
    scores = num / (den + FISHER_EPS)
    scores[np.ptp(x, axis=0) == 0] = 0.0
    return FeatureScores("fisher", m.feature_names, scores, HIGHER_IS_BETTER)


def relieff_weights(m: FeatureMatrix, k: int = 10, iterations="all",
                    seed: int = 0) -> FeatureScores:
    """Two-class ReliefF feature weights in [-1, 1].

    Every sampled instance pulls each feature's weight down by its mean
    range-normalized difference to the ``k`` nearest same-class samples and
    up by the mean difference to the ``k`` nearest other-class samples.
    Neighbours are found with the Manhattan distance over range-normalized
    features; distance ties go to the lowest sample index.

    ``iterations="all"`` visits every sample in order (deterministic); an
    integer draws that many distinct samples with ``seed``.
    """
    y = m.signs()
    if k < 1:
        raise ValueError("k must be positive")
    min_class = min(int((y == 1).sum()), int((y == -1).sum()))
    if k > min_class - 1:
        raise DatasetError(
            f"k={k} too large: smallest class has {min_class} samples (k <= {min_class - 1})")
    x = m.values
    n = m.n_samples
    span = np.ptp(x, axis=0)
    safe_span = np.where(span > 0, span, 1.0)
    xs = x / safe_span
    xs[:, span == 0] = 0.0

    if iterations == "all":
        order = np.arange(n)
    else:
        n_iter = int(iterations)
        if not 1 <= n_iter <= n:
            raise ValueError(f"iterations must lie in [1, {n}]")
        order = np.random.default_rng(seed).choice(n, size=n_iter, replace=False)

    w = np.zeros(m.n_features)
    for i in order:
        diffs = np.abs(xs - xs[i])
        dist = diffs.sum(axis=1)
        ranked = np.argsort(dist, kind="stable")
        same = y[ranked] == y[i]
        hits = ranked[same & (ranked != i)][:k]
        misses = ranked[~same][:k]
        w += diffs[misses].mean(axis=0) - diffs[hits].mean(axis=0)
    w /= len(order)
    return FeatureScores("relieff", m.feature_names, w, HIGHER_IS_BETTER,
                         {"k": k, "iterations": len(order)})


def _nca_pairwise(x):
    """|x_i - x_j| per feature, flattened to (n * n, f) for BLAS products."""
    n = x.shape[0]
    return np.abs(x[:, None, :] - x[None, :, :]).reshape(n * n, -1)


def _nca_objective(w, dabs, same, sigma, lam):
    """Objective value plus the neighbour probabilities it was computed from."""
    w2 = w * w
    n = same.shape[0]
    dist = (dabs @ w2).reshape(n, n) / sigma
    np.fill_diagonal(dist, np.inf)
    dist -= dist.min(axis=1, keepdims=True)
    p = np.exp(-dist)
    p /= p.sum(axis=1, keepdims=True)
    p_correct = (p * same).sum(axis=1)
    return p_correct.mean() - lam * w2.sum(), p, p_correct


def _nca_gradient(w, p, p_correct, dabs, same, sigma, lam):
    n = same.shape[0]
    # sum_ij (p_i p_ij - same_ij p_ij) d_ijr
    coef = p * (p_correct[:, None] - same)
    inner = coef.reshape(-1) @ dabs / n
    return 2.0 * w * (inner / sigma - lam)


def nca_weights(m: FeatureMatrix, lam=None, sigma: float = 1.0,
                max_iter: int = 500, tol: float = 1e-6,
                initial_rate: float = 0.1) -> FeatureScores:
    """Neighbourhood component analysis feature weights (squared, so >= 0).

    Maximizes the mean leave-one-out probability of picking a same-class
    neighbour, where neighbour j of sample i is chosen with probability
    proportional to ``exp(-sum_f w_f^2 |x_if - x_jf| / sigma)``, minus
    ``lam * sum_f w_f^2``.  ``lam`` defaults to ``1 / n_samples``.

    Gradient ascent starts from all-ones weights.  A step is accepted only if
    the objective does not decrease; otherwise the rate is halved.  Accepted
    steps grow the rate by 2x.  Stops when the relative objective change of
    an accepted step drops below ``tol`` or after ``max_iter`` iterations; in
    the latter case the best iterate is returned with ``converged=False``.
    """
    y = m.signs()
    n = m.n_samples
    if n < 3:
        raise DatasetError("NCA needs at least 3 samples")
    if lam is None:
        lam = 1.0 / n
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    dabs = _nca_pairwise(m.values)
    same = (y[:, None] == y[None, :]).astype(float)
    np.fill_diagonal(same, 0.0)

    w = np.ones(m.n_features)
    obj, p, p_correct = _nca_objective(w, dabs, same, sigma, lam)
    grad = _nca_gradient(w, p, p_correct, dabs, same, sigma, lam)
    trace = [obj]
    rate = initial_rate
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        accepted = False
        while rate > 1e-12:
            w_new = w + rate * grad
            obj_new, p, p_correct = _nca_objective(w_new, dabs, same, sigma, lam)
            if obj_new >= obj:
                accepted = True
                break
            rate *= 0.5
        if not accepted:
            # no ascent direction left at machine precision
            converged = True
            break
        change = abs(obj_new - obj) / max(abs(obj), 1e-12)
        w, obj = w_new, obj_new
        trace.append(obj)
        if change < tol:
            converged = True
            break
        grad = _nca_gradient(w, p, p_correct, dabs, same, sigma, lam)
        rate *= 2.0
    return FeatureScores("nca", m.feature_names, w * w, HIGHER_IS_BETTER,
                         {"converged": converged, "n_iter": n_iter,
                          "objective": trace, "lambda": lam, "sigma": sigma})
