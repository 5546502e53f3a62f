"""Gaussian naive Bayes, an SMO-trained SVM and stratified k-fold CV.

Malignant maps to +1 and benign to -1.  Both classifiers break exact ties
toward malignant.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dataset import BENIGN, CLASS_TAGS, MALIGNANT, FeatureMatrix, NormalizationRecord
from .errors import DatasetError, SvmConvergenceError
from .metrics import ConfusionMatrix, Metrics, confusion, evaluate

MODEL_FORMAT = "radiofs.model"
MODEL_VERSION = 1


# --------------------------------------------------------------------------
# Gaussian naive Bayes
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GaussianNBModel:
    """Per-class prior and per-feature Gaussian mean / variance.

    Rows of ``means`` and ``variances`` follow ``classes``.
    """

    classes: tuple
    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    feature_names: tuple = ()

    @property
    def n_features(self):
        return self.means.shape[1]

    def log_joint(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.n_features:
            raise DatasetError(
                f"expected {self.n_features} features, got {x.shape[1]}")
        out = np.empty((x.shape[0], len(self.classes)))
        for c in range(len(self.classes)):
            var = self.variances[c]
            out[:, c] = (math.log(self.priors[c])
                         - 0.5 * np.sum(np.log(2.0 * np.pi * var))
                         - 0.5 * np.sum((x - self.means[c]) ** 2 / var, axis=1))
        return out

    def predict_proba(self, x):
        return posterior_from_log_joint(self.log_joint(x))

    def predict(self, x):
        post = self.predict_proba(x)
        mal = self.classes.index(MALIGNANT)
        ben = self.classes.index(BENIGN)
        return [MALIGNANT if row[mal] >= row[ben] else BENIGN for row in post]


def posterior_from_log_joint(log_joint):
    """Normalize log joint likelihoods (rows) into posteriors."""
    lj = np.atleast_2d(np.asarray(log_joint, dtype=float))
    shifted = np.exp(lj - lj.max(axis=1, keepdims=True))
    return shifted / shifted.sum(axis=1, keepdims=True)


def nb_train(m: FeatureMatrix, var_smoothing: float = 1e-9) -> GaussianNBModel:
    """Maximum-likelihood class-conditional Gaussians.

    Every variance is inflated by ``var_smoothing`` times the largest
    per-feature variance of the whole training set.
    """
    m.require_labels()
    labels = np.array(m.labels)
    x = m.values
    eps = var_smoothing * float(x.var(axis=0).max(initial=0.0))
    if eps <= 0:
        eps = var_smoothing
    priors, means, variances = [], [], []
    for tag in CLASS_TAGS:
        xc = x[labels == tag]
        if xc.shape[0] < 2:
            raise DatasetError(f"class {tag!r} needs at least 2 training samples")
        priors.append(xc.shape[0] / x.shape[0])
        means.append(xc.mean(axis=0))
        variances.append(xc.var(axis=0) + eps)
    return GaussianNBModel(CLASS_TAGS, np.array(priors), np.array(means),
                           np.array(variances), m.feature_names)


def nb_predict(model: GaussianNBModel, x):
    """Label and per-class posterior for one feature vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DatasetError("nb_predict takes a single feature vector")
    post = model.predict_proba(x)[0]
    label = model.predict(x)[0]
    return label, {tag: float(post[i]) for i, tag in enumerate(model.classes)}


# --------------------------------------------------------------------------
# Support vector machine
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    name: str = "linear"
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.name not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {self.name!r}")
        if self.name == "rbf" and self.gamma is not None and self.gamma <= 0:
            raise ValueError("rbf gamma must be positive")

    def resolved(self, n_features):
        if self.name == "rbf" and self.gamma is None:
            return Kernel("rbf", 1.0 / max(n_features, 1))
        return self

    def __call__(self, a, b):
        a = np.atleast_2d(a)
        b = np.atleast_2d(b)
        if self.name == "linear":
            return a @ b.T
        sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def to_dict(self):
        return {"name": self.name, "gamma": self.gamma}


@dataclass(frozen=True, eq=False)
class SvmModel:
    """Support vectors with their alpha_i and y_i, bias and kernel."""

    support_vectors: np.ndarray
    alphas: np.ndarray
    sv_labels: np.ndarray
    bias: float
    kernel: Kernel
    C: float
    feature_names: tuple = ()
    info: dict = field(default_factory=dict)

    @property
    def dual_coef(self):
        return self.alphas * self.sv_labels

    @property
    def n_features(self):
        return self.support_vectors.shape[1]

    def decision_function(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.n_features:
            raise DatasetError(
                f"expected {self.n_features} features, got {x.shape[1]}")
        if self.alphas.size == 0:
            return np.full(x.shape[0], self.bias)
        return self.kernel(x, self.support_vectors) @ self.dual_coef + self.bias

    def predict(self, x):
        return [MALIGNANT if f >= 0 else BENIGN for f in self.decision_function(x)]


def kkt_violations(alphas, y, K, bias, C):
    """Per-sample KKT violation of a dual solution (0 when satisfied)."""
    yf = y * (K @ (alphas * y) + bias)
    at_zero = alphas <= 0
    at_c = alphas >= C
    free = ~(at_zero | at_c)
    viol = np.zeros_like(yf)
    viol[at_zero] = np.maximum(0.0, 1.0 - yf[at_zero])
    viol[at_c] = np.maximum(0.0, yf[at_c] - 1.0)
    viol[free] = np.abs(yf[free] - 1.0)
    return viol


def _smo(K, y, C, tol, max_iter, rng):
    """Dual SVM by SMO on maximal violating pairs.

    Returns (alphas, bias, gap, n_iter).  Converged when the gap between the
    largest and smallest ``-y_t grad_t`` over the up/low sets is <= tol.
    """
    n = y.size
    alphas = np.zeros(n)
    grad = -np.ones(n)
    pos = y > 0
    diag = np.diag(K).copy()
    gap = np.inf
    n_iter = 0
    while n_iter < max_iter:
        score = -y * grad
        up = np.where(pos, alphas < C, alphas > 0)
        low = np.where(pos, alphas > 0, alphas < C)
        if not up.any() or not low.any():
            gap = 0.0
            break
        up_idx = np.flatnonzero(up)
        low_idx = np.flatnonzero(low)
        i = up_idx[np.argmax(score[up_idx])]
        j = low_idx[np.argmin(score[low_idx])]
        gap = score[i] - score[j]
        if gap <= tol:
            break
        n_iter += 1
        step = _pair_step(i, j, alphas, y, K, diag, C, gap)
        if step <= 0:
            # degenerate pair: retry with a random partner
            j = rng.choice(low_idx[low_idx != i]) if low_idx.size > 1 else j
            step = _pair_step(i, j, alphas, y, K, diag, C, score[i] - score[j])
            if step <= 0:
                break
        old_i, old_j = alphas[i], alphas[j]
        _apply_step(i, j, step, alphas, y, C)
        d_i = alphas[i] - old_i
        d_j = alphas[j] - old_j
        grad += y * (y[i] * d_i * K[:, i] + y[j] * d_j * K[:, j])
    score = -y * grad
    up = np.where(pos, alphas < C, alphas > 0)
    low = np.where(pos, alphas > 0, alphas < C)
    hi = score[up].max() if up.any() else score[low].min()
    lo = score[low].min() if low.any() else hi
    return alphas, 0.5 * (hi + lo), max(hi - lo, 0.0), n_iter


def _pair_room(i, j, alphas, y, C):
    room_i = C - alphas[i] if y[i] > 0 else alphas[i]
    room_j = alphas[j] if y[j] > 0 else C - alphas[j]
    return room_i, room_j


def _pair_step(i, j, alphas, y, K, diag, C, gap):
    if i == j or gap <= 0:
        return 0.0
    eta = max(diag[i] + diag[j] - 2.0 * K[i, j], 1e-12)
    return min(gap / eta, *_pair_room(i, j, alphas, y, C))


def _apply_step(i, j, t, alphas, y, C):
    # alpha_i moves by y_i t, alpha_j by -y_j t; sum(y * alpha) is unchanged
    room_i, room_j = _pair_room(i, j, alphas, y, C)
    if t >= room_i:
        alphas[i] = C if y[i] > 0 else 0.0
    else:
        alphas[i] = min(max(alphas[i] + y[i] * t, 0.0), C)
    if t >= room_j:
        alphas[j] = 0.0 if y[j] > 0 else C
    else:
        alphas[j] = min(max(alphas[j] - y[j] * t, 0.0), C)


def svm_train(m: FeatureMatrix, kernel: Kernel = Kernel(), C: float = 1.0,
              tol: float = 1e-3, max_passes: int = 10_000, seed: int = 0) -> SvmModel:
    """Train a soft-margin SVM with sequential minimal optimization.

    Stops when the maximal-violating-pair gap is at most ``tol`` (every
    sample's KKT violation is then at most ``tol / 2``).  ``max_passes``
    bounds the work at ``max_passes * n_samples`` pair updates; exceeding it
    raises :class:`SvmConvergenceError`.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    y = m.signs().astype(float)
    x = m.values
    kernel = kernel.resolved(m.n_features)
    K = kernel(x, x)
    rng = np.random.default_rng(seed)
    alphas, bias, gap, n_iter = _smo(K, y, C, tol, max_passes * len(y), rng)
    viol = float(kkt_violations(alphas, y, K, bias, C).max())
    if gap > tol:
        raise SvmConvergenceError(f"SMO stopped after {n_iter} updates with gap {gap:.3g}",
                                  viol)
    sv = alphas > 0
    return SvmModel(x[sv].copy(), alphas[sv].copy(), y[sv].copy(), float(bias),
                    kernel, float(C), m.feature_names,
                    {"n_iter": n_iter, "gap": float(gap), "max_kkt_violation": viol,
                     "n_train": int(len(y))})


def svm_predict(model: SvmModel, x):
    """Label of one feature vector; f(x) = 0 counts as malignant."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DatasetError("svm_predict takes a single feature vector")
    return model.predict(x)[0]


# --------------------------------------------------------------------------
# model serialization
# --------------------------------------------------------------------------

def _floats(a):
    return [float(v) for v in np.ravel(a)]


def model_to_json(model, normalization: Optional[NormalizationRecord] = None) -> str:
    doc = {"format": MODEL_FORMAT, "version": MODEL_VERSION,
           "feature_names": list(model.feature_names),
           "normalization": normalization.to_dict() if normalization else None}
    if isinstance(model, SvmModel):
        doc.update(type="svm", kernel=model.kernel.to_dict(), C=model.C,
                   bias=model.bias, alphas=_floats(model.alphas),
                   labels=[int(v) for v in model.sv_labels],
                   support_vectors=[_floats(r) for r in model.support_vectors],
                   n_features=model.n_features)
    elif isinstance(model, GaussianNBModel):
        doc.update(type="gaussian_nb", classes=list(model.classes),
                   priors=_floats(model.priors),
                   means=[_floats(r) for r in model.means],
                   variances=[_floats(r) for r in model.variances])
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return json.dumps(doc, indent=2, sort_keys=True)


def model_from_json(text):
    """Inverse of :func:`model_to_json`; returns ``(model, normalization)``."""
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a radiofs model document")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    norm = doc.get("normalization")
    norm = NormalizationRecord.from_dict(norm) if norm else None
    names = tuple(doc["feature_names"])
    if doc["type"] == "svm":
        k = doc["kernel"]
        n_feat = doc["n_features"]
        sv = np.array(doc["support_vectors"], dtype=float).reshape(-1, n_feat)
        model = SvmModel(sv, np.array(doc["alphas"], dtype=float),
                         np.array(doc["labels"], dtype=float), doc["bias"],
                         Kernel(k["name"], k["gamma"]), doc["C"], names)
    elif doc["type"] == "gaussian_nb":
        model = GaussianNBModel(tuple(doc["classes"]), np.array(doc["priors"]),
                                np.array(doc["means"]), np.array(doc["variances"]),
                                names)
    else:
        raise ValueError(f"unknown model type {doc['type']!r}")
    return model, norm


# --------------------------------------------------------------------------
# cross-validation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassifierSpec:
    kind: str = "svm"
    kernel: Kernel = Kernel()
    C: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("svm", "nb"):
            raise ValueError(f"unknown classifier {self.kind!r}")

    def fit(self, m: FeatureMatrix):
        if self.kind == "nb":
            return nb_train(m)
        return svm_train(m, self.kernel, self.C, seed=self.seed)


@dataclass(frozen=True)
class CvConfig:
    folds: int = 10
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least 2 folds")


@dataclass(frozen=True)
class CvResult:
    fold_of: tuple
    fold_confusions: tuple
    pooled: ConfusionMatrix
    pooled_metrics: Metrics
    mean_metrics: Metrics


def fold_assignment(labels, cv: CvConfig):
    """Fold index per sample.

    Stratified: each class is shuffled, the classes are laid end to end and
    positions are dealt round-robin, so both fold sizes and per-class counts
    differ by at most one across folds.
    """
    labels = list(labels)
    n = len(labels)
    rng = np.random.default_rng(cv.seed)
    if cv.stratified:
        counts = {tag: labels.count(tag) for tag in CLASS_TAGS}
        smallest = min(c for c in counts.values())
        if cv.folds > smallest:
            raise DatasetError(
                f"{cv.folds} folds exceed the smallest class size {smallest}")
        order = []
        for tag in CLASS_TAGS:
            members = np.array([i for i, lab in enumerate(labels) if lab == tag])
            order.extend(rng.permutation(members).tolist())
    else:
        if cv.folds > n:
            raise DatasetError(f"{cv.folds} folds exceed {n} samples")
        order = rng.permutation(n).tolist()
    fold_of = np.empty(n, dtype=int)
    for pos, i in enumerate(order):
        fold_of[i] = pos % cv.folds
    return fold_of


def _mean_defined(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def cross_validate(m: FeatureMatrix, spec: ClassifierSpec, cv: CvConfig = CvConfig()) -> CvResult:
    """k-fold CV: per-fold confusion matrices, pooled and fold-mean metrics."""
    m.require_labels()
    fold_of = fold_assignment(m.labels, cv)
    confusions = []
    for f in range(cv.folds):
        val = np.flatnonzero(fold_of == f)
        train = np.flatnonzero(fold_of != f)
        model = spec.fit(m.take_samples(train))
        preds = model.predict(m.values[val])
        confusions.append(confusion(preds, [m.labels[i] for i in val]))
    pooled = sum(confusions, ConfusionMatrix())
    per_fold = [evaluate(c) for c in confusions]
    mean = Metrics(_mean_defined([p.accuracy for p in per_fold]),
                   _mean_defined([p.sensitivity for p in per_fold]),
                   _mean_defined([p.specificity for p in per_fold]))
    return CvResult(tuple(int(v) for v in fold_of), tuple(confusions), pooled,
                    evaluate(pooled), mean)

