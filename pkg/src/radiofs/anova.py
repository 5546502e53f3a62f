"""One-way ANOVA screening of features.

The F upper-tail probability goes through a regularized incomplete beta
function evaluated by a modified-Lentz continued fraction, so the module has
no dependency beyond numpy and :mod:`math`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import CLASS_TAGS, FeatureMatrix
from .errors import ConvergenceError, DatasetError, EmptySelectionError

_CF_TOL = 1e-14
_CF_MAX_ITER = 10_000
_TINY = 1e-300


def _beta_cf(a, b, x):
    """Continued fraction for I_x(a, b), modified Lentz's method."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_TOL:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(x, a, b):
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def f_statistic(groups) -> float:
    """Between-group over within-group mean square.

    Returns ``inf`` when the groups have zero spread but different means, and
    0 when every value is the same.
    """
    groups = [np.asarray(g, dtype=float).ravel() for g in groups]
    k = len(groups)
    if k < 2:
        raise DatasetError("F-test needs at least 2 groups")
    if any(g.size == 0 for g in groups):
        raise DatasetError("every group needs at least one sample")
    n = sum(g.size for g in groups)
    if n <= k:
        raise DatasetError(f"degenerate degrees of freedom: N={n}, k={k}")
    grand = np.concatenate(groups).mean()
    ss_between = sum(g.size * (g.mean() - grand) ** 2 for g in groups)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    ms_between = ss_between / (k - 1)
    ms_within = ss_within / (n - k)
    scale = max(abs(grand), max(np.abs(g).max() for g in groups), 1e-300)
    # spread below round-off is zero spread
    if ms_within <= (1e-14 * scale) ** 2:
        return math.inf if ms_between > (1e-14 * scale) ** 2 else 0.0
    return float(ms_between / ms_within)


def f_pvalue(f, df1, df2) -> float:
    """Upper-tail probability of the F(df1, df2) distribution at ``f``."""
    if df1 <= 0 or df2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if f == math.inf:
        return 0.0
    if not math.isfinite(f) or f < 0:
        raise ValueError(f"F statistic must be finite and non-negative, got {f}")
    x = df2 / (df2 + df1 * f)
    return min(1.0, max(0.0, regularized_incomplete_beta(x, df2 / 2.0, df1 / 2.0)))


@dataclass(frozen=True)
class AnovaResult:
    feature_index: int
    feature_name: str
    f_statistic: float
    p_value: float
    significant: bool

    def to_dict(self):
        return {"feature_index": self.feature_index,
                "feature_name": self.feature_name,
                # inf is not valid JSON
                "f_statistic": None if math.isinf(self.f_statistic) else self.f_statistic,
                "p_value": self.p_value,
                "significant": self.significant}

    @classmethod
    def from_dict(cls, d):
        f = d["f_statistic"]
        return cls(d["feature_index"], d["feature_name"],
                   math.inf if f is None else f, d["p_value"], d["significant"])


def anova_table(m: FeatureMatrix, alpha: float = 0.05):
    """Run the F-test on every column of ``m``."""
    m.require_labels()
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    labels = np.array(m.labels)
    masks = [labels == tag for tag in CLASS_TAGS if np.any(labels == tag)]
    df1 = len(masks) - 1
    df2 = m.n_samples - len(masks)
    results = []
    for j, name in enumerate(m.feature_names):
        col = m.values[:, j]
        f = f_statistic([col[mask] for mask in masks])
        p = f_pvalue(f, df1, df2)
        results.append(AnovaResult(j, name, f, p, p < alpha))
    return results


def filter_features(m: FeatureMatrix, alpha: float = 0.05):
    """Keep the features whose ANOVA p-value is below ``alpha``.

    Returns the per-feature results and the reduced matrix (original column
    order).  Raises :class:`EmptySelectionError` if nothing survives.
    """
    results = anova_table(m, alpha)
    keep = [r.feature_index for r in results if r.significant]
    if not keep:
        raise EmptySelectionError(f"no feature is significant at alpha={alpha}")
    return results, m.take_features(keep)
