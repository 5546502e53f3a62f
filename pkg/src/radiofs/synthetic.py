"""Seeded synthetic cohorts with planted discriminative features."""
from __future__ import annotations

import numpy as np

from .dataset import BENIGN, MALIGNANT, FeatureMatrix


def feature_names(n):
    width = max(2, len(str(n - 1)))
    return tuple(f"feature_{i:0{width}d}" for i in range(n))


def planted_matrix(n_samples, n_features, effects, malignant_fraction=0.5, seed=0,
                   n_malignant=None):
    """Unit-variance Gaussian features; malignant rows are shifted by ``effects``.

    ``effects`` maps feature index to standardized effect size (mean shift in
    units of the within-class std).  Class order is shuffled.
    """
    rng = np.random.default_rng(seed)
    if n_malignant is None:
        n_malignant = int(round(n_samples * malignant_fraction))
    labels = np.array([MALIGNANT] * n_malignant + [BENIGN] * (n_samples - n_malignant))
    labels = labels[rng.permutation(n_samples)]
    x = rng.standard_normal((n_samples, n_features))
    shift = np.zeros(n_features)
    for j, e in dict(effects).items():
        shift[j] = e
    x[labels == MALIGNANT] += shift
    return FeatureMatrix(x, feature_names(n_features), tuple(labels))


def planted_ranking_dataset(seed, n_samples=500, n_features=20, n_informative=2,
                            effect_size=1.5):
    """Balanced cohort whose first ``n_informative`` features carry signal."""
    effects = {j: effect_size for j in range(n_informative)}
    return planted_matrix(n_samples, n_features, effects, 0.5, seed)


def demo_cohorts(seed=0, n_features=40):
    """Train (165 malignant / 35 benign) and test (50 / 30) cohorts.

    Features 0-1 are strongly discriminative (effect 3.0), features 2-23
    moderately (0.6 to 1.2), the rest are noise.  Both cohorts come from the
    same generating distribution.
    """
    effects = {0: 3.0, 1: 3.0}
    effects.update({j: 0.6 + 0.6 * (j - 2) / 21 for j in range(2, 24)})
    train = planted_matrix(200, n_features, effects, seed=seed, n_malignant=165)
    test = planted_matrix(80, n_features, effects, seed=seed + 1_000_003, n_malignant=50)
    return train, test
