"""Per-feature score container shared by all rankers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HIGHER_IS_BETTER = "higher"
LOWER_IS_BETTER = "lower"


@dataclass(frozen=True, eq=False)
class FeatureScores:
    """Raw scores of one ranking algorithm, before conversion to ranks.

    ``info`` carries solver diagnostics (convergence flags, traces).
    """

    algorithm: str
    feature_names: tuple
    scores: np.ndarray
    direction: str
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        scores = np.array(self.scores, dtype=float)
        if scores.shape != (len(self.feature_names),):
            raise ValueError("one score per feature required")
        if not np.all(np.isfinite(scores)):
            raise ValueError(f"{self.algorithm}: non-finite scores")
        if self.direction not in (HIGHER_IS_BETTER, LOWER_IS_BETTER):
            raise ValueError(f"unknown direction {self.direction!r}")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
