"""Equal-weight rank fusion of several feature scorers."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .scores import HIGHER_IS_BETTER, FeatureScores

SUPERVISED = "supervised"
UNSUPERVISED = "unsupervised"
FAMILY_ALGORITHMS = {
    SUPERVISED: ("fisher", "relieff", "nca"),
    UNSUPERVISED: ("laplacian", "min_correlation", "mcfs"),
}


def scores_to_ranks(s: FeatureScores) -> np.ndarray:
    """Rank 1 = best feature under the scorer's direction; ties share the mean rank."""
    key = -s.scores if s.direction == HIGHER_IS_BETTER else s.scores
    return rankdata(key, method="average")


@dataclass(frozen=True)
class RankedFeature:
    name: str
    ranks: tuple
    average: float


@dataclass(frozen=True)
class RankingList:
    """Features ordered by ascending mean rank (best first)."""

    family: str
    algorithms: tuple
    entries: tuple

    def __len__(self):
        return len(self.entries)

    @property
    def names(self):
        return [e.name for e in self.entries]

    def top_k(self, k):
        return top_k(self, k)

    def to_rows(self):
        yield ["rank", "feature", *self.algorithms, "average"]
        for pos, e in enumerate(self.entries, start=1):
            yield [pos, e.name, *(_fmt_rank(r) for r in e.ranks), f"{e.average:.5f}"]

    def to_csv(self, path=None):
        """Table layout: rank, feature, one column per algorithm, average."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerows(self.to_rows())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def to_dict(self):
        return {"family": self.family, "algorithms": list(self.algorithms),
                "entries": [{"feature": e.name, "ranks": list(e.ranks),
                             "average": e.average} for e in self.entries]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], tuple(d["algorithms"]),
                   tuple(RankedFeature(e["feature"], tuple(e["ranks"]), e["average"])
                         for e in d["entries"]))


def _fmt_rank(r):
    return str(int(r)) if float(r).is_integer() else f"{r:g}"


def average_ranks(feature_names, rank_vectors, family, algorithms=None) -> RankingList:
    """Average per-algorithm rank vectors with equal weight.

    Ties in the average are ordered by feature name.
    """
    rank_vectors = [np.asarray(r, dtype=float) for r in rank_vectors]
    n = len(feature_names)
    if any(r.shape != (n,) for r in rank_vectors):
        raise ValueError("rank vectors must all have one entry per feature")
    if algorithms is None:
        algorithms = FAMILY_ALGORITHMS.get(family) or tuple(
            f"algo{i + 1}" for i in range(len(rank_vectors)))
    if len(algorithms) != len(rank_vectors):
        raise ValueError("one algorithm name per rank vector required")
    stacked = np.vstack(rank_vectors)
    # sum then divide: exactly symmetric in the argument order
    avg = np.sort(stacked, axis=0).sum(axis=0) / len(rank_vectors)
    entries = [RankedFeature(str(name), tuple(float(v) for v in stacked[:, j]),
                             float(avg[j]))
               for j, name in enumerate(feature_names)]
    entries.sort(key=lambda e: (e.average, e.name))
    return RankingList(family, tuple(algorithms), tuple(entries))


def fuse(scores, family) -> RankingList:
    """Rank each scorer's output and average the ranks."""
    names = scores[0].feature_names
    for s in scores[1:]:
        if s.feature_names != names:
            raise ValueError("scorers disagree on the feature universe")
    return average_ranks(names, [scores_to_ranks(s) for s in scores], family,
                         tuple(s.algorithm for s in scores))


def top_k(rl: RankingList, k: int):
    """Names of the ``k`` best features, in ranking order."""
    if not 1 <= k <= len(rl.entries):
        raise ValueError(f"k={k} outside 1..{len(rl.entries)}")
    return [e.name for e in rl.entries[:k]]
