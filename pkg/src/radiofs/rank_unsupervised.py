"""Label-free feature scorers built on a heat-kernel kNN graph.

* Laplacian score (lower is better)
* minimum-correlation score, mean absolute Pearson correlation with the
  other features (lower is better)
* MCFS: spectral embedding followed by a LARS-lasso regression of every
  embedding vector on the features (higher is better)
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import FeatureMatrix
from .errors import DatasetError, EigenSolverError
from .scores import HIGHER_IS_BETTER, LOWER_IS_BETTER, FeatureScores


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Symmetric heat-kernel kNN affinity matrix (zero diagonal)."""

    weights: np.ndarray
    k: int
    bandwidth: float

    @property
    def n(self):
        return self.weights.shape[0]

    def degrees(self):
        return self.weights.sum(axis=1)

    def laplacian(self):
        return np.diag(self.degrees()) - self.weights


def _sq_distances(x):
    sq = (x * x).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * x @ x.T
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def knn_graph(m: FeatureMatrix, k: int = 5) -> NeighborGraph:
    """Connect every sample to its ``k`` nearest others (Euclidean).

    An edge exists when either endpoint picked the other.  Edge weight is
    ``exp(-d^2 / t)`` with ``t`` the mean squared distance over distinct
    sample pairs.  Equal distances are resolved toward the lower index.
    """
    n = m.n_samples
    if not 1 <= k < n:
        raise DatasetError(f"k must lie in [1, {n - 1}], got {k}")
    d2 = _sq_distances(m.values)
    off = ~np.eye(n, dtype=bool)
    t = float(d2[off].mean())
    if t <= 0:
        t = 1.0
    ranking = d2.copy()
    np.fill_diagonal(ranking, np.inf)
    nearest = np.argsort(ranking, axis=1, kind="stable")[:, :k]
    adj = np.zeros((n, n), dtype=bool)
    adj[np.repeat(np.arange(n), k), nearest.ravel()] = True
    adj |= adj.T
    w = np.where(adj, np.exp(-d2 / t), 0.0)
    np.fill_diagonal(w, 0.0)
    return NeighborGraph(w, k, t)


def laplacian_scores(m: FeatureMatrix, g: NeighborGraph) -> FeatureScores:
    """Graph Laplacian score per feature; small means locality preserving.

    Constant features get ``1 + max`` of the other scores (worst).
    """
    if g.n != m.n_samples:
        raise DatasetError("graph and matrix disagree on sample count")
    deg = g.degrees()
    lap = g.laplacian()
    x = m.values
    x_t = x - (deg @ x) / deg.sum()
    num = np.einsum("if,ij,jf->f", x_t, lap, x_t)
    den = np.einsum("if,i,if->f", x_t, deg, x_t)
    constant = (np.ptp(x, axis=0) == 0) | (den <= 0)
    scores = np.zeros(m.n_features)
    scores[~constant] = num[~constant] / den[~constant]
    worst = 1.0 + (scores[~constant].max() if np.any(~constant) else 0.0)
    scores[constant] = worst
    return FeatureScores("laplacian", m.feature_names, scores, LOWER_IS_BETTER)


def abs_correlation_matrix(x):
    """|Pearson r| between columns; zero-variance columns correlate with nothing."""
    xc = x - x.mean(axis=0)
    norm = np.sqrt((xc * xc).sum(axis=0))
    live = norm > 0
    z = np.zeros_like(xc)
    z[:, live] = xc[:, live] / norm[live]
    r = np.abs(z.T @ z)
    return np.minimum(r, 1.0)


def min_correlation_scores(m: FeatureMatrix) -> FeatureScores:
    """Mean |correlation| of each feature with every other feature."""
    if m.n_features < 2:
        raise DatasetError("need at least 2 features")
    if m.n_samples < 3:
        raise DatasetError("need at least 3 samples")
    r = abs_correlation_matrix(m.values)
    np.fill_diagonal(r, 0.0)
    scores = r.sum(axis=1) / (m.n_features - 1)
    return FeatureScores("min_correlation", m.feature_names, scores, LOWER_IS_BETTER)


def spectral_embedding(g: NeighborGraph, n_vectors: int):
    """Smallest non-trivial solutions of ``L y = lambda D y``.

    Works on the symmetric form ``I - D^-1/2 W D^-1/2`` with the trivial
    direction ``D^1/2 1`` deflated out, so the returned vectors satisfy
    ``y' D 1 = 0`` even on disconnected graphs.  Returns
    ``(eigenvalues, vectors)`` with vectors as columns.
    """
    n = g.n
    if not 1 <= n_vectors < n:
        raise DatasetError(f"need 1 <= n_vectors < {n}")
    deg = g.degrees()
    if np.any(deg <= 0):
        raise EigenSolverError("graph has isolated nodes")
    inv_sqrt = 1.0 / np.sqrt(deg)
    sym = np.eye(n) - inv_sqrt[:, None] * g.weights * inv_sqrt[None, :]
    u = np.sqrt(deg)
    u /= np.linalg.norm(u)
    # spectrum of the normalized Laplacian lies in [0, 2]
    sym = sym + 3.0 * np.outer(u, u)
    sym = 0.5 * (sym + sym.T)
    try:
        vals, vecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigendecomposition failed on {n}x{n} system: {exc}") from exc
    vals = vals[:n_vectors]
    y = inv_sqrt[:, None] * vecs[:, :n_vectors]
    return vals, y


@dataclass
class LassoPath:
    """Breakpoints of a LARS-lasso run.

    ``coefs[i]`` is the solution at penalty ``alphas[i]``; ``active_sizes[i]``
    is its number of non-zero coefficients.  ``drops`` lists the breakpoints
    at which a variable left the active set.
    """

    alphas: list = field(default_factory=list)
    coefs: list = field(default_factory=list)
    active_sizes: list = field(default_factory=list)
    drops: list = field(default_factory=list)

    @property
    def final(self):
        return self.coefs[-1]


def lars_lasso_path(x, y, max_active: int, tol: float = 1e-12) -> LassoPath:
    """Homotopy path of ``min 0.5 ||y - X b||^2 + alpha ||b||_1``.

    ``x`` and ``y`` are used as given (centre them first for an intercept).
    The path runs from ``alpha = max|X'y|`` downward and stops at the
    breakpoint where a further variable would enter beyond ``max_active``,
    or at the least-squares end of the path.  Zero-norm columns never enter.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = x.shape
    beta = np.zeros(p)
    usable = np.sqrt((x * x).sum(axis=0)) > tol * max(1.0, np.abs(x).max())
    path = LassoPath()
    c = x.T @ y
    if not np.any(usable) or max_active < 1:
        path.alphas.append(float(np.abs(c).max(initial=0.0)))
        path.coefs.append(beta.copy())
        path.active_sizes.append(0)
        return path
    scale = np.abs(c[usable]).max()
    tiny = tol * max(scale, 1e-300)
    active = []
    j0 = int(np.flatnonzero(usable)[np.argmax(np.abs(c[usable]))])
    big_c = float(abs(c[j0]))
    path.alphas.append(big_c)
    path.coefs.append(beta.copy())
    path.active_sizes.append(0)
    if big_c <= tiny:
        return path
    active.append(j0)
    max_steps = 8 * p + 8
    for _ in range(max_steps):
        c = x.T @ (y - x @ beta)
        big_c = float(np.abs(c[active]).max())
        signs = np.sign(c[active])
        xa = x[:, active] * signs
        gram = xa.T @ xa
        try:
            ginv1 = np.linalg.solve(gram, np.ones(len(active)))
        except np.linalg.LinAlgError:
            break
        if not ginv1.sum() > 0:
            # active columns are collinear: the path cannot continue
            break
        a_norm = 1.0 / np.sqrt(ginv1.sum())
        wdir = a_norm * ginv1
        u = xa @ wdir
        a = x.T @ u
        direction = signs * wdir

        inactive = [j for j in range(p) if usable[j] and j not in active]
        gamma_join, join = big_c / a_norm, None
        for j in inactive:
            for g in ((big_c - c[j]) / (a_norm - a[j]) if a_norm != a[j] else np.inf,
                      (big_c + c[j]) / (a_norm + a[j]) if a_norm != -a[j] else np.inf):
                if tiny < g < gamma_join:
                    gamma_join, join = g, j
        gamma_drop, drop = np.inf, None
        for pos, j in enumerate(active):
            if direction[pos] != 0:
                g = -beta[j] / direction[pos]
                if tiny < g < gamma_drop:
                    gamma_drop, drop = g, pos

        stop_here = join is not None and len(active) >= max_active
        if gamma_drop < gamma_join:
            gamma = gamma_drop
        else:
            gamma = gamma_join
            drop = None
        beta[active] += gamma * direction
        alpha = max(big_c - gamma * a_norm, 0.0)
        if drop is not None:
            beta[active[drop]] = 0.0
            del active[drop]
            path.drops.append(len(path.alphas))
        path.alphas.append(float(alpha))
        path.coefs.append(beta.copy())
        path.active_sizes.append(int(np.count_nonzero(beta)))
        if alpha <= tiny:
            break
        if drop is not None:
            continue
        if stop_here or join is None:
            break
        active.append(join)
    return path


def mcfs_scores(m: FeatureMatrix, g: NeighborGraph, n_clusters: int = 2,
                cardinality: int = 20) -> FeatureScores:
    """Multi-cluster feature selection score per feature.

    Each of the ``n_clusters`` smallest non-trivial generalized Laplacian
    eigenvectors is regressed on the centred features with LARS-lasso until
    ``cardinality`` coefficients are non-zero.  A feature's score is its
    largest absolute coefficient over the eigenvectors.
    """
    if g.n != m.n_samples:
        raise DatasetError("graph and matrix disagree on sample count")
    if not 1 <= n_clusters < m.n_samples:
        raise DatasetError(f"n_clusters must lie in [1, {m.n_samples - 1}]")
    cardinality = min(cardinality, m.n_features)
    _, emb = spectral_embedding(g, n_clusters)
    x = m.values - m.values.mean(axis=0)
    scores = np.zeros(m.n_features)
    for col in emb.T:
        path = lars_lasso_path(x, col - col.mean(), cardinality)
        scores = np.maximum(scores, np.abs(path.final))
    return FeatureScores("mcfs", m.feature_names, scores, HIGHER_IS_BETTER,
                         {"n_clusters": n_clusters, "cardinality": cardinality})
