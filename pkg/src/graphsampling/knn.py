"""Similarity graphs from feature vectors, plus small synthetic datasets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .graph import DisconnectedGraphError, Graph, GraphError


class DegenerateDataError(ValueError):
    pass


@dataclass(frozen=True)
class GraphBuildConfig:
    K: int = 10
    kernel: str = "gaussian"  # "gaussian" | "cosine"
    sigma_override: float | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.kernel not in ("gaussian", "cosine"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.sigma_override is not None and not self.sigma_override > 0:
            raise ValueError("sigma_override must be positive")


def _check_features(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("features must be a 2-D array")
    if X.shape[0] < 2:
        raise ValueError("need at least two datapoints")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite entries")
    return X


def _nearest(score: np.ndarray, K: int, largest: bool) -> np.ndarray:
    """Indices of the K best entries per row, excluding the diagonal; ties go to the lower index."""
    N = score.shape[0]
    if not 1 <= K < N:
        raise ValueError(f"K must satisfy 1 <= K < N (K={K}, N={N})")
    s = -score if largest else score.copy()
    np.fill_diagonal(s, np.inf)
    # stable sort keeps equal scores in index order
    return np.argsort(s, axis=1, kind="stable")[:, :K]


def _symmetric_union(N: int, nbrs: np.ndarray, weights: np.ndarray) -> sp.csr_matrix:
    rows = np.repeat(np.arange(N), nbrs.shape[1])
    W = sp.csr_matrix((weights.ravel(), (rows, nbrs.ravel())), shape=(N, N))
    W.sum_duplicates()
    return W.maximum(W.T).tocsr()


def _to_graph(W) -> Graph:
    try:
        return Graph(W)
    except DisconnectedGraphError as exc:
        raise DisconnectedGraphError(f"{exc}; try a larger K") from None


def knn_sigma(X, K: int) -> float:
    """One third of the mean distance from each point to its K-th nearest neighbour."""
    X = _check_features(X)
    D = cdist(X, X)
    nbrs = _nearest(D, K, largest=False)
    kth = D[np.arange(X.shape[0]), nbrs[:, -1]]
    return float(np.mean(kth) / 3.0)


def build_knn_gaussian(features, config: GraphBuildConfig | None = None) -> Graph:
    """Gaussian-kernel K-nearest-neighbour graph with union symmetrization.

    Weights are ``exp(-||x_i - x_j||^2 / (2 sigma^2))``; ``sigma`` comes from
    :func:`knn_sigma` unless ``config.sigma_override`` is set.
    """
    config = config or GraphBuildConfig()
    X = _check_features(features)
    N = X.shape[0]
    D = cdist(X, X)
    nbrs = _nearest(D, config.K, largest=False)
    dist = D[np.arange(N)[:, None], nbrs]
    if config.sigma_override is not None:
        sigma = config.sigma_override
    else:
        sigma = float(np.mean(dist[:, -1]) / 3.0)
        if sigma <= 0:
            raise DegenerateDataError(
                "mean K-th nearest neighbour distance is 0 (duplicate points); sigma would be 0"
            )
    if np.any(dist == 0):
        i = int(np.flatnonzero((dist == 0).any(axis=1))[0])
        raise DegenerateDataError(f"point {i} duplicates one of its neighbours (distance 0)")
    w = np.exp(-(dist ** 2) / (2.0 * sigma ** 2))
    return _to_graph(_symmetric_union(N, nbrs, w))


def cosine_similarity(X) -> np.ndarray:
    X = _check_features(X)
    norms = np.linalg.norm(X, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise DegenerateDataError(f"row {zero[0]} has zero norm; cosine similarity undefined")
    Y = X / norms[:, None]
    return np.clip(Y @ Y.T, -1.0, 1.0)


def build_knn_cosine(features, config: GraphBuildConfig | None = None) -> Graph:
    """Each node links to its K most cosine-similar nodes; nonpositive similarities are dropped."""
    config = config or GraphBuildConfig(kernel="cosine")
    S = cosine_similarity(features)
    N = S.shape[0]
    nbrs = _nearest(S, config.K, largest=True)
    w = S[np.arange(N)[:, None], nbrs]
    w = np.where(w > 0, w, 0.0)
    W = _symmetric_union(N, nbrs, w)
    W.eliminate_zeros()
    return _to_graph(W)


def build_graph(features, config: GraphBuildConfig | None = None) -> Graph:
    config = config or GraphBuildConfig()
    if config.kernel == "cosine":
        return build_knn_cosine(features, config)
    return build_knn_gaussian(features, config)


def tfidf_features(term_counts, min_doc_freq: int = 20, vocab_cap: int = 3000):
    """tf-idf weights ``(1 + ln tf) * ln(N / df)`` over a pruned vocabulary.

    Terms present in fewer than ``min_doc_freq`` documents are dropped, then
    the ``vocab_cap`` terms with the largest total count are kept (ties to the
    lower term id).

    Returns
    -------
    features : (N, V') ndarray
    vocab : (V',) ndarray of the retained term ids, in ascending order
    """
    C = sp.csr_matrix(term_counts, dtype=float)
    if C.nnz and (np.any(C.data < 0) or np.any(C.data != np.round(C.data))):
        raise ValueError("term counts must be nonnegative integers")
    C.eliminate_zeros()
    N = C.shape[0]
    df = np.bincount(C.indices, minlength=C.shape[1])
    total = np.asarray(C.sum(axis=0)).ravel()
    candidates = np.flatnonzero(df >= min_doc_freq)
    order = np.lexsort((candidates, -total[candidates]))
    vocab = np.sort(candidates[order[:vocab_cap]])

    sub = C[:, vocab].tocsr()
    idf = np.log(N / df[vocab])
    sub.data = 1.0 + np.log(sub.data)
    sub = sub @ sp.diags(idf)
    return np.asarray(sub.todense()), vocab


# --- synthetic datasets ----------------------------------------------------

def make_two_circles(n_per_circle: int = 100, radii=(1.0, 1.5), noise: float = 0.02,
                     seed: int = 0):
    """Two concentric circles, points evenly spaced in angle with radial Gaussian noise.

    Returns ``(X, labels)`` where ``labels`` is 0 for the first radius, 1 for the second.
    """
    r1, r2 = radii
    if r1 <= 0 or r2 <= 0 or r1 == r2:
        raise ValueError("radii must be distinct and positive")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    pts, labels = [], []
    for c, r in enumerate((r1, r2)):
        phase = rng.uniform(0.0, 2 * np.pi / n_per_circle)
        theta = phase + 2 * np.pi * np.arange(n_per_circle) / n_per_circle
        radius = r + noise * rng.standard_normal(n_per_circle)
        pts.append(np.column_stack([radius * np.cos(theta), radius * np.sin(theta)]))
        labels.append(np.full(n_per_circle, c))
    return np.vstack(pts), np.concatenate(labels)


def make_blobs(n_samples: int = 500, n_classes: int = 10, dim: int = 5,
               center_spread: float = 1.5, cluster_std: float = 1.0, seed: int = 0):
    """Isotropic Gaussian clusters of (nearly) equal size with ``N(0, center_spread^2)`` centres."""
    rng = np.random.default_rng(seed)
    centers = center_spread * rng.standard_normal((n_classes, dim))
    labels = np.arange(n_samples) % n_classes
    X = centers[labels] + cluster_std * rng.standard_normal((n_samples, dim))
    return X, labels


# --- file formats ----------------------------------------------------------

def read_features_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: cannot parse feature row") from None
            if len(rows[-1]) != len(rows[0]):
                raise ValueError(f"{path}:{lineno}: expected {len(rows[0])} columns, got {len(rows[-1])}")
    if not rows:
        raise ValueError(f"{path}: no feature rows")
    return np.array(rows)


def write_features_csv(X, path) -> None:
    with open(path, "w") as fh:
        for row in np.asarray(X, dtype=float):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_labels(path) -> np.ndarray:
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                labels.append(int(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: label must be an integer, got {line!r}") from None
            if labels[-1] < 0:
                raise ValueError(f"{path}:{lineno}: negative class id")
    return np.array(labels, dtype=int)


def write_labels(labels, path) -> None:
    with open(path, "w") as fh:
        for c in labels:
            fh.write(f"{int(c)}\n")


def read_term_counts(path, n_docs: int | None = None, n_terms: int | None = None):
    docs, terms, counts = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'doc term count'")
            try:
                d, t, c = (int(p) for p in parts)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer field") from None
            if d < 0 or t < 0 or c < 0:
                raise ValueError(f"{path}:{lineno}: negative field")
            docs.append(d)
            terms.append(t)
            counts.append(c)
    shape = (n_docs or max(docs, default=-1) + 1, n_terms or max(terms, default=-1) + 1)
    return sp.csr_matrix((np.array(counts, dtype=float), (docs, terms)), shape=shape)


__all__ = [
    "DegenerateDataError", "GraphBuildConfig", "GraphError", "build_graph",
    "build_knn_cosine", "build_knn_gaussian", "cosine_similarity", "knn_sigma",
    "make_blobs", "make_two_circles", "read_features_csv", "read_labels",
    "read_term_counts", "tfidf_features", "write_features_csv", "write_labels",
]
