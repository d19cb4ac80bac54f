"""Sparse weighted graphs and the symmetric normalized Laplacian.

The Laplacian is never stored densely: ``laplacian_apply`` works through the
normalized adjacency ``D^{-1/2} W D^{-1/2}``, which shares the sparsity of W.
A dense eigen-decomposition is available for small graphs and serves as the
reference for the iterative code paths.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

DENSE_ORACLE_LIMIT = 2000


class GraphError(ValueError):
    """Raised for malformed or unsupported graphs."""


class DisconnectedGraphError(GraphError):
    pass


class IsolatedNodeError(GraphError):
    pass


class OracleSizeError(ValueError):
    """Raised when a dense computation is requested on too large a problem."""


class Graph:
    """Undirected weighted graph with a cached normalized adjacency.

    Parameters
    ----------
    adjacency : sparse or dense (n, n) array
        Symmetric nonnegative weight matrix with zero diagonal.
    check_connected : bool
        Reject graphs with more than one connected component.
    """

    def __init__(self, adjacency, check_connected: bool = True):
        W = sp.csr_matrix(adjacency, dtype=float)
        W.eliminate_zeros()
        W.sort_indices()
        if W.shape[0] != W.shape[1]:
            raise GraphError(f"adjacency must be square, got {W.shape}")
        n = W.shape[0]
        if n < 1:
            raise GraphError("graph has no nodes")
        if not np.all(np.isfinite(W.data)):
            raise GraphError("non-finite edge weight")
        if np.any(W.data < 0):
            raise GraphError("edge weights must be positive")
        if W.diagonal().any():
            raise GraphError("self-loops are not allowed")
        if (W != W.T).nnz:
            raise GraphError("adjacency is not symmetric")

        degrees = np.asarray(W.sum(axis=1)).ravel()
        isolated = np.flatnonzero(degrees <= 0)
        if isolated.size and n > 1:
            raise IsolatedNodeError(f"node {isolated[0]} has zero degree")
        if n == 1:
            raise IsolatedNodeError("single-node graph has zero degree")

        self.n = n
        self.adjacency = W
        self.degrees = degrees
        self._inv_sqrt_deg = 1.0 / np.sqrt(degrees)
        D = sp.diags(self._inv_sqrt_deg)
        self.normalized_adjacency = sp.csr_matrix(D @ W @ D)
        self._incidence = None

        if check_connected:
            ncomp = len(connected_components(self))
            if ncomp > 1:
                raise DisconnectedGraphError(
                    f"graph has {ncomp} connected components; a connected graph is required"
                )

        for arr in (self.degrees, self._inv_sqrt_deg):
            arr.setflags(write=False)

    @classmethod
    def from_edges(cls, n, rows, cols, weights, check_connected=True):
        """Build from a list of undirected edges, each given once."""
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        weights = np.asarray(weights, dtype=float)
        if np.any(rows == cols):
            raise GraphError("self-loops are not allowed")
        if np.any(weights <= 0):
            raise GraphError("edge weights must be strictly positive")
        W = sp.coo_matrix((weights, (rows, cols)), shape=(n, n)).tocsr()
        W = W.maximum(W.T)
        return cls(W, check_connected=check_connected)

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    def neighbors(self, i: int) -> np.ndarray:
        W = self.adjacency
        return W.indices[W.indptr[i]:W.indptr[i + 1]]

    def normalized_incidence(self) -> sp.csr_matrix:
        """Edge-by-node matrix ``B`` with ``B' B = L``.

        The row for edge ``(i, j)``, ``i < j``, holds ``sqrt(w_ij / d_i)`` at ``i``
        and ``-sqrt(w_ij / d_j)`` at ``j``.
        """
        if self._incidence is None:
            E = sp.triu(self.adjacency, k=1).tocoo()
            m = E.nnz
            rows = np.concatenate([np.arange(m), np.arange(m)])
            cols = np.concatenate([E.row, E.col])
            sw = np.sqrt(E.data)
            vals = np.concatenate([sw * self._inv_sqrt_deg[E.row], -sw * self._inv_sqrt_deg[E.col]])
            self._incidence = sp.csr_matrix((vals, (rows, cols)), shape=(m, self.n))
        return self._incidence

    def dense_laplacian(self) -> np.ndarray:
        """Dense normalized Laplacian; only meant for small graphs and tests."""
        return np.eye(self.n) - self.normalized_adjacency.toarray()

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.num_edges})"


def connected_components(graph: Graph) -> list[np.ndarray]:
    """Connected components by breadth-first traversal, ordered by smallest node."""
    W = graph.adjacency
    label = np.full(graph.n, -1, dtype=int)
    comps = []
    for start in range(graph.n):
        if label[start] >= 0:
            continue
        c = len(comps)
        label[start] = c
        queue = deque([start])
        members = [start]
        while queue:
            i = queue.popleft()
            for j in W.indices[W.indptr[i]:W.indptr[i + 1]]:
                if label[j] < 0:
                    label[j] = c
                    queue.append(j)
                    members.append(j)
        comps.append(np.sort(np.array(members)))
    return comps


def hop_distances(graph: Graph, source: int) -> np.ndarray:
    """Unweighted shortest-path lengths from ``source`` (-1 if unreachable)."""
    W = graph.adjacency
    dist = np.full(graph.n, -1, dtype=int)
    dist[source] = 0
    queue = deque([source])
    while queue:
        i = queue.popleft()
        for j in W.indices[W.indptr[i]:W.indptr[i + 1]]:
            if dist[j] < 0:
                dist[j] = dist[i] + 1
                queue.append(j)
    return dist


def laplacian_apply(graph: Graph, x) -> np.ndarray:
    """Return ``L x`` for the normalized Laplacian ``L = I - D^{-1/2} W D^{-1/2}``.

    ``x`` may be a vector of length n or an (n, c) block of signals.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] != graph.n:
        raise ValueError(f"signal has length {x.shape[0]}, graph has {graph.n} nodes")
    return x - graph.normalized_adjacency @ x


def laplacian_power_apply(graph: Graph, x, k: int) -> np.ndarray:
    """Return ``L^k x`` by ``k`` successive Laplacian products (``k = 0`` is the identity)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    y = np.array(x, dtype=float)
    for _ in range(k):
        y = laplacian_apply(graph, y)
    return y


@dataclass(frozen=True)
class SpectralBasis:
    """Full eigen-decomposition of the normalized Laplacian.

    ``eigenvectors[:, i]`` pairs with ``eigenvalues[i]``; eigenvalues ascend.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


def fix_sign(v: np.ndarray, rtol: float = 1e-6) -> np.ndarray:
    """Flip columns so that the first non-negligible entry is positive.

    An entry counts as nonzero when it exceeds ``rtol`` times the column's largest
    magnitude, which keeps the convention stable under solver noise.
    """
    v = np.array(v, dtype=float)
    cols = v.reshape(v.shape[0], -1)
    for j in range(cols.shape[1]):
        col = cols[:, j]
        nz = np.flatnonzero(np.abs(col) > rtol * np.abs(col).max())
        if nz.size and col[nz[0]] < 0:
            cols[:, j] = -col
    return cols.reshape(v.shape)


def dense_spectral_basis(graph: Graph, limit: int = DENSE_ORACLE_LIMIT) -> SpectralBasis:
    """Eigen-decomposition of the dense normalized Laplacian via ``numpy.linalg.eigh``."""
    if graph.n > limit:
        raise OracleSizeError(f"dense spectral basis refused: n={graph.n} exceeds limit {limit}")
    L = graph.dense_laplacian()
    L = 0.5 * (L + L.T)
    lam, U = np.linalg.eigh(L)
    lam = np.clip(lam, 0.0, None)
    U = fix_sign(U)
    lam.setflags(write=False)
    U.setflags(write=False)
    return SpectralBasis(lam, U)


def gft(basis: SpectralBasis, f) -> np.ndarray:
    """Graph Fourier transform ``U^T f``."""
    f = np.asarray(f, dtype=float)
    if f.shape[0] != basis.n:
        raise ValueError(f"signal has length {f.shape[0]}, basis has {basis.n} nodes")
    return basis.eigenvectors.T @ f


def igft(basis: SpectralBasis, coeffs) -> np.ndarray:
    return basis.eigenvectors @ np.asarray(coeffs, dtype=float)


# --- edge-list text format -------------------------------------------------

def read_edge_list(path, n: int | None = None, check_connected: bool = True) -> Graph:
    """Read ``i j w`` lines (0-based, each undirected edge once, '#' comments)."""
    rows, cols, weights = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if line.startswith("#"):
                m = re.match(r"#\s*n\s*=\s*(\d+)", line)
                if m and n is None:
                    n = int(m.group(1))
                continue
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise GraphError(f"{path}:{lineno}: expected 'i j w', got {line!r}")
            try:
                i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise GraphError(f"{path}:{lineno}: cannot parse {line!r}") from None
            if i < 0 or j < 0:
                raise GraphError(f"{path}:{lineno}: negative node index")
            if w <= 0:
                raise GraphError(f"{path}:{lineno}: weight must be positive")
            rows.append(i)
            cols.append(j)
            weights.append(w)
    if n is None:
        n = max(max(rows, default=-1), max(cols, default=-1)) + 1
    return Graph.from_edges(n, rows, cols, weights, check_connected=check_connected)


def write_edge_list(graph: Graph, path) -> None:
    W = sp.triu(graph.adjacency, k=1).tocoo()
    order = np.lexsort((W.col, W.row))
    with open(Path(path), "w") as fh:
        fh.write(f"# n={graph.n}\n")
        for idx in order:
            fh.write(f"{W.row[idx]} {W.col[idx]} {float(W.data[idx])!r}\n")
