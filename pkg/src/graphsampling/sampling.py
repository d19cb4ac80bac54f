"""Cutoff-frequency estimation and greedy sampling-set selection.

For a sampling set ``S`` the estimated cutoff is

    Omega_k(S) = min over signals phi vanishing on S of (phi' L^k phi / phi' phi)^(1/k)

i.e. the k-th root of the smallest eigenvalue of ``(L^k)_{Sc}``. The minimizer
(the smoothest signal that is invisible on ``S``) tells the greedy loop where
to sample next: the node carrying most of its energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, laplacian_power_apply
from .solver import (
    EigenPair,
    SolverConfig,
    complement,
    smallest_eigenpair_restricted,
)

DEFAULT_K = 8


@dataclass
class SamplingSet:
    """Selected nodes in selection order with the cutoff estimate after each addition."""

    nodes: list[int]
    cutoffs: list[float]
    k: int
    eigenvalues: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("sampling set contains duplicate nodes")

    def __len__(self):
        return len(self.nodes)

    @property
    def omega(self) -> float:
        """Cutoff estimate of the full set (0 for an empty set)."""
        return self.cutoffs[-1] if self.cutoffs else 0.0

    def prefix(self, m: int) -> "SamplingSet":
        return SamplingSet(self.nodes[:m], self.cutoffs[:m], self.k, self.eigenvalues[:m])


@dataclass(frozen=True)
class SmoothestSignal:
    values: np.ndarray
    bandwidth_estimate: float
    eigenvalue: float


def bandwidth_estimate(graph: Graph, phi, k: int) -> float:
    """k-th root Rayleigh quotient ``(phi' L^k phi / phi' phi)^(1/k)``."""
    phi = np.asarray(phi, dtype=float)
    nrm2 = float(phi @ phi)
    if nrm2 == 0:
        raise ValueError("bandwidth of the zero signal is undefined")
    if k < 1:
        raise ValueError("k must be a positive integer")
    # L^k = (L^{k/2})^2 for even k keeps the quotient nonnegative in floating point
    half = laplacian_power_apply(graph, phi, k // 2)
    if k % 2 == 0:
        q = float(half @ half)
    else:
        q = float(half @ laplacian_power_apply(graph, half, 1))
    return max(q / nrm2, 0.0) ** (1.0 / k)


def _as_node_set(graph: Graph, s) -> np.ndarray:
    s = np.asarray(list(s), dtype=int)
    if s.size and (s.min() < 0 or s.max() >= graph.n):
        raise IndexError("sampling-set index out of range")
    if np.unique(s).size != s.size:
        raise ValueError("sampling set contains duplicate nodes")
    return s


def estimate_cutoff(graph: Graph, s, k: int = DEFAULT_K,
                    config: SolverConfig | None = None) -> tuple[float, SmoothestSignal]:
    """Cutoff estimate ``Omega_k(S)`` and the smoothest signal vanishing on ``S``.

    The returned frequency is the k-th root of the smallest eigenvalue of
    ``(L^k)_{Sc}``; the raw eigenvalue is kept on the signal object.
    """
    s = _as_node_set(graph, s)
    if s.size >= graph.n:
        raise ValueError("sampling set covers every node; no unsampled signal exists")
    idx = complement(graph.n, s)
    pair: EigenPair = smallest_eigenpair_restricted(graph, idx, k, config)
    phi = np.zeros(graph.n)
    phi[idx] = pair.vector
    omega = pair.value ** (1.0 / k)
    return omega, SmoothestSignal(phi, omega, pair.value)


def argmax_energy(phi, exclude=(), rtol: float = 1e-9) -> int:
    """Node with the largest ``phi(i)^2``; near-ties (within ``rtol``) go to the lowest index."""
    e = np.asarray(phi, dtype=float) ** 2
    e[np.asarray(list(exclude), dtype=int)] = -np.inf
    top = e.max()
    return int(np.flatnonzero(e >= top - rtol * top)[0])


def greedy_select(graph: Graph, m: int, k: int = DEFAULT_K,
                  config: SolverConfig | None = None, callback=None) -> SamplingSet:
    """Greedy cutoff maximization: repeatedly sample where the smoothest hidden signal peaks.

    Starting from the empty set, each step solves for the smoothest signal
    vanishing on the current set, adds the node where its energy is largest
    and records the new cutoff estimate. ``callback(step, node, omega)`` is
    invoked after each addition when given.
    """
    if not 1 <= m < graph.n:
        raise ValueError(f"need 1 <= m < n (m={m}, n={graph.n})")
    nodes: list[int] = []
    cutoffs: list[float] = []
    eigs: list[float] = []
    _, phi = estimate_cutoff(graph, [], k, config)
    for step in range(m):
        v = argmax_energy(phi.values, exclude=nodes)
        nodes.append(v)
        omega, phi = estimate_cutoff(graph, nodes, k, config)
        cutoffs.append(omega)
        eigs.append(phi.eigenvalue)
        if callback is not None:
            callback(step, v, omega)
    return SamplingSet(nodes, cutoffs, k, eigs)


def partial_out_degree_ratios(graph: Graph, s) -> np.ndarray:
    """``p_j / d_j`` for every ``j`` outside ``S``, where ``p_j`` is the weight from ``j`` into ``S``.

    Entries follow the sorted order of the complement.
    """
    s = _as_node_set(graph, s)
    if s.size == 0:
        raise ValueError("sampling set must be nonempty")
    indicator = np.zeros(graph.n)
    indicator[s] = 1.0
    p = graph.adjacency @ indicator
    idx = complement(graph.n, s)
    return p[idx] / graph.degrees[idx]


def surrogate_cutoff_min_ratio(graph: Graph, s) -> float:
    """Smallest partial-out-degree ratio: a connectivity proxy for ``Omega_1(S)``."""
    s = _as_node_set(graph, s)
    if s.size >= graph.n:
        raise ValueError("complement set is empty")
    return float(partial_out_degree_ratios(graph, s).min())


# --- text serialization ----------------------------------------------------

def write_sampling_set(sset: SamplingSet, path) -> None:
    with open(path, "w") as fh:
        for v in sset.nodes:
            fh.write(f"{v}\n")
        fh.write("# cutoffs: " + ",".join(repr(float(c)) for c in sset.cutoffs) + "\n")
        fh.write(f"# k: {sset.k}\n")


def read_sampling_set(path) -> SamplingSet:
    nodes, cutoffs, k = [], [], DEFAULT_K
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("cutoffs:"):
                    vals = body[len("cutoffs:"):].strip()
                    cutoffs = [float(c) for c in vals.split(",")] if vals else []
                elif body.startswith("k:"):
                    k = int(body[2:].strip())
                continue
            try:
                nodes.append(int(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected a node index, got {line!r}") from None
    if cutoffs and len(cutoffs) != len(nodes):
        raise ValueError(f"{path}: {len(nodes)} nodes but {len(cutoffs)} cutoffs")
    return SamplingSet(nodes, cutoffs, k)
