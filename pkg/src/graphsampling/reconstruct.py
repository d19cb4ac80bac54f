"""Recovering bandlimited signals from their values on a sampling set.

Two routes are provided. ``least_squares_reconstruct`` fits the
coefficients of the eigenvectors below the cutoff directly and needs the
dense eigenbasis. ``pocs_reconstruct`` alternates between resetting the known
samples and low-pass filtering, so with a polynomial filter it only needs
sparse matrix-vector products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .filters import (
    DEFAULT_ALPHA,
    DEFAULT_DEGREE,
    apply_exact_filter,
    apply_filter,
    chebyshev_approximate,
    ideal_kernel,
    sigmoid_kernel,
)
from .graph import Graph, SpectralBasis

RANK_RTOL = 1e-10


class RankDeficiencyError(ArithmeticError):
    """The sampled eigenvector block ``U_{S,K}`` does not have full column rank."""

    def __init__(self, message, rank: int, columns: int):
        super().__init__(message)
        self.rank = rank
        self.columns = columns


@dataclass(frozen=True)
class SampledSignal:
    """Signal values on an ordered node set; ``values`` is ``(m,)`` or ``(m, c)``."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=int).reshape(-1)
        values = np.asarray(self.values, dtype=float)
        if values.shape[:1] != nodes.shape:
            raise ValueError(f"{nodes.size} nodes but {values.shape[0] if values.ndim else 0} values")
        if np.unique(nodes).size != nodes.size:
            raise ValueError("sampled nodes must be unique")
        if nodes.size and nodes.min() < 0:
            raise IndexError("negative node index")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.nodes.size

    def _check(self, n: int):
        if self.nodes.size and self.nodes.max() >= n:
            raise IndexError(f"node {self.nodes.max()} out of range for {n} nodes")

    def embed(self, n: int) -> np.ndarray:
        """Zero-filled signal on all ``n`` nodes carrying the samples."""
        self._check(n)
        out = np.zeros((n,) + self.values.shape[1:])
        out[self.nodes] = self.values
        return out


def sample(f, s) -> SampledSignal:
    """Values of ``f`` on ``s``, in the order given."""
    f = np.asarray(f, dtype=float)
    s = np.asarray(list(s), dtype=int)
    if s.size and (s.min() < 0 or s.max() >= f.shape[0]):
        raise IndexError("sampling-set index out of range")
    return SampledSignal(s, f[s])


def least_squares_reconstruct(basis: SpectralBasis, samples: SampledSignal,
                              omega: float) -> np.ndarray:
    """Least-squares fit of the samples by eigenvectors with ``lambda < omega``.

    Solves ``min ||U_{S,K} a - f(S)||`` through an SVD with rank tolerance
    ``1e-10 * sigma_max`` and returns ``U_{:,K} a``. When the signal lies in
    that band and ``U_{S,K}`` has full column rank, the signal is recovered
    exactly.

    Raises
    ------
    RankDeficiencyError
        If ``U_{S,K}`` is column-rank deficient, so that several bandlimited
        signals share the same samples.
    """
    samples._check(basis.n)
    band = np.flatnonzero(basis.eigenvalues < omega)
    if band.size == 0:
        raise ValueError(f"no eigenvalue below omega={omega}; the passband is empty")
    A = basis.eigenvectors[np.ix_(samples.nodes, band)]
    if A.shape[0] < band.size:
        raise RankDeficiencyError(
            f"{A.shape[0]} samples cannot determine {band.size} band coefficients "
            f"(rank at most {A.shape[0]} < {band.size})",
            rank=A.shape[0], columns=band.size,
        )
    Q, sv, Vt = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(sv > RANK_RTOL * sv[0])) if sv.size else 0
    if rank < band.size:
        raise RankDeficiencyError(
            f"sampled eigenvector block has rank {rank} < {band.size} band columns; "
            "the samples do not determine a unique bandlimited signal",
            rank=rank, columns=band.size,
        )
    coeffs = Vt.T @ ((Q.T @ samples.values) / (sv[:, None] if samples.values.ndim == 2 else sv))
    return basis.eigenvectors[:, band] @ coeffs


@dataclass(frozen=True)
class PocsConfig:
    """Settings for the alternating-projection reconstruction.

    ``kernel`` is ``"sigmoid"`` (Chebyshev polynomial of the sigmoid, matrix
    free) or ``"ideal"`` (exact spectral projector; needs a basis).
    """

    max_iters: int = 2000
    stop_tol: float = 1e-7
    kernel: str = "sigmoid"
    alpha: float = DEFAULT_ALPHA
    degree: int = DEFAULT_DEGREE

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.stop_tol > 0:
            raise ValueError("stop_tol must be positive")
        if self.kernel not in ("sigmoid", "ideal"):
            raise ValueError(f"unknown POCS kernel {self.kernel!r}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")


@dataclass
class PocsResult:
    signal: np.ndarray
    iterations: int
    converged: bool
    filter_error: float = 0.0
    history: list[float] = field(default_factory=list)


def _low_pass(graph: Graph, omega: float, config: PocsConfig, basis: SpectralBasis | None):
    if config.kernel == "ideal":
        if basis is None:
            raise ValueError("the ideal POCS filter needs a spectral basis")
        k = ideal_kernel(omega)
        return (lambda x: apply_exact_filter(basis, k, x)), 0.0
    k = chebyshev_approximate(sigmoid_kernel(omega, config.alpha), config.degree)
    return (lambda x: apply_filter(graph, k, x)), k.max_error


def pocs_reconstruct(graph: Graph, samples: SampledSignal, omega: float,
                     config: PocsConfig | None = None, basis: SpectralBasis | None = None,
                     callback=None) -> PocsResult:
    """Alternating projections ``f <- P_omega P_S f`` from ``f_0 = P_omega D_S' f(S)``.

    ``P_S`` overwrites the sampled entries with the known values and
    ``P_omega`` is the low-pass filter. Iteration stops once the relative
    change ``||f_{i+1} - f_i|| / ||f_i||`` drops to ``stop_tol``; hitting
    ``max_iters`` first returns the last iterate with ``converged=False``.
    ``callback(i, f_i)`` sees every iterate.

    The samples may hold several signals as columns; they share one stopping
    test over the whole block.
    """
    config = config or PocsConfig()
    if not omega > 0:
        raise ValueError(f"cutoff must be positive, got {omega}")
    low_pass, err = _low_pass(graph, omega, config, basis)
    known = samples.embed(graph.n)
    nodes = samples.nodes

    f = low_pass(known)
    history = []
    for it in range(1, config.max_iters + 1):
        g = f.copy()
        g[nodes] = samples.values
        f_new = low_pass(g)
        scale = np.linalg.norm(f)
        change = np.linalg.norm(f_new - f) / scale if scale > 0 else np.linalg.norm(f_new)
        f = f_new
        history.append(float(change))
        if callback is not None:
            callback(it, f)
        if change <= config.stop_tol:
            return PocsResult(f, it, True, err, history)
    return PocsResult(f, config.max_iters, False, err, history)


# --- text formats ----------------------------------------------------------

def read_signal(path) -> np.ndarray:
    vals = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                vals.append(float(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected a number, got {line!r}") from None
    return np.array(vals)


def write_signal(f, path) -> None:
    with open(path, "w") as fh:
        for v in np.asarray(f, dtype=float).ravel():
            fh.write(f"{float(v)!r}\n")


def read_sampled_signal(path) -> SampledSignal:
    nodes, vals = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'index value', got {line!r}")
            try:
                nodes.append(int(parts[0]))
                vals.append(float(parts[1]))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: cannot parse {line!r}") from None
    return SampledSignal(np.array(nodes, dtype=int), np.array(vals))


def write_sampled_signal(samples: SampledSignal, path) -> None:
    with open(path, "w") as fh:
        for i, v in zip(samples.nodes, samples.values):
            fh.write(f"{int(i)} {float(v)!r}\n")
