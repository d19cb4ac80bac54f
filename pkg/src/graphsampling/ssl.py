"""Multi-class active semi-supervised classification on a graph.

Each class ``j`` has a membership signal ``f_j`` (1 on the class, 0 elsewhere).
After labels are queried on a sampling set, every membership signal is
reconstructed from its samples and each node takes the class with the largest
reconstructed membership.

The module also carries the spectral diagnostics used to reason about label
budgets: the cumulative GFT energy of a signal, its smoothness ``gamma`` and
the number of eigenvalues below it, which no sampling set smaller than that
count can beat.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, SpectralBasis, dense_spectral_basis, gft
from .reconstruct import (
    PocsConfig,
    SampledSignal,
    least_squares_reconstruct,
    pocs_reconstruct,
)
from .sampling import SamplingSet

GAMMA_EPS = 1e-9
# tail norms within TAIL_RTOL * ||f|| of delta count as meeting it (absorbs Parseval rounding)
TAIL_RTOL = 1e-12


class AbsentClassWarning(UserWarning):
    """A class has no labeled node in the sampling set."""


class LabeledOracle:
    """Ground-truth labels revealed only for queried nodes.

    Parameters
    ----------
    labels : sequence of int
        Class id of every node, in ``{0, ..., n_classes - 1}``.
    n_classes : int, optional
        Defaults to ``max(labels) + 1``.
    """

    def __init__(self, labels, n_classes: int | None = None):
        labels = np.asarray(labels, dtype=int)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a nonempty 1-D sequence")
        if labels.min() < 0:
            raise ValueError("class ids must be nonnegative")
        self.n_classes = int(labels.max()) + 1 if n_classes is None else int(n_classes)
        if labels.max() >= self.n_classes:
            raise ValueError(f"class id {labels.max()} out of range for {self.n_classes} classes")
        self._labels = labels
        self.queried: list[int] = []

    @property
    def n(self) -> int:
        return self._labels.size

    def query(self, nodes) -> np.ndarray:
        nodes = np.asarray(list(nodes), dtype=int)
        if nodes.size and (nodes.min() < 0 or nodes.max() >= self.n):
            raise IndexError("queried node out of range")
        seen = set(self.queried)
        self.queried.extend(int(v) for v in nodes if int(v) not in seen)
        return self._labels[nodes]


def membership_signals(oracle: LabeledOracle, s) -> list[SampledSignal]:
    """Per-class 0/1 membership samples on ``s``.

    Classes with no labeled node in ``s`` get all-zero samples and an
    :class:`AbsentClassWarning`.
    """
    s = np.asarray(list(s), dtype=int)
    if s.size == 0:
        raise ValueError("sampling set must be nonempty")
    y = oracle.query(s)
    out = [SampledSignal(s, (y == j).astype(float)) for j in range(oracle.n_classes)]
    absent = [j for j in range(oracle.n_classes) if not np.any(y == j)]
    if absent:
        warnings.warn(f"classes {absent} have no labeled node; their memberships reconstruct to 0",
                      AbsentClassWarning, stacklevel=2)
    return out


@dataclass
class MembershipPrediction:
    """Reconstructed memberships (n x C) and the argmax class of every node."""

    scores: np.ndarray
    predicted: np.ndarray
    absent_classes: list[int] = field(default_factory=list)
    converged: bool = True

    def accuracy(self, labels, exclude=()) -> float:
        """Fraction of correct predictions over nodes not in ``exclude``."""
        labels = np.asarray(labels, dtype=int)
        mask = np.ones(labels.size, dtype=bool)
        mask[np.asarray(list(exclude), dtype=int)] = False
        if not mask.any():
            raise ValueError("no nodes left to score")
        return float(np.mean(self.predicted[mask] == labels[mask]))


def predict(graph: Graph, sset: SamplingSet, oracle: LabeledOracle, reconstruction: str = "pocs",
            pocs_config: PocsConfig | None = None, basis: SpectralBasis | None = None,
            omega: float | None = None) -> MembershipPrediction:
    """Query labels on ``sset``, reconstruct every membership signal and classify by argmax.

    ``omega`` defaults to the cutoff estimate stored with the sampling set.
    ``reconstruction="exact"`` uses the least-squares fit on the dense
    eigenbasis; ``"pocs"`` runs the iterative method (matrix free unless the
    configured kernel is ideal). Labeled nodes keep their queried labels:
    the sample values are written back into the scores before the argmax.
    Ties go to the lowest class id.
    """
    nodes = np.asarray(sset.nodes, dtype=int)
    if nodes.size == 0:
        raise ValueError("sampling set is empty")
    w = sset.omega if omega is None else omega
    if not w > 0:
        raise ValueError(f"cutoff must be positive, got {w}")

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AbsentClassWarning)
        signals = membership_signals(oracle, nodes)
    for wmsg in caught:
        warnings.warn(wmsg.message, wmsg.category, stacklevel=2)
    values = np.column_stack([sig.values for sig in signals])
    absent = [j for j in range(oracle.n_classes) if not values[:, j].any()]
    block = SampledSignal(nodes, values)

    converged = True
    if reconstruction == "exact":
        basis = basis or dense_spectral_basis(graph)
        scores = least_squares_reconstruct(basis, block, w)
    elif reconstruction == "pocs":
        cfg = pocs_config or PocsConfig()
        if cfg.kernel == "ideal" and basis is None:
            basis = dense_spectral_basis(graph)
        res = pocs_reconstruct(graph, block, w, cfg, basis=basis)
        scores, converged = res.signal, res.converged
    else:
        raise ValueError(f"unknown reconstruction mode {reconstruction!r}")

    scores = np.array(scores, dtype=float)
    scores[nodes] = values
    return MembershipPrediction(scores, np.argmax(scores, axis=1), absent, converged)


def gft_energy_cdf(basis: SpectralBasis, f) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative fraction of GFT energy up to each eigenvalue.

    Returns ``(lambdas, cdf)`` with ``cdf[i] = sum_{j<=i} f~_j^2 / ||f||^2``.
    """
    c = gft(basis, f)
    total = float(c @ c)
    if total == 0:
        raise ValueError("energy distribution of the zero signal is undefined")
    cdf = np.cumsum(c ** 2) / total
    return np.asarray(basis.eigenvalues).copy(), np.minimum(cdf, 1.0)


def smoothness_gamma(basis: SpectralBasis, f, delta: float = 0.0) -> float:
    """Smallest passband edge ``theta`` whose low-pass residual is within ``delta``.

    Frequencies strictly below ``theta`` pass. Candidates are the eigenvalues
    and ``lambda_N + 1e-9``; the first one whose tail energy
    ``sum_{lambda_i >= theta} f~_i^2`` is at most ``delta^2`` wins.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    lam = np.asarray(basis.eigenvalues)
    c2 = gft(basis, f) ** 2
    slack = TAIL_RTOL * np.sqrt(c2.sum())
    # tail[i] = energy at eigenvalues >= lam[i]; ties share the tail of their first index
    tail = np.cumsum(c2[::-1])[::-1]
    first = np.searchsorted(lam, lam, side="left")
    tail = tail[first]
    ok = np.flatnonzero(np.sqrt(tail) <= delta + slack)
    return float(lam[ok[0]]) if ok.size else float(lam[-1] + GAMMA_EPS)


def min_labels_lower_bound(basis: SpectralBasis, f, delta: float = 0.0) -> int:
    """Number of eigenvalues strictly below ``smoothness_gamma(f, delta)``."""
    gamma = smoothness_gamma(basis, f, delta)
    return int(np.sum(np.asarray(basis.eigenvalues) < gamma))


def write_predictions(pred: MembershipPrediction, path) -> None:
    C = pred.scores.shape[1]
    with open(path, "w") as fh:
        fh.write("node,predicted," + ",".join(f"score_{j}" for j in range(C)) + "\n")
        for i, (c, row) in enumerate(zip(pred.predicted, pred.scores)):
            fh.write(f"{i},{int(c)}," + ",".join(repr(float(v)) for v in row) + "\n")
