"""Spectral kernels and their matrix-free polynomial realization.

A kernel ``h`` acts on a signal through the Laplacian eigenbasis,
``U diag(h(lambda)) U' x``. Polynomial kernels are stored as Chebyshev series
on ``[0, 2]``, where the normalized Laplacian spectrum lives, and applied with
the three-term recurrence on ``L - I``; no power of ``L`` is ever formed and a
degree-p filter only mixes nodes at most p hops apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

from .graph import Graph, SpectralBasis

SPECTRAL_DOMAIN = (0.0, 2.0)
GRID_POINTS = 1000
DEFAULT_DEGREE = 10
DEFAULT_ALPHA = 8.0


@dataclass(frozen=True)
class SpectralKernel:
    """Scalar response ``h(lambda)`` on ``[0, 2]``.

    Attributes
    ----------
    kind : {"ideal", "sigmoid", "polynomial"}
    omega : float
        Cutoff frequency (``nan`` for a bare polynomial).
    alpha : float
        Sigmoid steepness (``nan`` unless the kernel is or approximates a sigmoid).
    degree : int
        Polynomial degree (0 for non-polynomial kernels).
    chebyshev : ndarray
        Chebyshev coefficients on ``[0, 2]``; empty unless polynomial.
    max_error : float
        Grid max error against the approximated kernel (0 for exact kernels).
    overshoot : float
        ``max(0, max h - 1)`` over the grid.
    """

    kind: str
    omega: float = float("nan")
    alpha: float = float("nan")
    degree: int = 0
    chebyshev: np.ndarray = None
    max_error: float = 0.0
    overshoot: float = 0.0

    @property
    def coefficients(self) -> np.ndarray:
        """Monomial coefficients ``a_j`` of ``sum_j a_j lambda^j`` (polynomial kernels only)."""
        self._require_polynomial()
        return self._series().convert(kind=Polynomial, domain=[-1, 1], window=[-1, 1]).coef

    def _require_polynomial(self):
        if self.kind != "polynomial":
            raise ValueError(f"{self.kind} kernel has no polynomial coefficients")

    def _series(self) -> Chebyshev:
        return Chebyshev(self.chebyshev, domain=list(SPECTRAL_DOMAIN))

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.kind == "ideal":
            return np.where(lam < self.omega, 1.0, 0.0)
        if self.kind == "sigmoid":
            return _sigmoid(lam, self.omega, self.alpha)
        return self._series()(lam)


def _sigmoid(lam, omega, alpha):
    # exp overflow for large alpha*(lam - omega) harmlessly yields 0
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(alpha * (lam - omega)))


def ideal_kernel(omega: float) -> SpectralKernel:
    """Brick-wall low-pass: 1 for ``lambda < omega``, 0 otherwise (``omega`` itself is cut)."""
    if not omega > 0:
        raise ValueError(f"cutoff must be positive, got {omega}")
    return SpectralKernel("ideal", omega=float(omega))


def sigmoid_kernel(omega: float, alpha: float = DEFAULT_ALPHA) -> SpectralKernel:
    """Smooth low-pass ``1 / (1 + exp(alpha (lambda - omega)))``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return SpectralKernel("sigmoid", omega=float(omega), alpha=float(alpha))


def _grid():
    return np.linspace(*SPECTRAL_DOMAIN, GRID_POINTS)


def polynomial_kernel(coefficients) -> SpectralKernel:
    """Kernel ``sum_j a_j lambda^j`` from monomial coefficients (lowest order first)."""
    a = np.atleast_1d(np.asarray(coefficients, dtype=float))
    if a.size == 0:
        raise ValueError("need at least one coefficient")
    cheb = Polynomial(a).convert(kind=Chebyshev, domain=list(SPECTRAL_DOMAIN)).coef
    cheb = np.pad(cheb, (0, max(0, a.size - cheb.size)))
    vals = Chebyshev(cheb, domain=list(SPECTRAL_DOMAIN))(_grid())
    return SpectralKernel("polynomial", degree=a.size - 1, chebyshev=cheb,
                          overshoot=max(0.0, float(vals.max()) - 1.0))


def chebyshev_approximate(kernel: SpectralKernel, degree: int = DEFAULT_DEGREE,
                          nodes: int | None = None) -> SpectralKernel:
    """Truncated Chebyshev expansion of ``kernel`` on ``[0, 2]``.

    Coefficients come from Gauss-Chebyshev quadrature with ``nodes`` points
    (default ``4 * degree``); the result records its max error over a
    1000-point grid and its overshoot above 1.

    The ideal kernel is refused: its jump makes the truncated series ring
    badly, so approximate a sigmoid of the same cutoff instead.
    """
    if kernel.kind == "ideal":
        raise ValueError(
            "refusing to approximate the discontinuous ideal kernel; "
            "use sigmoid_kernel(omega, alpha) and approximate that"
        )
    if degree < 1:
        raise ValueError("degree must be >= 1")
    M = max(4 * degree, degree + 1) if nodes is None else int(nodes)
    if M < degree + 1:
        raise ValueError("need at least degree + 1 quadrature nodes")

    t = np.cos(np.pi * (np.arange(M) + 0.5) / M)
    h = kernel(t + 1.0)  # [-1, 1] -> [0, 2]
    j = np.arange(degree + 1)
    c = (2.0 / M) * (np.cos(np.outer(j, np.pi * (np.arange(M) + 0.5) / M)) @ h)
    c[0] /= 2.0

    grid = _grid()
    approx = Chebyshev(c, domain=list(SPECTRAL_DOMAIN))(grid)
    return SpectralKernel(
        "polynomial",
        omega=kernel.omega,
        alpha=kernel.alpha,
        degree=degree,
        chebyshev=c,
        max_error=float(np.max(np.abs(approx - kernel(grid)))),
        overshoot=max(0.0, float(approx.max()) - 1.0),
    )


def apply_filter(graph: Graph, kernel: SpectralKernel, x) -> np.ndarray:
    """Polynomial filter ``h(L) x`` by the Chebyshev recurrence on ``M = L - I``.

    ``x`` may be a vector or an (n, c) block.
    """
    kernel._require_polynomial()
    x = np.asarray(x, dtype=float)
    if x.shape[0] != graph.n:
        raise ValueError(f"signal has length {x.shape[0]}, graph has {graph.n} nodes")
    c = kernel.chebyshev
    N = graph.normalized_adjacency

    # L - I = -N, so T_{j+1} = -2 N T_j - T_{j-1}
    t_prev = x
    out = c[0] * t_prev
    if c.size == 1:
        return out
    t_cur = -(N @ x)
    out = out + c[1] * t_cur
    for cj in c[2:]:
        t_prev, t_cur = t_cur, -2.0 * (N @ t_cur) - t_prev
        out = out + cj * t_cur
    return out


def apply_exact_filter(basis: SpectralBasis, kernel: SpectralKernel, x) -> np.ndarray:
    """Exact spectral multiplication ``U diag(h(lambda)) U' x``."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != basis.n:
        raise ValueError(f"signal has length {x.shape[0]}, basis has {basis.n} nodes")
    U = basis.eigenvectors
    h = kernel(basis.eigenvalues)
    coeffs = U.T @ x
    return U @ (h[:, None] * coeffs if coeffs.ndim == 2 else h * coeffs)


def kernel_from_spec(spec: dict, omega: float | None = None) -> SpectralKernel:
    """Kernel from a config mapping such as ``{"kind": "sigmoid", "omega": 1, "alpha": 8, "degree": 10}``.

    ``omega`` fills in the cutoff when the mapping leaves it out. A sigmoid
    with a ``degree`` is returned already approximated.
    """
    spec = dict(spec)
    kind = spec.pop("kind", "sigmoid")
    w = spec.pop("omega", omega)
    if kind == "polynomial":
        return polynomial_kernel(spec.pop("coefficients"))
    if w is None:
        raise ValueError(f"{kind} kernel needs a cutoff 'omega'")
    if kind == "ideal":
        return ideal_kernel(w)
    if kind == "sigmoid":
        k = sigmoid_kernel(w, spec.pop("alpha", DEFAULT_ALPHA))
        degree = spec.pop("degree", None)
        return k if degree is None else chebyshev_approximate(k, int(degree))
    raise ValueError(f"unknown kernel kind {kind!r}")
