"""Smallest eigen-pair of the restricted Laplacian power ``(L^k)_{Sc}``.

``(L^k)_{Sc}`` is the principal submatrix of ``L^k`` on the unsampled nodes
``Sc``. It is only ever applied as embed -> ``k`` Laplacian products ->
restrict, so nothing larger than the sparse normalized adjacency is stored.

The iterative solver is a block LOBPCG (locally optimal block preconditioned
conjugate gradient) with Rayleigh-Ritz on the span of the current iterates,
their preconditioned residuals and the previous search directions.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import (
    DENSE_ORACLE_LIMIT,
    Graph,
    OracleSizeError,
    fix_sign,
    laplacian_apply,
    laplacian_power_apply,
)

MAX_POWER = 16
# shifted preconditioner keeps theta / mu within SHIFT_RATIO and refactors at theta / SHIFT_WINDOW
SHIFT_RATIO = 1e4
SHIFT_WINDOW = 1e2
# iterations allowed for the Ritz value to settle once the residual test passes
SETTLE_WINDOW = 100


class ConvergenceError(RuntimeError):
    """The iterative eigensolver hit its iteration cap."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iters: int = 5000
    seed: int = 0
    block_size: int = 3
    ritz_rtol: float = 1e-10
    preconditioner: str = "shifted"  # "shifted" | "dirichlet" | "none"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.preconditioner not in ("shifted", "dirichlet", "none"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray
    residual: float = 0.0
    iterations: int = 0


def _check_power(k):
    if k < 1:
        raise ValueError("k must be a positive integer")
    if k > MAX_POWER:
        raise ValueError(f"k={k} exceeds the supported maximum {MAX_POWER}")


def _complement_index(graph: Graph, s_complement) -> np.ndarray:
    idx = np.asarray(s_complement, dtype=int).ravel()
    if idx.size == 0:
        raise ValueError("complement set is empty: every node is sampled, nothing to solve")
    if np.any(idx < 0) or np.any(idx >= graph.n):
        raise IndexError("complement index out of range")
    if np.any(np.diff(idx) <= 0):
        raise ValueError("complement indices must be sorted and unique")
    return idx


def complement(n: int, s) -> np.ndarray:
    """Sorted indices of ``{0..n-1} \\ s``."""
    mask = np.ones(n, dtype=bool)
    mask[np.asarray(list(s), dtype=int)] = False
    return np.flatnonzero(mask)


def restricted_operator_apply(graph: Graph, s_complement, k: int, x) -> np.ndarray:
    """Apply ``(L^k)_{Sc}`` to a vector (or block) indexed by ``s_complement``."""
    _check_power(k)
    idx = _complement_index(graph, s_complement)
    x = np.asarray(x, dtype=float)
    if x.shape[0] != idx.size:
        raise ValueError(f"x has length {x.shape[0]}, complement has {idx.size} nodes")
    full = np.zeros((graph.n,) + x.shape[1:])
    full[idx] = x
    for _ in range(k):
        full = laplacian_apply(graph, full)
    return full[idx]


class _Factor:
    """Square-root factor ``G`` of ``L^k`` (``G' G = L^k``) restricted to columns ``Sc``.

    Even ``k``: ``G = L^{k/2}``. Odd ``k``: ``G = B L^{(k-1)/2}`` with ``B`` the
    normalized incidence matrix. Rayleigh quotients computed as ``||G x||^2``
    keep their relative accuracy even when ``x' L^k x`` is far below machine
    precision relative to ``||L^k||``, which is the normal situation for
    smooth signals and large ``k``.
    """

    def __init__(self, graph: Graph, idx: np.ndarray, k: int):
        self.graph, self.idx, self.k = graph, idx, k
        self.half = k // 2
        self.B = graph.normalized_incidence() if k % 2 else None

    def apply(self, X):
        full = np.zeros((self.graph.n,) + X.shape[1:])
        full[self.idx] = X
        full = laplacian_power_apply(self.graph, full, self.half)
        return self.B @ full if self.B is not None else full

    def apply_t(self, Y):
        full = self.B.T @ Y if self.B is not None else Y
        return laplacian_power_apply(self.graph, full, self.half)[self.idx]


def _dense_factor(graph: Graph, idx: np.ndarray, k: int) -> np.ndarray:
    L = graph.dense_laplacian()
    G = np.linalg.matrix_power(L, k // 2)
    if k % 2:
        G = graph.normalized_incidence().toarray() @ G
    return G[:, idx]


def dense_restricted_matrix(graph: Graph, s_complement, k: int,
                            limit: int = DENSE_ORACLE_LIMIT) -> np.ndarray:
    """``(L^k)_{Sc}`` assembled densely from an explicit matrix power."""
    _check_power(k)
    idx = _complement_index(graph, s_complement)
    if graph.n > limit:
        raise OracleSizeError(f"dense assembly refused: n={graph.n} exceeds limit {limit}")
    Lk = np.linalg.matrix_power(graph.dense_laplacian(), k)
    A = Lk[np.ix_(idx, idx)]
    return 0.5 * (A + A.T)


def dense_restricted_eigenpair(graph: Graph, s_complement, k: int,
                               limit: int = DENSE_ORACLE_LIMIT,
                               method: str = "factor") -> EigenPair:
    """Reference solve of the restricted problem with dense linear algebra.

    ``method="power"`` runs ``eigh`` on the assembled ``(L^k)_{Sc}``; its
    eigenvalues carry an absolute error near ``eps * 2^k``. ``method="factor"``
    (default) takes the SVD of the dense square-root factor instead, which
    keeps tiny eigenvalues accurate in a relative sense.
    """
    _check_power(k)
    idx = _complement_index(graph, s_complement)
    if graph.n > limit:
        raise OracleSizeError(f"dense assembly refused: n={graph.n} exceeds limit {limit}")
    if method == "power":
        A = dense_restricted_matrix(graph, idx, k, limit=limit)
        w, V = sla.eigh(A, subset_by_index=[0, 0])
        v = fix_sign(V[:, 0])
        value = max(float(w[0]), 0.0)
        return EigenPair(value, v, float(np.linalg.norm(A @ v - w[0] * v)), 0)
    if method != "factor":
        raise ValueError(f"unknown method {method!r}")
    G = _dense_factor(graph, idx, k)
    if G.shape[0] < idx.size:
        G = np.vstack([G, np.zeros((idx.size - G.shape[0], idx.size))])
    _, sv, Vt = np.linalg.svd(G, full_matrices=False)
    v = fix_sign(Vt[-1])
    s = float(sv[-1])
    Gv = G @ v
    rho = np.linalg.norm(G.T @ (Gv / s) - s * v) if s > 0 else np.linalg.norm(G.T @ Gv)
    return EigenPair(s * s, v, float(s * rho) if s > 0 else float(rho), 0)


class _DirichletInverse:
    """``(L_{Sc} + shift I)^{-1}`` by one sparse LU; exact inverse of the operator when ``k = 1``."""

    def __init__(self, graph: Graph, idx: np.ndarray, shift: float = 0.0):
        N = graph.normalized_adjacency[idx][:, idx]
        M = sp.identity(idx.size, format="csc") * (1.0 + shift) - N.tocsc()
        self._lu = spla.splu(sp.csc_matrix(M))

    def __call__(self, R):
        return self._lu.solve(np.asarray(R, dtype=float))


class _ShiftedPowerInverse:
    """``(L^k + mu I)^{-1}`` on the whole graph without forming ``L^k``.

    ``z^k + mu`` factors over the roots ``r_j = mu^{1/k} exp(i pi (2j+1)/k)``.
    Each conjugate pair contributes ``1/|L - r|^2``, applied as
    ``Im[(L - r I)^{-1} x] / Im r`` with one complex sparse LU; an odd ``k``
    adds the real root. Every factor has condition number about
    ``2 / mu^{1/k}``, so accuracy holds even when ``mu`` is minute.
    """

    def __init__(self, graph: Graph, k: int, mu: float):
        n = graph.n
        N = graph.normalized_adjacency.tocsc()
        I = sp.identity(n, format="csc")
        rho = mu ** (1.0 / k)
        self.factors = []
        for j in range(k // 2):
            r = rho * np.exp(1j * np.pi * (2 * j + 1) / k)
            lu = spla.splu(sp.csc_matrix((1.0 - r) * I - N, dtype=complex))
            self.factors.append((lu, r.imag))
        self.real_lu = spla.splu(sp.csc_matrix((1.0 + rho) * I - N)) if k % 2 else None
        self.n = n
        self.mu = mu
        self._columns: dict[int, np.ndarray] = {}

    def columns(self, nodes) -> np.ndarray:
        """``M^{-1} e_s`` for each node, cached across calls."""
        missing = [v for v in nodes if v not in self._columns]
        if missing:
            E = np.zeros((self.n, len(missing)))
            E[missing, np.arange(len(missing))] = 1.0
            for v, col in zip(missing, self(E).T):
                self._columns[v] = col
        if not len(nodes):
            return np.zeros((self.n, 0))
        return np.column_stack([self._columns[v] for v in nodes])

    def __call__(self, X):
        Y = np.asarray(X, dtype=float)
        for lu, im in self.factors:
            Y = lu.solve(Y.astype(complex)).imag / im
        if self.real_lu is not None:
            Y = self.real_lu.solve(Y)
        return Y


# per graph: {k: [_ShiftedPowerInverse, ...]}; M = L^k + mu I does not depend on S
_SHIFT_CACHE: "weakref.WeakKeyDictionary[Graph, dict]" = weakref.WeakKeyDictionary()
_SHIFT_CACHE_SIZE = 4


def _shifted_inverse(graph: Graph, k: int, lo: float, hi: float, target: float) -> _ShiftedPowerInverse:
    """A cached ``(L^k + mu I)^{-1}`` with ``lo <= mu <= hi``, else a new one at ``target``."""
    per_k = _SHIFT_CACHE.setdefault(graph, {}).setdefault(k, [])
    for i, Minv in enumerate(per_k):
        if lo <= Minv.mu <= hi:
            per_k.append(per_k.pop(i))
            return Minv
    Minv = _ShiftedPowerInverse(graph, k, target)
    per_k.append(Minv)
    del per_k[:-_SHIFT_CACHE_SIZE]
    return Minv


class _RestrictedShiftedInverse:
    """``((L^k)_{Sc} + mu I)^{-1}`` through the Schur complement of ``M^{-1}``, ``M = L^k + mu I``.

    The inverse of a principal block equals the Schur complement of the inverse:
    ``(M_{Sc})^{-1} = M^{-1}_{Sc} - M^{-1}_{Sc,S} (M^{-1}_{S})^{-1} M^{-1}_{S,Sc}``.
    """

    def __init__(self, graph: Graph, idx: np.ndarray, Minv: _ShiftedPowerInverse):
        self.mu = Minv.mu
        self.idx = idx
        self.n = graph.n
        mask = np.ones(graph.n, dtype=bool)
        mask[idx] = False
        self.s = np.flatnonzero(mask)
        self.Minv = Minv
        self.Y_S = Minv.columns(self.s.tolist())
        K = self.Y_S[self.s]
        self.K_lu = sla.lu_factor(0.5 * (K + K.T)) if self.s.size else None

    def __call__(self, R):
        full = np.zeros((self.n,) + R.shape[1:])
        full[self.idx] = R
        Y = self.Minv(full)
        if self.K_lu is not None:
            Y = Y - self.Y_S @ sla.lu_solve(self.K_lu, Y[self.s])
        return Y[self.idx]


def _orthonormalize(V, against=None, drop_tol=1e-10):
    """Orthonormal basis for ``V`` projected off ``against``; near-dependent columns are dropped."""
    for _ in range(2):
        if against is not None and against.shape[1]:
            V = V - against @ (against.T @ V)
        norms = np.linalg.norm(V, axis=0)
        keep = norms > drop_tol * max(1.0, norms.max(initial=0.0))
        V = V[:, keep]
        if V.shape[1] == 0:
            return V
        V = V / np.linalg.norm(V, axis=0)
        G = V.T @ V
        w, Q = np.linalg.eigh(0.5 * (G + G.T))
        keep = w > drop_tol
        V = V @ (Q[:, keep] / np.sqrt(w[keep]))
    return V


def _ritz(GZ, b):
    """Rayleigh-Ritz through the SVD of ``G Z``: the ``b`` smallest singular values and coefficients."""
    if GZ.shape[0] < GZ.shape[1]:
        GZ = np.vstack([GZ, np.zeros((GZ.shape[1] - GZ.shape[0], GZ.shape[1]))])
    _, sv, Vt = np.linalg.svd(GZ, full_matrices=False)
    return sv[::-1][:b], Vt[::-1][:b].T


def _residual(F: _Factor, v, theta):
    return float(np.linalg.norm(F.apply_t(F.apply(v[:, None]))[:, 0] - theta * v))


def _lobpcg(F: _Factor, T, X0, config: SolverConfig, refresh=None):
    """Block LOBPCG for the smallest singular pair of ``F``; returns ``(theta, v, residual, iters)``.

    ``refresh(theta)``, when given, may return a replacement preconditioner
    once the Ritz value has moved away from the one ``T`` was built for.
    """
    b = X0.shape[1]
    # accuracy scale of a computed singular value of G
    sv_noise = np.finfo(float).eps * 2.0 ** ((F.k + 1) // 2)
    X = _orthonormalize(X0)
    sv, C = _ritz(F.apply(X), X.shape[1])
    X = X @ C
    P = None
    res = np.inf
    prev = np.inf
    settled = 0
    first_ok = None
    for it in range(1, config.max_iters + 1):
        theta = sv ** 2
        R = F.apply_t(F.apply(X)) - X * theta
        res = float(np.linalg.norm(R[:, 0]))
        settled = settled + 1 if abs(prev - sv[0]) <= config.ritz_rtol * sv[0] + sv_noise else 0
        prev = sv[0]
        if res <= config.tol * max(1.0, theta[0]):
            first_ok = it if first_ok is None else first_ok
            # the Ritz test is a refinement; give up on it after a bounded wait
            if settled >= 2 or it - first_ok >= SETTLE_WINDOW:
                return float(theta[0]), X[:, 0], res, it
        else:
            first_ok = None
        if refresh is not None:
            T = refresh(float(theta[0])) or T

        W = _orthonormalize(T(R), against=X, drop_tol=1e-14)
        blocks = [X, W]
        if P is not None:
            Pn = _orthonormalize(P, against=np.hstack([X, W]), drop_tol=1e-14)
            if Pn.shape[1]:
                blocks.append(Pn)
        Z = _orthonormalize(np.hstack(blocks))
        sv, C = _ritz(F.apply(Z), b)
        Xn = Z @ C
        # next search directions: the update with its component along X removed
        P = Xn - X @ (X.T @ Xn)
        X = Xn
    raise ConvergenceError(
        f"LOBPCG did not converge in {config.max_iters} iterations (residual {res:.3e})", res
    )


def smallest_eigenpair_restricted(graph: Graph, s_complement, k: int,
                                  config: SolverConfig | None = None) -> EigenPair:
    """Minimal eigen-pair of ``(L^k)_{Sc}`` by preconditioned block LOBPCG.

    Ritz values are squared singular values of ``G Z`` for the factor ``G``
    with ``G' G = (L^k)_{Sc}``, so they keep relative accuracy when the
    eigenvalue is tiny. Iteration stops when the residual
    ``||A v - s v|| <= tol * max(1, s)`` and the leading Ritz value has
    settled (relative change below ``ritz_rtol`` on two consecutive steps);
    for high powers the absolute residual bound alone accepts vectors that
    are still far from the eigenvector.

    Preconditioners: ``"shifted"`` applies ``((L^k)_{Sc} + mu I)^{-1}`` with
    ``mu`` seeded from the ``k = 1`` problem (``Omega_1 <= Omega_k``);
    ``"dirichlet"`` applies ``(L_{Sc})^{-1}`` only; ``"none"`` is plain LOBPCG.
    """
    config = config or SolverConfig()
    _check_power(k)
    idx = _complement_index(graph, s_complement)
    m = idx.size
    F = _Factor(graph, idx, k)

    if m == graph.n:
        # nothing sampled: the null vector D^{1/2} 1 of L is known exactly
        v = np.sqrt(graph.degrees)
        v = v / np.linalg.norm(v)
        return EigenPair(0.0, v, _residual(F, v, 0.0), 0)

    b = min(config.block_size, m)
    if m <= 2 * b + 1:
        # tiny problem: Rayleigh-Ritz on the whole space is exact
        sv, C = _ritz(F.apply(np.eye(m)), 1)
        v = fix_sign(C[:, 0])
        theta = float(sv[0]) ** 2
        return EigenPair(theta, v, _residual(F, v, theta), 1)

    rng = np.random.default_rng(config.seed)
    X0 = rng.uniform(-1.0, 1.0, size=(m, b))

    if config.preconditioner == "none":
        theta, v, res, it = _lobpcg(F, lambda R: R, X0, config)
        return EigenPair(theta, fix_sign(v), res, it)

    dirichlet = _DirichletInverse(graph, idx)
    if k == 1 or config.preconditioner == "dirichlet":
        theta, v, res, it = _lobpcg(F, dirichlet, X0, config)
        return EigenPair(theta, fix_sign(v), res, it)

    # k > 1: the Dirichlet (k = 1) solution gives a start vector and bounds on theta_1:
    # theta_B^k <= theta_1 (Jensen) and theta_1 <= Rayleigh quotient of that vector
    base = _lobpcg(_Factor(graph, idx, 1), dirichlet, X0, config)
    X0[:, 0] = base[1]
    lower = max(base[0], np.finfo(float).tiny ** (1.0 / k)) ** k
    upper = float(np.linalg.norm(F.apply(base[1][:, None])) ** 2)
    state = {}

    def build(lo, hi, target):
        state["T"] = _RestrictedShiftedInverse(graph, idx, _shifted_inverse(graph, k, lo, hi, target))
        return state["T"]

    # mu <= theta_1 keeps T close to the shifted inverse; theta_1 / mu <= SHIFT_RATIO bounds cancellation
    build(max(lower, upper / SHIFT_RATIO), upper, max(lower, upper / SHIFT_WINDOW))

    def refresh(theta):
        mu = state["T"].mu
        if theta < mu or theta > SHIFT_RATIO * mu:
            return build(theta / SHIFT_RATIO, theta, theta / SHIFT_WINDOW)
        return None

    theta, v, res, it = _lobpcg(F, state["T"], X0, config, refresh=refresh)
    return EigenPair(theta, fix_sign(v), res, it + base[3])

