"""Heat-kernel forward diffusion on graph matrices and its time-rescaled generator.

Forward process (diffusion time ``s >= 0``)::

    symmetric:   Y_s = H_s Y_0 H_s,   dY/ds = -(L Y + Y L)
    asymmetric:  Y_s = H_s Y_0,       dY/ds = -L Y

with ``H_s = exp(-s L)``. The rescaled process ``X_t = Y_{T(1-t)}`` runs on
``t in [0, 1]`` from the diffused end (t=0) to the data (t=1), and has generator
``T (L X + X L)`` (symmetric) or ``T L X`` (asymmetric).
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    IsolatedNode,
    NegativeEntries,
    NegativeTime,
)
from .graph import (
    Graph,
    LaplacianKind,
    SpectralDecomposition,
    laplacian,
    spectral_decompose,
)


class DiffusionMode(enum.Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"

    @classmethod
    def parse(cls, value) -> "DiffusionMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class DiffusionConfig:
    T: float = 6.0
    tau: float = 0.01
    mode: DiffusionMode = DiffusionMode.SYMMETRIC

    def __post_init__(self):
        object.__setattr__(self, "mode", DiffusionMode.parse(self.mode))
        if not (0 < self.tau < self.T):
            raise ValueError(f"need 0 < tau < T, got tau={self.tau}, T={self.T}")


@dataclass(frozen=True)
class DiffusionState:
    matrix: np.ndarray
    t: float
    mode: DiffusionMode


def heat_kernel_at(spectral: SpectralDecomposition, s: float) -> np.ndarray:
    if s < 0:
        raise NegativeTime(f"diffusion time must be >= 0, got {s}")
    if s == 0:
        return np.eye(spectral.n)
    u = spectral.eigenvectors
    h = (u * np.exp(-s * spectral.eigenvalues)) @ u.T
    return 0.5 * (h + h.T)


class HeatKernel:
    """``H_s = U exp(-s Lambda) U^T`` for one Laplacian, with a small cache of
    evaluated times. The cache is guarded by a lock, so a kernel may be shared
    between threads."""

    def __init__(self, spectral: SpectralDecomposition, cache_size: int = 32):
        self.spectral = spectral
        self._cache: dict[float, np.ndarray] = {}
        self._cache_size = cache_size
        self._lock = threading.Lock()

    @classmethod
    def from_laplacian(cls, L: np.ndarray, **kw) -> "HeatKernel":
        return cls(spectral_decompose(L), **kw)

    @classmethod
    def from_graph(cls, g: Graph, **kw) -> "HeatKernel":
        return cls.from_laplacian(laplacian(g, LaplacianKind.COMBINATORIAL), **kw)

    @property
    def n(self) -> int:
        return self.spectral.n

    def at(self, s: float) -> np.ndarray:
        s = float(s)
        if self._cache_size <= 0:
            return heat_kernel_at(self.spectral, s)
        with self._lock:
            h = self._cache.get(s)
        if h is None:
            h = heat_kernel_at(self.spectral, s)
            h.flags.writeable = False
            with self._lock:
                if len(self._cache) >= self._cache_size:
                    self._cache.pop(next(iter(self._cache)))
                self._cache[s] = h
        return h


def diffuse(Y0: np.ndarray, kernel: HeatKernel, s: float,
            mode: DiffusionMode = DiffusionMode.SYMMETRIC) -> np.ndarray:
    Y0 = np.asarray(Y0, dtype=np.float64)
    if Y0.shape != (kernel.n, kernel.n):
        raise DimensionMismatch(f"state {Y0.shape} vs kernel of size {kernel.n}")
    h = kernel.at(s)
    if DiffusionMode.parse(mode) is DiffusionMode.SYMMETRIC:
        return h @ Y0 @ h
    return h @ Y0


def true_generator(L: np.ndarray, X: np.ndarray, T: float,
                   mode: DiffusionMode = DiffusionMode.SYMMETRIC) -> np.ndarray:
    L = np.asarray(L, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if L.shape != X.shape or L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionMismatch(f"Laplacian {L.shape} vs state {X.shape}")
    if DiffusionMode.parse(mode) is DiffusionMode.SYMMETRIC:
        return T * (L @ X + X @ L)
    return T * (L @ X)


def rescaled_state(Y0: np.ndarray, kernel: HeatKernel, t: float,
                   cfg: DiffusionConfig) -> DiffusionState:
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"rescaled time must lie in [0, 1], got {t}")
    if t == 1.0:
        mat = np.array(Y0, dtype=np.float64)
    else:
        mat = diffuse(Y0, kernel, cfg.T * (1.0 - t), cfg.mode)
    return DiffusionState(mat, float(t), cfg.mode)


def forward_limit(Y0: np.ndarray, mode: DiffusionMode = DiffusionMode.SYMMETRIC) -> np.ndarray:
    """Long-time limit of the forward diffusion on a connected graph.

    Symmetric: ``(1/n^2) ||Y0||_1 11^T``; asymmetric: ``(1/n) 1 1^T Y0``.
    """
    Y0 = np.asarray(Y0, dtype=np.float64)
    if np.any(Y0 < 0):
        raise NegativeEntries("the limit formula assumes an entrywise nonnegative state")
    n = Y0.shape[0]
    ones = np.ones((n, n))
    if DiffusionMode.parse(mode) is DiffusionMode.SYMMETRIC:
        return Y0.sum() / n**2 * ones
    return ones @ Y0 / n


def laplacian_heat_kernel(g: Graph, s: float,
                          kind: LaplacianKind = LaplacianKind.COMBINATORIAL) -> np.ndarray:
    """``exp(-s L)`` for any Laplacian kind.

    The random-walk Laplacian is not symmetric; its exponential comes from the
    similarity ``L_rw = D^-1/2 L_N D^1/2``.
    """
    if s < 0:
        raise NegativeTime(f"diffusion time must be >= 0, got {s}")
    if kind is LaplacianKind.RANDOM_WALK:
        d = g.adjacency.sum(axis=1)
        if np.any(d == 0):
            raise IsolatedNode("random-walk kernel needs every degree >= 1")
        hn = heat_kernel_at(spectral_decompose(laplacian(g, LaplacianKind.NORMALIZED)), s)
        r = np.sqrt(d)
        return hn / r[:, None] * r[None, :]
    return heat_kernel_at(spectral_decompose(laplacian(g, kind)), s)


def _walk_matrix(g: Graph, lazy: bool) -> np.ndarray:
    d = g.adjacency.sum(axis=1)
    if np.any(d == 0):
        raise IsolatedNode("random-walk kernels need every degree >= 1")
    p = g.adjacency / d[:, None]
    if lazy:
        p = 0.5 * (np.eye(g.n) + p)
    return p


def rw_kernel_at(g: Graph, t: int, lazy: bool = False) -> np.ndarray:
    """``(D^-1 A)^t`` or the lazy ``(1/2 (I + D^-1 A))^t``."""
    if t < 0:
        raise NegativeTime(f"step count must be >= 0, got {t}")
    return np.linalg.matrix_power(_walk_matrix(g, lazy), int(t))


def rw_limit(g: Graph, lazy: bool = True) -> np.ndarray:
    """Rank-1 limit ``q_1 q_1^{-T}`` of the walk powers, from the eigenvector of
    eigenvalue 1 and the matching row of the inverse eigenvector matrix."""
    lam, q = np.linalg.eig(_walk_matrix(g, lazy))
    k = int(np.argmin(np.abs(lam - 1.0)))
    qinv = np.linalg.inv(q)
    return np.real(np.outer(q[:, k], qinv[k, :]))
