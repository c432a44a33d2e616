"""Reverse-time sampling: base distributions, projected Euler integration of the
learned generator, and thresholding to a discrete graph."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .diffusion import DiffusionMode
from .errors import EmptyDataset, NonFiniteState
from .graph import Graph, degree_vector, largest_connected_component
from .nn import SurrogateGenerator, flatten_state, unflatten_state
from .rng import stream

log = logging.getLogger(__name__)


THRESHOLD_RULES = ("value", "sparsity")
BASE_SCALES = ("literal", "limit")


@dataclass(frozen=True)
class CovariateSpec:
    z: np.ndarray
    omega: float = 1.0

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(z)):
            raise ValueError("covariates must be finite")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        object.__setattr__(self, "z", z)


@dataclass(frozen=True)
class SampleConfig:
    n: int
    M: int = 100
    alpha: float = 1.0
    avg_degree: float = 1.0
    threshold: float = 0.5
    mode: DiffusionMode = DiffusionMode.SYMMETRIC
    clip_bounds: tuple = (0.0, 1.0)
    seed: int = 0
    bernoulli: bool = False
    # asymmetric base: log-normal column weights
    degree_log_mean: float = 0.0
    degree_log_var: float = 0.0
    covariates: Optional[CovariateSpec] = None
    # weight the model was trained with in L + omega z z^T
    train_omega: float = 1.0
    # "value": keep entries >= threshold; "sparsity": keep the
    # round(threshold * n^2 / 2) largest pairs, i.e. read threshold as a density
    threshold_rule: str = "value"

    def __post_init__(self):
        object.__setattr__(self, "mode", DiffusionMode.parse(self.mode))
        object.__setattr__(self, "clip_bounds", tuple(float(b) for b in self.clip_bounds))
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        lo, hi = self.clip_bounds
        if not lo < hi:
            raise ValueError("clip bounds need lo < hi")
        if self.covariates is not None and self.covariates.z.shape != (self.n,):
            raise ValueError("covariate vector length must equal n")
        if self.threshold_rule not in THRESHOLD_RULES:
            raise ValueError(f"threshold_rule must be one of {THRESHOLD_RULES}")
        if self.threshold < 0:
            raise ValueError("threshold must be nonnegative")


# -- base distributions --------------------------------------------------------

def _dirichlet(n: int, alpha: float, rng: np.random.Generator, size=None) -> np.ndarray:
    return rng.dirichlet(np.full(n, float(alpha)), size=size)


def sample_base_symmetric(n: int, alpha: float, avg_degree: float,
                          rng: np.random.Generator) -> np.ndarray:
    """``<d> (X + X^T)`` where the columns of ``X`` are i.i.d. Dirichlet(alpha 1)."""
    x = _dirichlet(n, alpha, rng, size=n).T
    return avg_degree * (x + x.T)


def sample_base_asymmetric(n: int, alpha: float, degree_log_mean: float,
                           degree_log_var: float, rng: np.random.Generator) -> np.ndarray:
    """Rank-1 ``x v^T`` with ``x ~ Dirichlet(alpha 1)`` and ``log v ~ N(mu, var)``."""
    if degree_log_var < 0:
        raise ValueError("variance must be nonnegative")
    x = _dirichlet(n, alpha, rng)
    v = np.exp(degree_log_mean + np.sqrt(degree_log_var) * rng.standard_normal(n))
    return np.outer(x, v)


def sample_base_conditional(z: np.ndarray, omega_hat: float, alpha: float,
                            rng: np.random.Generator) -> np.ndarray:
    """``n^-1 omega_hat (x^T z) x z^T`` with ``x ~ Dirichlet(alpha 1)``."""
    if not omega_hat > 0:
        raise ValueError("omega_hat must be positive")
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    x = _dirichlet(n, alpha, rng)
    return (omega_hat / n) * float(x @ z) * np.outer(x, z)


def base_sample(cfg: SampleConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.covariates is not None:
        # omega_hat = n^2 omega puts the Dirichlet draw on the scale of the
        # asymmetric limit (omega / n) 1 (1^T z) z^T
        return sample_base_conditional(cfg.covariates.z, cfg.n**2 * cfg.covariates.omega,
                                       cfg.alpha, rng)
    if cfg.mode is DiffusionMode.SYMMETRIC:
        return sample_base_symmetric(cfg.n, cfg.alpha, cfg.avg_degree, rng)
    return sample_base_asymmetric(cfg.n, cfg.alpha, cfg.degree_log_mean,
                                  cfg.degree_log_var, rng)


# -- integration -------------------------------------------------------------

def project(X: np.ndarray, cfg: SampleConfig) -> np.ndarray:
    if cfg.mode is DiffusionMode.SYMMETRIC:
        X = 0.5 * (X + X.T)
        np.fill_diagonal(X, 0.0)
    return np.clip(X, *cfg.clip_bounds)


def euler_sample(model: SurrogateGenerator, cfg: SampleConfig,
                 rng: np.random.Generator, base: Optional[np.ndarray] = None,
                 trajectory: Optional[list] = None) -> np.ndarray:
    """Integrate ``dX/dt = J(X, t)`` over ``t in [0, 1]`` with ``M`` explicit
    Euler steps, projecting after every step. Returns the terminal matrix."""
    full = cfg.mode is DiffusionMode.ASYMMETRIC
    if model.cfg.full_matrix != full:
        raise ValueError("model representation does not match the diffusion mode")
    n = cfg.n
    X = base_sample(cfg, rng) if base is None else np.array(base, dtype=np.float64)
    delta = 1.0 / cfg.M
    for m in range(cfg.M):
        drift = model.forward(flatten_state(X, full), m * delta, n)
        X = project(X + delta * unflatten_state(drift.astype(np.float64), n, full), cfg)
        if not np.all(np.isfinite(X)):
            raise NonFiniteState(f"state became non-finite at step {m} of {cfg.M}")
        if trajectory is not None:
            trajectory.append(X.copy())
    return X


def threshold_to_graph(X: np.ndarray, c: float, rng: Optional[np.random.Generator] = None,
                       bernoulli: bool = False, z=None) -> Graph:
    """Symmetrise, zero the diagonal and keep entries ``>= c``.

    With ``bernoulli=True`` each upper-triangle entry instead becomes an edge
    with probability ``clip(entry, 0, 1)``.
    """
    S = 0.5 * (np.asarray(X, dtype=np.float64) + np.asarray(X, dtype=np.float64).T)
    np.fill_diagonal(S, 0.0)
    n = S.shape[0]
    if bernoulli:
        if rng is None:
            raise ValueError("Bernoulli thresholding needs an rng")
        u = rng.random((n, n))
        upper = np.triu(u < np.clip(S, 0.0, 1.0), 1)
        A = (upper | upper.T).astype(np.float64)
    else:
        A = (S >= c).astype(np.float64)
        np.fill_diagonal(A, 0.0)
    return Graph(n, A, z)


def sparsity_threshold(X: np.ndarray, density: float) -> float:
    """Cut value that keeps the ``round(density * n^2 / 2)`` largest entries of
    the symmetrised strict lower triangle (ties at the cut are all kept)."""
    S = 0.5 * (X + X.T)
    n = S.shape[0]
    v = np.sort(S[np.tril_indices(n, -1)])[::-1]
    k = int(round(density * n * n / 2.0))
    if k <= 0 or v.size == 0:
        return np.inf
    return float(v[min(k, v.size) - 1])


# -- statistics of the training set --------------------------------------------

def estimate_threshold(graphs: Sequence[Graph]) -> float:
    """Mean edge density ``||A||_1 / n^2`` over the training graphs."""
    if len(graphs) == 0:
        raise EmptyDataset("cannot estimate a threshold from no graphs")
    return float(np.mean([g.adjacency.sum() / g.n**2 for g in graphs]))


def estimate_avg_degree(graphs: Sequence[Graph]) -> float:
    """Base-distribution scale ``(2 / (n N)) sum ||A||_1`` (per-graph n)."""
    if len(graphs) == 0:
        raise EmptyDataset("cannot estimate a degree from no graphs")
    return float(np.mean([2.0 * g.adjacency.sum() / g.n for g in graphs]))


def base_avg_degree(stats: dict, rule: str = "literal") -> float:
    """Scale for the symmetric base draw.

    ``"literal"`` returns the estimator as written. ``"limit"`` divides it by 4 so
    the mean entry of the base draw, ``2 <d> / n``, equals the mean entry
    ``||A||_1 / n^2`` of the fully diffused state.
    """
    if rule not in BASE_SCALES:
        raise ValueError(f"base scale must be one of {BASE_SCALES}")
    return stats["avg_degree"] / 4.0 if rule == "limit" else stats["avg_degree"]


def estimate_degree_lognormal(graphs: Sequence[Graph]) -> tuple[float, float]:
    """Mean and variance of log node degree over all non-isolated nodes."""
    if len(graphs) == 0:
        raise EmptyDataset("cannot estimate degrees from no graphs")
    d = np.concatenate([degree_vector(g) for g in graphs]).astype(np.float64)
    d = d[d > 0]
    if d.size == 0:
        return 0.0, 0.0
    logs = np.log(d)
    return float(logs.mean()), float(logs.var())


def dataset_statistics(graphs: Sequence[Graph], representation: str = "adjacency",
                       omega: float = 1.0) -> dict:
    """Everything sampling needs to know about the training set."""
    from .trainer import representation_matrix

    lcc = [largest_connected_component(g) for g in graphs]
    mu, var = estimate_degree_lognormal(lcc)
    reps = [representation_matrix(g, representation, omega) for g in lcc]
    return {
        "avg_degree": estimate_avg_degree(lcc),
        "threshold": estimate_threshold(lcc),
        "degree_log_mean": mu,
        "degree_log_var": var,
        "clip_bounds": [min(0.0, float(min(r.min() for r in reps))),
                        max(1.0, float(max(r.max() for r in reps)))],
        "node_counts": sorted({g.n for g in lcc}),
    }


def generate(model: SurrogateGenerator, cfg: SampleConfig, count: int) -> list[Graph]:
    """Draw ``count`` graphs; sample ``i`` uses its own stream ``(seed, i)``."""
    out = []
    for i in range(count):
        rng = stream(cfg.seed, "sample", i)
        X = euler_sample(model, cfg, rng)
        z = None
        if cfg.covariates is not None:
            z = cfg.covariates.z
            # model output approximates L + omega z z^T; recover A off the diagonal
            X = cfg.train_omega * np.outer(z, z) - X
        c = cfg.threshold
        if cfg.threshold_rule == "sparsity":
            c = sparsity_threshold(X, cfg.threshold)
        out.append(threshold_to_graph(X, c, rng, cfg.bernoulli, z))
    return out
