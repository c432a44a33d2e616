"""Generator-matching training loop.

Each iteration draws one diffusion time per graph in the batch, diffuses the
graph's matrix representation to that time, and regresses the network onto the
exact generator action ``T (L X + X L)`` (or ``T L X``) at the diffused state.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .diffusion import DiffusionConfig, DiffusionMode, HeatKernel, diffuse, true_generator
from .errors import EmptyDataset, NonFiniteLoss
from .graph import Graph, LaplacianKind, laplacian, largest_connected_component, spectral_decompose
from .nn import (
    AdamState,
    MlpConfig,
    SurrogateGenerator,
    adam_step,
    flatten_state,
    loss_and_gradients,
)

log = logging.getLogger(__name__)

REPRESENTATIONS = ("adjacency", "covariate_laplacian")


@dataclass(frozen=True)
class TrainConfig:
    batch_size_max: int = 256
    epochs: int = 20
    max_iters: int = 0  # 0 = no cap besides epochs
    lr0: float = 1e-4
    lr_decay: float = 0.99
    lr_min: float = 1e-9
    patience: int = 10
    loss_target: float = 0.0
    seed: int = 0
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    representation: str = "adjacency"
    omega: float = 1.0
    times_per_graph: int = 1  # independent diffusion times drawn per graph and batch

    def __post_init__(self):
        if not (0 < self.lr_decay < 1):
            raise ValueError("lr_decay must lie in (0, 1)")
        if not (self.lr_min < self.lr0):
            raise ValueError("lr_min must be below lr0")
        if self.batch_size_max < 1 or self.epochs < 1 or self.times_per_graph < 1:
            raise ValueError("batch_size_max, epochs and times_per_graph must be positive")
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"representation must be one of {REPRESENTATIONS}")


@dataclass
class TrainReport:
    epoch_losses: list = field(default_factory=list)
    iteration_losses: list = field(default_factory=list)
    final_lr: float = 0.0
    seconds: float = 0.0
    iterations: int = 0


@dataclass(frozen=True)
class PreparedGraph:
    """A training graph with its representation, Laplacian and heat kernel."""

    graph: Graph
    Y0: np.ndarray
    L: np.ndarray
    kernel: HeatKernel

    @property
    def n(self) -> int:
        return self.graph.n


def representation_matrix(g: Graph, representation: str = "adjacency",
                          omega: float = 1.0) -> np.ndarray:
    """Initial state ``Y_0``: the adjacency matrix, or ``L + omega z z^T`` for
    covariate-conditioned training."""
    if representation == "adjacency":
        return np.array(g.adjacency)
    if g.z is None:
        raise ValueError("covariate representation needs graphs with covariates z")
    return laplacian(g) + omega * np.outer(g.z, g.z)


def prepare(graphs: Sequence[Graph], cfg: TrainConfig) -> list[PreparedGraph]:
    out = []
    for g in graphs:
        lcc = largest_connected_component(g)
        if lcc.n != g.n:
            log.debug("training on largest component (%d of %d nodes)", lcc.n, g.n)
        L = laplacian(lcc, LaplacianKind.COMBINATORIAL)
        kernel = HeatKernel(spectral_decompose(L), cache_size=0)
        out.append(PreparedGraph(lcc, representation_matrix(lcc, cfg.representation, cfg.omega),
                                 L, kernel))
    return out


def make_batches(graphs: Sequence, batch_size_max: int,
                 rng: np.random.Generator, size=lambda g: g.n) -> list[list[int]]:
    """Batches of indices into ``graphs``; each batch holds one node count."""
    if len(graphs) == 0:
        raise EmptyDataset("no graphs to batch")
    by_size: dict[int, list[int]] = {}
    for i, g in enumerate(graphs):
        by_size.setdefault(size(g), []).append(i)
    batches = []
    for n in sorted(by_size):
        idx = np.array(by_size[n])
        idx = idx[rng.permutation(len(idx))]
        batches += [idx[k:k + batch_size_max].tolist()
                    for k in range(0, len(idx), batch_size_max)]
    order = rng.permutation(len(batches))
    return [batches[k] for k in order]


def sample_training_batch(items: Sequence[PreparedGraph], cfg: TrainConfig,
                          rng: np.random.Generator):
    """Draw diffusion times and build ``(states, rescaled_times, targets)``.

    States and targets are full ``n x n`` matrices; times are the network's
    time input ``1 - t/T`` for raw diffusion times ``t ~ U[tau, T]``.
    """
    dc = cfg.diffusion
    t_raw = rng.uniform(dc.tau, dc.T, size=len(items))
    states, targets = [], []
    for it, t in zip(items, t_raw):
        X = diffuse(it.Y0, it.kernel, t, dc.mode)
        states.append(X)
        targets.append(true_generator(it.L, X, dc.T, dc.mode))
    return np.stack(states), 1.0 - t_raw / dc.T, np.stack(targets)


def train(graphs: Sequence[Graph], mlp_cfg: MlpConfig, train_cfg: TrainConfig,
          rng: Optional[np.random.Generator] = None,
          init_rng: Optional[np.random.Generator] = None,
          callback: Optional[Callable[[int, float, float], None]] = None,
          stop: Optional[Callable[[SurrogateGenerator, int], bool]] = None):
    """Fit a surrogate generator. Returns ``(model, report)``.

    ``rng`` drives batching and time sampling, ``init_rng`` the weight
    initialisation; both default to streams derived from ``train_cfg.seed``.
    ``callback(iteration, loss, lr)`` observes every step; ``stop(model,
    iteration)`` is asked after every step and ends training when it returns
    True.
    """
    from .rng import stream

    if len(graphs) == 0:
        raise EmptyDataset("training set is empty")
    items = prepare(graphs, train_cfg)
    full = train_cfg.diffusion.mode is DiffusionMode.ASYMMETRIC
    if mlp_cfg.full_matrix != full:
        raise ValueError("asymmetric diffusion needs full_matrix=True (and only then)")
    n_needed = max(it.n for it in items)
    if n_needed > mlp_cfg.n_max:
        raise ValueError(f"graphs with {n_needed} nodes exceed n_max={mlp_cfg.n_max}")

    rng = rng if rng is not None else stream(train_cfg.seed, "train")
    init_rng = init_rng if init_rng is not None else stream(train_cfg.seed, "init")
    model = SurrogateGenerator.init(mlp_cfg, init_rng)
    opt = AdamState.for_model(model)
    lr = train_cfg.lr0
    best = np.inf
    since_best = 0
    report = TrainReport()
    start = time.perf_counter()
    done = False

    for epoch in range(train_cfg.epochs):
        epoch_losses = []
        for batch in make_batches(items, train_cfg.batch_size_max, rng):
            members = [items[k] for k in batch for _ in range(train_cfg.times_per_graph)]
            n = members[0].n
            X, s, Y = sample_training_batch(members, train_cfg, rng)
            loss, grads = loss_and_gradients(model, flatten_state(X, full), s,
                                             flatten_state(Y, full), n)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss} at iteration {report.iterations} "
                                    f"(epoch {epoch}, n={n}, lr={lr:.3g})")
            adam_step(model, grads, opt, lr)
            report.iterations += 1
            report.iteration_losses.append(loss)
            epoch_losses.append(loss)
            if loss < best * (1.0 - 1e-6):
                best, since_best = loss, 0
            else:
                since_best += 1
                if since_best >= train_cfg.patience:
                    lr = max(lr * train_cfg.lr_decay, train_cfg.lr_min)
                    since_best = 0
            if callback is not None:
                callback(report.iterations, loss, lr)
            if (loss < train_cfg.loss_target
                    or (train_cfg.max_iters and report.iterations >= train_cfg.max_iters)
                    or (stop is not None and stop(model, report.iterations))):
                done = True
                break
        report.epoch_losses.append(float(np.mean(epoch_losses)))
        log.info("epoch %d: loss %.6g lr %.3g", epoch, report.epoch_losses[-1], lr)
        if done:
            break

    if not model.all_finite():
        raise NonFiniteLoss("parameters became non-finite")
    report.final_lr = lr
    report.seconds = time.perf_counter() - start
    return model, report
